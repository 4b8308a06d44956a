#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ffd/core/error.hpp"
#include "ffd/core/labels.hpp"
#include "ffd/dataset/subsequence.hpp"

namespace ffd {

enum class Split : std::uint8_t { train = 0, validation = 1, test = 2 };

inline constexpr std::array<Split, 3> kAllSplits = {Split::train, Split::validation,
                                                    Split::test};

inline constexpr std::string_view name(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
  }
  return "?";
}

inline Split split_from_name(std::string_view text) {
  for (auto s : kAllSplits)
    if (name(s) == text) return s;
  throw InvalidArgument("unknown split '" + std::string(text) + "'");
}

// One eye stream of one subject.
struct SubjectRecord {
  std::string subject_id;
  ClassLabel label = ClassLabel::control;
  std::size_t frame_count = 0;
};

struct SplitFractions {
  double train = 0.7;
  double validation = 0.15;
  double test = 0.15;

  double of(Split s) const {
    return s == Split::train ? train : s == Split::validation ? validation : test;
  }
};

inline std::size_t subsequence_count(std::size_t frames) {
  return frames >= kFramesPerSubsequence ? frames - kFramesPerSubsequence + 1 : 0;
}

struct DatasetManifest {
  struct Entry {
    SubjectRecord subject;
    Split split = Split::train;
  };

  std::uint64_t seed = 0;
  SplitFractions fractions;
  std::vector<Entry> entries;        // subjects that made it into a split
  std::vector<std::string> warnings;

  using CountTable = std::array<std::array<std::size_t, 3>, kNumClasses>;

  CountTable subject_counts() const {
    CountTable t{};
    for (const auto& e : entries) ++t[code(e.subject.label)][static_cast<int>(e.split)];
    return t;
  }

  CountTable sequence_counts() const {
    CountTable t{};
    for (const auto& e : entries)
      t[code(e.subject.label)][static_cast<int>(e.split)] +=
          subsequence_count(e.subject.frame_count);
    return t;
  }

  std::vector<SubjectRecord> subjects_in(Split split) const {
    std::vector<SubjectRecord> out;
    for (const auto& e : entries)
      if (e.split == split) out.push_back(e.subject);
    return out;
  }

  // Table with columns State, Test, Train, Validation, Total.
  static std::string render_table(const CountTable& t) {
    std::ostringstream os;
    os << "State,Test,Train,Validation,Total\n";
    std::array<std::size_t, 4> col{};
    for (auto label : kAllLabels) {
      const auto& r = t[code(label)];
      const std::size_t test = r[2], train = r[0], val = r[1];
      os << name(label) << ',' << test << ',' << train << ',' << val << ','
         << test + train + val << '\n';
      col[0] += test, col[1] += train, col[2] += val, col[3] += test + train + val;
    }
    os << "Total," << col[0] << ',' << col[1] << ',' << col[2] << ',' << col[3] << '\n';
    return os.str();
  }

  std::string to_text() const {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "format = ffd-manifest-1\n";
    os << "seed = " << seed << '\n';
    os << "fraction.train = " << fractions.train << '\n';
    os << "fraction.validation = " << fractions.validation << '\n';
    os << "fraction.test = " << fractions.test << '\n';
    os << "\n[subjects]\n" << render_table(subject_counts());
    os << "\n[sequences]\n" << render_table(sequence_counts());
    os << "\n[assignment]\nsubject,label,frames,split\n";
    for (const auto& e : entries)
      os << e.subject.subject_id << ',' << name(e.subject.label) << ','
         << e.subject.frame_count << ',' << name(e.split) << '\n';
    os << "\n[warnings]\n";
    for (const auto& w : warnings) os << w << '\n';
    return os.str();
  }

  // Reads back the header and the assignment block; count tables are derived.
  static DatasetManifest parse(const std::string& text) {
    DatasetManifest m;
    std::istringstream is(text);
    std::string line, section;
    bool header_row = false;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      if (line.front() == '[') {
        section = line;
        header_row = true;
        continue;
      }
      if (section.empty()) {
        const auto eq = line.find(" = ");
        if (eq == std::string::npos) throw DataError("manifest: bad line '" + line + "'");
        const auto key = line.substr(0, eq), value = line.substr(eq + 3);
        if (key == "format" && value != "ffd-manifest-1")
          throw DataError("manifest: unsupported format " + value);
        if (key == "seed") m.seed = std::stoull(value);
        if (key == "fraction.train") m.fractions.train = std::stod(value);
        if (key == "fraction.validation") m.fractions.validation = std::stod(value);
        if (key == "fraction.test") m.fractions.test = std::stod(value);
      } else if (section == "[assignment]") {
        if (header_row) {
          header_row = false;
          continue;
        }
        std::array<std::string, 4> f;
        std::istringstream ls(line);
        for (auto& field : f)
          if (!std::getline(ls, field, ','))
            throw DataError("manifest: bad assignment '" + line + "'");
        m.entries.push_back(
            {SubjectRecord{f[0], label_from_name(f[1]), std::stoull(f[2])},
             split_from_name(f[3])});
      } else if (section == "[warnings]") {
        m.warnings.push_back(line);
      }
    }
    return m;
  }
};

namespace detail {

// Largest-remainder apportionment of n items over the three splits.
inline std::array<std::size_t, 3> apportion(std::size_t n, const SplitFractions& f) {
  std::array<double, 3> exact{};
  std::array<std::size_t, 3> out{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    exact[i] = f.of(kAllSplits[i]) * static_cast<double>(n);
    out[i] = static_cast<std::size_t>(std::floor(exact[i]));
    assigned += out[i];
  }
  std::array<std::size_t, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return exact[a] - std::floor(exact[a]) > exact[b] - std::floor(exact[b]);
  });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++out[order[k % 3]];
  return out;
}

}  // namespace detail

// Subject-disjoint split, stratified by class. Subjects too short to yield a
// single window are left out and noted in the warnings.
inline DatasetManifest build_manifest(const std::vector<SubjectRecord>& subjects,
                                      const SplitFractions& fractions, std::uint64_t seed) {
  const double sum = fractions.train + fractions.validation + fractions.test;
  if (std::abs(sum - 1.0) > 1e-9 || fractions.train < 0 || fractions.validation < 0 ||
      fractions.test < 0)
    throw InvalidArgument("split fractions must be non-negative and sum to 1");

  DatasetManifest m;
  m.seed = seed;
  m.fractions = fractions;

  std::array<std::vector<SubjectRecord>, kNumClasses> by_class;
  for (const auto& s : subjects) {
    if (s.frame_count < kFramesPerSubsequence) {
      m.warnings.push_back("skipped subject " + s.subject_id + ": " +
                           std::to_string(s.frame_count) + " frames < 8");
      continue;
    }
    by_class[code(s.label)].push_back(s);
  }

  std::mt19937_64 rng(seed);
  for (auto label : kAllLabels) {
    auto& group = by_class[code(label)];
    std::sort(group.begin(), group.end(),
              [](const auto& a, const auto& b) { return a.subject_id < b.subject_id; });
    std::shuffle(group.begin(), group.end(), rng);
    const auto counts = detail::apportion(group.size(), fractions);
    std::size_t next = 0;
    for (std::size_t si = 0; si < 3; ++si) {
      if (counts[si] == 0)
        m.warnings.push_back("class " + std::string(name(label)) + " is empty in split " +
                             std::string(name(kAllSplits[si])));
      for (std::size_t k = 0; k < counts[si]; ++k) m.entries.push_back({group[next++], kAllSplits[si]});
    }
  }
  return m;
}

}  // namespace ffd
