#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "ffd/core/error.hpp"
#include "ffd/core/tensor.hpp"
#include "ffd/model/cnn_lstm.hpp"

namespace ffd::model {

// Named copy of every parameter, including the non-trainable BatchNorm
// moving statistics.
struct WeightSnapshot {
  struct Entry {
    std::string name;
    Tensor<float> value;
  };
  std::vector<Entry> entries;

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& e : entries) n += e.value.size();
    return n;
  }
  friend bool operator==(const WeightSnapshot& a, const WeightSnapshot& b) {
    if (a.entries.size() != b.entries.size()) return false;
    for (std::size_t i = 0; i < a.entries.size(); ++i)
      if (a.entries[i].name != b.entries[i].name || !(a.entries[i].value == b.entries[i].value))
        return false;
    return true;
  }
};

inline WeightSnapshot snapshot(const CnnLstm<float>& model) {
  WeightSnapshot s;
  for (const auto* p : model.parameters()) s.entries.push_back({p->name, p->value});
  return s;
}

inline void restore(CnnLstm<float>& model, const WeightSnapshot& s) {
  auto params = model.parameters();
  if (params.size() != s.entries.size())
    throw ShapeError("checkpoint has " + std::to_string(s.entries.size()) + " tensors, model has " +
                     std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& e = s.entries[i];
    if (e.name != params[i]->name || e.value.shape() != params[i]->value.shape())
      throw ShapeError("checkpoint tensor " + e.name + " " + to_string(e.value.shape()) +
                       " does not fit model tensor " + params[i]->name + " " +
                       to_string(params[i]->value.shape()));
    params[i]->value = e.value;
  }
}

// Binary layout, little-endian:
//   "FFDW" u32 version u32 tensor_count
//   per tensor: u16 name_len, name, u8 rank, u32 dims[rank], f32 data[]
inline constexpr char kWeightsMagic[4] = {'F', 'F', 'D', 'W'};
inline constexpr std::uint32_t kWeightsVersion = 1;

namespace detail {
template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
template <class T>
T get(std::istream& is, const std::string& what) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw DataError("truncated weights file (" + what + ")");
  return v;
}
}  // namespace detail

inline void write_weights(const WeightSnapshot& s, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot write " + path.string());
  os.write(kWeightsMagic, 4);
  detail::put<std::uint32_t>(os, kWeightsVersion);
  detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(s.entries.size()));
  for (const auto& e : s.entries) {
    detail::put<std::uint16_t>(os, static_cast<std::uint16_t>(e.name.size()));
    os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    detail::put<std::uint8_t>(os, static_cast<std::uint8_t>(e.value.rank()));
    for (auto d : e.value.shape()) detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(d));
    os.write(reinterpret_cast<const char*>(e.value.data()),
             static_cast<std::streamsize>(e.value.size() * sizeof(float)));
  }
  if (!os) throw DataError("failed writing " + path.string());
}

inline WeightSnapshot read_weights(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("checkpoint not found: " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kWeightsMagic, 4) != 0)
    throw DataError(path.string() + " is not a weights file");
  if (detail::get<std::uint32_t>(is, "version") != kWeightsVersion)
    throw DataError(path.string() + ": unsupported weights version");
  const auto count = detail::get<std::uint32_t>(is, "count");
  WeightSnapshot s;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name(detail::get<std::uint16_t>(is, "name length"), '\0');
    if (!is.read(name.data(), static_cast<std::streamsize>(name.size()))) throw DataError("truncated weights file (name)");
    Shape shape(detail::get<std::uint8_t>(is, "rank"));
    for (auto& d : shape) d = detail::get<std::uint32_t>(is, "dims");
    Tensor<float> t(shape);
    if (!is.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(float))))
      throw DataError("truncated weights file (tensor " + name + ")");
    s.entries.push_back({std::move(name), std::move(t)});
  }
  return s;
}

// Human-readable audit record written next to the weights.
inline std::string sidecar_text(const CnnLstm<float>& model, const std::string& extra = {}) {
  std::ostringstream os;
  os << "seed = " << model.seed() << '\n';
  os << "frames_per_subsequence = " << model.config().frames_per_subsequence << '\n';
  os << "num_classes = " << model.config().num_classes << '\n';
  os << "dropout_rate = " << model.config().dropout_rate << '\n';
  os << "batchnorm_momentum = " << model.config().batchnorm_momentum << '\n';
  os << extra;
  os << "\n[layers]\ntable,row,kind,input_shape,output_shape,parameters\n";
  for (const auto& a : model.layer_audit())
    os << a.table << ',' << a.row << ',' << name(a.kind) << ",\"" << to_string(a.input_shape) << "\",\""
       << to_string(a.output_shape) << "\"," << a.parameters << '\n';
  const auto summary = count_parameters(model);
  os << "\n[parameters]\ncnn = " << summary.cnn_total << "\nhead = " << summary.head_total
     << "\ntotal = " << summary.total << '\n';
  return os.str();
}

}  // namespace ffd::model
