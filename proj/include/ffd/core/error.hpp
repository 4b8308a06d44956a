#pragma once

#include <stdexcept>
#include <string>

namespace ffd {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller handed in something with the wrong shape or an invalid value.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Input data on disk or in memory is unusable (bad file, too few frames...).
class DataError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

}  // namespace ffd
