#pragma once

#include <stdexcept>
#include <string>

namespace iqnet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor shapes that do not fit together.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf produced or consumed where finite values are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration (unknown family, bad hyperparameter, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Invalid caller input (empty dataset, label out of range, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Malformed or corrupted file.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  DivergenceError(int epoch, int batch, const std::string& what)
      : Error(what), epoch_(epoch), batch_(batch) {}

  int epoch() const noexcept { return epoch_; }
  int batch() const noexcept { return batch_; }

 private:
  int epoch_;
  int batch_;
};

}  // namespace iqnet
