#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace spl {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

/// Class ids are dense and 0-based.
using ClassId = int;
using LabelVector = std::vector<ClassId>;

// Error taxonomy. Every stage throws one of these; the batch runner turns
// them into a failed task record.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (shapes, non-finite values, labels).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Invalid run parameters (d1, d2, T, modes).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Factorization or eigensolver failure.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Problem too large for dense processing.
class ResourceError : public Error {
 public:
  using Error::Error;
};

/// Collects non-fatal conditions (zero-vector normalizations, rank
/// truncation). Functions take an optional pointer; nullptr discards.
struct Warnings {
  std::vector<std::string> messages;

  void add(std::string message) { messages.push_back(std::move(message)); }
  bool empty() const { return messages.empty(); }
  std::size_t size() const { return messages.size(); }
};

inline void warn(Warnings* sink, std::string message) {
  if (sink != nullptr) sink->add(std::move(message));
}

}  // namespace spl
