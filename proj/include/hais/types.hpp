#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace hais {

using Vector = Eigen::VectorXd;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// All importance weights (or cooperation weights) are zero.
class DegeneracyError : public Error {
 public:
  explicit DegeneracyError(const std::string& what) : Error(what) {}
};

}  // namespace hais
