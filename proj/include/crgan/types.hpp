#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace crgan {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Contract violations in configuration or operand shapes; the CLI maps these
// to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DimensionError : ConfigError {
  using ConfigError::ConfigError;
};
// API misuse, e.g. backward without a matching forward.
struct StateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Non-finite values where finite ones are required; CLI exit code 3.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Filesystem and parse failures; CLI exit code 4.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string shape_str(const Matrix& m);
void require_same_shape(const Matrix& a, const Matrix& b, const char* where);
void require_shape(const Matrix& m, Index rows, Index cols, const char* where);

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

namespace detail {
void check_finite_impl(const Matrix& m, const char* where);
}

// NaN guard on exported results; active in debug builds only.
#ifndef NDEBUG
#define CRGAN_CHECK_FINITE(m, where) ::crgan::detail::check_finite_impl((m), (where))
#else
#define CRGAN_CHECK_FINITE(m, where) ((void)0)
#endif

}  // namespace crgan
