#include "crgan/types.hpp"

namespace crgan {

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* where) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(where) + ": shape mismatch " +
                         shape_str(a) + " vs " + shape_str(b));
  }
}

void require_shape(const Matrix& m, Index rows, Index cols, const char* where) {
  if (m.rows() != rows || m.cols() != cols) {
    throw DimensionError(std::string(where) + ": expected " +
                         std::to_string(rows) + "x" + std::to_string(cols) +
                         ", got " + shape_str(m));
  }
}

namespace detail {
void check_finite_impl(const Matrix& m, const char* where) {
  if (!m.allFinite()) {
    throw NumericError(std::string(where) + ": non-finite entries");
  }
}
}  // namespace detail

}  // namespace crgan
