#include "xtsc/series.hpp"

#include <algorithm>
#include <cmath>

#include "xtsc/error.hpp"

namespace xtsc {

std::string to_string(Shape shape) {
  return "(" + std::to_string(shape.n_features) + "," + std::to_string(shape.t_steps) + ")";
}

Matrix::Matrix(Shape shape, double fill) : shape_(shape), values_(shape.cells(), fill) {}

Matrix::Matrix(Shape shape, std::vector<double> values) : shape_(shape), values_(std::move(values)) {
  if (values_.size() != shape_.cells()) {
    fail(ErrorCode::InvalidShape, "matrix of shape " + to_string(shape) + " given " +
                                      std::to_string(values_.size()) + " values");
  }
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

GroundTruthMask::GroundTruthMask(Shape shape, std::vector<std::uint8_t> cells)
    : shape_(shape), cells_(std::move(cells)) {
  if (cells_.size() != shape_.cells()) {
    fail(ErrorCode::InvalidShape, "mask of shape " + to_string(shape) + " given " +
                                      std::to_string(cells_.size()) + " cells");
  }
  for (auto& c : cells_) c = c ? 1 : 0;
}

std::size_t GroundTruthMask::count() const noexcept {
  return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), std::uint8_t{1}));
}

void require_shape(Shape actual, Shape expected, const char* what) {
  if (actual != expected) {
    fail(ErrorCode::InvalidShape,
         std::string(what) + ": expected " + to_string(expected) + ", got " + to_string(actual));
  }
}

}  // namespace xtsc
