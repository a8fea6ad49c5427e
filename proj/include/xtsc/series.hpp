#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace xtsc {

struct Shape {
  std::size_t n_features = 0;
  std::size_t t_steps = 0;

  std::size_t cells() const noexcept { return n_features * t_steps; }
  bool operator==(const Shape&) const = default;
};

std::string to_string(Shape shape);

/// Dense N x T matrix stored feature-major: cell (i, t) lives at i * T + t.
class Matrix {
 public:
  Matrix() = default;
  explicit Matrix(Shape shape, double fill = 0.0);
  /// Throws InvalidShape when values.size() != shape.cells().
  Matrix(Shape shape, std::vector<double> values);

  Shape shape() const noexcept { return shape_; }
  std::size_t n_features() const noexcept { return shape_.n_features; }
  std::size_t t_steps() const noexcept { return shape_.t_steps; }
  std::size_t size() const noexcept { return values_.size(); }

  double& operator()(std::size_t i, std::size_t t) noexcept { return values_[i * shape_.t_steps + t]; }
  double operator()(std::size_t i, std::size_t t) const noexcept { return values_[i * shape_.t_steps + t]; }
  double& operator[](std::size_t flat) noexcept { return values_[flat]; }
  double operator[](std::size_t flat) const noexcept { return values_[flat]; }

  std::span<double> row(std::size_t i) noexcept { return {values_.data() + i * shape_.t_steps, shape_.t_steps}; }
  std::span<const double> row(std::size_t i) const noexcept {
    return {values_.data() + i * shape_.t_steps, shape_.t_steps};
  }
  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  const std::vector<double>& data() const noexcept { return values_; }

  bool all_finite() const noexcept;

  bool operator==(const Matrix&) const = default;

 private:
  Shape shape_;
  std::vector<double> values_;
};

using TimeSeries = Matrix;

/// Boolean N x T matrix marking informative cells.
class GroundTruthMask {
 public:
  GroundTruthMask() = default;
  explicit GroundTruthMask(Shape shape) : shape_(shape), cells_(shape.cells(), 0) {}
  GroundTruthMask(Shape shape, std::vector<std::uint8_t> cells);

  Shape shape() const noexcept { return shape_; }
  bool operator()(std::size_t i, std::size_t t) const noexcept { return cells_[i * shape_.t_steps + t] != 0; }
  bool operator[](std::size_t flat) const noexcept { return cells_[flat] != 0; }
  void set(std::size_t i, std::size_t t, bool on = true) noexcept { cells_[i * shape_.t_steps + t] = on ? 1 : 0; }
  void set_flat(std::size_t flat, bool on = true) noexcept { cells_[flat] = on ? 1 : 0; }

  std::size_t count() const noexcept;
  bool empty() const noexcept { return count() == 0; }
  std::span<const std::uint8_t> cells() const noexcept { return cells_; }

  bool operator==(const GroundTruthMask&) const = default;

 private:
  Shape shape_;
  std::vector<std::uint8_t> cells_;
};

void require_shape(Shape actual, Shape expected, const char* what);

}  // namespace xtsc
