#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "fracvar/errors.hpp"

namespace fracvar {

/// Nodes 0 = r_0 < r_1 < ... < r_N = d on the segment of a ray.
class RayGrid {
 public:
  explicit RayGrid(std::vector<double> nodes);

  double length() const noexcept { return nodes_.back(); }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  /// Number of elements N.
  std::size_t intervals() const noexcept { return nodes_.size() - 1; }
  std::span<const double> nodes() const noexcept { return nodes_; }
  double node(std::size_t i) const { return nodes_[i]; }
  double spacing(std::size_t element) const { return nodes_[element + 1] - nodes_[element]; }
  double min_spacing() const noexcept { return min_spacing_; }
  double max_spacing() const noexcept { return max_spacing_; }
  bool uniform() const noexcept { return uniform_; }

  /// Element index k with r_k <= x <= r_{k+1}; x is clamped into [0, d].
  std::size_t locate(double x) const;

 private:
  std::vector<double> nodes_;
  double min_spacing_ = 0.0;
  double max_spacing_ = 0.0;
  bool uniform_ = false;
};

using GridPtr = std::shared_ptr<const RayGrid>;

enum class Grading { uniform, graded };

struct MeshOptions {
  Grading grading = Grading::uniform;
  /// Grading exponent; nodes are d(1 - (1 - k/N)^exponent).
  double exponent = 2.0;
};

/// Uniform or end-graded mesh of [0, d] with N elements.
GridPtr build_mesh(double d, std::size_t intervals, MeshOptions options = {});

/// Nodal samples of a function on a ray grid, read as the continuous
/// piecewise-linear interpolant and extended by zero outside [0, d].
template <class T>
class BasicGridFunction {
 public:
  using value_type = T;

  BasicGridFunction() = default;
  explicit BasicGridFunction(GridPtr grid)
      : grid_(std::move(grid)), values_(grid_->node_count(), T{}) {}
  BasicGridFunction(GridPtr grid, std::vector<T> values)
      : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_->node_count())
      throw DataError("grid function: value count does not match node count");
  }

  const RayGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<const T> values() const noexcept { return values_; }
  std::span<T> values() noexcept { return values_; }
  const T& operator[](std::size_t i) const { return values_[i]; }
  T& operator[](std::size_t i) { return values_[i]; }

  /// Piecewise-linear interpolant at x, zero outside [0, d].
  T at(double x) const {
    const RayGrid& g = *grid_;
    if (x < 0.0 || x > g.length()) return T{};
    const std::size_t k = g.locate(x);
    const double h = g.spacing(k);
    const double w = (x - g.node(k)) / h;
    return values_[k] * (1.0 - w) + values_[k + 1] * w;
  }

  /// Derivative of the interpolant on element k.
  T slope(std::size_t k) const {
    return (values_[k + 1] - values_[k]) / grid_->spacing(k);
  }

  BasicGridFunction& operator+=(const BasicGridFunction& other) {
    require_same_grid(other);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
    return *this;
  }
  BasicGridFunction& operator-=(const BasicGridFunction& other) {
    require_same_grid(other);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
    return *this;
  }
  BasicGridFunction& operator*=(T s) {
    for (auto& v : values_) v *= s;
    return *this;
  }

  friend BasicGridFunction operator+(BasicGridFunction a, const BasicGridFunction& b) { return a += b; }
  friend BasicGridFunction operator-(BasicGridFunction a, const BasicGridFunction& b) { return a -= b; }
  friend BasicGridFunction operator*(T s, BasicGridFunction a) { return a *= s; }

 private:
  void require_same_grid(const BasicGridFunction& other) const {
    if (grid_ != other.grid_ && grid_->nodes().size() != other.grid_->nodes().size())
      throw DataError("grid function: operands live on different grids");
  }

  GridPtr grid_;
  std::vector<T> values_;
};

using GridFunction = BasicGridFunction<double>;
using ComplexGridFunction = BasicGridFunction<std::complex<double>>;

using ScalarField = std::function<double(double)>;

/// Nodal interpolant; throws DataError on a non-finite sample.
GridFunction interpolate(const ScalarField& f, const GridPtr& grid);

/// Pointwise product of two grid functions on the same grid.
GridFunction multiply(const GridFunction& a, const GridFunction& b);

}  // namespace fracvar
