#include "fracvar/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fracvar {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::domain: return "domain";
    case ErrorKind::convergence: return "convergence";
    case ErrorKind::ellipticity: return "ellipticity";
    case ErrorKind::solvability: return "solvability";
    case ErrorKind::consistency: return "consistency";
    case ErrorKind::data: return "data";
    case ErrorKind::oracle: return "oracle";
    case ErrorKind::config: return "config";
    case ErrorKind::parse: return "parse";
  }
  return "unknown";
}

RayGrid::RayGrid(std::vector<double> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.size() < 2) throw DomainError("ray grid needs at least two nodes");
  if (nodes_.front() != 0.0) throw DomainError("ray grid must start at r = 0");
  min_spacing_ = nodes_[1] - nodes_[0];
  max_spacing_ = min_spacing_;
  for (std::size_t k = 0; k + 1 < nodes_.size(); ++k) {
    const double h = nodes_[k + 1] - nodes_[k];
    if (!(h > 0.0) || !std::isfinite(nodes_[k + 1]))
      throw DomainError("ray grid nodes must be finite and strictly increasing");
    min_spacing_ = std::min(min_spacing_, h);
    max_spacing_ = std::max(max_spacing_, h);
  }
  uniform_ = (max_spacing_ - min_spacing_) <= 1e-12 * max_spacing_;
}

std::size_t RayGrid::locate(double x) const {
  if (x <= 0.0) return 0;
  if (x >= length()) return intervals() - 1;
  if (uniform_) {
    const double h = length() / static_cast<double>(intervals());
    auto k = static_cast<std::size_t>(x / h);
    k = std::min(k, intervals() - 1);
    // Correct for rounding of x / h at element boundaries.
    while (k > 0 && x < nodes_[k]) --k;
    while (k + 1 < intervals() && x > nodes_[k + 1]) ++k;
    return k;
  }
  auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
  auto k = static_cast<std::size_t>(it - nodes_.begin());
  return std::min(k == 0 ? 0 : k - 1, intervals() - 1);
}

GridPtr build_mesh(double d, std::size_t intervals, MeshOptions options) {
  if (!(d > 0.0) || !std::isfinite(d)) throw DomainError("build_mesh: length d must be positive");
  if (intervals < 2) throw DomainError("build_mesh: need N >= 2 elements");
  std::vector<double> nodes(intervals + 1);
  const auto n = static_cast<double>(intervals);
  for (std::size_t k = 0; k <= intervals; ++k) {
    const double s = static_cast<double>(k) / n;
    if (options.grading == Grading::uniform) {
      nodes[k] = d * s;
    } else {
      if (!(options.exponent >= 1.0)) throw DomainError("build_mesh: grading exponent must be >= 1");
      nodes[k] = d * (1.0 - std::pow(1.0 - s, options.exponent));
    }
  }
  nodes.front() = 0.0;
  nodes.back() = d;
  return std::make_shared<const RayGrid>(std::move(nodes));
}

GridFunction interpolate(const ScalarField& f, const GridPtr& grid) {
  std::vector<double> values(grid->node_count());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double x = grid->node(i);
    values[i] = f(x);
    if (!std::isfinite(values[i]))
      throw DataError("interpolate: non-finite sample at x = " + std::to_string(x));
  }
  return GridFunction(grid, std::move(values));
}

GridFunction multiply(const GridFunction& a, const GridFunction& b) {
  if (a.size() != b.size()) throw DataError("multiply: grid size mismatch");
  GridFunction out(a.grid_ptr());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

}  // namespace fracvar
