#include "fracvar/frac_ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

namespace fracvar {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Kernel moments over s in [sa, sb] (0 <= sa < sb):
//   sum_j binom(m, j) (-1/x)^j int (A + B s) s^{j - alpha - 1} ds,
// i.e. int (A + B s) s^{-alpha-1} (1 - s/x)^m ds. When sa = 0 the caller
// guarantees A = 0 so only integrable terms remain.
double kernel_moments(double sa, double sb, double a_coef, double b_coef, double alpha, int m,
                      double inv_x) {
  const double pa = sa > 0.0 ? std::pow(sa, -alpha) : kInf;
  const double pb = std::pow(sb, -alpha);
  if (m == 0) {
    double sum = b_coef * (sb * pb - (sa > 0.0 ? sa * pa : 0.0)) / (1.0 - alpha);
    if (a_coef != 0.0) sum += a_coef * (pa - pb) / alpha;
    return sum;
  }
  double sum = 0.0;
  double binom = 1.0;
  double coef = 1.0;  // (-1/x)^j
  double sa_j = 1.0;  // sa^j
  double sb_j = 1.0;  // sb^j
  for (int j = 0; j <= m; ++j) {
    const double c = binom * coef;
    // int s^{j-alpha-1} ds = (s^{j-alpha}) / (j - alpha)
    if (a_coef != 0.0) {
      const double lo = (j == 0) ? pa : (sa > 0.0 ? sa_j * pa : 0.0);
      sum += c * a_coef * (sb_j * pb - lo) / (static_cast<double>(j) - alpha);
    }
    // int s^{j-alpha} ds = s^{j+1-alpha} / (j + 1 - alpha)
    const double lo = sa > 0.0 ? sa_j * sa * pa : 0.0;
    sum += c * b_coef * (sb_j * sb * pb - lo) / (static_cast<double>(j) + 1.0 - alpha);

    binom = binom * static_cast<double>(m - j) / static_cast<double>(j + 1);
    coef *= -inv_x;
    sa_j *= sa;
    sb_j *= sb;
  }
  return sum;
}

// int over the element [ta, tb] (tb <= x) of [fx - f(t)] (x-t)^{-alpha-1} (t/x)^m dt
// with f linear on the element, f(ta) = fa. `touches_x` marks the element whose
// right end is x, where fx - f(t) = slope * (x - t) exactly.
double left_piece(double x, double ta, double tb, double fx, double fa, double slope,
                  double alpha, int m, bool touches_x) {
  const double sa = x - tb;
  const double sb = x - ta;
  const double a_coef = touches_x ? 0.0 : fx - fa - slope * (x - ta);
  return kernel_moments(touches_x ? 0.0 : sa, sb, a_coef, slope, alpha, m, 1.0 / x);
}

double psi_integral_branch(std::span<const double> t, std::span<const double> f, std::size_t i,
                           double eps, double alpha, const RayGrid& grid) {
  const std::size_t n_el = t.size() - 1;
  const double r = t[i];
  const double fr = f[i];
  const double lower = r + eps;
  double sum = 0.0;
  for (std::size_t k = grid.locate(lower); k < n_el; ++k) {
    const double a = std::max(t[k], lower);
    const double b = t[k + 1];
    if (!(b > a)) continue;
    const double slope = (f[k + 1] - f[k]) / (t[k + 1] - t[k]);
    // f(r) - f(t) = A + B s with s = t - r.
    const double a_coef = (k == i) ? 0.0 : fr - f[k] - slope * (r - t[k]);
    sum += kernel_moments(a - r, b - r, a_coef, -slope, alpha, 0, 0.0);
  }
  return sum;
}

void require_eps_below_d(double eps, double d) {
  if (!(eps < d)) {
    std::ostringstream msg;
    msg << "truncation radius eps = " << eps << " must be smaller than d = " << d;
    throw DomainError(msg.str());
  }
}

GridFunction mirror(const GridFunction& f) {
  const RayGrid& g = f.grid();
  const std::size_t n = g.node_count();
  const double d = g.length();
  std::vector<double> nodes(n);
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) {
    nodes[i] = d - g.node(n - 1 - i);
    values[i] = f[n - 1 - i];
  }
  nodes.front() = 0.0;
  nodes.back() = d;
  return GridFunction(std::make_shared<const RayGrid>(std::move(nodes)), std::move(values));
}

GridFunction unmirror(const GridFunction& mirrored, const GridPtr& original) {
  const std::size_t n = mirrored.size();
  GridFunction out(original);
  for (std::size_t i = 0; i < n; ++i) out[i] = mirrored[n - 1 - i];
  return out;
}

}  // namespace

FractionalOrder::FractionalOrder(double alpha) : alpha_(alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    std::ostringstream msg;
    msg << "fractional order alpha = " << alpha << " must lie in the open interval (0,1)";
    throw DomainError(msg.str());
  }
}

TruncationEpsilon::TruncationEpsilon(double epsilon) : epsilon_(epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw DomainError("truncation radius eps must be positive and finite");
}

EpsilonSchedule::EpsilonSchedule(std::vector<double> radii) : radii_(std::move(radii)) {
  if (radii_.empty()) throw DomainError("epsilon schedule is empty");
  for (std::size_t k = 0; k < radii_.size(); ++k) {
    if (!(radii_[k] > 0.0)) throw DomainError("epsilon schedule entries must be positive");
    if (k > 0 && !(radii_[k] < radii_[k - 1]))
      throw DomainError("epsilon schedule must be strictly decreasing");
  }
}

EpsilonSchedule EpsilonSchedule::geometric(double d, int first, int last) {
  std::vector<double> radii;
  for (int k = first; k <= last; ++k) radii.push_back(std::ldexp(d, -k));
  return EpsilonSchedule(std::move(radii));
}

double gamma_coefficient(int n, FractionalOrder alpha) {
  if (n < 1) throw DomainError("gamma_coefficient: dimension n must be >= 1");
  // (n-1)! / Gamma(n - alpha) in log space to stay finite for large n.
  return std::exp(std::lgamma(static_cast<double>(n)) - std::lgamma(n - alpha.value()));
}

KipriyanovSpec::KipriyanovSpec(FractionalOrder alpha_, int n_)
    : alpha(alpha_), n(n_), c_n_alpha(gamma_coefficient(n_, alpha_)) {}

GridFunction fractional_integral_right(const GridFunction& f, FractionalOrder alpha, Exec exec) {
  const RayGrid& g = f.grid();
  const auto t = g.nodes();
  const auto v = f.values();
  const double a = alpha.value();
  const double inv_gamma = 1.0 / std::tgamma(a);
  const std::size_t n_el = g.intervals();
  GridFunction out(f.grid_ptr());
  auto out_v = out.values();
  for_each_index(g.node_count(), exec, [&](std::size_t i) {
    const double r = t[i];
    double sum = 0.0;
    double pa = 0.0;  // (t_k - r)^alpha, zero at k = i
    for (std::size_t k = i; k < n_el; ++k) {
      const double sa = t[k] - r;
      const double sb = t[k + 1] - r;
      const double pb = std::pow(sb, a);
      const double slope = (v[k + 1] - v[k]) / (t[k + 1] - t[k]);
      const double c0 = v[k] - slope * sa;  // f = c0 + slope * s on the element
      sum += c0 * (pb - pa) / a + slope * (sb * pb - sa * pa) / (a + 1.0);
      pa = pb;
    }
    out_v[i] = sum * inv_gamma;
  });
  return out;
}

GridFunction psi_minus(const GridFunction& f, FractionalOrder alpha, TruncationEpsilon eps,
                       Exec exec) {
  const RayGrid& g = f.grid();
  const double d = g.length();
  const double e = eps.value();
  require_eps_below_d(e, d);
  const double a = alpha.value();
  const auto t = g.nodes();
  const auto v = f.values();
  GridFunction out(f.grid_ptr());
  auto out_v = out.values();
  for_each_index(g.node_count(), exec, [&](std::size_t i) {
    const double r = t[i];
    if (r <= d - e) {
      out_v[i] = psi_integral_branch(t, v, i, e, a, g);
    } else if (r < d) {
      out_v[i] = v[i] / a * (std::pow(e, -a) - std::pow(d - r, -a));
    } else {
      out_v[i] = v[i] == 0.0 ? 0.0 : -std::copysign(kInf, v[i]);
    }
  });
  return out;
}

GridFunction marchaud_truncated_right(const GridFunction& f, FractionalOrder alpha,
                                      TruncationEpsilon eps, Exec exec) {
  const RayGrid& g = f.grid();
  const double d = g.length();
  const double e = eps.value();
  require_eps_below_d(e, d);
  const double a = alpha.value();
  const double inv_gamma = 1.0 / std::tgamma(1.0 - a);
  const double boundary_factor = std::pow(e, -a) * inv_gamma;
  const auto t = g.nodes();
  const auto v = f.values();
  GridFunction out(f.grid_ptr());
  auto out_v = out.values();
  for_each_index(g.node_count(), exec, [&](std::size_t i) {
    const double r = t[i];
    if (r <= d - e) {
      const double psi = psi_integral_branch(t, v, i, e, a, g);
      out_v[i] = inv_gamma * (v[i] * std::pow(d - r, -a) + a * psi);
    } else {
      out_v[i] = v[i] * boundary_factor;
    }
  });
  return out;
}

GridFunction marchaud_truncated_left(const GridFunction& f, FractionalOrder alpha,
                                     TruncationEpsilon eps, Exec exec) {
  return unmirror(marchaud_truncated_right(mirror(f), alpha, eps, exec), f.grid_ptr());
}

double lp_grid_norm(const GridFunction& f, double p) {
  if (!(p >= 1.0)) throw DomainError("L_p norm needs p >= 1");
  const RayGrid& g = f.grid();
  const std::size_t n = g.node_count();
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double w = 0.5 * ((i > 0 ? g.spacing(i - 1) : 0.0) + g.spacing(i));
    sum += w * std::pow(std::abs(f[i]), p);
  }
  return std::pow(sum, 1.0 / p);
}

MarchaudLimit marchaud_right(const GridFunction& f, FractionalOrder alpha,
                             const MarchaudLimitOptions& options, Exec exec) {
  const RayGrid& g = f.grid();
  const double d = g.length();
  const double a = alpha.value();
  const double p = options.p_exponent;
  if (!(p >= 1.0)) throw DomainError("marchaud_right: p_exponent must be >= 1");
  if (!(options.tolerance > 0.0)) throw DomainError("marchaud_right: tolerance must be positive");

  double max_abs = 0.0;
  for (double x : f.values()) max_abs = std::max(max_abs, std::abs(x));
  const bool vanishes_at_d = std::abs(f[f.size() - 1]) <= 1e-14 * max_abs;
  if (!vanishes_at_d && a * p >= 1.0) {
    std::ostringstream msg;
    msg << "marchaud_right: f(d) != 0 requires alpha * p < 1 for the L_p limit (alpha = " << a
        << ", p = " << p << ")";
    throw DomainError(msg.str());
  }

  const EpsilonSchedule schedule = options.schedule.empty()
                                       ? EpsilonSchedule::geometric(d)
                                       : EpsilonSchedule(options.schedule);

  MarchaudLimit result;
  GridFunction prev_raw;
  GridFunction prev_est;
  double prev_eps = 0.0;
  bool have_raw = false;
  bool have_est = false;
  double last_distance = kInf;

  for (double eps : schedule.radii()) {
    GridFunction raw = marchaud_truncated_right(f, alpha, TruncationEpsilon(eps), exec);
    ++result.iterations;
    GridFunction est = raw;
    bool est_valid = true;
    if (options.extrapolate) {
      if (!have_raw) {
        est_valid = false;
      } else {
        // raw(eps) = L + c eps^{1-alpha} for P1 data once eps is below the
        // first element, so one Richardson step removes the truncation error.
        const double rho = std::pow(eps / prev_eps, 1.0 - a);
        for (std::size_t i = 0; i < est.size(); ++i) {
          if (g.node(i) <= d - eps) est[i] = (raw[i] - rho * prev_raw[i]) / (1.0 - rho);
        }
      }
    }
    prev_raw = std::move(raw);
    prev_eps = eps;
    have_raw = true;
    if (!est_valid) continue;

    if (have_est) {
      last_distance = lp_grid_norm(est - prev_est, p);
      const double scale = std::max(1.0, lp_grid_norm(est, p));
      if (last_distance <= options.tolerance * scale) {
        result.value = std::move(est);
        result.achieved_epsilon = eps;
        result.last_distance = last_distance;
        return result;
      }
    }
    prev_est = std::move(est);
    have_est = true;
  }
  std::ostringstream msg;
  msg << "marchaud_right: eps-limit not reached within the schedule; last distance "
      << last_distance;
  throw ConvergenceError(msg.str(), last_distance);
}

MarchaudLimit marchaud_left(const GridFunction& f, FractionalOrder alpha,
                            const MarchaudLimitOptions& options, Exec exec) {
  MarchaudLimit mirrored = marchaud_right(mirror(f), alpha, options, exec);
  mirrored.value = unmirror(mirrored.value, f.grid_ptr());
  return mirrored;
}

double kipriyanov_at(const GridFunction& f, const KipriyanovSpec& spec, double x) {
  const RayGrid& g = f.grid();
  if (!(x > 0.0) || x > g.length()) throw DomainError("kipriyanov_at: x must lie in (0, d]");
  const double a = spec.alpha.value();
  const int m = spec.n - 1;
  const double fx = f.at(x);
  const auto t = g.nodes();
  const auto v = f.values();
  double sum = 0.0;
  for (std::size_t k = 0; k < g.intervals() && t[k] < x; ++k) {
    const bool touches = t[k + 1] >= x;
    const double slope = (v[k + 1] - v[k]) / (t[k + 1] - t[k]);
    sum += left_piece(x, t[k], touches ? x : t[k + 1], fx, v[k], slope, a, m, touches);
  }
  return a / std::tgamma(1.0 - a) * sum + spec.c_n_alpha * fx * std::pow(x, -a);
}

KipriyanovResult kipriyanov_left(const GridFunction& f, const KipriyanovSpec& spec, Exec exec) {
  const RayGrid& g = f.grid();
  const double a = spec.alpha.value();
  const int m = spec.n - 1;
  const double factor = a / std::tgamma(1.0 - a);
  const auto t = g.nodes();
  const auto v = f.values();
  KipriyanovResult result{GridFunction(f.grid_ptr()), false};
  auto out = result.value.values();
  for_each_index(g.node_count(), exec, [&](std::size_t i) {
    if (i == 0) return;
    const double x = t[i];
    double sum = 0.0;
    for (std::size_t k = 0; k < i; ++k) {
      const double slope = (v[k + 1] - v[k]) / (t[k + 1] - t[k]);
      sum += left_piece(x, t[k], t[k + 1], v[i], v[k], slope, a, m, k + 1 == i);
    }
    out[i] = factor * sum + spec.c_n_alpha * v[i] * std::pow(x, -a);
  });
  if (v[0] != 0.0) {
    result.endpoint_singular = true;
    out[0] = std::copysign(kInf, v[0]);
  } else {
    out[0] = 0.0;
  }
  return result;
}

KipriyanovHat::KipriyanovHat(const RayGrid& grid, const KipriyanovSpec& spec)
    : grid_(&grid),
      alpha_(spec.alpha.value()),
      m_(spec.n - 1),
      factor_(spec.alpha.value() / std::tgamma(1.0 - spec.alpha.value())),
      c_n_alpha_(spec.c_n_alpha) {}

double KipriyanovHat::operator()(std::size_t j, double x) const {
  const RayGrid& grid = *grid_;
  if (j == 0 || j >= grid.intervals()) throw DomainError("kipriyanov_hat: j must be an interior node");
  const double tl = grid.node(j - 1);
  const double tc = grid.node(j);
  const double tr = grid.node(j + 1);
  if (x <= tl) return 0.0;
  const double a = alpha_;
  const double hl = tc - tl;
  const double hr = tr - tc;
  double fx = 0.0;
  if (x <= tc) {
    fx = (x - tl) / hl;
  } else if (x < tr) {
    fx = (tr - x) / hr;
  }
  double sum = 0.0;
  if (fx != 0.0 && tl > 0.0) {
    // [0, t_{j-1}]: the hat vanishes, integrand is fx times the kernel.
    sum += kernel_moments(x - tl, x, fx, 0.0, a, m_, 1.0 / x);
  }
  {
    const bool touches = x <= tc;
    sum += left_piece(x, tl, touches ? x : tc, fx, 0.0, 1.0 / hl, a, m_, touches);
  }
  if (x > tc) {
    const bool touches = x <= tr;
    sum += left_piece(x, tc, touches ? x : tr, fx, 1.0, -1.0 / hr, a, m_, touches);
  }
  const double local = fx != 0.0 ? c_n_alpha_ * fx * std::pow(x, -a) : 0.0;
  return factor_ * sum + local;
}

double kipriyanov_hat(const RayGrid& grid, std::size_t j, const KipriyanovSpec& spec, double x) {
  return KipriyanovHat(grid, spec)(j, x);
}

}  // namespace fracvar
