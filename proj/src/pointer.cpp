#include "wtrace/pointer.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <numbers>
#include <string>

namespace wtrace {

namespace {

constexpr double kMinPostselection = 1e-14;
constexpr double kNoiseFloor = 1e-13;
constexpr double kTailSigmas = 8.0;

double gaussian_amplitude(double x, double sigma) {
  return std::pow(2.0 * std::numbers::pi * sigma * sigma, -0.25) * std::exp(-x * x / (4.0 * sigma * sigma));
}

Complex trapezoid_complex(const PointerGrid& grid, const Vector<Complex>& f) {
  const Eigen::Index n = f.size();
  Complex sum = f.sum() - 0.5 * (f(0) + f(n - 1));
  return sum * grid.spacing();
}

// Overlap and position matrix elements between two pointer wavefunctions.
Complex gram(const PointerState& a, const PointerState& b) {
  return trapezoid_complex(a.grid, (a.amplitudes.conjugate().array() * b.amplitudes.array()).matrix());
}

Complex position_element(const PointerState& a, const PointerState& b) {
  const Eigen::ArrayXcd x = a.grid.positions().cast<Complex>();
  return trapezoid_complex(a.grid, (a.amplitudes.conjugate().array() * x * b.amplitudes.array()).matrix());
}

void check_pointer_fits(const PointerConfig& config, double g) {
  if (config.grid.extent < std::abs(g) + kTailSigmas * config.sigma)
    throw Error("pointer grid too small: need L >= |g| + 8 sigma");
}

}  // namespace

PointerGrid::PointerGrid(double extent_, int points_) : extent(extent_), points(points_) {
  if (!(extent > 0) || !std::isfinite(extent)) throw Error("pointer grid extent must be positive");
  if (points < 64) throw Error("pointer grid needs at least 64 points");
}

Eigen::ArrayXd PointerGrid::positions() const {
  return Eigen::ArrayXd::LinSpaced(points, -extent, extent);
}

double trapezoid(const PointerGrid& grid, const Eigen::ArrayXd& f) {
  const Eigen::Index n = f.size();
  return (f.sum() - 0.5 * (f(0) + f(n - 1))) * grid.spacing();
}

double pointer_norm(const PointerState& p) {
  return std::sqrt(trapezoid(p.grid, p.amplitudes.array().abs2()));
}

double mean_position(const PointerState& p) {
  const Eigen::ArrayXd rho = p.amplitudes.array().abs2();
  return trapezoid(p.grid, rho * p.grid.positions()) / trapezoid(p.grid, rho);
}

double position_variance(const PointerState& p) {
  const Eigen::ArrayXd rho = p.amplitudes.array().abs2();
  const Eigen::ArrayXd x = p.grid.positions();
  const double mass = trapezoid(p.grid, rho);
  const double mean = trapezoid(p.grid, rho * x) / mass;
  return trapezoid(p.grid, rho * (x - mean).square()) / mass;
}

double mass_beyond(const PointerState& p, double x0) {
  const Eigen::ArrayXd x = p.grid.positions();
  const Eigen::ArrayXd rho = p.amplitudes.array().abs2();
  const Eigen::ArrayXd masked = (x > x0).select(rho, 0.0);
  return trapezoid(p.grid, masked) / trapezoid(p.grid, rho);
}

PointerState prepare_gaussian(const PointerGrid& grid, double sigma) {
  if (!(sigma > 2.0 * grid.spacing())) throw Error("pointer width under-resolved: need sigma > 2 dx");
  if (grid.extent < kTailSigmas * sigma) throw Error("pointer grid too small: need L >= 8 sigma");
  return displaced_gaussian(grid, sigma, 0.0);
}

bool grid_aligned(const PointerGrid& grid, double g) noexcept {
  const double steps = g / grid.spacing();
  return std::abs(steps - std::round(steps)) < 1e-9 * std::max(1.0, std::abs(steps));
}

PointerState shift_by_steps(const PointerState& p, int steps) {
  PointerState out = p;
  out.amplitudes.setZero();
  const int n = p.grid.points;
  for (int i = 0; i < n; ++i) {
    const int src = i - steps;
    if (src >= 0 && src < n) out.amplitudes(i) = p.amplitudes(src);
  }
  return out;
}

PointerState displaced_gaussian(const PointerGrid& grid, double sigma, double g) {
  // Normalization fixed by the centered Gaussian so displaced copies share it.
  const Eigen::ArrayXd x = grid.positions();
  Eigen::ArrayXd centered(grid.points);
  Eigen::ArrayXd shifted(grid.points);
  for (int i = 0; i < grid.points; ++i) {
    centered(i) = gaussian_amplitude(x(i), sigma);
    shifted(i) = gaussian_amplitude(x(i) - g, sigma);
  }
  const double scale = 1.0 / std::sqrt(trapezoid(grid, centered.square()));
  return {grid, (scale * shifted).cast<Complex>().matrix(), sigma};
}

PointerState translated_pointer(const PointerGrid& grid, double sigma, double g) {
  if (grid_aligned(grid, g))
    return shift_by_steps(prepare_gaussian(grid, sigma), static_cast<int>(std::lround(g / grid.spacing())));
  prepare_gaussian(grid, sigma);  // validates resolution and extent
  return displaced_gaussian(grid, sigma, g);
}

CouplingOutcome couple_and_postselect(const TimeSlice& s, const CouplingSpec& spec,
                                      const PointerConfig& config) {
  const auto& dims = s.forward.dims();
  spec.target.validate(dims);
  if (spec.target.order() == 0) throw Error("coupling target must contain a box projector");
  if (!(spec.strength >= 0) || !std::isfinite(spec.strength)) throw Error("coupling strength must be >= 0");
  check_pointer_fits(config, spec.strength);

  // One projector per pointer.
  std::vector<ProjectorQuery> factors;
  if (spec.scheme == CouplingScheme::Direct) {
    factors.push_back(spec.target);
  } else {
    const auto support = spec.target.support();
    if (support.size() < 2) throw Error("sequential coupling needs at least two projector factors");
    for (auto j : support) factors.push_back(ProjectorQuery::any(dims.size()).with(j, spec.target[j]));
  }
  const std::size_t m = factors.size();
  const std::size_t branches = std::size_t{1} << m;

  // Matrix elements of products of the selected projectors, by subset mask.
  auto merged_query = [&](std::size_t mask) {
    auto q = ProjectorQuery::any(dims.size());
    for (std::size_t j = 0; j < m; ++j)
      if (mask >> j & 1U)
        for (auto i : factors[j].support()) q = q.with(i, factors[j][i]);
    return q;
  };
  std::vector<Complex> post_elem(branches), norm_elem(branches);
  for (std::size_t mask = 0; mask < branches; ++mask) {
    const auto q = merged_query(mask);
    post_elem[mask] = mask == 0 ? s.overlap : projector_element(s.backward, q, s.forward);
    norm_elem[mask] = mask == 0 ? inner(s.forward, s.forward) : projector_element(s.forward, q, s.forward);
  }
  // Pi_s = prod_{j in s} P_j prod_{j not in s} (I - P_j), expanded by inclusion-exclusion.
  std::vector<Complex> amp(branches);
  std::vector<double> branch_norm(branches);
  for (std::size_t sel = 0; sel < branches; ++sel) {
    const std::size_t rest = (branches - 1) & ~sel;
    Complex a{0.0, 0.0}, w{0.0, 0.0};
    for (std::size_t sub = rest;; sub = (sub - 1) & rest) {
      const double sign = std::popcount(sub) % 2 == 0 ? 1.0 : -1.0;
      a += sign * post_elem[sel | sub];
      w += sign * norm_elem[sel | sub];
      if (sub == 0) break;
    }
    amp[sel] = a;
    branch_norm[sel] = std::max(0.0, w.real());
  }

  const PointerState rest_pointer = prepare_gaussian(config.grid, config.sigma);
  const PointerState moved_pointer = translated_pointer(config.grid, config.sigma, spec.strength);
  const std::array<const PointerState*, 2> basis{&rest_pointer, &moved_pointer};
  Complex g_mat[2][2], x_mat[2][2];
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      g_mat[a][b] = gram(*basis[a], *basis[b]);
      x_mat[a][b] = position_element(*basis[a], *basis[b]);
    }

  double joint_norm = 0.0;
  for (std::size_t sel = 0; sel < branches; ++sel) {
    double w = branch_norm[sel];
    for (std::size_t j = 0; j < m; ++j) w *= g_mat[sel >> j & 1U][sel >> j & 1U].real();
    joint_norm += w;
  }

  // <Psi_cond| O_1 (x) ... (x) O_m |Psi_cond> with O_j in {1, x}.
  auto moment = [&](std::size_t x_mask) {
    Complex sum{0.0, 0.0};
    for (std::size_t a = 0; a < branches; ++a)
      for (std::size_t b = 0; b < branches; ++b) {
        Complex term = std::conj(amp[a]) * amp[b];
        for (std::size_t j = 0; j < m && term != Complex{0.0, 0.0}; ++j) {
          const auto ia = a >> j & 1U;
          const auto ib = b >> j & 1U;
          term *= (x_mask >> j & 1U) ? x_mat[ia][ib] : g_mat[ia][ib];
        }
        sum += term;
      }
    return sum.real();
  };

  const double cond_mass = moment(0);
  const double post_prob = cond_mass / joint_norm;
  if (!(post_prob >= kMinPostselection))
    throw Error("postselection probability " + brief(post_prob) + " below 1e-14");

  CouplingOutcome out;
  out.branch_amplitudes = amp;
  const double rest_mean = x_mat[0][0].real() / g_mat[0][0].real();
  for (std::size_t j = 0; j < m; ++j) out.estimate.mean_shifts.push_back(moment(std::size_t{1} << j) / cond_mass - rest_mean);
  if (m >= 2) out.estimate.cross_correlation = moment(branches - 1) / cond_mass;
  out.estimate.postselection_probability = post_prob;
  out.estimate.joint_norm = joint_norm;

  if (spec.scheme == CouplingScheme::Direct) {
    PointerState cond = rest_pointer;
    cond.amplitudes = amp[0] * rest_pointer.amplitudes + amp[1] * moved_pointer.amplitudes;
    cond.amplitudes /= pointer_norm(cond);
    out.pointers.push_back(std::move(cond));
  } else {
    out.pointers = {rest_pointer, moved_pointer};
  }
  return out;
}

CouplingOutcome couple_and_postselect(const TwoStateVector& tsv, double t, const CouplingSpec& spec,
                                      const PointerConfig& config) {
  return couple_and_postselect(slice(tsv, t), spec, config);
}

PowerLawFit fit_log_log(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw Error("power-law fit needs matching samples (>= 2)");
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd design(n, 2);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(x[i] > 0) || !(y[i] > 0)) throw Error("power-law fit needs strictly positive samples");
    design(i, 0) = std::log(x[i]);
    design(i, 1) = 1.0;
    rhs(i) = std::log(y[i]);
  }
  const Eigen::Vector2d coef = design.colPivHouseholderQr().solve(rhs);
  return {coef(0), coef(1)};
}

OrderEstimate order_estimate(const TimeSlice& s, const ProjectorQuery& target, CouplingScheme scheme,
                             const std::vector<double>& g_values, const PointerConfig& config) {
  if (g_values.size() < 5) throw Error("order estimate needs at least 5 coupling strengths");
  const auto [lo, hi] = std::minmax_element(g_values.begin(), g_values.end());
  if (!(*lo > 0)) throw Error("order estimate needs strictly positive coupling strengths");
  if (*hi < 10.0 * *lo * (1.0 - 1e-12)) throw Error("coupling strengths must span at least one decade");
  if (*hi > 0.1 * config.sigma * (1.0 + 1e-12)) throw Error("coupling strengths must stay weak (g <= 0.1 sigma)");

  OrderEstimate est;
  est.g_values = g_values;

  double baseline = 0.0;
  std::size_t pointers = 1;
  if (scheme == CouplingScheme::Sequential) {
    const auto at_zero = couple_and_postselect(s, {target, 0.0, scheme}, config);
    baseline = 1.0;
    for (double shift : at_zero.estimate.mean_shifts) baseline *= shift;
    pointers = at_zero.estimate.mean_shifts.size();
  }
  est.noise_floor = kNoiseFloor * std::pow(config.sigma, static_cast<double>(pointers));

  for (double g : g_values) {
    const auto outcome = couple_and_postselect(s, {target, g, scheme}, config);
    const double signal = scheme == CouplingScheme::Direct
                              ? std::abs(outcome.estimate.mean_shifts.front())
                              : std::abs(*outcome.estimate.cross_correlation - baseline);
    est.signals.push_back(signal);
    if (!(signal > est.noise_floor)) est.below_noise_floor = true;
  }
  if (!est.below_noise_floor) {
    const auto fit = fit_log_log(est.g_values, est.signals);
    est.exponent = fit.exponent;
    est.log_prefactor = fit.log_prefactor;
  }
  return est;
}

std::vector<double> log_spaced(double lo, double hi, std::size_t count) {
  if (!(lo > 0) || !(hi > lo) || count < 2) throw Error("log_spaced needs 0 < lo < hi and count >= 2");
  std::vector<double> out(count);
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

}  // namespace wtrace
