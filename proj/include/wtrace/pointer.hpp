#pragma once

// Von Neumann pointer model: a Gaussian pointer on a uniform position grid is
// translated by g in the branch where the coupled projector equals 1, the
// system is postselected, and the conditional pointer statistics are read
// off by trapezoidal quadrature.
//
// Only position statistics are reported. Imaginary parts of weak values move
// the pointer in momentum, which this model does not read out.

#include <optional>
#include <vector>

#include "wtrace/weaktrace.hpp"

namespace wtrace {

struct PointerGrid {
  PointerGrid(double extent, int points);

  double extent;  ///< half-width L; grid covers [-L, L]
  int points;     ///< M >= 64

  double spacing() const noexcept { return 2.0 * extent / (points - 1); }
  double x(int i) const noexcept { return -extent + i * spacing(); }
  Eigen::ArrayXd positions() const;
};

struct PointerState {
  PointerGrid grid;
  Vector<Complex> amplitudes;
  double sigma;  ///< width of the prepared Gaussian: |chi|^2 has standard deviation sigma
};

/// Trapezoidal rule for samples on the grid.
double trapezoid(const PointerGrid& grid, const Eigen::ArrayXd& f);

double pointer_norm(const PointerState& p);
double mean_position(const PointerState& p);
double position_variance(const PointerState& p);
/// Probability mass at x > x0.
double mass_beyond(const PointerState& p, double x0);

/// Normalized real Gaussian centered at 0. Requires sigma > 2 dx and L >= 8 sigma.
PointerState prepare_gaussian(const PointerGrid& grid, double sigma);

/// True when g is an integer multiple of the grid spacing.
bool grid_aligned(const PointerGrid& grid, double g) noexcept;

/// Exact translation by an integer number of grid steps (zero fill at the edge).
PointerState shift_by_steps(const PointerState& p, int steps);

/// Prepared Gaussian evaluated at x - g, with the same grid normalization.
PointerState displaced_gaussian(const PointerGrid& grid, double sigma, double g);

/// The prepared pointer translated by g: grid shift when aligned, analytic
/// re-evaluation of the Gaussian otherwise.
PointerState translated_pointer(const PointerGrid& grid, double sigma, double g);

enum class CouplingScheme {
  Direct,      ///< one pointer coupled to the full product projector
  Sequential,  ///< one pointer per single-subsystem factor, product readout
};

struct CouplingSpec {
  ProjectorQuery target;
  double strength = 0.0;  ///< g >= 0
  CouplingScheme scheme = CouplingScheme::Direct;
};

struct PointerConfig {
  PointerGrid grid{8.0, 4096};
  double sigma = 1.0;
};

struct ShiftEstimate {
  std::vector<double> mean_shifts;          ///< one per pointer
  std::optional<double> cross_correlation;  ///< <x_1 x_2 ... x_m>, Sequential only
  double postselection_probability = 0.0;
  double joint_norm = 0.0;  ///< norm^2 of system (x) pointers before postselection
};

struct CouplingOutcome {
  /// Direct: the normalized conditional pointer. Sequential: the shared branch
  /// basis {undisplaced, displaced}; the conditional joint pointer state is
  /// sum_s branch_amplitudes[s] (x)_j pointers[bit_j(s)].
  std::vector<PointerState> pointers;
  /// Conditional branch amplitudes <phi|Pi_s|psi>; bit j of s set when
  /// pointer j sits in its displaced branch.
  std::vector<Complex> branch_amplitudes;
  ShiftEstimate estimate;
};

CouplingOutcome couple_and_postselect(const TimeSlice& s, const CouplingSpec& spec,
                                      const PointerConfig& config);
CouplingOutcome couple_and_postselect(const TwoStateVector& tsv, double t, const CouplingSpec& spec,
                                      const PointerConfig& config);

struct PowerLawFit {
  double exponent = 0.0;
  double log_prefactor = 0.0;
};

/// Ordinary least squares of log(y) against log(x).
PowerLawFit fit_log_log(const std::vector<double>& x, const std::vector<double>& y);

struct OrderEstimate {
  std::vector<double> g_values;
  std::vector<double> signals;
  double noise_floor = 0.0;
  bool below_noise_floor = false;
  std::optional<double> exponent;  ///< empty when any signal is at the noise floor
  double log_prefactor = 0.0;
};

/// Leading order in g of the pointer signal: |mean shift| for Direct coupling,
/// |<x_1...x_m> - <x_1>_0...<x_m>_0| (g = 0 baseline) for Sequential.
/// Requires >= 5 positive g values spanning a decade with max g <= 0.1 sigma.
OrderEstimate order_estimate(const TimeSlice& s, const ProjectorQuery& target, CouplingScheme scheme,
                             const std::vector<double>& g_values, const PointerConfig& config);

std::vector<double> log_spaced(double lo, double hi, std::size_t count);

}  // namespace wtrace
