#pragma once

// Pre/postselection bookkeeping and piecewise-constant unitary evolution.
// Units: hbar = 1; generators carry their coupling in the coefficients, so a
// schedule for H = eps*sigma_x over [0, pi/eps] uses times in units of 1/eps.

#include <optional>
#include <variant>
#include <vector>

#include "wtrace/qstate.hpp"

namespace wtrace {

using Hamiltonian = OperatorSum<Complex>;

/// One time-independent piece of the evolution. A missing generator is free
/// (identity) evolution. A generator made of single-subsystem terms keeps
/// product states factorized; terms coupling several subsystems are
/// exponentiated on the full space.
struct Segment {
  double t_start = 0.0;
  double t_end = 0.0;
  std::optional<Hamiltonian> generator;
};

class EvolutionSchedule {
 public:
  explicit EvolutionSchedule(std::vector<Segment> segments);

  /// Identity evolution over [t_initial, t_final].
  static EvolutionSchedule free(double t_initial, double t_final);

  double t_initial() const noexcept { return segments_.front().t_start; }
  double t_final() const noexcept { return segments_.back().t_end; }
  const std::vector<Segment>& segments() const noexcept { return segments_; }

  bool contains(double t) const noexcept;
  /// Clamps `t` into range when it lies within round-off of an endpoint;
  /// throws TimeRangeError otherwise.
  double checked_time(double t) const;

 private:
  std::vector<Segment> segments_;
};

/// A global phase times a product of local unitaries.
struct LocalPropagator {
  Complex phase{1.0, 0.0};
  ProductOperator<Complex> locals;

  bool is_identity() const noexcept { return locals.is_identity() && phase == Complex(1.0, 0.0); }
  OperatorSum<Complex> as_operator() const;
  LocalPropagator adjoint() const;
  /// Composition: (*this) applied after `earlier`.
  LocalPropagator then_after(const LocalPropagator& earlier) const;
};

/// exp(-i H tau) for a generator with terms coupling several subsystems.
struct CoupledStep {
  Hamiltonian generator;
  double tau = 0.0;
};

/// Ordered stages, first applied first. Adjacent local stages are merged.
struct Propagator {
  std::vector<std::variant<LocalPropagator, CoupledStep>> stages;

  bool is_identity() const noexcept { return stages.empty(); }
  bool is_local() const noexcept;
  Propagator adjoint() const;
  /// Composition: (*this) applied after `earlier`.
  Propagator then_after(const Propagator& earlier) const;
};

/// exp(-i H tau) for a Hermitian matrix, via eigendecomposition.
Matrix<Complex> local_unitary(const Matrix<Complex>& hamiltonian, double tau);

/// Ordered product of segment exponentials carrying the system from t_a to t_b.
Propagator propagator(const EvolutionSchedule& schedule, double t_a, double t_b);

/// Coupled stages densify the state; local stages preserve its representation.
State apply(const Propagator& u, const State& s);

Matrix<Complex> dense_matrix(const Propagator& u, const Dims& dims);

struct TwoStateVector {
  State pre;   ///< normalized, at t_initial
  State post;  ///< normalized ket whose bra is the postselection, at t_final
  EvolutionSchedule schedule;
  double pre_norm = 1.0;   ///< norm of the state as supplied, before normalization
  double post_norm = 1.0;
};

/// Validates shared dims and normalizes both boundary states.
TwoStateVector make_two_state_vector(const State& pre, const State& post, EvolutionSchedule schedule);

/// U(t_i -> t)|pre>.
State forward_state(const TwoStateVector& tsv, double t);
/// U(t -> t_f)^dagger |post>, i.e. the ket whose bra is <post|U(t -> t_f).
State backward_state(const TwoStateVector& tsv, double t);
/// <backward(t)|forward(t)>; independent of t for unitary evolution.
Complex overlap(const TwoStateVector& tsv, double t);

}  // namespace wtrace
