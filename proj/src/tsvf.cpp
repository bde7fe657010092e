#include "wtrace/tsvf.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace wtrace {

namespace {

double time_slack(double t_initial, double t_final) {
  return 1e-12 * (1.0 + std::abs(t_final - t_initial) + std::abs(t_final));
}

// Per-subsystem Hamiltonians plus the coefficient of any identity term.
struct LocalGenerators {
  std::map<std::size_t, Matrix<Complex>> by_subsystem;
  Complex identity_shift{0.0, 0.0};
};

bool is_coupled(const Hamiltonian& h) {
  return std::any_of(h.terms().begin(), h.terms().end(), [](const auto& t) { return t.second.factors().size() > 1; });
}

LocalGenerators split_local(const Hamiltonian& h) {
  LocalGenerators out;
  for (const auto& [c, op] : h.terms()) {
    if (op.is_identity()) {
      out.identity_shift += c;
      continue;
    }
    const auto& [j, m] = *op.factors().begin();
    auto [it, inserted] = out.by_subsystem.try_emplace(j, Matrix<Complex>::Zero(m.rows(), m.cols()));
    if (it->second.rows() != m.rows()) throw DimensionError("generator terms disagree on local dimension");
    it->second += c * m;
  }
  if (std::abs(out.identity_shift.imag()) > 1e-12 * (1.0 + std::abs(out.identity_shift)))
    throw Error("generator is not Hermitian (complex identity coefficient)");
  return out;
}

Matrix<Complex> dense_generator(const Hamiltonian& h, const Dims& dims) {
  const auto n = static_cast<Eigen::Index>(dims.total().value_or(0));
  Matrix<Complex> out = Matrix<Complex>::Zero(n, n);
  for (const auto& [c, op] : h.terms()) out += c * dense_matrix(op, dims);
  return out;
}

Matrix<Complex> stage_matrix(const std::variant<LocalPropagator, CoupledStep>& stage, const Dims& dims) {
  if (const auto* l = std::get_if<LocalPropagator>(&stage)) return l->phase * dense_matrix(l->locals, dims);
  const auto& c = std::get<CoupledStep>(stage);
  return local_unitary(dense_generator(c.generator, dims), c.tau);
}

}  // namespace

EvolutionSchedule::EvolutionSchedule(std::vector<Segment> segments) : segments_(std::move(segments)) {
  if (segments_.empty()) throw Error("evolution schedule needs at least one segment");
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto& s = segments_[i];
    if (!std::isfinite(s.t_start) || !std::isfinite(s.t_end) || !(s.t_start < s.t_end))
      throw Error("schedule segment " + std::to_string(i) + " must satisfy t_start < t_end");
    if (i > 0 && std::abs(s.t_start - segments_[i - 1].t_end) >
                     time_slack(segments_.front().t_start, s.t_end))
      throw Error("schedule segments must be contiguous (gap or overlap at segment " +
                  std::to_string(i) + ")");
    if (s.generator && !is_coupled(*s.generator)) split_local(*s.generator);
  }
}

EvolutionSchedule EvolutionSchedule::free(double t_initial, double t_final) {
  return EvolutionSchedule({Segment{t_initial, t_final, std::nullopt}});
}

bool EvolutionSchedule::contains(double t) const noexcept {
  const double slack = time_slack(t_initial(), t_final());
  return t >= t_initial() - slack && t <= t_final() + slack;
}

double EvolutionSchedule::checked_time(double t) const {
  if (!contains(t))
    throw TimeRangeError("time " + brief(t) + " outside schedule [" +
                         brief(t_initial()) + ", " + brief(t_final()) + "]");
  return std::clamp(t, t_initial(), t_final());
}

OperatorSum<Complex> LocalPropagator::as_operator() const { return OperatorSum<Complex>({{phase, locals}}); }

LocalPropagator LocalPropagator::adjoint() const { return {std::conj(phase), locals.adjoint()}; }

LocalPropagator LocalPropagator::then_after(const LocalPropagator& earlier) const {
  LocalPropagator out{phase * earlier.phase, {}};
  std::map<std::size_t, Matrix<Complex>> merged(earlier.locals.factors());
  for (const auto& [j, m] : locals.factors()) {
    auto it = merged.find(j);
    if (it == merged.end()) merged.emplace(j, m);
    else it->second = m * it->second;
  }
  for (auto& [j, m] : merged) out.locals.set(j, std::move(m));
  return out;
}

bool Propagator::is_local() const noexcept {
  return std::all_of(stages.begin(), stages.end(),
                     [](const auto& st) { return std::holds_alternative<LocalPropagator>(st); });
}

Propagator Propagator::adjoint() const {
  Propagator out;
  for (auto it = stages.rbegin(); it != stages.rend(); ++it) {
    if (const auto* l = std::get_if<LocalPropagator>(&*it)) out.stages.emplace_back(l->adjoint());
    else out.stages.emplace_back(CoupledStep{std::get<CoupledStep>(*it).generator, -std::get<CoupledStep>(*it).tau});
  }
  return out;
}

Propagator Propagator::then_after(const Propagator& earlier) const {
  Propagator out = earlier;
  for (const auto& st : stages) {
    const auto* next = std::get_if<LocalPropagator>(&st);
    auto* last = out.stages.empty() ? nullptr : std::get_if<LocalPropagator>(&out.stages.back());
    if (next && last) *last = next->then_after(*last);
    else out.stages.push_back(st);
  }
  return out;
}

Matrix<Complex> local_unitary(const Matrix<Complex>& hamiltonian, double tau) {
  const double scale = std::max(1.0, hamiltonian.norm());
  if ((hamiltonian - hamiltonian.adjoint()).norm() > 1e-12 * scale)
    throw Error("local generator is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix<Complex>> es(hamiltonian);
  if (es.info() != Eigen::Success) throw Error("eigendecomposition of local generator failed");
  const Vector<Complex> phases =
      (es.eigenvalues().cast<Complex>() * Complex(0.0, -tau)).array().exp().matrix();
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

Propagator propagator(const EvolutionSchedule& schedule, double t_a, double t_b) {
  t_a = schedule.checked_time(t_a);
  t_b = schedule.checked_time(t_b);
  if (t_a > t_b) throw TimeRangeError("propagator requires t_a <= t_b");

  Propagator total;
  for (const auto& seg : schedule.segments()) {
    const double lo = std::max(t_a, seg.t_start);
    const double hi = std::min(t_b, seg.t_end);
    if (!(hi > lo) || !seg.generator) continue;
    const double tau = hi - lo;
    Propagator step;
    if (is_coupled(*seg.generator)) {
      step.stages.emplace_back(CoupledStep{*seg.generator, tau});
    } else {
      const auto gens = split_local(*seg.generator);
      LocalPropagator local;
      local.phase = std::exp(Complex(0.0, -tau * gens.identity_shift.real()));
      for (const auto& [j, h] : gens.by_subsystem) local.locals.set(j, local_unitary(h, tau));
      step.stages.emplace_back(std::move(local));
    }
    total = step.then_after(total);
  }
  return total;
}

State apply(const Propagator& u, const State& s) {
  State out = s;
  for (const auto& stage : u.stages) {
    if (const auto* l = std::get_if<LocalPropagator>(&stage)) {
      if (!l->is_identity()) out = wtrace::apply(l->as_operator(), out);
    } else {
      const Vector<Complex> amps = to_dense(out).amplitudes();
      out = State::dense(out.dims(), stage_matrix(stage, out.dims()) * amps);
    }
  }
  return out;
}

Matrix<Complex> dense_matrix(const Propagator& u, const Dims& dims) {
  const auto n = static_cast<Eigen::Index>(dims.total().value_or(0));
  Matrix<Complex> out = Matrix<Complex>::Identity(n, n);
  for (const auto& stage : u.stages) out = stage_matrix(stage, dims) * out;
  return out;
}

TwoStateVector make_two_state_vector(const State& pre, const State& post, EvolutionSchedule schedule) {
  if (pre.dims() != post.dims()) throw DimensionError("pre and post states have different dims");
  const double pre_norm = norm(pre);
  const double post_norm = norm(post);
  if (!(pre_norm > 0)) throw ZeroStateError("preselected state is the zero vector");
  if (!(post_norm > 0)) throw ZeroStateError("postselected state is the zero vector");
  return TwoStateVector{normalize(pre), normalize(post), std::move(schedule), pre_norm, post_norm};
}

State forward_state(const TwoStateVector& tsv, double t) {
  return wtrace::apply(propagator(tsv.schedule, tsv.schedule.t_initial(), t), tsv.pre);
}

State backward_state(const TwoStateVector& tsv, double t) {
  return wtrace::apply(propagator(tsv.schedule, t, tsv.schedule.t_final()).adjoint(), tsv.post);
}

Complex overlap(const TwoStateVector& tsv, double t) {
  return inner(backward_state(tsv, t), forward_state(tsv, t));
}

}  // namespace wtrace
