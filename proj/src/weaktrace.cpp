#include "wtrace/weaktrace.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>

namespace wtrace {

// ---------------------------------------------------------------------------
// ProjectorQuery

ProjectorQuery::ProjectorQuery(std::vector<int> choices) : choices_(std::move(choices)) {
  if (choices_.empty()) throw DimensionError("projector query needs at least one subsystem");
  for (int c : choices_)
    if (c < kAny) throw DimensionError("projector query: negative box index");
}

std::size_t ProjectorQuery::order() const noexcept {
  return static_cast<std::size_t>(std::count_if(choices_.begin(), choices_.end(), [](int c) { return c != kAny; }));
}

std::size_t ProjectorQuery::count_box(int box) const noexcept {
  return static_cast<std::size_t>(std::count(choices_.begin(), choices_.end(), box));
}

std::vector<std::size_t> ProjectorQuery::support() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < choices_.size(); ++i)
    if (choices_[i] != kAny) out.push_back(i);
  return out;
}

ProjectorQuery ProjectorQuery::with(std::size_t i, int box) const {
  auto c = choices_;
  c.at(i) = box;
  return ProjectorQuery(std::move(c));
}

void ProjectorQuery::validate(const Dims& dims) const {
  if (choices_.size() != dims.size())
    throw DimensionError("projector query has " + std::to_string(choices_.size()) +
                         " entries for " + std::to_string(dims.size()) + " subsystems");
  for (std::size_t i = 0; i < choices_.size(); ++i)
    if (choices_[i] >= dims[i])
      throw DimensionError("projector query: box " + std::to_string(choices_[i] + 1) +
                           " exceeds local dimension of subsystem " + std::to_string(i));
}

ProductOperator<Complex> ProjectorQuery::to_operator(const Dims& dims) const {
  validate(dims);
  ProductOperator<Complex> op;
  for (std::size_t i = 0; i < choices_.size(); ++i)
    if (choices_[i] != kAny) op.set(i, basis_projector<Complex>(dims[i], choices_[i]));
  return op;
}

OperatorSum<Complex> ProjectorQuery::complement_operator(const Dims& dims) const {
  return OperatorSum<Complex>::identity() + Complex(-1.0) * OperatorSum<Complex>(to_operator(dims));
}

std::string ProjectorQuery::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < choices_.size(); ++i) {
    if (i) out += ',';
    out += choices_[i] == kAny ? std::string("*") : std::to_string(choices_[i] + 1);
  }
  return out;
}

ProjectorQuery ProjectorQuery::parse(std::string_view text) {
  std::vector<int> choices;
  std::stringstream ss{std::string(text)};
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
    if (item == "*" || item == "_") {
      choices.push_back(kAny);
      continue;
    }
    std::size_t used = 0;
    int box = 0;
    try {
      box = std::stoi(item, &used);
    } catch (const std::exception&) {
      throw SchemaError("bad projector query element '" + item + "'");
    }
    if (used != item.size() || box < 1) throw SchemaError("bad projector query element '" + item + "'");
    choices.push_back(box - 1);
  }
  return ProjectorQuery(std::move(choices));
}

// ---------------------------------------------------------------------------
// Weak values

TimeSlice slice(const TwoStateVector& tsv, double t) {
  TimeSlice s{t, forward_state(tsv, t), backward_state(tsv, t), {}};
  s.overlap = inner(s.backward, s.forward);
  return s;
}

Complex projector_element(const State& bra, const ProjectorQuery& q, const State& ket) {
  if (bra.dims() != ket.dims()) throw DimensionError("projector element: dims mismatch");
  const auto& dims = ket.dims();
  q.validate(dims);

  if (!bra.is_dense() && !ket.is_dense()) {
    Complex sum{0.0, 0.0};
    for (const auto& b : bra.terms())
      for (const auto& k : ket.terms()) {
        Complex prod = std::conj(b.coefficient) * k.coefficient;
        for (std::size_t j = 0; j < dims.size() && prod != Complex{0.0, 0.0}; ++j)
          prod *= q.is_any(j) ? b.factors[j].dot(k.factors[j])
                              : std::conj(b.factors[j](q[j])) * k.factors[j](q[j]);
        sum += prod;
      }
    return sum;
  }

  std::optional<State> bra_tmp, ket_tmp;
  const auto& bv = (bra.is_dense() ? bra : bra_tmp.emplace(to_dense(bra))).amplitudes();
  const auto& kv = (ket.is_dense() ? ket : ket_tmp.emplace(to_dense(ket))).amplitudes();
  const auto strides = dims.strides();

  std::size_t base = 0;
  std::vector<std::pair<int, std::size_t>> free;  // (dim, stride)
  for (std::size_t j = 0; j < dims.size(); ++j) {
    if (q.is_any(j)) free.emplace_back(dims[j], strides[j]);
    else base += static_cast<std::size_t>(q[j]) * strides[j];
  }

  Complex sum{0.0, 0.0};
  std::vector<int> digit(free.size(), 0);
  std::size_t idx = base;
  while (true) {
    sum += std::conj(bv(static_cast<Eigen::Index>(idx))) * kv(static_cast<Eigen::Index>(idx));
    std::size_t j = free.size();
    while (j-- > 0) {
      if (++digit[j] < free[j].first) {
        idx += free[j].second;
        break;
      }
      idx -= static_cast<std::size_t>(free[j].first - 1) * free[j].second;
      digit[j] = 0;
    }
    if (j == static_cast<std::size_t>(-1)) break;
  }
  return sum;
}

namespace {

WeakValueResult finish(const TimeSlice& s, Complex numerator, double threshold) {
  if (!(std::abs(s.overlap) > threshold)) throw VanishingOverlap(std::abs(s.overlap), threshold);
  return {numerator / s.overlap, numerator, s.overlap, s.time};
}

}  // namespace

WeakValueResult weak_value(const TimeSlice& s, const ProjectorQuery& q, double overlap_threshold) {
  q.validate(s.forward.dims());
  if (!(std::abs(s.overlap) > overlap_threshold))
    throw VanishingOverlap(std::abs(s.overlap), overlap_threshold);
  return finish(s, projector_element(s.backward, q, s.forward), overlap_threshold);
}

WeakValueResult weak_value(const TimeSlice& s, const OperatorSum<Complex>& op, double overlap_threshold) {
  op.validate(s.forward.dims());
  if (!(std::abs(s.overlap) > overlap_threshold))
    throw VanishingOverlap(std::abs(s.overlap), overlap_threshold);
  return finish(s, inner(s.backward, wtrace::apply(op, s.forward)), overlap_threshold);
}

WeakValueResult weak_value(const TwoStateVector& tsv, double t, const ProjectorQuery& q,
                           double overlap_threshold) {
  return weak_value(slice(tsv, t), q, overlap_threshold);
}

WeakValueResult weak_value(const TwoStateVector& tsv, double t, const OperatorSum<Complex>& op,
                           double overlap_threshold) {
  return weak_value(slice(tsv, t), op, overlap_threshold);
}

// ---------------------------------------------------------------------------
// Correlation tables

std::uint64_t count_order_k_queries(std::size_t subsystems, std::size_t boxes, std::size_t k) {
  if (k > subsystems) return 0;
  constexpr auto kSaturated = std::numeric_limits<std::uint64_t>::max();
  // C(subsystems, k) computed incrementally; exact at each step.
  long double binom = 1;
  for (std::size_t i = 1; i <= k; ++i) binom = binom * static_cast<long double>(subsystems - k + i) / i;
  long double total = std::round(binom) * std::pow(static_cast<long double>(boxes), static_cast<long double>(k));
  if (total >= static_cast<long double>(kSaturated)) return kSaturated;
  return static_cast<std::uint64_t>(total);
}

void for_each_order_k_query(std::size_t n_subsystems, const std::vector<std::size_t>& subsystems,
                            const std::vector<int>& boxes, std::size_t k,
                            const std::function<void(const ProjectorQuery&)>& visit) {
  if (k > subsystems.size()) throw Error("correlation order exceeds number of subsystems");
  if (k > 0 && boxes.empty()) return;
  std::vector<std::size_t> pick(k);
  std::iota(pick.begin(), pick.end(), 0);
  while (true) {
    std::vector<std::size_t> digit(k, 0);
    while (true) {
      std::vector<int> choices(n_subsystems, ProjectorQuery::kAny);
      for (std::size_t i = 0; i < k; ++i) choices[subsystems[pick[i]]] = boxes[digit[i]];
      visit(ProjectorQuery(std::move(choices)));
      std::size_t i = k;
      while (i-- > 0) {
        if (++digit[i] < boxes.size()) break;
        digit[i] = 0;
      }
      if (i == static_cast<std::size_t>(-1)) break;
    }
    // next k-combination
    std::size_t i = k;
    while (i-- > 0)
      if (pick[i] != i + subsystems.size() - k) break;
    if (i == static_cast<std::size_t>(-1)) break;
    ++pick[i];
    for (std::size_t j = i + 1; j < k; ++j) pick[j] = pick[j - 1] + 1;
  }
}

CorrelationTable correlation_table(const TimeSlice& s, const Dims& dims,
                                   const std::vector<std::size_t>& subsystems,
                                   const std::vector<int>& boxes, std::size_t k,
                                   double overlap_threshold) {
  if (k > subsystems.size()) throw Error("correlation order exceeds number of subsystems");
  std::set<std::size_t> seen;
  for (auto j : subsystems) {
    if (j >= dims.size()) throw DimensionError("correlation table: subsystem out of range");
    if (!seen.insert(j).second) throw Error("correlation table: repeated subsystem");
    for (int b : boxes)
      if (b < 0 || b >= dims[j]) throw DimensionError("correlation table: box out of range");
  }
  if (std::set<int>(boxes.begin(), boxes.end()).size() != boxes.size())
    throw Error("correlation table: repeated box");
  if (count_order_k_queries(subsystems.size(), boxes.size(), k) > kMaxTableEntries)
    throw Error("correlation table would exceed " + std::to_string(kMaxTableEntries) + " entries");
  if (!(std::abs(s.overlap) > overlap_threshold))
    throw VanishingOverlap(std::abs(s.overlap), overlap_threshold);

  CorrelationTable table;
  table.order = k;
  table.time = s.time;
  table.dims = dims.local();
  table.subsystems = subsystems;
  std::sort(table.subsystems.begin(), table.subsystems.end());
  table.boxes = boxes;
  std::sort(table.boxes.begin(), table.boxes.end());
  for_each_order_k_query(dims.size(), table.subsystems, table.boxes, k, [&](const ProjectorQuery& q) {
    table.entries.emplace(q, weak_value(s, q, overlap_threshold));
  });
  return table;
}

CorrelationTable correlation_table(const TwoStateVector& tsv, double t,
                                   const std::vector<std::size_t>& subsystems,
                                   const std::vector<int>& boxes, std::size_t k,
                                   double overlap_threshold) {
  const auto s = slice(tsv, t);
  return correlation_table(s, tsv.pre.dims(), subsystems, boxes, k, overlap_threshold);
}

CorrelationTable marginalize(const CorrelationTable& table, std::size_t drop) {
  if (drop >= table.dims.size()) throw DimensionError("marginalize: subsystem out of range");
  if (table.order == 0) throw Error("marginalize: order-0 table has nothing to drop");
  const int d = table.dims[drop];
  for (int b = 0; b < d; ++b)
    if (!std::binary_search(table.boxes.begin(), table.boxes.end(), b))
      throw Error("marginalize: incomplete table, box " + std::to_string(b + 1) +
                  " of the dropped subsystem is missing");

  CorrelationTable out;
  out.order = table.order - 1;
  out.time = table.time;
  out.dims = table.dims;
  out.boxes = table.boxes;
  for (auto j : table.subsystems)
    if (j != drop) out.subsystems.push_back(j);

  std::map<ProjectorQuery, int> counts;
  for (const auto& [q, wv] : table.entries) {
    if (q.size() <= drop || q.is_any(drop))
      throw Error("marginalize: dropped subsystem does not participate in entry " + q.to_string());
    const auto key = q.with(drop, ProjectorQuery::kAny);
    auto [it, inserted] = out.entries.try_emplace(key, WeakValueResult{{0.0, 0.0}, {0.0, 0.0}, wv.denominator, wv.time});
    it->second.value += wv.value;
    it->second.numerator += wv.numerator;
    ++counts[key];
  }
  for (const auto& [q, n] : counts)
    if (n != d) throw Error("marginalize: incomplete table at " + q.to_string());
  return out;
}

double product_rule_gap(const TimeSlice& s, const ProjectorQuery& a, const ProjectorQuery& b,
                        double overlap_threshold) {
  if (a.size() != b.size()) throw DimensionError("product rule: queries on different systems");
  std::vector<int> joint(a.size(), ProjectorQuery::kAny);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a.is_any(i) && !b.is_any(i)) throw Error("product rule: queries overlap on subsystem " + std::to_string(i));
    joint[i] = a.is_any(i) ? b[i] : a[i];
  }
  const auto wa = weak_value(s, a, overlap_threshold).value;
  const auto wb = weak_value(s, b, overlap_threshold).value;
  const auto wab = weak_value(s, ProjectorQuery(std::move(joint)), overlap_threshold).value;
  return std::abs(wab - wa * wb);
}

// ---------------------------------------------------------------------------
// ABL oracle

namespace {

constexpr double kBranchFloor = 1e-28;

struct Branches {
  double hit_1;  // |<phi|P|psi>|^2
  double hit_0;  // |<phi|(I-P)|psi>|^2
};

Branches branches(const TimeSlice& s, const ProjectorQuery& q) {
  const Complex amp1 = projector_element(s.backward, q, s.forward);
  const Complex amp0 = s.overlap - amp1;
  return {std::norm(amp1), std::norm(amp0)};
}

}  // namespace

AblResult abl_probability(const TimeSlice& s, const ProjectorQuery& q) {
  const auto br = branches(s, q);
  const double total = br.hit_1 + br.hit_0;
  if (!(total > kBranchFloor))
    throw VanishingOverlap(std::sqrt(total), std::sqrt(kBranchFloor));
  AblResult r;
  r.probability_of_1 = br.hit_1 / total;
  r.weight_1 = r.probability_of_1;
  r.weight_0 = br.hit_0 / total;
  return r;
}

AblResult abl_probability_monte_carlo(const TimeSlice& s, const ProjectorQuery& q,
                                      std::uint64_t trials, std::uint64_t seed) {
  const auto br = branches(s, q);
  const double fwd_norm = std::real(inner(s.forward, s.forward));
  const double bwd_norm = std::real(inner(s.backward, s.backward));
  // Born probability of the intermediate outcome, then of the postselection.
  const double p1 = std::clamp(std::real(projector_element(s.forward, q, s.forward)) / fwd_norm, 0.0, 1.0);
  const double p0 = 1.0 - p1;
  const double accept1 = p1 > 0 ? std::clamp(br.hit_1 / (fwd_norm * bwd_norm * p1), 0.0, 1.0) : 0.0;
  const double accept0 = p0 > 0 ? std::clamp(br.hit_0 / (fwd_norm * bwd_norm * p0), 0.0, 1.0) : 0.0;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uint64_t accepted = 0, ones = 0;
  for (std::uint64_t i = 0; i < trials; ++i) {
    const bool outcome = unit(rng) < p1;
    if (unit(rng) < (outcome ? accept1 : accept0)) {
      ++accepted;
      ones += outcome ? 1 : 0;
    }
  }
  if (accepted == 0) throw VanishingOverlap(0.0, 1.0 / static_cast<double>(std::max<std::uint64_t>(trials, 1)));
  AblResult r;
  r.samples = accepted;
  r.probability_of_1 = static_cast<double>(ones) / static_cast<double>(accepted);
  r.weight_1 = r.probability_of_1;
  r.weight_0 = 1.0 - r.probability_of_1;
  r.standard_error = std::sqrt(r.probability_of_1 * (1.0 - r.probability_of_1) / static_cast<double>(accepted));
  return r;
}

Presence dichotomic_certify(const WeakValueResult& wv, double tol) {
  if (std::abs(wv.value - Complex(1.0, 0.0)) < tol) return Presence::CertainPresent;
  if (std::abs(wv.value) < tol) return Presence::CertainAbsent;
  return Presence::Uncertain;
}

std::string_view to_string(Presence p) noexcept {
  switch (p) {
    case Presence::CertainPresent: return "certain-present";
    case Presence::CertainAbsent: return "certain-absent";
    case Presence::Uncertain: return "uncertain";
  }
  return "uncertain";
}

Complex nparticle_closed_form(std::size_t n, double c, const ProjectorQuery& q) {
  if (c == 0.0) throw Error("closed form undefined for c = 0 (orthogonal pre/post)");
  if (n < 1 || q.size() != n) throw DimensionError("closed form: query must cover all N subsystems");
  if (q.order() == 0) throw Error("closed form: query must contain at least one box projector");
  for (int b : q.choices())
    if (b != ProjectorQuery::kAny && b != 0 && b != 1)
      throw Error("closed form covers boxes 1 and 2 only");
  if (q.order() < n) return {0.0, 0.0};
  const double sign = q.count_box(1) % 2 == 0 ? 1.0 : -1.0;
  return {sign / c, 0.0};
}

}  // namespace wtrace
