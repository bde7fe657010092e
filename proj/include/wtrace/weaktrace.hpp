#pragma once

// Weak values of projectors and general operators, order-k correlation
// tables, marginalization, product-rule analysis, the ABL strong-measurement
// oracle and dichotomic certification.

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "wtrace/tsvf.hpp"

namespace wtrace {

inline constexpr double kDefaultOverlapThreshold = 1e-10;
inline constexpr std::size_t kMaxTableEntries = 1'000'000;

/// Per-subsystem choice of a basis projector |b><b| (b is a 0-based basis
/// index) or the identity ("any").
class ProjectorQuery {
 public:
  static constexpr int kAny = -1;

  explicit ProjectorQuery(std::vector<int> choices);
  static ProjectorQuery any(std::size_t subsystems) {
    return ProjectorQuery(std::vector<int>(subsystems, kAny));
  }

  std::size_t size() const noexcept { return choices_.size(); }
  int operator[](std::size_t i) const { return choices_.at(i); }
  bool is_any(std::size_t i) const { return choices_.at(i) == kAny; }
  const std::vector<int>& choices() const noexcept { return choices_; }

  /// Number of subsystems carrying a box projector.
  std::size_t order() const noexcept;
  /// Number of projections onto basis index `box`.
  std::size_t count_box(int box) const noexcept;
  std::vector<std::size_t> support() const;

  /// Copy with subsystem `i` set to `box` (or kAny).
  ProjectorQuery with(std::size_t i, int box) const;

  void validate(const Dims& dims) const;
  ProductOperator<Complex> to_operator(const Dims& dims) const;
  OperatorSum<Complex> complement_operator(const Dims& dims) const;  ///< I - P

  /// Comma-separated 1-based box numbers, `*` for any: "1,*,2".
  std::string to_string() const;
  static ProjectorQuery parse(std::string_view text);

  auto operator<=>(const ProjectorQuery&) const = default;

 private:
  std::vector<int> choices_;
};

/// Forward and backward states at one instant, reused across many queries.
struct TimeSlice {
  double time = 0.0;
  State forward;
  State backward;
  Complex overlap;
};

TimeSlice slice(const TwoStateVector& tsv, double t);

struct WeakValueResult {
  Complex value;
  Complex numerator;
  Complex denominator;
  double time = 0.0;
};

/// <bra| P |ket> for a basis projector; strided over the free subsystems for
/// dense states and factor-wise for product sums.
Complex projector_element(const State& bra, const ProjectorQuery& q, const State& ket);

WeakValueResult weak_value(const TimeSlice& s, const ProjectorQuery& q,
                           double overlap_threshold = kDefaultOverlapThreshold);
WeakValueResult weak_value(const TimeSlice& s, const OperatorSum<Complex>& op,
                           double overlap_threshold = kDefaultOverlapThreshold);
WeakValueResult weak_value(const TwoStateVector& tsv, double t, const ProjectorQuery& q,
                           double overlap_threshold = kDefaultOverlapThreshold);
WeakValueResult weak_value(const TwoStateVector& tsv, double t, const OperatorSum<Complex>& op,
                           double overlap_threshold = kDefaultOverlapThreshold);

struct CorrelationTable {
  std::size_t order = 0;
  double time = 0.0;
  std::vector<int> dims;
  std::vector<std::size_t> subsystems;
  std::vector<int> boxes;
  std::map<ProjectorQuery, WeakValueResult> entries;
};

/// Number of order-k box assignments over the given subsystems and boxes.
std::uint64_t count_order_k_queries(std::size_t subsystems, std::size_t boxes, std::size_t k);

/// Visits every order-k query in lexicographic order of (subset, boxes).
void for_each_order_k_query(std::size_t n_subsystems, const std::vector<std::size_t>& subsystems,
                            const std::vector<int>& boxes, std::size_t k,
                            const std::function<void(const ProjectorQuery&)>& visit);

CorrelationTable correlation_table(const TimeSlice& s, const Dims& dims,
                                   const std::vector<std::size_t>& subsystems,
                                   const std::vector<int>& boxes, std::size_t k,
                                   double overlap_threshold = kDefaultOverlapThreshold);
CorrelationTable correlation_table(const TwoStateVector& tsv, double t,
                                   const std::vector<std::size_t>& subsystems,
                                   const std::vector<int>& boxes, std::size_t k,
                                   double overlap_threshold = kDefaultOverlapThreshold);

/// Sums an order-k table over the complete box set of `drop`, giving the
/// order-(k-1) table.
CorrelationTable marginalize(const CorrelationTable& table, std::size_t drop);

/// |<AB>_w - <A>_w <B>_w| for queries with disjoint supports.
double product_rule_gap(const TimeSlice& s, const ProjectorQuery& a, const ProjectorQuery& b,
                        double overlap_threshold = kDefaultOverlapThreshold);

struct AblResult {
  double probability_of_1 = 0.0;
  double weight_1 = 0.0;  ///< normalized branch weights, sum to 1
  double weight_0 = 0.0;
  std::uint64_t samples = 0;       ///< Monte Carlo only: accepted runs
  double standard_error = 0.0;     ///< Monte Carlo only
};

/// Exact two-outcome ABL conditional probability of finding P = 1 at the
/// slice time, given the postselection.
AblResult abl_probability(const TimeSlice& s, const ProjectorQuery& q);

/// Sampled version: draw the intermediate outcome, then the postselection,
/// and keep accepted runs. `trials` counts attempted runs.
AblResult abl_probability_monte_carlo(const TimeSlice& s, const ProjectorQuery& q,
                                      std::uint64_t trials, std::uint64_t seed);

enum class Presence { CertainPresent, CertainAbsent, Uncertain };

Presence dichotomic_certify(const WeakValueResult& wv, double tol);
std::string_view to_string(Presence p) noexcept;

/// Closed-form weak value for the N-particle three-box scenario: 0 if any
/// subsystem is unqueried, (-1)^n / c otherwise, n = projections onto box 2.
/// Queries may only address boxes 1 and 2 (indices 0 and 1).
Complex nparticle_closed_form(std::size_t n, double c, const ProjectorQuery& q);

}  // namespace wtrace
