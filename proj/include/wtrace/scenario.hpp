#pragma once

// Scenario documents: a JSON description of dims, boundary states, evolution
// schedule, queries and evaluation times, plus the built-in catalogue.
// The schema is documented in docs/scenario-format.md.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "wtrace/weaktrace.hpp"

namespace wtrace {

inline constexpr int kScenarioFormatVersion = 1;

using ComplexRows = std::vector<std::vector<Complex>>;

/// One local factor of a state term: a basis label or explicit amplitudes.
using FactorSpec = std::variant<std::string, std::vector<Complex>>;

struct TermSpec {
  Complex coefficient{1.0, 0.0};
  std::vector<FactorSpec> factors;
  bool operator==(const TermSpec&) const = default;
};

/// Local operator on one subsystem: a named matrix or explicit entries.
/// Names: identity, sigma_x, sigma_y, sigma_z (embedded in levels 1-2 of a
/// d-level space), proj:<label>.
struct LocalSpec {
  std::size_t subsystem = 0;
  std::string name;
  std::optional<ComplexRows> matrix;
  bool operator==(const LocalSpec&) const = default;
};

/// One Hamiltonian term: epsilon times a product of local operators on
/// distinct subsystems. A single factor is a local generator.
struct GeneratorSpec {
  std::vector<LocalSpec> factors;
  double epsilon = 1.0;
  bool operator==(const GeneratorSpec&) const = default;
};

struct SegmentSpec {
  double t_start = 0.0;
  double t_end = 0.0;
  std::vector<GeneratorSpec> generators;  ///< empty: free evolution
  bool operator==(const SegmentSpec&) const = default;
};

struct OperatorTermSpec {
  Complex coefficient{1.0, 0.0};
  std::vector<LocalSpec> factors;
  bool operator==(const OperatorTermSpec&) const = default;
};

/// Either a projector query written with basis labels ("O,*", "1,2") or a
/// named general operator.
struct QuerySpec {
  std::string name;
  std::vector<OperatorTermSpec> terms;  ///< empty for projector queries
  bool is_projector() const noexcept { return terms.empty(); }
  bool operator==(const QuerySpec&) const = default;
};

struct TimeSpec {
  std::vector<double> explicit_times;
  struct Range {
    double start = 0.0;
    double end = 0.0;
    std::size_t count = 1;
    bool operator==(const Range&) const = default;
  };
  std::optional<Range> range;

  std::vector<double> values() const;
  bool operator==(const TimeSpec&) const = default;
};

struct BuiltinTag {
  std::string name;
  std::map<std::string, double> params;
  bool operator==(const BuiltinTag&) const = default;
};

struct ScenarioDoc {
  int format_version = kScenarioFormatVersion;
  std::string name;
  std::vector<int> dims;
  std::vector<std::vector<std::string>> labels;  ///< per subsystem, size = local dim
  std::vector<TermSpec> pre;
  std::vector<TermSpec> post;
  double t_initial = 0.0;  ///< used when `schedule` is empty
  double t_final = 1.0;
  std::vector<SegmentSpec> schedule;
  std::vector<QuerySpec> queries;
  TimeSpec times;
  bool abl = false;  ///< report ABL probabilities for projector queries
  std::optional<BuiltinTag> builtin;

  bool operator==(const ScenarioDoc&) const = default;
};

struct ParsedScenario {
  ScenarioDoc doc;
  std::vector<std::string> warnings;
};

/// Parses and validates a scenario document. Throws SchemaError,
/// DimensionError or ZeroStateError; a vanishing end-to-end overlap is a
/// warning.
ParsedScenario parse_scenario(std::string_view text, double overlap_threshold = kDefaultOverlapThreshold);

/// Canonical JSON form; parse_scenario(emit_scenario(d)).doc == d.
std::string emit_scenario(const ScenarioDoc& doc);

/// Structural checks shared by the parser and the builtins.
void validate(const ScenarioDoc& doc);

/// Default labels "1".."d" for subsystems without explicit labels.
std::vector<std::vector<std::string>> effective_labels(const ScenarioDoc& doc);

State build_state(const ScenarioDoc& doc, const std::vector<TermSpec>& terms);
EvolutionSchedule build_schedule(const ScenarioDoc& doc);
TwoStateVector build_two_state_vector(const ScenarioDoc& doc);
Matrix<Complex> build_local(const ScenarioDoc& doc, const LocalSpec& spec);
OperatorSum<Complex> build_operator(const ScenarioDoc& doc, const QuerySpec& q);
ProjectorQuery build_projector(const ScenarioDoc& doc, const QuerySpec& q);
/// Renders a projector query with the scenario's labels.
std::string projector_name(const ScenarioDoc& doc, const ProjectorQuery& q);

struct BuiltinInfo {
  std::string name;
  std::string description;
  std::map<std::string, double> default_params;
};

const std::vector<BuiltinInfo>& builtin_catalog();

/// Built-in scenarios: spin-intro, hardy, two-box, dynamic (epsilon),
/// nparticle (N, c).
ScenarioDoc builtin(std::string_view name, const std::map<std::string, double>& params = {});

/// Resolves "builtin:name[:k=v,k=v]" or reads a file path.
ScenarioDoc load_scenario(std::string_view source, std::vector<std::string>* warnings = nullptr);

/// 64-bit FNV-1a of the canonical JSON form.
std::uint64_t scenario_hash(const ScenarioDoc& doc);

}  // namespace wtrace
