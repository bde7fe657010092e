#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wtrace/scenario.hpp"

namespace wtrace {

inline constexpr const char* kEngineVersion = "0.1.0";
inline constexpr double kDefaultCertifyTol = 1e-12;
/// Environment variable overriding the default certification tolerance.
inline constexpr const char* kToleranceEnv = "WTRACE_TOL";

/// kDefaultCertifyTol unless WTRACE_TOL holds a positive number.
double default_tolerance();

struct RunOptions {
  double overlap_threshold = kDefaultOverlapThreshold;
  double certify_tol = kDefaultCertifyTol;
  std::optional<std::vector<double>> times;  ///< overrides the scenario's times
};

struct ReportEntry {
  double time = 0.0;
  std::string query;
  std::optional<WeakValueResult> result;
  std::optional<AblResult> abl;
  std::optional<Presence> certification;
  std::string error;  ///< non-empty when the entry is undefined
};

struct ReportDoc {
  std::string scenario_name;
  std::uint64_t scenario_hash = 0;
  double overlap_threshold = kDefaultOverlapThreshold;
  double certify_tol = kDefaultCertifyTol;
  double pre_normalization = 1.0;   ///< factor applied to the supplied pre state
  double post_normalization = 1.0;
  std::vector<ReportEntry> entries;

  bool has_undefined() const noexcept;
};

/// Evaluates every query at every time. Rows are ordered by time, then by
/// query name; vanishing-overlap cells become error records.
ReportDoc run(const ScenarioDoc& doc, const RunOptions& options = {});

std::string to_json(const ReportDoc& report);
std::string to_csv(const ReportDoc& report);

struct SweepTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;  ///< NaN marks undefined cells
};

/// Per-time rows of all query weak values (re, im). For the built-in dynamic
/// scenario, closed-form columns for the box 1/2 pair weak values are added.
/// Throws TimeRangeError before evaluating anything when a time lies outside
/// the schedule.
SweepTable sweep_time(const ScenarioDoc& doc, const std::vector<double>& grid, const RunOptions& options = {});

std::string to_csv(const SweepTable& table);
std::string to_json(const SweepTable& table);

/// Closed-form forward (ket) and backward (bra) coefficients of the dynamic
/// scenario on |11>, |12>, |21>, |22>, |33>.
struct DynamicAmplitudes {
  std::array<Complex, 5> ket;
  std::array<Complex, 5> bra;
};
DynamicAmplitudes dynamic_closed_form(double epsilon, double t);

/// "%.17g"; non-finite values print as "nan"/"inf".
std::string format_number(double x);

}  // namespace wtrace
