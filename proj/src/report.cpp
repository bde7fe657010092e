#include "wtrace/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <sstream>

namespace wtrace {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string json_string(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out + "\"";
}

std::string json_number(double x) { return std::isfinite(x) ? format_number(x) : "null"; }

std::string json_complex(Complex z) { return "[" + json_number(z.real()) + ", " + json_number(z.imag()) + "]"; }

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Queries sorted by name, resolved once.
struct ResolvedQuery {
  std::string name;
  std::optional<ProjectorQuery> projector;
  OperatorSum<Complex> op;
};

std::vector<ResolvedQuery> resolve_queries(const ScenarioDoc& doc) {
  std::vector<ResolvedQuery> out;
  for (const auto& q : doc.queries) {
    ResolvedQuery r{q.name, std::nullopt, build_operator(doc, q)};
    if (q.is_projector()) r.projector = build_projector(doc, q);
    out.push_back(std::move(r));
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  return out;
}

WeakValueResult evaluate(const TimeSlice& s, const ResolvedQuery& q, double threshold) {
  return q.projector ? weak_value(s, *q.projector, threshold) : weak_value(s, q.op, threshold);
}

std::vector<double> sorted_times(std::vector<double> times) {
  std::stable_sort(times.begin(), times.end());
  return times;
}

}  // namespace

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0.0) x = 0.0;  // drop the sign of negative zero
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double default_tolerance() {
  if (const char* env = std::getenv(kToleranceEnv)) {
    char* end = nullptr;
    const double v = std::strtod(env, &end);
    if (end != env && *end == '\0' && v > 0 && std::isfinite(v)) return v;
  }
  return kDefaultCertifyTol;
}

bool ReportDoc::has_undefined() const noexcept {
  return std::any_of(entries.begin(), entries.end(), [](const auto& e) { return !e.error.empty(); });
}

ReportDoc run(const ScenarioDoc& doc, const RunOptions& options) {
  validate(doc);
  const auto tsv = build_two_state_vector(doc);
  const auto queries = resolve_queries(doc);
  const auto times = sorted_times(options.times.value_or(doc.times.values()));
  for (double t : times) tsv.schedule.checked_time(t);

  ReportDoc report;
  report.scenario_name = doc.name;
  report.scenario_hash = scenario_hash(doc);
  report.overlap_threshold = options.overlap_threshold;
  report.certify_tol = options.certify_tol;
  report.pre_normalization = 1.0 / tsv.pre_norm;
  report.post_normalization = 1.0 / tsv.post_norm;

  for (double t : times) {
    const auto s = slice(tsv, t);
    for (const auto& q : queries) {
      ReportEntry e;
      e.time = t;
      e.query = q.name;
      try {
        e.result = evaluate(s, q, options.overlap_threshold);
        if (q.projector) {
          e.certification = dichotomic_certify(*e.result, options.certify_tol);
          if (doc.abl) e.abl = abl_probability(s, *q.projector);
        }
      } catch (const VanishingOverlap& err) {
        e.result.reset();
        e.certification.reset();
        e.error = err.what();
      }
      report.entries.push_back(std::move(e));
    }
  }
  return report;
}

std::string to_json(const ReportDoc& r) {
  std::ostringstream out;
  out << "{\n";
  out << "  \"engine_version\": " << json_string(kEngineVersion) << ",\n";
  out << "  \"scenario\": {\"name\": " << json_string(r.scenario_name) << ", \"hash\": \"" << hex64(r.scenario_hash)
      << "\"},\n";
  out << "  \"tolerances\": {\"overlap_threshold\": " << json_number(r.overlap_threshold)
      << ", \"certify_tol\": " << json_number(r.certify_tol) << "},\n";
  out << "  \"normalization\": {\"pre\": " << json_number(r.pre_normalization)
      << ", \"post\": " << json_number(r.post_normalization) << "},\n";
  out << "  \"entries\": [";
  std::size_t undefined = 0;
  for (std::size_t i = 0; i < r.entries.size(); ++i) {
    const auto& e = r.entries[i];
    out << (i ? ",\n" : "\n") << "    {\"time\": " << json_number(e.time) << ", \"query\": " << json_string(e.query);
    if (e.result) {
      out << ", \"weak_value\": " << json_complex(e.result->value)
          << ", \"numerator\": " << json_complex(e.result->numerator)
          << ", \"denominator\": " << json_complex(e.result->denominator);
      if (e.abl) out << ", \"abl_probability\": " << json_number(e.abl->probability_of_1);
      if (e.certification) out << ", \"certification\": " << json_string(to_string(*e.certification));
    } else {
      ++undefined;
      out << ", \"error\": " << json_string(e.error);
    }
    out << "}";
  }
  out << (r.entries.empty() ? "],\n" : "\n  ],\n");
  out << "  \"undefined_entries\": " << undefined << "\n}\n";
  return out.str();
}

std::string to_csv(const ReportDoc& r) {
  std::ostringstream out;
  out << "time,query,wv_re,wv_im,num_re,num_im,den_re,den_im,abl_probability,certification,error\n";
  for (const auto& e : r.entries) {
    out << format_number(e.time) << ',' << csv_field(e.query) << ',';
    const Complex nan{kNaN, kNaN};
    const auto wv = e.result ? e.result->value : nan;
    const auto num = e.result ? e.result->numerator : nan;
    const auto den = e.result ? e.result->denominator : nan;
    for (double v : {wv.real(), wv.imag(), num.real(), num.imag(), den.real(), den.imag()})
      out << format_number(v) << ',';
    out << (e.abl ? format_number(e.abl->probability_of_1) : std::string()) << ','
        << (e.certification ? std::string(to_string(*e.certification)) : std::string()) << ','
        << csv_field(e.error) << '\n';
  }
  return out.str();
}

DynamicAmplitudes dynamic_closed_form(double epsilon, double t) {
  const double a = 1.0 / std::sqrt(3.0);
  const Complex i{0.0, 1.0};
  const double c = std::cos(epsilon * t), s = std::sin(epsilon * t);
  const double tp = std::numbers::pi / epsilon - t;
  const double cp = std::cos(epsilon * tp), sp = std::sin(epsilon * tp);
  DynamicAmplitudes out;
  // Order: |11>, |12>, |21>, |22>, |33>.
  out.ket = {a * c, a * s, -i * s * a, i * c * a, a};
  out.bra = {-a * cp, -a * sp, i * sp * a, -i * cp * a, a};
  return out;
}

SweepTable sweep_time(const ScenarioDoc& doc, const std::vector<double>& grid, const RunOptions& options) {
  validate(doc);
  const auto tsv = build_two_state_vector(doc);
  for (double t : grid) tsv.schedule.checked_time(t);
  const auto queries = resolve_queries(doc);

  const bool analytic = doc.builtin && doc.builtin->name == "dynamic";
  const double epsilon = analytic ? doc.builtin->params.at("epsilon") : 0.0;
  static constexpr std::array<const char*, 4> kPairs{"1,1", "1,2", "2,1", "2,2"};

  SweepTable table;
  table.columns = {"time", "overlap_re", "overlap_im"};
  for (const auto& q : queries) {
    table.columns.push_back(q.name + ":re");
    table.columns.push_back(q.name + ":im");
  }
  if (analytic)
    for (const char* p : kPairs) {
      table.columns.push_back(std::string("analytic:") + p + ":re");
      table.columns.push_back(std::string("analytic:") + p + ":im");
    }

  for (double t : grid) {
    const auto s = slice(tsv, t);
    std::vector<double> row{t, s.overlap.real(), s.overlap.imag()};
    for (const auto& q : queries) {
      try {
        const auto wv = evaluate(s, q, options.overlap_threshold).value;
        row.push_back(wv.real());
        row.push_back(wv.imag());
      } catch (const VanishingOverlap&) {
        row.push_back(kNaN);
        row.push_back(kNaN);
      }
    }
    if (analytic) {
      const auto amps = dynamic_closed_form(epsilon, t);
      Complex denom{0.0, 0.0};
      for (std::size_t k = 0; k < 5; ++k) denom += amps.bra[k] * amps.ket[k];
      for (std::size_t k = 0; k < 4; ++k) {
        const Complex wv = amps.bra[k] * amps.ket[k] / denom;
        row.push_back(wv.real());
        row.push_back(wv.imag());
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string to_csv(const SweepTable& table) {
  std::ostringstream out;
  for (std::size_t i = 0; i < table.columns.size(); ++i) out << (i ? "," : "") << csv_field(table.columns[i]);
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_number(row[i]);
    out << '\n';
  }
  return out.str();
}

std::string to_json(const SweepTable& table) {
  std::ostringstream out;
  out << "{\n  \"columns\": [";
  for (std::size_t i = 0; i < table.columns.size(); ++i) out << (i ? ", " : "") << json_string(table.columns[i]);
  out << "],\n  \"rows\": [";
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    out << (r ? ",\n    [" : "\n    [");
    for (std::size_t i = 0; i < table.rows[r].size(); ++i) out << (i ? ", " : "") << json_number(table.rows[r][i]);
    out << "]";
  }
  out << (table.rows.empty() ? "]\n}\n" : "\n  ]\n}\n");
  return out.str();
}

}  // namespace wtrace
