// Command-line front end: list, run, sweep, abl, pointer, order, export.
//
// Exit codes: 0 success, 1 usage or scenario errors, 2 the run completed but
// some entries are undefined (vanishing overlap, signal at noise floor),
// 3 any other runtime failure.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "wtrace/pointer.hpp"
#include "wtrace/report.hpp"

namespace {

using namespace wtrace;

enum ExitCode { kOk = 0, kUsage = 1, kUndefined = 2, kRuntime = 3 };

std::vector<double> parse_times(const std::string& text) {
  // "t" or "start:end:count"
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  try {
    if (parts.size() == 1) return {std::stod(parts[0])};
    if (parts.size() == 3) {
      TimeSpec spec;
      spec.range = TimeSpec::Range{std::stod(parts[0]), std::stod(parts[1]),
                                   static_cast<std::size_t>(std::stoul(parts[2]))};
      if (spec.range->count == 0) throw SchemaError("time grid count must be positive");
      return spec.values();
    }
  } catch (const std::logic_error&) {
  }
  throw SchemaError("--time expects a number or start:end:count, got '" + text + "'");
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ',');) {
    try {
      out.push_back(std::stod(p));
    } catch (const std::logic_error&) {
      throw SchemaError("--g-list expects comma-separated numbers, got '" + text + "'");
    }
  }
  return out;
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write '" + path + "'");
  out << text;
}

struct Common {
  std::string scenario;
  std::string time;
  std::string format = "json";
  std::string output;
  double tol = 0.0;
  double overlap_threshold = kDefaultOverlapThreshold;
};

ScenarioDoc load(const Common& c) {
  std::vector<std::string> warnings;
  auto doc = load_scenario(c.scenario, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  return doc;
}

double first_time(const Common& c, const ScenarioDoc& doc) {
  if (!c.time.empty()) return parse_times(c.time).front();
  return doc.times.values().front();
}

ProjectorQuery query_arg(const ScenarioDoc& doc, const std::string& text) {
  return build_projector(doc, QuerySpec{text, {}});
}

CouplingScheme scheme_arg(const std::string& s) {
  if (s == "direct") return CouplingScheme::Direct;
  if (s == "sequential") return CouplingScheme::Sequential;
  throw SchemaError("--scheme must be direct or sequential");
}

std::string num(double x) { return format_number(x); }

std::string abl_json(const std::string& query, double t, const AblResult& r, const char* mode) {
  std::ostringstream o;
  o << "{\"query\": \"" << query << "\", \"time\": " << num(t) << ", \"mode\": \"" << mode
    << "\", \"probability_of_1\": " << num(r.probability_of_1) << ", \"weight_1\": " << num(r.weight_1)
    << ", \"weight_0\": " << num(r.weight_0);
  if (r.samples) o << ", \"accepted_samples\": " << r.samples << ", \"standard_error\": " << num(r.standard_error);
  o << "}\n";
  return o.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wtrace: weak traces of pre- and postselected quantum systems"};
  app.require_subcommand(1);

  Common c;
  c.tol = default_tolerance();
  auto add_common = [&](CLI::App* sub, bool needs_scenario = true) {
    auto* opt = sub->add_option("--scenario", c.scenario, "scenario file or builtin:name[:k=v,...]");
    if (needs_scenario) opt->required();
    sub->add_option("--time", c.time, "evaluation time t, or start:end:count");
    sub->add_option("--tol", c.tol, "certification tolerance (default 1e-12, env WTRACE_TOL)");
    sub->add_option("--overlap-threshold", c.overlap_threshold, "smallest |<phi|psi>| treated as defined");
    sub->add_option("--format", c.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--output", c.output, "output file (default stdout)");
  };

  auto* list_cmd = app.add_subcommand("list", "list built-in scenarios");
  auto* run_cmd = app.add_subcommand("run", "evaluate all scenario queries at all times");
  add_common(run_cmd);
  auto* sweep_cmd = app.add_subcommand("sweep", "time series of all query weak values");
  add_common(sweep_cmd);
  auto* export_cmd = app.add_subcommand("export", "print the canonical scenario document");
  add_common(export_cmd);

  std::string query;
  std::uint64_t samples = 0, seed = 1;
  auto* abl_cmd = app.add_subcommand("abl", "ABL probability of a projector query");
  add_common(abl_cmd);
  abl_cmd->add_option("--query", query, "projector query, e.g. 1,*")->required();
  abl_cmd->add_option("--samples", samples, "Monte Carlo trials (0: exact only)");
  abl_cmd->add_option("--seed", seed, "Monte Carlo seed");

  double g = 0.0, sigma = 1.0, extent = 0.0;
  int points = 4096;
  std::string scheme = "direct", g_list;
  auto add_pointer = [&](CLI::App* sub) {
    sub->add_option("--query", query, "coupled projector query")->required();
    sub->add_option("--scheme", scheme, "direct or sequential");
    sub->add_option("--sigma", sigma, "pointer width");
    sub->add_option("--extent", extent, "grid half-width (default 8 sigma + max g)");
    sub->add_option("--points", points, "grid points");
  };
  auto* pointer_cmd = app.add_subcommand("pointer", "postselected pointer statistics for one coupling");
  add_common(pointer_cmd);
  add_pointer(pointer_cmd);
  pointer_cmd->add_option("--g", g, "coupling strength")->required();
  auto* order_cmd = app.add_subcommand("order", "leading order in g of the pointer signal");
  add_common(order_cmd);
  add_pointer(order_cmd);
  order_cmd->add_option("--g-list", g_list, "comma-separated g values (default 7 points in [1e-3, 1e-1] sigma)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (list_cmd->parsed()) {
      for (const auto& b : builtin_catalog()) {
        std::cout << b.name;
        for (const auto& [k, v] : b.default_params) std::cout << ' ' << k << '=' << v;
        std::cout << "\n    " << b.description << '\n';
      }
      return kOk;
    }

    const auto doc = load(c);
    RunOptions options{c.overlap_threshold, c.tol, std::nullopt};
    if (!c.time.empty()) options.times = parse_times(c.time);

    if (export_cmd->parsed()) {
      write_output(c.output, emit_scenario(doc));
      return kOk;
    }
    if (run_cmd->parsed()) {
      const auto report = run(doc, options);
      write_output(c.output, c.format == "csv" ? to_csv(report) : to_json(report));
      return report.has_undefined() ? kUndefined : kOk;
    }
    if (sweep_cmd->parsed()) {
      const auto grid = options.times.value_or(doc.times.values());
      const auto table = sweep_time(doc, grid, options);
      write_output(c.output, c.format == "json" && sweep_cmd->count("--format") ? to_json(table) : to_csv(table));
      for (const auto& row : table.rows)
        for (double v : row)
          if (std::isnan(v)) return kUndefined;
      return kOk;
    }

    const auto tsv = build_two_state_vector(doc);
    const double t = first_time(c, doc);
    const auto q = query_arg(doc, query);
    const auto s = slice(tsv, t);

    if (abl_cmd->parsed()) {
      std::string out = abl_json(query, t, abl_probability(s, q), "exact");
      if (samples > 0) out += abl_json(query, t, abl_probability_monte_carlo(s, q, samples, seed), "monte-carlo");
      write_output(c.output, out);
      return kOk;
    }

    if (pointer_cmd->parsed()) {
      const PointerConfig config{PointerGrid(extent > 0 ? extent : 8.0 * sigma + g, points), sigma};
      const auto outcome = couple_and_postselect(s, {q, g, scheme_arg(scheme)}, config);
      std::ostringstream o;
      o << "{\"query\": \"" << query << "\", \"time\": " << num(t) << ", \"g\": " << num(g) << ", \"scheme\": \""
        << scheme << "\", \"mean_shifts\": [";
      for (std::size_t i = 0; i < outcome.estimate.mean_shifts.size(); ++i)
        o << (i ? ", " : "") << num(outcome.estimate.mean_shifts[i]);
      o << "]";
      if (outcome.estimate.cross_correlation) o << ", \"cross_correlation\": " << num(*outcome.estimate.cross_correlation);
      o << ", \"postselection_probability\": " << num(outcome.estimate.postselection_probability)
        << ", \"joint_norm\": " << num(outcome.estimate.joint_norm);
      o << "}\n";
      write_output(c.output, o.str());
      return kOk;
    }

    if (order_cmd->parsed()) {
      const auto gs = g_list.empty() ? log_spaced(1e-3 * sigma, 1e-1 * sigma, 7) : parse_list(g_list);
      const double g_max = *std::max_element(gs.begin(), gs.end());
      const PointerConfig config{PointerGrid(extent > 0 ? extent : 8.0 * sigma + g_max, points), sigma};
      const auto est = order_estimate(s, q, scheme_arg(scheme), gs, config);
      std::ostringstream o;
      o << "{\"query\": \"" << query << "\", \"scheme\": \"" << scheme << "\", \"g\": [";
      for (std::size_t i = 0; i < est.g_values.size(); ++i) o << (i ? ", " : "") << num(est.g_values[i]);
      o << "], \"signal\": [";
      for (std::size_t i = 0; i < est.signals.size(); ++i) o << (i ? ", " : "") << num(est.signals[i]);
      o << "], \"noise_floor\": " << num(est.noise_floor)
        << ", \"below_noise_floor\": " << (est.below_noise_floor ? "true" : "false")
        << ", \"exponent\": " << (est.exponent ? num(*est.exponent) : std::string("null")) << "}\n";
      write_output(c.output, o.str());
      return est.exponent ? kOk : kUndefined;
    }
  } catch (const SchemaError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const DimensionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const TimeRangeError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ZeroStateError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const VanishingOverlap& e) {
    std::cerr << "undefined: " << e.what() << '\n';
    return kUndefined;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kOk;
}
