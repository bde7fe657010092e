#include "wtrace/scenario.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

namespace wtrace {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// JSON <-> values

Complex complex_from_json(const json& j, const std::string& where) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  throw SchemaError(where + ": complex numbers are written as [re, im]");
}

json complex_to_json(Complex z) { return json::array({z.real(), z.imag()}); }

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) throw SchemaError(where + ": missing field '" + key + "'");
  return obj.at(key);
}

double number_at(const json& obj, const char* key, const std::string& where) {
  const auto& v = require(obj, key, where);
  if (!v.is_number()) throw SchemaError(where + ": field '" + key + "' must be a number");
  return v.get<double>();
}

std::vector<TermSpec> terms_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw SchemaError(where + ": expected a non-empty list of terms");
  std::vector<TermSpec> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string at = where + "[" + std::to_string(i) + "]";
    TermSpec t;
    t.coefficient = j[i].contains("coeff") ? complex_from_json(j[i]["coeff"], at + ".coeff") : Complex{1.0, 0.0};
    const auto& factors = require(j[i], "factors", at);
    if (!factors.is_array()) throw SchemaError(at + ".factors must be a list");
    for (const auto& f : factors) {
      if (f.is_string()) {
        t.factors.emplace_back(f.get<std::string>());
      } else if (f.is_array()) {
        std::vector<Complex> amps;
        for (const auto& a : f) amps.push_back(complex_from_json(a, at + ".factors"));
        t.factors.emplace_back(std::move(amps));
      } else {
        throw SchemaError(at + ".factors: each factor is a basis label or a list of amplitudes");
      }
    }
    out.push_back(std::move(t));
  }
  return out;
}

json terms_to_json(const std::vector<TermSpec>& terms) {
  json out = json::array();
  for (const auto& t : terms) {
    json factors = json::array();
    for (const auto& f : t.factors) {
      if (const auto* label = std::get_if<std::string>(&f)) {
        factors.push_back(*label);
      } else {
        json amps = json::array();
        for (auto z : std::get<std::vector<Complex>>(f)) amps.push_back(complex_to_json(z));
        factors.push_back(std::move(amps));
      }
    }
    out.push_back({{"coeff", complex_to_json(t.coefficient)}, {"factors", std::move(factors)}});
  }
  return out;
}

LocalSpec local_from_json(const json& j, const std::string& where) {
  LocalSpec s;
  const double sub = number_at(j, "subsystem", where);
  if (sub < 0 || sub != std::floor(sub)) throw SchemaError(where + ".subsystem must be a non-negative integer");
  s.subsystem = static_cast<std::size_t>(sub);
  if (j.contains("name")) s.name = j["name"].get<std::string>();
  if (j.contains("matrix")) {
    ComplexRows rows;
    for (const auto& r : j["matrix"]) {
      std::vector<Complex> row;
      for (const auto& z : r) row.push_back(complex_from_json(z, where + ".matrix"));
      rows.push_back(std::move(row));
    }
    s.matrix = std::move(rows);
  }
  if (s.name.empty() == !s.matrix) throw SchemaError(where + ": give exactly one of 'name' or 'matrix'");
  return s;
}

json local_to_json(const LocalSpec& s) {
  json out{{"subsystem", s.subsystem}};
  if (s.matrix) {
    json rows = json::array();
    for (const auto& r : *s.matrix) {
      json row = json::array();
      for (auto z : r) row.push_back(complex_to_json(z));
      rows.push_back(std::move(row));
    }
    out["matrix"] = std::move(rows);
  } else {
    out["name"] = s.name;
  }
  return out;
}

ScenarioDoc doc_from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("scenario must be a JSON object");
  ScenarioDoc doc;
  const double version = number_at(j, "format_version", "scenario");
  if (version != kScenarioFormatVersion)
    throw SchemaError("unsupported format_version " + brief(version));
  doc.format_version = kScenarioFormatVersion;
  doc.name = j.value("name", std::string{});

  const auto& dims = require(j, "dims", "scenario");
  if (!dims.is_array()) throw SchemaError("dims must be a list of integers");
  for (const auto& d : dims) {
    if (!d.is_number_integer()) throw SchemaError("dims must be a list of integers");
    doc.dims.push_back(d.get<int>());
  }
  if (j.contains("labels")) doc.labels = j["labels"].get<std::vector<std::vector<std::string>>>();

  doc.pre = terms_from_json(require(j, "pre", "scenario"), "pre");
  doc.post = terms_from_json(require(j, "post", "scenario"), "post");

  if (j.contains("interval") && j.contains("schedule"))
    throw SchemaError("give either 'interval' (free evolution) or 'schedule', not both");
  if (j.contains("interval")) {
    const auto& iv = j["interval"];
    if (!iv.is_array() || iv.size() != 2) throw SchemaError("interval must be [t_initial, t_final]");
    doc.t_initial = iv[0].get<double>();
    doc.t_final = iv[1].get<double>();
  }
  if (j.contains("schedule")) {
    for (std::size_t i = 0; i < j["schedule"].size(); ++i) {
      const auto& sj = j["schedule"][i];
      const std::string at = "schedule[" + std::to_string(i) + "]";
      SegmentSpec seg{number_at(sj, "t_start", at), number_at(sj, "t_end", at), {}};
      if (sj.contains("generators"))
        for (const auto& g : sj["generators"]) {
          GeneratorSpec gen{{}, g.value("epsilon", 1.0)};
          if (g.contains("factors")) {
            for (const auto& f : g["factors"]) gen.factors.push_back(local_from_json(f, at + ".generators"));
            if (gen.factors.empty()) throw SchemaError(at + ": generator with an empty factor list");
          } else {
            gen.factors.push_back(local_from_json(g, at + ".generators"));
          }
          seg.generators.push_back(std::move(gen));
        }
      doc.schedule.push_back(std::move(seg));
    }
  }

  const auto& queries = require(j, "queries", "scenario");
  if (!queries.is_array()) throw SchemaError("queries must be a list");
  for (const auto& q : queries) {
    if (q.is_string()) {
      doc.queries.push_back({q.get<std::string>(), {}});
      continue;
    }
    QuerySpec spec;
    spec.name = require(q, "name", "query").get<std::string>();
    for (const auto& t : require(q, "terms", "query " + spec.name)) {
      OperatorTermSpec term;
      term.coefficient = t.contains("coeff") ? complex_from_json(t["coeff"], "query " + spec.name) : Complex{1.0, 0.0};
      for (const auto& f : require(t, "factors", "query " + spec.name))
        term.factors.push_back(local_from_json(f, "query " + spec.name));
      spec.terms.push_back(std::move(term));
    }
    if (spec.terms.empty()) throw SchemaError("operator query '" + spec.name + "' has no terms");
    doc.queries.push_back(std::move(spec));
  }

  const auto& times = require(j, "times", "scenario");
  if (times.is_array()) {
    doc.times.explicit_times = times.get<std::vector<double>>();
  } else if (times.is_object()) {
    const double count = number_at(times, "count", "times");
    if (count < 1 || count != std::floor(count)) throw SchemaError("times.count must be a positive integer");
    doc.times.range = TimeSpec::Range{number_at(times, "start", "times"), number_at(times, "end", "times"),
                                      static_cast<std::size_t>(count)};
  } else {
    throw SchemaError("times must be a list or {start, end, count}");
  }
  doc.abl = j.value("abl", false);
  if (j.contains("builtin")) {
    const auto& b = j["builtin"];
    doc.builtin = BuiltinTag{require(b, "name", "builtin").get<std::string>(),
                             b.value("params", std::map<std::string, double>{})};
  }
  return doc;
}

json doc_to_json(const ScenarioDoc& doc) {
  json j;
  j["format_version"] = doc.format_version;
  j["name"] = doc.name;
  j["dims"] = doc.dims;
  if (!doc.labels.empty()) j["labels"] = doc.labels;
  j["pre"] = terms_to_json(doc.pre);
  j["post"] = terms_to_json(doc.post);
  if (doc.schedule.empty()) {
    j["interval"] = {doc.t_initial, doc.t_final};
  } else {
    json sched = json::array();
    for (const auto& seg : doc.schedule) {
      json gens = json::array();
      for (const auto& g : seg.generators) {
        json gj;
        if (g.factors.size() == 1) {
          gj = local_to_json(g.factors.front());
        } else {
          gj["factors"] = json::array();
          for (const auto& f : g.factors) gj["factors"].push_back(local_to_json(f));
        }
        gj["epsilon"] = g.epsilon;
        gens.push_back(std::move(gj));
      }
      sched.push_back({{"t_start", seg.t_start}, {"t_end", seg.t_end}, {"generators", std::move(gens)}});
    }
    j["schedule"] = std::move(sched);
  }
  json queries = json::array();
  for (const auto& q : doc.queries) {
    if (q.is_projector()) {
      queries.push_back(q.name);
      continue;
    }
    json terms = json::array();
    for (const auto& t : q.terms) {
      json factors = json::array();
      for (const auto& f : t.factors) factors.push_back(local_to_json(f));
      terms.push_back({{"coeff", complex_to_json(t.coefficient)}, {"factors", std::move(factors)}});
    }
    queries.push_back({{"name", q.name}, {"terms", std::move(terms)}});
  }
  j["queries"] = std::move(queries);
  if (doc.times.range)
    j["times"] = {{"start", doc.times.range->start}, {"end", doc.times.range->end}, {"count", doc.times.range->count}};
  else
    j["times"] = doc.times.explicit_times;
  j["abl"] = doc.abl;
  if (doc.builtin) j["builtin"] = {{"name", doc.builtin->name}, {"params", doc.builtin->params}};
  return j;
}

// ---------------------------------------------------------------------------
// Labels and operators

int label_index(const std::vector<std::string>& labels, const std::string& label, std::size_t subsystem) {
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label) return static_cast<int>(i);
  throw DimensionError("label '" + label + "' not defined for subsystem " + std::to_string(subsystem) +
                       " (local dimension " + std::to_string(labels.size()) + ")");
}

std::vector<std::string> split_commas(std::string_view text) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss{std::string(text)};
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    out.push_back(b == std::string::npos ? std::string{} : item.substr(b, e - b + 1));
  }
  if (!text.empty() && text.back() == ',') out.emplace_back();
  return out;
}

Matrix<Complex> embedded_pauli(int d, char axis) {
  Matrix<Complex> m = Matrix<Complex>::Zero(d, d);
  const Complex i{0.0, 1.0};
  switch (axis) {
    case 'x': m(0, 1) = 1.0; m(1, 0) = 1.0; break;
    case 'y': m(0, 1) = -i; m(1, 0) = i; break;
    case 'z': m(0, 0) = 1.0; m(1, 1) = -1.0; break;
    default: break;
  }
  return m;
}

void check_times(const ScenarioDoc& doc) {
  const auto schedule = build_schedule(doc);
  for (double t : doc.times.values())
    if (!schedule.contains(t))
      throw TimeRangeError("evaluation time " + brief(t) + " lies outside the schedule");
}

}  // namespace

std::vector<double> TimeSpec::values() const {
  if (!range) return explicit_times;
  std::vector<double> out(range->count);
  for (std::size_t i = 0; i < range->count; ++i)
    out[i] = range->count == 1 ? range->start
                               : range->start + (range->end - range->start) * static_cast<double>(i) /
                                                    static_cast<double>(range->count - 1);
  if (range->count > 1) out.back() = range->end;
  return out;
}

std::vector<std::vector<std::string>> effective_labels(const ScenarioDoc& doc) {
  if (!doc.labels.empty()) return doc.labels;
  std::vector<std::vector<std::string>> out;
  for (int d : doc.dims) {
    std::vector<std::string> l;
    for (int i = 1; i <= d; ++i) l.push_back(std::to_string(i));
    out.push_back(std::move(l));
  }
  return out;
}

Matrix<Complex> build_local(const ScenarioDoc& doc, const LocalSpec& spec) {
  if (spec.subsystem >= doc.dims.size())
    throw DimensionError("operator on subsystem " + std::to_string(spec.subsystem) + " out of range");
  const int d = doc.dims[spec.subsystem];
  if (spec.matrix) {
    const auto& rows = *spec.matrix;
    if (rows.size() != static_cast<std::size_t>(d)) throw DimensionError("explicit matrix has wrong size");
    Matrix<Complex> m(d, d);
    for (int r = 0; r < d; ++r) {
      if (rows[r].size() != static_cast<std::size_t>(d)) throw DimensionError("explicit matrix has wrong size");
      for (int c = 0; c < d; ++c) m(r, c) = rows[r][c];
    }
    return m;
  }
  if (spec.name == "identity") return Matrix<Complex>::Identity(d, d);
  if (spec.name == "sigma_x") return embedded_pauli(d, 'x');
  if (spec.name == "sigma_y") return embedded_pauli(d, 'y');
  if (spec.name == "sigma_z") return embedded_pauli(d, 'z');
  if (spec.name.starts_with("proj:")) {
    const auto labels = effective_labels(doc);
    return basis_projector<Complex>(d, label_index(labels[spec.subsystem], spec.name.substr(5), spec.subsystem));
  }
  throw SchemaError("unknown local operator '" + spec.name + "'");
}

ProjectorQuery build_projector(const ScenarioDoc& doc, const QuerySpec& q) {
  if (!q.is_projector()) throw SchemaError("query '" + q.name + "' is not a projector");
  const auto labels = effective_labels(doc);
  const auto parts = split_commas(q.name);
  if (parts.size() != doc.dims.size())
    throw DimensionError("query '" + q.name + "' names " + std::to_string(parts.size()) + " subsystems, scenario has " +
                         std::to_string(doc.dims.size()));
  std::vector<int> choices;
  for (std::size_t j = 0; j < parts.size(); ++j)
    choices.push_back(parts[j] == "*" ? ProjectorQuery::kAny : label_index(labels[j], parts[j], j));
  ProjectorQuery out(std::move(choices));
  if (out.order() == 0) throw SchemaError("query '" + q.name + "' selects no box");
  return out;
}

std::string projector_name(const ScenarioDoc& doc, const ProjectorQuery& q) {
  const auto labels = effective_labels(doc);
  std::string out;
  for (std::size_t j = 0; j < q.size(); ++j) {
    if (j) out += ',';
    out += q.is_any(j) ? std::string("*") : labels.at(j).at(static_cast<std::size_t>(q[j]));
  }
  return out;
}

OperatorSum<Complex> build_operator(const ScenarioDoc& doc, const QuerySpec& q) {
  const Dims dims(doc.dims);
  if (q.is_projector()) return OperatorSum<Complex>(build_projector(doc, q).to_operator(dims));
  OperatorSum<Complex> out;
  for (const auto& t : q.terms) {
    ProductOperator<Complex> op;
    for (const auto& f : t.factors) op.set(f.subsystem, build_local(doc, f));
    out.add(t.coefficient, std::move(op));
  }
  return out;
}

State build_state(const ScenarioDoc& doc, const std::vector<TermSpec>& terms) {
  const Dims dims(doc.dims);
  const auto labels = effective_labels(doc);
  std::vector<ProductTerm<Complex>> out;
  for (const auto& t : terms) {
    if (t.factors.size() != dims.size())
      throw DimensionError("state term has " + std::to_string(t.factors.size()) + " factors for " +
                           std::to_string(dims.size()) + " subsystems");
    ProductTerm<Complex> term{t.coefficient, {}};
    for (std::size_t j = 0; j < dims.size(); ++j) {
      if (const auto* label = std::get_if<std::string>(&t.factors[j])) {
        term.factors.push_back(basis_vector<Complex>(dims[j], label_index(labels[j], *label, j)));
      } else {
        const auto& amps = std::get<std::vector<Complex>>(t.factors[j]);
        if (amps.size() != static_cast<std::size_t>(dims[j]))
          throw DimensionError("explicit local vector on subsystem " + std::to_string(j) + " has " +
                               std::to_string(amps.size()) + " entries, local dimension is " +
                               std::to_string(dims[j]));
        Vector<Complex> v(dims[j]);
        for (int i = 0; i < dims[j]; ++i) v(i) = amps[static_cast<std::size_t>(i)];
        term.factors.push_back(std::move(v));
      }
    }
    out.push_back(std::move(term));
  }
  return State::product_sum(dims, merge_proportional_terms(std::move(out)));
}

EvolutionSchedule build_schedule(const ScenarioDoc& doc) {
  if (doc.schedule.empty()) {
    if (!(doc.t_initial < doc.t_final)) throw SchemaError("interval must satisfy t_initial < t_final");
    return EvolutionSchedule::free(doc.t_initial, doc.t_final);
  }
  std::vector<Segment> segments;
  for (const auto& s : doc.schedule) {
    Segment seg{s.t_start, s.t_end, std::nullopt};
    if (!s.generators.empty()) {
      Hamiltonian h;
      for (const auto& g : s.generators) {
        ProductOperator<Complex> op;
        for (const auto& f : g.factors) op.set(f.subsystem, build_local(doc, f));
        h.add(Complex(g.epsilon, 0.0), std::move(op));
      }
      seg.generator = std::move(h);
    }
    segments.push_back(std::move(seg));
  }
  return EvolutionSchedule(std::move(segments));
}

TwoStateVector build_two_state_vector(const ScenarioDoc& doc) {
  return make_two_state_vector(build_state(doc, doc.pre), build_state(doc, doc.post), build_schedule(doc));
}

void validate(const ScenarioDoc& doc) {
  if (doc.format_version != kScenarioFormatVersion) throw SchemaError("unsupported format_version");
  const Dims dims(doc.dims);
  if (!doc.labels.empty()) {
    if (doc.labels.size() != dims.size()) throw DimensionError("labels must be given for every subsystem");
    for (std::size_t j = 0; j < dims.size(); ++j) {
      if (doc.labels[j].size() != static_cast<std::size_t>(dims[j]))
        throw DimensionError("subsystem " + std::to_string(j) + " has " + std::to_string(doc.labels[j].size()) +
                             " labels for local dimension " + std::to_string(dims[j]));
      std::set<std::string> seen;
      for (const auto& l : doc.labels[j]) {
        if (l.empty() || l == "*" || l.find(',') != std::string::npos)
          throw SchemaError("basis label '" + l + "' is empty or contains ',' / '*'");
        if (!seen.insert(l).second) throw SchemaError("duplicate basis label '" + l + "'");
      }
    }
  }
  if (doc.pre.empty() || doc.post.empty()) throw SchemaError("pre and post need at least one term");
  if (doc.queries.empty()) throw SchemaError("at least one query is required");
  for (const auto& q : doc.queries) build_operator(doc, q);
  if (doc.times.values().empty()) throw SchemaError("at least one evaluation time is required");
  for (double t : doc.times.values())
    if (!std::isfinite(t)) throw SchemaError("evaluation times must be finite");
  check_times(doc);
  // real couplings times Hermitian factors on distinct subsystems keep H Hermitian
  for (const auto& seg : doc.schedule)
    for (const auto& g : seg.generators) {
      if (g.factors.empty()) throw SchemaError("generator with an empty factor list");
      if (!std::isfinite(g.epsilon)) throw SchemaError("generator epsilon must be finite");
      for (const auto& f : g.factors) {
        const auto m = build_local(doc, f);
        if ((m - m.adjoint()).norm() > 1e-12 * std::max(1.0, m.norm()))
          throw SchemaError("generator factor on subsystem " + std::to_string(f.subsystem) + " is not Hermitian");
      }
    }
}

ParsedScenario parse_scenario(std::string_view text, double overlap_threshold) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("scenario is not valid JSON: ") + e.what());
  }
  ParsedScenario out;
  try {
    out.doc = doc_from_json(j);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("scenario schema violation: ") + e.what());
  }
  validate(out.doc);
  const auto tsv = build_two_state_vector(out.doc);
  const double end_overlap = std::abs(overlap(tsv, tsv.schedule.t_final()));
  if (!(end_overlap > overlap_threshold))
    out.warnings.push_back("postselection is orthogonal to the evolved preselection (|<phi|psi>| = " +
                           brief(end_overlap) + "); weak values are undefined");
  return out;
}

std::string emit_scenario(const ScenarioDoc& doc) { return doc_to_json(doc).dump(2) + "\n"; }

std::uint64_t scenario_hash(const ScenarioDoc& doc) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : doc_to_json(doc).dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Built-in scenarios

namespace {

TermSpec term(Complex c, std::vector<FactorSpec> factors) { return {c, std::move(factors)}; }

double param(const std::map<std::string, double>& params, const std::string& key, double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

void reject_unknown(const std::map<std::string, double>& params, std::initializer_list<const char*> known,
                    std::string_view name) {
  for (const auto& [k, v] : params) {
    bool ok = false;
    for (const char* kk : known) ok = ok || k == kk;
    if (!ok) throw SchemaError("builtin '" + std::string(name) + "' has no parameter '" + k + "'");
  }
}

ScenarioDoc spin_intro() {
  const double r = 1.0 / std::numbers::sqrt2;
  ScenarioDoc d;
  d.name = "spin-intro";
  d.dims = {2};
  d.labels = {{"up", "down"}};
  d.pre = {term(r, {"up"}), term(r, {"down"})};           // sigma_x = +1
  d.post = {term(r, {"up"}), term({0.0, r}, {"down"})};   // sigma_y = +1
  d.queries = {
      {"sigma_pi/4", {{r, {{0, "sigma_x", {}}}}, {r, {{0, "sigma_y", {}}}}}},
      {"up", {}},
      {"down", {}},
  };
  d.times.explicit_times = {0.5};
  return d;
}

ScenarioDoc hardy() {
  const double a = 1.0 / std::sqrt(3.0);
  ScenarioDoc d;
  d.name = "hardy";
  d.dims = {2, 2};
  d.labels = {{"O", "NO"}, {"O", "NO"}};
  d.pre = {term(a, {"O", "NO"}), term(a, {"NO", "O"}), term(a, {"NO", "NO"})};
  d.post = {term(0.5, {"O", "O"}), term(-0.5, {"O", "NO"}), term(-0.5, {"NO", "O"}), term(0.5, {"NO", "NO"})};
  for (const char* q : {"O,O", "O,NO", "NO,O", "NO,NO", "O,*", "NO,*", "*,O", "*,NO"}) d.queries.push_back({q, {}});
  d.times.explicit_times = {0.5};
  d.abl = true;
  return d;
}

ScenarioDoc two_box() {
  const double a = 1.0 / std::sqrt(3.0);
  ScenarioDoc d;
  d.name = "two-box";
  d.dims = {2, 2};
  d.pre = {term(a, {"1", "1"}), term(-a, {"1", "2"}), term(a, {"2", "2"})};
  d.post = {term(a, {"1", "1"}), term(a, {"1", "2"}), term(a, {"2", "2"})};
  for (const char* q : {"1,1", "1,2", "2,1", "2,2", "1,*", "2,*", "*,1", "*,2"}) d.queries.push_back({q, {}});
  d.times.explicit_times = {0.5};
  d.abl = true;
  return d;
}

ScenarioDoc dynamic(double epsilon) {
  if (!(epsilon > 0)) throw SchemaError("dynamic scenario needs epsilon > 0");
  const double a = 1.0 / std::sqrt(3.0);
  ScenarioDoc d;
  d.name = "dynamic";
  d.dims = {3, 3};
  d.pre = {term(a, {"1", "1"}), term({0.0, a}, {"2", "2"}), term(a, {"3", "3"})};
  // Ket of the bra (1/sqrt3)(-<11| - i<22| + <33|).
  d.post = {term(-a, {"1", "1"}), term({0.0, a}, {"2", "2"}), term(a, {"3", "3"})};
  d.schedule = {{0.0, std::numbers::pi / epsilon, {{{{0, "sigma_x", {}}}, epsilon}}}};
  for (const char* q : {"1,1", "1,2", "2,1", "2,2", "1,*", "2,*", "3,*", "3,3"}) d.queries.push_back({q, {}});
  d.times.explicit_times = {std::numbers::pi / (4.0 * epsilon)};
  d.abl = true;
  d.builtin = BuiltinTag{"dynamic", {{"epsilon", epsilon}}};
  return d;
}

ScenarioDoc nparticle(double n_param, double c) {
  if (!(n_param >= 1) || n_param != std::floor(n_param)) throw SchemaError("nparticle needs integer N >= 1");
  if (c == 0.0 || !std::isfinite(c)) throw SchemaError("nparticle needs c != 0");
  const auto n = static_cast<std::size_t>(n_param);
  ScenarioDoc d;
  d.name = "nparticle";
  d.dims.assign(n, 3);
  const std::vector<Complex> plus{1.0, 1.0, 0.0};
  const std::vector<Complex> minus{1.0, -1.0, 0.0};
  d.pre = {term(1.0, std::vector<FactorSpec>(n, plus)), term(1.0, std::vector<FactorSpec>(n, std::string("3")))};
  d.post = {term(1.0, std::vector<FactorSpec>(n, minus)), term(c, std::vector<FactorSpec>(n, std::string("3")))};

  auto add = [&](const ProjectorQuery& q) { d.queries.push_back({q.to_string(), {}}); };
  if (n <= 3) {
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    for (std::size_t k = 1; k <= n; ++k) for_each_order_k_query(n, all, {0, 1}, k, add);
  } else {
    auto base = ProjectorQuery::any(n);
    add(base.with(0, 0));
    add(base.with(0, 1));
    add(base.with(0, 0).with(1, 1));
    add(ProjectorQuery(std::vector<int>(n, 0)));
    add(ProjectorQuery(std::vector<int>(n, 0)).with(n - 1, 1));
    add(ProjectorQuery(std::vector<int>(n, 1)));
  }
  d.times.explicit_times = {0.5};
  d.abl = true;
  d.builtin = BuiltinTag{"nparticle", {{"N", n_param}, {"c", c}}};
  return d;
}

}  // namespace

const std::vector<BuiltinInfo>& builtin_catalog() {
  static const std::vector<BuiltinInfo> catalog{
      {"spin-intro", "spin-1/2, pre sigma_x=+1, post sigma_y=+1, anomalous weak value of sigma_pi/4", {}},
      {"hardy", "Hardy's paradox: overlapping-arm projectors of electron and positron", {}},
      {"two-box", "two particles in two boxes with vanishing single-particle traces", {}},
      {"dynamic", "three-box pair with sigma_x evolution of particle 1 over [0, pi/epsilon]", {{"epsilon", 1.0}}},
      {"nparticle", "N particles in three boxes, postselection weight c on |3...3>", {{"N", 3.0}, {"c", 1.0}}},
  };
  return catalog;
}

ScenarioDoc builtin(std::string_view name, const std::map<std::string, double>& params) {
  ScenarioDoc doc;
  if (name == "spin-intro") {
    reject_unknown(params, {}, name);
    doc = spin_intro();
  } else if (name == "hardy") {
    reject_unknown(params, {}, name);
    doc = hardy();
  } else if (name == "two-box") {
    reject_unknown(params, {}, name);
    doc = two_box();
  } else if (name == "dynamic") {
    reject_unknown(params, {"epsilon"}, name);
    doc = dynamic(param(params, "epsilon", 1.0));
  } else if (name == "nparticle") {
    reject_unknown(params, {"N", "c"}, name);
    doc = nparticle(param(params, "N", 3.0), param(params, "c", 1.0));
  } else {
    throw SchemaError("unknown builtin scenario '" + std::string(name) + "'");
  }
  validate(doc);
  return doc;
}

ScenarioDoc load_scenario(std::string_view source, std::vector<std::string>* warnings) {
  constexpr std::string_view kPrefix = "builtin:";
  if (source.starts_with(kPrefix)) {
    std::string rest(source.substr(kPrefix.size()));
    std::map<std::string, double> params;
    if (const auto colon = rest.find(':'); colon != std::string::npos) {
      for (const auto& kv : split_commas(rest.substr(colon + 1))) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw SchemaError("builtin parameter '" + kv + "' is not key=value");
        try {
          params[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
        } catch (const std::exception&) {
          throw SchemaError("builtin parameter '" + kv + "' has a non-numeric value");
        }
      }
      rest.resize(colon);
    }
    return builtin(rest, params);
  }
  std::ifstream in{std::string(source)};
  if (!in) throw SchemaError("cannot open scenario file '" + std::string(source) + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  auto parsed = parse_scenario(buf.str());
  if (warnings) *warnings = std::move(parsed.warnings);
  return std::move(parsed.doc);
}

}  // namespace wtrace
