#pragma once

// Declarative scenarios: JSON configuration, builtin figure presets, batch
// execution across worker threads, analyses and artifact emission.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <future>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "json.hpp"

#include "cqtraj/analysis.hpp"
#include "cqtraj/errors.hpp"
#include "cqtraj/fields.hpp"
#include "cqtraj/integrate.hpp"
#include "cqtraj/io.hpp"
#include "cqtraj/states.hpp"

namespace cqtraj {

using json = nlohmann::json;

enum class FieldKind {
  QuantumLogDerivative,
  HoCoherentClosed,
  Dbb,
  ClassicalHamiltonian,
  ClassicalAnalytic
};

enum class OutputFormat { Csv, Json, Svg };

enum class AnalysisKind {
  EllipseFit,
  Period,
  AbsPositionDrift,
  EnergyDrift,
  CongruenceClassical,
  CycleExtrema
};

struct AnalysisRequest {
  AnalysisKind kind;
  /// Period window; defaults to the second half of the span.
  std::optional<TimeSpan> window;
  /// Cycle length for CycleExtrema; defaults to the field period of the state.
  std::optional<double> cycle;
  int cycles = 5;
};

struct InitialPoint {
  cplx x0;
  /// Sign of the launch momentum for classical runs.
  int momentum_sign = 1;
};

struct ClassicalSpec {
  ClassicalSystem system;
  EnergySpec energy;
};

struct ScenarioConfig {
  std::string name;
  ModelParams params;
  std::optional<StateSpec> state;
  std::optional<ClassicalSpec> classical;
  FieldKind field = FieldKind::QuantumLogDerivative;
  std::vector<InitialPoint> initial_points;
  TimeSpan t_span{0.0, 2 * std::numbers::pi};
  int samples = kDefaultSamples;
  IntegratorConfig integrator;
  std::vector<OutputFormat> outputs{OutputFormat::Csv, OutputFormat::Json, OutputFormat::Svg};
  std::vector<AnalysisRequest> analyses;
};

// --- names -----------------------------------------------------------------

namespace detail {

template <class E>
struct EnumName {
  E value;
  const char* name;
};

inline constexpr EnumName<FieldKind> kFieldNames[] = {
    {FieldKind::QuantumLogDerivative, "QUANTUM_LOG_DERIVATIVE"},
    {FieldKind::HoCoherentClosed, "HO_COHERENT_CLOSED"},
    {FieldKind::Dbb, "DBB"},
    {FieldKind::ClassicalHamiltonian, "CLASSICAL_HAMILTONIAN"},
    {FieldKind::ClassicalAnalytic, "CLASSICAL_ANALYTIC"}};

inline constexpr EnumName<OutputFormat> kFormatNames[] = {
    {OutputFormat::Csv, "csv"}, {OutputFormat::Json, "json"}, {OutputFormat::Svg, "svg"}};

inline constexpr EnumName<AnalysisKind> kAnalysisNames[] = {
    {AnalysisKind::EllipseFit, "ellipse_fit"},
    {AnalysisKind::Period, "period"},
    {AnalysisKind::AbsPositionDrift, "abs_position_drift"},
    {AnalysisKind::EnergyDrift, "energy_drift"},
    {AnalysisKind::CongruenceClassical, "congruence_classical"},
    {AnalysisKind::CycleExtrema, "cycle_extrema"}};

inline constexpr EnumName<Method> kMethodNames[] = {{Method::Rk4Fixed, "RK4_FIXED"},
                                                    {Method::Rk45Adaptive, "RK45_ADAPTIVE"}};

template <class E, std::size_t K>
const char* name_of(const EnumName<E> (&table)[K], E v) {
  for (const auto& e : table)
    if (e.value == v) return e.name;
  return "?";
}

template <class E, std::size_t K>
std::optional<E> parse_name(const EnumName<E> (&table)[K], const std::string& s) {
  for (const auto& e : table)
    if (s == e.name) return e.value;
  return std::nullopt;
}

template <class E, std::size_t K>
std::string choices(const EnumName<E> (&table)[K]) {
  std::string out;
  for (const auto& e : table) out += (out.empty() ? "" : ", ") + std::string(e.name);
  return out;
}

}  // namespace detail

inline const char* to_string(FieldKind k) { return detail::name_of(detail::kFieldNames, k); }
inline const char* to_string(OutputFormat k) { return detail::name_of(detail::kFormatNames, k); }
inline const char* to_string(AnalysisKind k) { return detail::name_of(detail::kAnalysisNames, k); }
inline const char* to_string(Method k) { return detail::name_of(detail::kMethodNames, k); }

inline std::optional<OutputFormat> parse_output_format(const std::string& s) {
  return detail::parse_name(detail::kFormatNames, s);
}

// --- JSON <-> config ---------------------------------------------------------

namespace detail {

// Collects every violation instead of stopping at the first one.
class Reader {
 public:
  Reader(const json& j, std::string path, std::vector<std::string>& errors)
      : j_(j), path_(std::move(path)), errors_(errors) {}

  bool has(const char* key) const { return j_.is_object() && j_.contains(key); }
  const json& at(const char* key) const { return j_.at(key); }
  std::string where(const char* key) const { return path_.empty() ? key : path_ + "." + key; }
  void fail(const std::string& msg) { errors_.push_back(msg); }

  double number(const char* key, double fallback) {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number()) {
      fail(where(key) + ": expected a number");
      return fallback;
    }
    return v.get<double>();
  }

  long integer(const char* key, long fallback) {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number_integer()) {
      fail(where(key) + ": expected an integer");
      return fallback;
    }
    return v.get<long>();
  }

  std::optional<std::string> string(const char* key) {
    if (!has(key)) return std::nullopt;
    const auto& v = j_.at(key);
    if (!v.is_string()) {
      fail(where(key) + ": expected a string");
      return std::nullopt;
    }
    return v.get<std::string>();
  }

  std::optional<std::pair<double, double>> pair(const char* key) {
    if (!has(key)) return std::nullopt;
    const auto& v = j_.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      fail(where(key) + ": expected [number, number]");
      return std::nullopt;
    }
    return std::make_pair(v[0].get<double>(), v[1].get<double>());
  }

 private:
  const json& j_;
  std::string path_;
  std::vector<std::string>& errors_;
};

inline std::optional<StateSpec> parse_state(const json& j, std::vector<std::string>& errors) {
  if (!j.is_object()) {
    errors.push_back("state: expected an object");
    return std::nullopt;
  }
  Reader r(j, "state", errors);
  const auto family = r.string("family");
  if (!family) {
    errors.push_back("state.family: required");
    return std::nullopt;
  }
  auto n = [&] { return static_cast<int>(r.integer("n", 0)); };
  auto n_max = [&](int fallback) { return static_cast<int>(r.integer("n_max", fallback)); };
  if (*family == "HO_EIGEN") return HoEigen{n()};
  if (*family == "HO_COHERENT_CLOSED")
    return HoCoherentClosed{r.number("lambda", 0), r.number("kappa", 0)};
  if (*family == "HO_COHERENT_SERIES") {
    bool renorm = false;
    if (r.has("renormalize")) {
      if (r.at("renormalize").is_boolean())
        renorm = r.at("renormalize").get<bool>();
      else
        errors.push_back("state.renormalize: expected a boolean");
    }
    return HoCoherentSeries{r.number("lambda", 0), r.number("kappa", 0), n_max(4), renorm};
  }
  if (*family == "WELL_EIGEN") return WellEigen{n()};
  if (*family == "WELL_COHERENT") return WellCoherent{r.number("J", 0), n_max(7)};
  if (*family == "PT_EIGEN") return PtEigen{n(), r.number("l", 1.5)};
  if (*family == "PT_COHERENT") return PtCoherent{r.number("J", 0), r.number("l", 1.5), n_max(4)};
  errors.push_back("state.family: unknown family '" + *family + "'");
  return std::nullopt;
}

inline void check_state(const StateSpec& s, std::vector<std::string>& errors) {
  auto nonneg = [&](int v, const char* what) {
    if (v < 0) errors.push_back(std::string("state.") + what + ": must be non-negative");
  };
  std::visit(
      [&](const auto& st) {
        using T = std::decay_t<decltype(st)>;
        if constexpr (requires { st.n; }) nonneg(st.n, "n");
        if constexpr (requires { st.n_max; }) nonneg(st.n_max, "n_max");
        if constexpr (requires { st.lambda; })
          if (!(st.lambda >= 0)) errors.push_back("state.lambda: must be non-negative");
        if constexpr (requires { st.J; })
          if (!(st.J >= 0)) errors.push_back("state.J: must be non-negative");
        if constexpr (requires { st.l; })
          if (!(st.l > 0.5)) errors.push_back("state.l: must exceed 1/2");
        if constexpr (std::is_same_v<T, PtEigen> || std::is_same_v<T, PtCoherent>) {
          int top = 0;
          if constexpr (requires { st.n_max; }) top = st.n_max;
          if constexpr (requires { st.n; }) top = st.n;
          if (top > kPtMaxDegree) errors.push_back("state: PT degree above " + std::to_string(kPtMaxDegree));
        }
        if constexpr (std::is_same_v<T, HoEigen> || std::is_same_v<T, HoCoherentSeries>) {
          int top = 0;
          if constexpr (requires { st.n_max; }) top = st.n_max;
          if constexpr (requires { st.n; }) top = st.n;
          if (top > kHermiteMaxDegree)
            errors.push_back("state: Hermite degree above " + std::to_string(kHermiteMaxDegree));
        }
      },
      s);
}

inline json state_to_json(const StateSpec& s) {
  json j;
  j["family"] = family_name(s);
  std::visit(
      [&](const auto& st) {
        if constexpr (requires { st.n; }) j["n"] = st.n;
        if constexpr (requires { st.lambda; }) j["lambda"] = st.lambda;
        if constexpr (requires { st.kappa; }) j["kappa"] = st.kappa;
        if constexpr (requires { st.J; }) j["J"] = st.J;
        if constexpr (requires { st.l; }) j["l"] = st.l;
        if constexpr (requires { st.n_max; }) j["n_max"] = st.n_max;
        if constexpr (requires { st.renormalize; }) j["renormalize"] = st.renormalize;
      },
      s);
  return j;
}

inline const char* classical_kind_name(const ClassicalSystem& sys) {
  if (std::holds_alternative<Harmonic>(sys.kind)) return "HARMONIC";
  if (std::holds_alternative<FreeParticle>(sys.kind)) return "FREE";
  return "POSCHL_TELLER";
}

}  // namespace detail

/// Parses and validates a scenario. Throws ConfigError listing every violation.
inline ScenarioConfig parse_config(const json& j) {
  std::vector<std::string> errors;
  ScenarioConfig cfg;
  if (!j.is_object()) throw ConfigError({"config: expected a JSON object"});
  detail::Reader r(j, "", errors);

  static const std::vector<std::string> kKnown = {
      "name",    "model",      "state",   "classical", "field",   "initial_points",
      "t_span",  "samples",    "integrator", "outputs", "analyses"};
  for (const auto& [key, _] : j.items())
    if (std::find(kKnown.begin(), kKnown.end(), key) == kKnown.end())
      errors.push_back(key + ": unknown key");

  if (auto name = r.string("name"); name && !name->empty()) {
    if (name->find_first_of("/\\") != std::string::npos)
      errors.push_back("name: must not contain path separators");
    cfg.name = *name;
  } else if (!r.has("name") || (name && name->empty())) {
    errors.push_back("name: required non-empty string");
  }

  if (r.has("model")) {
    detail::Reader m(r.at("model"), "model", errors);
    if (!r.at("model").is_object()) errors.push_back("model: expected an object");
    cfg.params.hbar = m.number("hbar", 1.0);
    cfg.params.mass = m.number("mass", 1.0);
    cfg.params.omega = m.number("omega", 1.0);
    cfg.params.a = m.number("a", 1.0);
  }
  if (!(cfg.params.hbar > 0) || !(cfg.params.mass > 0) || !(cfg.params.omega > 0) ||
      !(cfg.params.a > 0))
    errors.push_back("model: hbar, mass, omega and a must be positive");

  if (r.has("state")) {
    cfg.state = detail::parse_state(r.at("state"), errors);
    if (cfg.state) detail::check_state(*cfg.state, errors);
  }

  if (r.has("classical")) {
    const json& c = r.at("classical");
    detail::Reader cr(c, "classical", errors);
    ClassicalSpec spec{{Harmonic{}, cfg.params}, {0.0}};
    const auto kind = cr.string("kind");
    if (!kind)
      errors.push_back("classical.kind: required");
    else if (*kind == "HARMONIC")
      spec.system.kind = Harmonic{};
    else if (*kind == "FREE")
      spec.system.kind = FreeParticle{};
    else if (*kind == "POSCHL_TELLER") {
      const double l = cr.number("l", 1.5);
      if (!(l >= 1)) errors.push_back("classical.l: must be at least 1");
      spec.system.kind = PoschlTeller{l};
    } else
      errors.push_back("classical.kind: unknown kind '" + *kind + "'");
    if (!cr.has("energy")) errors.push_back("classical.energy: required");
    spec.energy.E = cr.number("energy", 0.0);
    if (!(spec.energy.E >= 0)) errors.push_back("classical.energy: must be non-negative");
    cfg.classical = spec;
  }

  if (auto field = r.string("field")) {
    if (auto k = detail::parse_name(detail::kFieldNames, *field))
      cfg.field = *k;
    else
      errors.push_back("field: unknown kind '" + *field + "' (expected one of " +
                       detail::choices(detail::kFieldNames) + ")");
  }

  if (!r.has("initial_points")) {
    errors.push_back("initial_points: required, at least one point");
  } else {
    const json& pts = r.at("initial_points");
    if (!pts.is_array() || pts.empty()) {
      errors.push_back("initial_points: must be a non-empty array");
    } else {
      for (std::size_t i = 0; i < pts.size(); ++i) {
        const json& p = pts[i];
        const std::string where = "initial_points[" + std::to_string(i) + "]";
        if (p.is_number()) {
          cfg.initial_points.push_back({cplx(p.get<double>(), 0.0), 1});
        } else if (p.is_array() && p.size() == 2 && p[0].is_number() && p[1].is_number()) {
          cfg.initial_points.push_back({cplx(p[0].get<double>(), p[1].get<double>()), 1});
        } else if (p.is_object()) {
          detail::Reader pr(p, where, errors);
          InitialPoint ip{cplx(pr.number("re", 0.0), pr.number("im", 0.0)),
                          static_cast<int>(pr.integer("momentum_sign", 1))};
          if (!pr.has("re")) errors.push_back(where + ".re: required");
          if (ip.momentum_sign != 1 && ip.momentum_sign != -1)
            errors.push_back(where + ".momentum_sign: must be +1 or -1");
          cfg.initial_points.push_back(ip);
        } else {
          errors.push_back(where + ": expected a number, [re, im] or {re, im, momentum_sign}");
        }
      }
    }
  }

  if (auto span = r.pair("t_span")) {
    cfg.t_span = {span->first, span->second};
  }
  if (!(cfg.t_span.t1 > cfg.t_span.t0)) errors.push_back("t_span: must be increasing");

  cfg.samples = static_cast<int>(r.integer("samples", kDefaultSamples));
  if (cfg.samples < 2) errors.push_back("samples: must be at least 2");

  if (r.has("integrator")) {
    const json& ij = r.at("integrator");
    if (!ij.is_object()) errors.push_back("integrator: expected an object");
    detail::Reader ir(ij, "integrator", errors);
    if (auto m = ir.string("method")) {
      if (auto mm = detail::parse_name(detail::kMethodNames, *m))
        cfg.integrator.method = *mm;
      else
        errors.push_back("integrator.method: unknown method '" + *m + "'");
    }
    auto& ic = cfg.integrator;
    ic.dt_init = ir.number("dt_init", ic.dt_init);
    ic.rel_tol = ir.number("rel_tol", ic.rel_tol);
    ic.abs_tol = ir.number("abs_tol", ic.abs_tol);
    ic.dt_min = ir.number("dt_min", ic.dt_min);
    ic.max_steps = ir.integer("max_steps", ic.max_steps);
    ic.pole_psi_floor = ir.number("pole_psi_floor", ic.pole_psi_floor);
    ic.domain_margin = ir.number("domain_margin", ic.domain_margin);
  }
  try {
    cfg.integrator.validate();
  } catch (const ConfigError& e) {
    for (const auto& v : e.violations()) errors.push_back("integrator: " + v);
  }

  if (r.has("outputs")) {
    const json& o = r.at("outputs");
    cfg.outputs.clear();
    if (!o.is_array()) {
      errors.push_back("outputs: expected an array");
    } else {
      for (const auto& v : o) {
        std::optional<OutputFormat> f;
        if (v.is_string()) f = parse_output_format(v.get<std::string>());
        if (!f)
          errors.push_back("outputs: unknown format " + v.dump() + " (expected csv, json, svg)");
        else if (std::find(cfg.outputs.begin(), cfg.outputs.end(), *f) == cfg.outputs.end())
          cfg.outputs.push_back(*f);
      }
    }
  }

  if (r.has("analyses")) {
    const json& a = r.at("analyses");
    if (!a.is_array()) {
      errors.push_back("analyses: expected an array");
    } else {
      for (std::size_t i = 0; i < a.size(); ++i) {
        const std::string where = "analyses[" + std::to_string(i) + "]";
        const json& item = a[i];
        const json obj = item.is_string() ? json{{"kind", item}} : item;
        if (!obj.is_object()) {
          errors.push_back(where + ": expected a name or an object");
          continue;
        }
        detail::Reader ar(obj, where, errors);
        const auto kind = ar.string("kind");
        const auto k = kind ? detail::parse_name(detail::kAnalysisNames, *kind) : std::nullopt;
        if (!k) {
          errors.push_back(where + ".kind: expected one of " +
                           detail::choices(detail::kAnalysisNames));
          continue;
        }
        AnalysisRequest req{*k, std::nullopt, std::nullopt, 5};
        if (auto w = ar.pair("window")) {
          req.window = TimeSpan{w->first, w->second};
          if (!(w->second > w->first)) errors.push_back(where + ".window: must be increasing");
        }
        if (ar.has("cycle")) {
          req.cycle = ar.number("cycle", 0.0);
          if (!(*req.cycle > 0)) errors.push_back(where + ".cycle: must be positive");
        }
        req.cycles = static_cast<int>(ar.integer("cycles", 5));
        if (req.cycles < 1) errors.push_back(where + ".cycles: must be positive");
        cfg.analyses.push_back(req);
      }
    }
  }

  // Cross-field requirements.
  const bool quantum = cfg.field == FieldKind::QuantumLogDerivative ||
                       cfg.field == FieldKind::HoCoherentClosed || cfg.field == FieldKind::Dbb;
  if (quantum && !cfg.state) errors.push_back("state: required for field " + std::string(to_string(cfg.field)));
  if (!quantum && !cfg.classical)
    errors.push_back("classical: required for field " + std::string(to_string(cfg.field)));
  if ((cfg.field == FieldKind::HoCoherentClosed || cfg.field == FieldKind::Dbb) && cfg.state &&
      !std::holds_alternative<HoCoherentClosed>(*cfg.state) &&
      !std::holds_alternative<HoCoherentSeries>(*cfg.state))
    errors.push_back("field: " + std::string(to_string(cfg.field)) +
                     " needs an oscillator coherent state");
  if (cfg.field == FieldKind::ClassicalAnalytic && cfg.classical &&
      std::holds_alternative<PoschlTeller>(cfg.classical->system.kind))
    errors.push_back("field: CLASSICAL_ANALYTIC has no closed form for POSCHL_TELLER");
  if (cfg.classical) cfg.classical->system.params = cfg.params;

  if (quantum && cfg.state) {
    if (auto dom = physical_domain(cfg.params, *cfg.state)) {
      for (std::size_t i = 0; i < cfg.initial_points.size(); ++i)
        if (!dom->contains(cfg.initial_points[i].x0.real()))
          errors.push_back("initial_points[" + std::to_string(i) +
                           "]: Re(x0) outside the open physical interval");
    }
  }
  for (const auto& req : cfg.analyses) {
    if (req.kind == AnalysisKind::EnergyDrift &&
        cfg.field != FieldKind::ClassicalHamiltonian && cfg.field != FieldKind::ClassicalAnalytic)
      errors.push_back("analyses: energy_drift needs a classical field");
    if (req.window && (req.window->t0 < cfg.t_span.t0 || req.window->t1 > cfg.t_span.t1))
      errors.push_back("analyses: window outside t_span");
  }

  if (!errors.empty()) throw ConfigError(errors);
  return cfg;
}

/// Config echo with every default resolved.
inline json config_to_json(const ScenarioConfig& cfg) {
  json j;
  j["name"] = cfg.name;
  j["model"] = {{"hbar", cfg.params.hbar},
                {"mass", cfg.params.mass},
                {"omega", cfg.params.omega},
                {"a", cfg.params.a}};
  if (cfg.state) j["state"] = detail::state_to_json(*cfg.state);
  if (cfg.classical) {
    json c = {{"kind", detail::classical_kind_name(cfg.classical->system)},
              {"energy", cfg.classical->energy.E}};
    if (const auto* pt = std::get_if<PoschlTeller>(&cfg.classical->system.kind)) c["l"] = pt->l;
    j["classical"] = c;
  }
  j["field"] = to_string(cfg.field);
  json pts = json::array();
  for (const auto& p : cfg.initial_points)
    pts.push_back({{"re", p.x0.real()}, {"im", p.x0.imag()}, {"momentum_sign", p.momentum_sign}});
  j["initial_points"] = pts;
  j["t_span"] = {cfg.t_span.t0, cfg.t_span.t1};
  j["samples"] = cfg.samples;
  const auto& ic = cfg.integrator;
  j["integrator"] = {{"method", to_string(ic.method)},   {"dt_init", ic.dt_init},
                     {"rel_tol", ic.rel_tol},            {"abs_tol", ic.abs_tol},
                     {"dt_min", ic.dt_min},              {"max_steps", ic.max_steps},
                     {"pole_psi_floor", ic.pole_psi_floor}, {"domain_margin", ic.domain_margin}};
  json outs = json::array();
  for (auto f : cfg.outputs) outs.push_back(to_string(f));
  j["outputs"] = outs;
  json an = json::array();
  for (const auto& a : cfg.analyses) {
    json item = {{"kind", to_string(a.kind)}};
    if (a.window) item["window"] = {a.window->t0, a.window->t1};
    if (a.cycle) item["cycle"] = *a.cycle;
    if (a.kind == AnalysisKind::CycleExtrema) item["cycles"] = a.cycles;
    an.push_back(item);
  }
  j["analyses"] = an;
  return j;
}

// --- presets -----------------------------------------------------------------

namespace detail {

inline AnalysisRequest request(AnalysisKind kind) {
  return {kind, std::nullopt, std::nullopt, 5};
}

inline std::vector<InitialPoint> real_points(std::initializer_list<double> xs, int sign = 1) {
  std::vector<InitialPoint> out;
  for (double x : xs) out.push_back({cplx(x, 0.0), sign});
  return out;
}

inline std::string two_digits(double v) {
  const long k = std::lround(v * 100);
  std::string s = std::to_string(k);
  while (s.size() < 3) s = "0" + s;
  return s;
}

inline std::map<std::string, ScenarioConfig> build_presets() {
  constexpr double kPi = std::numbers::pi;
  std::map<std::string, ScenarioConfig> out;
  auto add = [&out](ScenarioConfig c) { out.emplace(c.name, std::move(c)); };

  for (int n = 0; n <= 4; ++n) {
    ScenarioConfig c;
    c.name = "fig1_ho_eigen_n" + std::to_string(n);
    c.state = HoEigen{n};
    c.initial_points = real_points({0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0});
    if (n == 0) {
      c.t_span = {0, 2 * kPi};
      c.analyses = {request(AnalysisKind::AbsPositionDrift), request(AnalysisKind::EllipseFit)};
    } else {
      c.t_span = {0, 20};
    }
    add(c);
  }
  for (int n = 0; n <= 3; ++n) {
    ScenarioConfig c;
    c.name = "fig2_well_eigen_n" + std::to_string(n);
    c.state = WellEigen{n};
    for (int j = 1; j <= 8; ++j) c.initial_points.push_back({cplx((j - 0.5) * kPi / 8, 0), 1});
    c.t_span = {0, 20};
    add(c);
  }
  {
    ScenarioConfig c;
    c.name = "fig3_classical_ho";
    c.field = FieldKind::ClassicalHamiltonian;
    c.classical = ClassicalSpec{{Harmonic{}, {}}, {4.5}};
    c.initial_points = real_points({3.2, 3.5, 4.0, 4.5, 5.0, 6.0});
    c.t_span = {0, 2 * kPi};
    c.analyses = {request(AnalysisKind::EllipseFit), request(AnalysisKind::EnergyDrift)};
    add(c);
  }
  {
    ScenarioConfig c;
    c.name = "classical_free";
    c.field = FieldKind::ClassicalHamiltonian;
    c.classical = ClassicalSpec{{FreeParticle{}, {}}, {2.0}};
    c.initial_points = {{cplx(0, -1), 1}, {cplx(0, -0.5), 1}, {cplx(0, 0.5), -1}, {cplx(0, 1), -1}};
    c.t_span = {0, 5};
    c.analyses = {request(AnalysisKind::EnergyDrift)};
    add(c);
  }
  {
    ScenarioConfig c;
    c.name = "fig4_pt_classical";
    c.field = FieldKind::ClassicalHamiltonian;
    c.classical = ClassicalSpec{{PoschlTeller{1.5}, {}}, {2.25}};
    for (double x : {0.2, 0.35, 0.5, 0.65, 0.785, 0.9, 1.05, 1.2, 1.35})
      for (int sign : {1, -1}) c.initial_points.push_back({cplx(x, 0), sign});
    c.t_span = {0, 20};
    c.analyses = {request(AnalysisKind::EnergyDrift)};
    add(c);
  }
  for (const char* name : {"fig4_ho_coherent", "fig5_ho_coherent"}) {
    ScenarioConfig c;
    c.name = name;
    c.state = HoCoherentSeries{2.1, 0.0, 4, false};
    c.initial_points = real_points({2.2, 2.3, 2.4, 2.5, 2.6, 2.7, 2.8, 2.9});
    c.t_span = {0, 2 * kPi};
    c.analyses = {request(AnalysisKind::EllipseFit), request(AnalysisKind::CongruenceClassical)};
    add(c);
  }
  {
    ScenarioConfig c;
    c.name = "ho_coherent_closed";
    c.field = FieldKind::HoCoherentClosed;
    c.state = HoCoherentClosed{2.1, 0.0};
    c.initial_points = real_points({0.5, 1.0, 1.5, 2.2, 2.3, 2.4, 2.5, 2.6, 2.7, 2.8, 2.9});
    c.t_span = {0, 2 * kPi};
    c.analyses = {request(AnalysisKind::EllipseFit), request(AnalysisKind::CongruenceClassical)};
    add(c);
  }
  {
    ScenarioConfig c;
    c.name = "dbb_contrast";
    c.field = FieldKind::Dbb;
    c.state = HoCoherentClosed{2.1, 0.0};
    c.initial_points = real_points({-2.0, -1.0, 0.0, 1.0, 2.0});
    c.t_span = {0, 2 * kPi};
    add(c);
  }
  for (double J : {0.04, 0.09, 0.16, 0.25, 0.36}) {
    ScenarioConfig c;
    c.name = "fig6_well_coherent_J" + two_digits(J);
    c.state = WellCoherent{J, 7};
    c.initial_points = real_points({1.6, 2.0, 2.4, 3.1});
    c.t_span = {0, 2 * kPi};
    add(c);
  }
  {
    ScenarioConfig c;
    c.name = "fig7_pt_coherent";
    c.state = PtCoherent{0.16, 1.5, 4};
    c.initial_points = real_points({0.2, 0.67, 0.7015});
    c.t_span = {0, 100};
    c.samples = 20001;
    AnalysisRequest period{AnalysisKind::Period, TimeSpan{50, 100}, std::nullopt, 5};
    AnalysisRequest spiral{AnalysisKind::CycleExtrema, std::nullopt, std::nullopt, 5};
    c.analyses = {period, spiral};
    add(c);
  }
  return out;
}

}  // namespace detail

inline const std::map<std::string, ScenarioConfig>& presets() {
  static const auto table = detail::build_presets();
  return table;
}

inline std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& [name, _] : presets()) names.push_back(name);
  return names;
}

inline ScenarioConfig preset(const std::string& name) {
  const auto& table = presets();
  auto it = table.find(name);
  if (it == table.end()) throw ConfigError({"preset: unknown name '" + name + "'"});
  return it->second;
}

// --- execution ---------------------------------------------------------------

struct TrajectoryReport {
  InitialPoint start;
  std::string csv_file;
  Trajectory trajectory;
  json analyses = json::object();
};

struct RunReport {
  ScenarioConfig config;
  std::vector<TrajectoryReport> trajectories;
  json scenario_analyses = json::object();
  /// Wall time of the batch; printed but kept out of report.json so that
  /// reports are reproducible byte for byte.
  double wall_seconds = 0.0;

  bool all_completed() const {
    return std::all_of(trajectories.begin(), trajectories.end(),
                       [](const TrajectoryReport& t) { return t.trajectory.completed(); });
  }
};

struct RunOptions {
  std::filesystem::path out_dir = ".";
  /// Overrides the configured outputs when set.
  std::optional<std::vector<OutputFormat>> formats = std::nullopt;
  std::optional<int> samples = std::nullopt;
  std::optional<double> tolerance = std::nullopt;
  /// Worker threads for the batch; 0 picks the hardware concurrency.
  unsigned workers = 0;
  /// Skip writing artifacts entirely (used by library callers and tests).
  bool write = true;
};

namespace detail {

inline json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline json nan_safe(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline Trajectory sample_analytic(const ScenarioConfig& cfg, const InitialPoint& ip) {
  const auto& sys = cfg.classical->system;
  const double E = cfg.classical->energy.E;
  Trajectory traj;
  traj.momenta.emplace();
  const auto grid = sample_grid(cfg.t_span, cfg.samples);
  const double m = cfg.params.mass, w = cfg.params.omega;
  if (std::holds_alternative<Harmonic>(sys.kind)) {
    const double A = ip.x0.real();
    // Validates 0 < E <= m w^2 A^2 / 2 before sampling.
    classical_ho_solution(A, {E}, cfg.params, cfg.t_span.t0);
    const double B = std::sqrt(std::max(0.0, A * A - 2 * E / (m * w * w)));
    for (double t : grid) {
      traj.times.push_back(t);
      traj.positions.push_back(classical_ho_solution(A, {E}, cfg.params, t));
      traj.momenta->push_back(m * w * cplx(-A * std::sin(w * t), B * std::cos(w * t)));
    }
  } else {
    const double speed = std::sqrt(2 * E / m) * (ip.momentum_sign < 0 ? -1 : 1);
    for (double t : grid) {
      traj.times.push_back(t);
      traj.positions.push_back(
          free_particle_solution({E}, ip.x0.real(), ip.x0.imag(), ip.momentum_sign, cfg.params, t));
      traj.momenta->push_back(cplx(m * speed));
    }
  }
  traj.stop = {StopKind::Completed, cfg.t_span.t1, traj.positions.back(),
               std::numeric_limits<double>::quiet_NaN(), 0.0, "analytic solution"};
  return traj;
}

inline Trajectory run_one(const ScenarioConfig& cfg, const InitialPoint& ip,
                          const std::optional<QuantumField>& quantum) {
  switch (cfg.field) {
    case FieldKind::QuantumLogDerivative:
      return integrate_field(*quantum, ip.x0, cfg.t_span, cfg.integrator, cfg.samples);
    case FieldKind::HoCoherentClosed:
    case FieldKind::Dbb: {
      double lambda = 0, kappa = 0;
      if (const auto* s = std::get_if<HoCoherentClosed>(&*cfg.state))
        lambda = s->lambda, kappa = s->kappa;
      if (const auto* s = std::get_if<HoCoherentSeries>(&*cfg.state))
        lambda = s->lambda, kappa = s->kappa;
      if (cfg.field == FieldKind::HoCoherentClosed)
        return integrate_field(HoCoherentField(cfg.params, lambda, kappa), ip.x0, cfg.t_span,
                               cfg.integrator, cfg.samples);
      return integrate_field(DbbField(cfg.params, lambda, kappa), ip.x0, cfg.t_span,
                             cfg.integrator, cfg.samples);
    }
    case FieldKind::ClassicalHamiltonian: {
      const auto& sys = cfg.classical->system;
      const cplx p0 = double(ip.momentum_sign) * initial_momentum(sys, ip.x0, cfg.classical->energy);
      return integrate_hamiltonian(sys, ip.x0, p0, cfg.t_span, cfg.integrator, cfg.samples);
    }
    case FieldKind::ClassicalAnalytic:
      return sample_analytic(cfg, ip);
  }
  throw std::logic_error("run_one: unhandled field kind");
}

inline json stop_json(const StopReason& s) {
  return {{"kind", to_string(s.kind)},
          {"time", s.time},
          {"location", complex_json(s.location)},
          {"psi_abs", nan_safe(s.psi_abs)},
          {"step", s.step},
          {"detail", s.detail}};
}

inline std::optional<double> state_field_period(const ScenarioConfig& cfg) {
  if (!cfg.state) return std::nullopt;
  const auto& s = *cfg.state;
  if (std::holds_alternative<HoCoherentSeries>(s) || std::holds_alternative<WellCoherent>(s) ||
      std::holds_alternative<PtCoherent>(s))
    return field_period(coherent_coefficients(cfg.params, s), cfg.params.omega);
  if (std::holds_alternative<HoCoherentClosed>(s)) return 2 * std::numbers::pi / cfg.params.omega;
  return std::nullopt;
}

inline json run_analysis(const ScenarioConfig& cfg, const AnalysisRequest& req,
                         const Trajectory& traj) {
  try {
    switch (req.kind) {
      case AnalysisKind::EllipseFit: {
        const auto fit = fit_ellipse(traj);
        return {{"A", fit.A},
                {"B", fit.B},
                {"signed_B", fit.signed_B()},
                {"A_minus_signed_B", fit.A - fit.signed_B()},
                {"center", complex_json(fit.center)},
                {"phase", fit.phase},
                {"residual", fit.residual},
                {"orientation", to_string(fit.orientation)}};
      }
      case AnalysisKind::Period: {
        const TimeSpan w = req.window.value_or(
            TimeSpan{0.5 * (cfg.t_span.t0 + cfg.t_span.t1), cfg.t_span.t1});
        const double end = std::min(w.t1, traj.times.back());
        const auto est = detect_period(traj, w.t0, end);
        return {{"window", {w.t0, end}},
                {"found", est.found},
                {"period", nan_safe(est.period)},
                {"recurrence_error", nan_safe(est.recurrence_error)},
                {"winding_period", nan_safe(est.winding_period)},
                {"diameter", est.diameter},
                {"orientation", to_string(est.orientation)}};
      }
      case AnalysisKind::AbsPositionDrift:
        return {{"drift", conserved_drift(traj, AbsPosition{})}};
      case AnalysisKind::EnergyDrift:
        return {{"drift", conserved_drift(traj, ComplexEnergy{cfg.classical->system})}};
      case AnalysisKind::CongruenceClassical: {
        Trajectory classical;
        std::string against;
        const bool ho_state = cfg.state && (std::holds_alternative<HoCoherentClosed>(*cfg.state) ||
                                            std::holds_alternative<HoCoherentSeries>(*cfg.state) ||
                                            std::holds_alternative<HoEigen>(*cfg.state));
        if (ho_state) {
          // Classical ellipse with the fitted semi-axes: E = m w^2 (A^2 - B^2) / 2.
          // When B > A the energy is negative and there is no real-amplitude
          // solution, so the same ellipse is sampled parametrically.
          const auto fit = fit_ellipse(traj);
          const double m_w2 = cfg.params.mass * cfg.params.omega * cfg.params.omega;
          const double E = 0.5 * m_w2 * (fit.A * fit.A - fit.B * fit.B);
          for (std::size_t i = 0; i < traj.size(); ++i) {
            const double t = traj.times[i];
            const double wt = cfg.params.omega * t;
            const cplx x = E > 0 ? classical_ho_solution(fit.A, {E}, cfg.params, t)
                                 : cplx(fit.A * std::cos(wt), fit.B * std::sin(wt));
            classical.times.push_back(t);
            classical.positions.push_back(fit.center + x);
          }
          against = "classical ellipse with fitted A, B";
        } else if (cfg.classical) {
          const auto& sys = cfg.classical->system;
          const cplx x0 = traj.positions.front();
          const cplx p0 = initial_momentum(sys, x0, cfg.classical->energy);
          classical = integrate_hamiltonian(sys, x0, p0, {traj.times.front(), traj.times.back()},
                                            cfg.integrator, static_cast<int>(traj.size()));
          against = "Hamiltonian run from the same x0";
        } else {
          return {{"error", "no classical counterpart configured"}};
        }
        return {{"metric", congruence_metric(traj, classical)}, {"against", against}};
      }
      case AnalysisKind::CycleExtrema: {
        const auto cycle = req.cycle ? req.cycle : state_field_period(cfg);
        if (!cycle) return {{"error", "no cycle length given and the state has no field period"}};
        const auto ext = cycle_extrema(traj, traj.times.front(), *cycle, req.cycles);
        bool decreasing = true;
        for (std::size_t k = 1; k < ext.size(); ++k) decreasing = decreasing && ext[k] < ext[k - 1];
        return {{"cycle", *cycle}, {"extrema", ext}, {"monotone_decreasing", decreasing}};
      }
    }
  } catch (const std::exception& e) {
    return {{"error", e.what()}};
  }
  return {{"error", "unknown analysis"}};
}

inline std::string point_label(const InitialPoint& ip, bool classical) {
  std::array<char, 96> buf{};
  if (ip.x0.imag() == 0.0)
    std::snprintf(buf.data(), buf.size(), "x0 = %.6g", ip.x0.real());
  else
    std::snprintf(buf.data(), buf.size(), "x0 = %.6g%+.6gi", ip.x0.real(), ip.x0.imag());
  std::string s = buf.data();
  if (classical) s += ip.momentum_sign < 0 ? ", p0 < 0 branch" : ", p0 > 0 branch";
  return s;
}

}  // namespace detail

/// The report as written to <name>.json (schema version 1).
inline json report_to_json(const RunReport& report) {
  json j;
  j["schema"] = 1;
  j["name"] = report.config.name;
  j["config"] = config_to_json(report.config);
  json trajs = json::array();
  std::size_t completed = 0;
  for (std::size_t i = 0; i < report.trajectories.size(); ++i) {
    const auto& t = report.trajectories[i];
    if (t.trajectory.completed()) ++completed;
    json diag = json::object();
    for (const auto& [k, v] : t.trajectory.diagnostics) diag[k] = detail::nan_safe(v);
    trajs.push_back({{"index", i},
                     {"x0", detail::complex_json(t.start.x0)},
                     {"momentum_sign", t.start.momentum_sign},
                     {"samples", t.trajectory.size()},
                     {"csv", t.csv_file},
                     {"stop", detail::stop_json(t.trajectory.stop)},
                     {"diagnostics", diag},
                     {"analyses", t.analyses}});
  }
  j["trajectories"] = trajs;
  j["scenario_analyses"] = report.scenario_analyses;
  j["summary"] = {{"trajectories", report.trajectories.size()},
                  {"completed", completed},
                  {"stopped_early", report.trajectories.size() - completed}};
  return j;
}

inline void emit_json(const RunReport& report, const std::filesystem::path& path) {
  write_artifacts_atomically({{path, report_to_json(report).dump(2) + "\n"}});
}

/// Integrates every initial point, runs the requested analyses and writes the
/// artifacts (all or none). Trajectories are computed concurrently; results,
/// analyses and files are ordered by initial point, so output is deterministic.
inline RunReport run_scenario(ScenarioConfig config, const RunOptions& opts = {}) {
  if (opts.samples) config.samples = *opts.samples;
  if (opts.tolerance) config.integrator.rel_tol = config.integrator.abs_tol = *opts.tolerance;
  if (opts.formats) config.outputs = *opts.formats;
  // Round-trip through the validator so overrides are checked too.
  config = parse_config(config_to_json(config));

  const auto start = std::chrono::steady_clock::now();
  RunReport report;
  report.config = config;

  std::optional<QuantumField> quantum;
  if (config.field == FieldKind::QuantumLogDerivative) quantum.emplace(config.params, *config.state);

  const std::size_t count = config.initial_points.size();
  std::vector<Trajectory> results(count);
  unsigned workers = opts.workers ? opts.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
  {
    // Static round-robin partition: worker w handles points w, w + W, ...
    std::vector<std::future<void>> jobs;
    for (unsigned w = 0; w < workers; ++w) {
      jobs.push_back(std::async(std::launch::async, [&, w] {
        for (std::size_t i = w; i < count; i += workers)
          results[i] = detail::run_one(config, config.initial_points[i], quantum);
      }));
    }
    for (auto& j : jobs) j.get();
  }

  const bool classical =
      config.field == FieldKind::ClassicalHamiltonian || config.field == FieldKind::ClassicalAnalytic;
  for (std::size_t i = 0; i < count; ++i) {
    TrajectoryReport tr;
    tr.start = config.initial_points[i];
    tr.trajectory = std::move(results[i]);
    tr.trajectory.meta["scenario"] = config.name;
    tr.trajectory.meta["index"] = std::to_string(i);
    tr.trajectory.meta["label"] = detail::point_label(tr.start, classical);
    char idx[16];
    std::snprintf(idx, sizeof idx, "%02zu", i);
    tr.csv_file = config.name + "_" + idx + ".csv";
    for (const auto& req : config.analyses)
      tr.analyses[to_string(req.kind)] = detail::run_analysis(config, req, tr.trajectory);
    report.trajectories.push_back(std::move(tr));
  }
  if (auto period = detail::state_field_period(config)) report.scenario_analyses["field_period"] = *period;
  if (config.state && (std::holds_alternative<WellCoherent>(*config.state) ||
                       std::holds_alternative<PtCoherent>(*config.state))) {
    report.scenario_analyses["normalization"] = coherent_coefficients(config.params, *config.state).norm;
  }

  if (opts.write) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(opts.out_dir, ec);
    if (ec) throw IoError("cannot create output directory: " + ec.message(), opts.out_dir.string());
    std::vector<std::pair<fs::path, std::string>> files;
    auto wants = [&](OutputFormat f) {
      return std::find(config.outputs.begin(), config.outputs.end(), f) != config.outputs.end();
    };
    if (wants(OutputFormat::Csv))
      for (const auto& t : report.trajectories)
        files.emplace_back(opts.out_dir / t.csv_file, render_csv(t.trajectory));
    if (wants(OutputFormat::Json))
      files.emplace_back(opts.out_dir / (config.name + ".json"), report_to_json(report).dump(2) + "\n");
    if (wants(OutputFormat::Svg)) {
      std::vector<SvgSeries> series;
      for (const auto& t : report.trajectories)
        series.push_back({&t.trajectory, t.trajectory.meta.at("label")});
      files.emplace_back(opts.out_dir / (config.name + ".svg"), render_svg(series, config.name));
    }
    write_artifacts_atomically(files);
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

inline ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config", path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("config: JSON syntax error: ") + e.what()});
  }
  return parse_config(j);
}

}  // namespace cqtraj
