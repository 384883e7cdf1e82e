#pragma once

// Config-driven commands. Each command validates its config (unknown keys are errors), runs,
// and returns a Result holding a summary document, optional JSON-lines records, an optional
// per-member table and the claims (bound vs empirical) it checked. Output depends only on the
// config and the seed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hardness/bounds.hpp"
#include "hardness/csq_sim.hpp"
#include "hardness/family.hpp"
#include "hardness/gd_sim.hpp"
#include "hardness/json_io.hpp"
#include "hardness/linear_train.hpp"
#include "hardness/pattern.hpp"
#include "hardness/variance.hpp"

namespace hardness::cli {

enum class Format { Json, Csv, Text };

inline Format format_by_name(std::string_view s) {
  if (s == "json")
    return Format::Json;
  if (s == "csv")
    return Format::Csv;
  if (s == "text")
    return Format::Text;
  throw ConfigError("unknown format '" + std::string(s) + "'");
}

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitScale = 3;
inline constexpr int kExitViolation = 4;

struct Claim {
  std::string name;
  double bound = 0.0;
  double empirical = 0.0;
  std::string relation; // ">=" or "<="
  double tolerance = 1e-9;
  bool satisfied = false;
};

/// empirical >= bound (or <=) up to tolerance * max(1, |bound|).
inline bool claim_holds(double bound, double empirical, std::string_view relation,
                        double tolerance) {
  const double slack = tolerance * std::max(1.0, std::abs(bound));
  if (relation == ">=")
    return empirical >= bound - slack;
  if (relation == "<=")
    return empirical <= bound + slack;
  throw ConfigError("claim relation must be '>=' or '<='");
}

inline Claim make_claim(std::string name, double bound, double empirical, std::string relation,
                        double tolerance = 1e-9) {
  Claim c{std::move(name), bound, empirical, std::move(relation), tolerance, false};
  c.satisfied = claim_holds(c.bound, c.empirical, c.relation, c.tolerance);
  return c;
}

inline json claim_to_json(const Claim& c) {
  return {{"name", c.name},           {"bound", c.bound},         {"empirical", c.empirical},
          {"relation", c.relation},   {"tolerance", c.tolerance}, {"satisfied", c.satisfied}};
}

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<json>> rows;
};

struct Artifact {
  std::string filename;
  std::string content;
};

struct Result {
  Result() = default;
  explicit Result(std::string name) : command(std::move(name)) {}

  std::string command;
  json summary = json::object();
  std::vector<json> lines;
  std::optional<Table> table;
  std::vector<Claim> claims;
  std::vector<Artifact> artifacts;

  int exit_code() const {
    for (const Claim& c : claims)
      if (!c.satisfied)
        return kExitViolation;
    return kExitOk;
  }
};

struct Context {
  json config = json::object();
  std::uint64_t seed = 0;
  std::filesystem::path base_dir = ".";
};

inline std::uint64_t config_hash(const json& config) { return fnv1a(config.dump()); }

namespace detail {

inline void stamp(Result& r, const Context& ctx) {
  json s = json::object();
  s["command"] = r.command;
  s["config_hash"] = hex64(config_hash(ctx.config));
  s["seed"] = ctx.seed;
  for (auto& [k, v] : r.summary.items())
    s[k] = v;
  json claims = json::array();
  for (const Claim& c : r.claims)
    claims.push_back(claim_to_json(c));
  s["claims"] = std::move(claims);
  r.summary = std::move(s);
}

inline std::uint64_t seed_or(const json& j, const Context& ctx, std::string_view where) {
  return get_or<std::uint64_t>(j, "seed", ctx.seed, where);
}

inline LabeledFamily load_pattern(const json& spec, const Context& ctx, PatternFamily* keep);

inline LabeledFamily load_family(const json& spec, const Context& ctx) {
  if (!spec.is_object())
    throw ConfigError("family: expected an object");
  const std::string kind = get_as<std::string>(spec, "kind", "family");
  if (kind == "parity") {
    require_keys(spec, {"kind", "n"}, "family");
    return build_parity_family(get_as<int>(spec, "n", "family"));
  }
  if (kind == "random") {
    require_keys(spec, {"kind", "n", "members", "seed"}, "family");
    return random_family(get_as<int>(spec, "n", "family"),
                         get_as<std::size_t>(spec, "members", "family"),
                         seed_or(spec, ctx, "family"));
  }
  if (kind == "manifest") {
    require_keys(spec, {"kind", "path"}, "family");
    const std::filesystem::path p = ctx.base_dir / get_as<std::string>(spec, "path", "family");
    return family_from_json(read_json_file(p.string()));
  }
  if (kind == "pattern")
    return load_pattern(spec, ctx, nullptr);
  throw ConfigError("family: unknown kind '" + kind + "'");
}

inline PatternFamilySpec pattern_spec(const json& spec, std::string_view where) {
  PatternFamilySpec ps{InnerFunction::mp(1), 8, std::nullopt};
  if (spec.contains("clauses") || spec.contains("width"))
    ps.inner = InnerFunction::and_or(get_as<int>(spec, "clauses", where),
                                     get_as<int>(spec, "width", where));
  else
    ps.inner = InnerFunction::mp(get_or<int>(spec, "m", 1, where));
  ps.N = get_or<int>(spec, "N", 8, where);
  if (spec.contains("mu")) {
    const json& mu = spec["mu"];
    if (mu.is_string()) {
      if (mu.get<std::string>() != "uniform")
        throw ConfigError(std::string(where) + ".mu: only 'uniform' or an array is accepted");
    } else {
      ps.mu = Distribution(ps.n(), get_as<std::vector<double>>(spec, "mu", where));
    }
  }
  return ps;
}

inline LabeledFamily load_pattern(const json& spec, const Context&, PatternFamily* keep) {
  require_keys(spec, {"kind", "m", "clauses", "width", "N", "mu"}, "family");
  PatternFamily p = build_pattern_family(pattern_spec(spec, "family"));
  LabeledFamily out = p.family;
  if (keep)
    *keep = std::move(p);
  return out;
}

struct VarChoice {
  double value = 0.0;
  std::string source;
};

/// "var": a number, "exact", "spectral" or "auto" (exact up to 16 support points).
inline VarChoice resolve_var(const json& cfg, const LabeledFamily& a) {
  const json v = cfg.contains("var") ? cfg["var"] : json("auto");
  if (v.is_number()) {
    const double value = v.get<double>();
    if (!(value > 0.0 && value <= 1.0))
      throw ParamError("var must lie in (0, 1]");
    return {value, "given"};
  }
  if (!v.is_string())
    throw ConfigError("var: expected a number or one of exact, spectral, auto");
  const std::string s = v.get<std::string>();
  if (s == "exact")
    return {variance_exact(a).value, "exact"};
  if (s == "spectral")
    return {variance_upper_spectral(a), "spectral"};
  if (s == "auto")
    return a.support_size() <= 16 ? VarChoice{variance_exact(a).value, "exact"}
                                  : VarChoice{variance_upper_spectral(a), "spectral"};
  throw ConfigError("var: unknown choice '" + s + "'");
}

inline Embedding load_embedding(const json& spec, const LabeledFamily& a, const Context& ctx) {
  const std::string kind = get_as<std::string>(spec, "kind", "embedding");
  if (kind == "coordinate") {
    require_keys(spec, {"kind", "bias"}, "embedding");
    return Embedding::coordinate(a.support(), get_or<bool>(spec, "bias", false, "embedding"));
  }
  require_keys(spec, {"kind", "N", "seed"}, "embedding");
  const std::size_t n = get_as<std::size_t>(spec, "N", "embedding");
  const std::uint64_t seed = seed_or(spec, ctx, "embedding");
  if (kind == "random_sign")
    return Embedding::random_sign(a.support_size(), n, seed);
  if (kind == "random_uniform")
    return Embedding::random_uniform(a.support_size(), n, seed);
  throw ConfigError("embedding: unknown kind '" + kind + "'");
}

/// Tables produced by one generator entry; most yield a single table.
inline std::vector<RealTable> generate_tables(const json& spec, const LabeledFamily& a,
                                              const Context& ctx, std::string_view where) {
  const std::string kind = get_as<std::string>(spec, "kind", where);
  const std::size_t nx = a.support_size();
  const auto& support = a.support();
  std::vector<RealTable> out;
  if (kind == "zero") {
    require_keys(spec, {"kind"}, where);
    out.emplace_back(nx, 0.0);
  } else if (kind == "constant") {
    require_keys(spec, {"kind", "value"}, where);
    out.emplace_back(nx, get_as<double>(spec, "value", where));
  } else if (kind == "coordinate") {
    require_keys(spec, {"kind", "i"}, where);
    const int i = get_as<int>(spec, "i", where);
    if (i < 0 || i >= a.dimension())
      throw DimensionError(std::string(where) + ": coordinate out of range");
    RealTable t(nx);
    for (std::size_t j = 0; j < nx; ++j)
      t[j] = support[j][i];
    out.push_back(std::move(t));
  } else if (kind == "coordinates") {
    require_keys(spec, {"kind"}, where);
    for (int i = 0; i < a.dimension(); ++i) {
      RealTable t(nx);
      for (std::size_t j = 0; j < nx; ++j)
        t[j] = support[j][i];
      out.push_back(std::move(t));
    }
  } else if (kind == "parity") {
    require_keys(spec, {"kind", "subset"}, where);
    const auto subset = get_as<std::vector<int>>(spec, "subset", where);
    const ParityDescriptor p = ParityDescriptor::from_subset(a.dimension(), subset);
    RealTable t(nx);
    for (std::size_t j = 0; j < nx; ++j)
      t[j] = parity_value(p.subset, support[j].bits);
    out.push_back(std::move(t));
  } else if (kind == "member") {
    require_keys(spec, {"kind", "index"}, where);
    const std::size_t i = get_as<std::size_t>(spec, "index", where);
    if (i >= a.size())
      throw ParamError(std::string(where) + ": member index out of range");
    out.push_back(a.member_table(i));
  } else if (kind == "random") {
    require_keys(spec, {"kind", "count", "seed"}, where);
    const std::size_t count = get_or<std::size_t>(spec, "count", 1, where);
    std::mt19937_64 rng(seed_or(spec, ctx, where));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (std::size_t c = 0; c < count; ++c) {
      RealTable t(nx);
      for (double& v : t)
        v = u(rng);
      out.push_back(std::move(t));
    }
  } else if (kind == "table") {
    require_keys(spec, {"kind", "values"}, where);
    RealTable t = get_as<RealTable>(spec, "values", where);
    if (t.size() != nx)
      throw DimensionError(std::string(where) + ": table length must match the support");
    out.push_back(std::move(t));
  } else {
    throw ConfigError(std::string(where) + ": unknown generator '" + kind + "'");
  }
  return out;
}

inline json scalar_or_null(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

} // namespace detail

inline Result cmd_variance(const Context& ctx) {
  const json& cfg = ctx.config;
  require_keys(cfg, {"family", "exact", "seed"}, "variance");
  const LabeledFamily a = detail::load_family(cfg.at("family"), ctx);
  bool want_exact = a.support_size() <= 16;
  if (cfg.contains("exact")) {
    const json& e = cfg["exact"];
    if (e.is_boolean())
      want_exact = e.get<bool>();
    else if (!(e.is_string() && e.get<std::string>() == "auto"))
      throw ConfigError("variance.exact: expected true, false or \"auto\"");
  }
  const VarianceReport rep = variance_report(a, want_exact);
  Result r{"variance"};
  r.summary = variance_report_to_json(rep);
  r.summary["support_size"] = a.support_size();
  r.summary["members"] = a.size();
  r.claims.push_back(make_claim("member lower <= spectral upper", rep.upper_spectral,
                                rep.lower_member, "<="));
  if (rep.exact) {
    r.claims.push_back(make_claim("exact >= member lower", rep.lower_member, *rep.exact, ">="));
    r.claims.push_back(make_claim("exact <= spectral upper", rep.upper_spectral, *rep.exact, "<="));
  }
  detail::stamp(r, ctx);
  return r;
}

inline Result cmd_bounds(const Context& ctx) {
  const json& cfg = ctx.config;
  require_keys(cfg, {"loss", "var", "family", "B", "N", "k", "R", "n", "delta", "tau", "sigma",
                     "T", "m", "seed"},
               "bounds");
  const LossSpec loss = LossSpec::by_name(get_or<std::string>(cfg, "loss", "hinge", "bounds"));
  double var = 0.0;
  std::string source = "given";
  if (cfg.contains("family")) {
    const detail::VarChoice v = detail::resolve_var(cfg, detail::load_family(cfg["family"], ctx));
    var = v.value;
    source = v.source;
  } else {
    var = get_as<double>(cfg, "var", "bounds");
  }
  Result r{"bounds"};
  json& s = r.summary;
  s["loss"] = loss.name;
  s["var"] = var;
  s["var_source"] = source;
  auto attempt = [&](const char* key, auto&& fn) {
    try {
      s[key] = fn();
    } catch (const LossContractError& e) {
      s[key] = {{"not_applicable", e.what()}};
    }
  };
  auto num = [&](const char* key) { return get_as<double>(cfg, key, "bounds"); };
  auto bv = [](BoundValue b) { return json{{"value", b.value}, {"vacuous", b.vacuous}}; };
  if (cfg.contains("B") && cfg.contains("N"))
    attempt("linear", [&] { return bv(linear_approx_bound(loss, num("B"), num("N"), var)); });
  if (cfg.contains("k") && cfg.contains("R") && cfg.contains("n")) {
    attempt("shallow_net", [&] {
      const ShallowNetBound b = shallow_net_bound(loss, num("k"), num("R"), num("n"), var);
      return json{{"theorem_form", bv(b.theorem_form)}, {"proof_form", bv(b.proof_form)}};
    });
    if (cfg.contains("delta"))
      attempt("discrete_net", [&] {
        return bv(discrete_net_bound(loss, num("k"), num("R"), num("n"), var, num("delta")));
      });
  }
  if (cfg.contains("tau")) {
    s["csq_queries"] = csq_query_bound(num("tau"), var);
    s["csq_loss_floor"] = csq_loss_floor(loss, num("tau"));
  }
  if (cfg.contains("B") && cfg.contains("N")) {
    std::optional<double> delta, sigma, steps;
    if (cfg.contains("delta"))
      delta = num("delta");
    if (cfg.contains("sigma"))
      sigma = num("sigma");
    if (cfg.contains("T"))
      steps = num("T");
    const GdThresholds t = gd_thresholds(num("B"), num("N"), var, delta, sigma, steps);
    s["gd"] = {{"min_delta", t.min_delta},
               {"max_steps", detail::scalar_or_null(t.max_steps)},
               {"loss_floor", t.loss_floor},
               {"max_eta", detail::scalar_or_null(t.max_eta)},
               {"markov_floor", detail::scalar_or_null(t.markov_floor)}};
  }
  if (cfg.contains("m")) {
    const int m = get_as<int>(cfg, "m", "bounds");
    s["and_or_variance"] = {{"value", cited_and_or_variance(m)},
                            {"cited", true},
                            {"scale", "N = 17^6 n with the cited distribution; not computed"}};
  }
  detail::stamp(r, ctx);
  return r;
}

inline Result cmd_train_linear(const Context& ctx) {
  const json& cfg = ctx.config;
  require_keys(cfg, {"family", "embedding", "loss", "step_size", "steps", "radius", "var", "seed"},
               "train-linear");
  const LabeledFamily a = detail::load_family(cfg.at("family"), ctx);
  const Embedding psi = detail::load_embedding(cfg.at("embedding"), a, ctx);
  const LossSpec loss = LossSpec::by_name(get_or<std::string>(cfg, "loss", "hinge", "train-linear"));
  TrainConfig tc;
  tc.step_size = get_or<double>(cfg, "step_size", tc.step_size, "train-linear");
  tc.steps = get_or<int>(cfg, "steps", tc.steps, "train-linear");
  tc.radius = get_or<double>(cfg, "radius", tc.radius, "train-linear");
  const detail::VarChoice var = detail::resolve_var(cfg, a);
  const FamilyProfile p = family_profile(a, psi, loss, tc, var.value);

  Result r{"train-linear"};
  json& s = r.summary;
  s["loss"] = loss.name;
  s["members"] = a.size();
  s["N"] = psi.dimension();
  s["B"] = tc.radius;
  s["var"] = var.value;
  s["var_source"] = var.source;
  s["bound"] = p.bound.value;
  s["bound_vacuous"] = p.bound.vacuous;
  s["mean_loss"] = p.mean;
  s["min_loss"] = p.min;
  s["mean_grad0_sq"] = p.mean_grad0_sq;
  s["mean_grad0_norm"] = p.mean_grad0_norm;
  const double energy = static_cast<double>(psi.dimension()) * var.value;
  r.claims.push_back(make_claim("linear approximation floor", p.bound.value, p.min, ">="));
  r.claims.push_back(make_claim("gradient energy at zero", energy, p.mean_grad0_sq, "<="));
  r.claims.push_back(
      make_claim("gradient norm at zero", std::sqrt(energy), p.mean_grad0_norm, "<="));
  Table t{{"member", "loss_achieved", "grad0_norm"}, {}};
  for (std::size_t i = 0; i < p.per_member.size(); ++i)
    t.rows.push_back({i, p.per_member[i].loss_achieved, p.per_member[i].grad0_norm});
  r.table = std::move(t);
  detail::stamp(r, ctx);
  return r;
}

inline Result cmd_csq(const Context& ctx) {
  const json& cfg = ctx.config;
  require_keys(cfg, {"family", "tau", "loss", "max_queries", "var", "learner", "keep_tables",
                     "seed"},
               "csq");
  const LabeledFamily a = detail::load_family(cfg.at("family"), ctx);
  const double tau = get_as<double>(cfg, "tau", "csq");
  const LossSpec loss = LossSpec::by_name(get_or<std::string>(cfg, "loss", "hinge", "csq"));
  const std::size_t max_queries =
      get_or<std::size_t>(cfg, "max_queries", std::numeric_limits<std::size_t>::max(), "csq");
  const bool keep = get_or<bool>(cfg, "keep_tables", false, "csq");
  const detail::VarChoice var = detail::resolve_var(cfg, a);

  const json& lj = cfg.at("learner");
  require_keys(lj, {"queries", "hypothesis"}, "csq.learner");
  std::vector<RealTable> queries;
  if (lj.contains("queries")) {
    if (!lj["queries"].is_array())
      throw ConfigError("csq.learner.queries: expected an array");
    for (const json& q : lj["queries"])
      for (RealTable& t : detail::generate_tables(q, a, ctx, "csq.learner.queries"))
        queries.push_back(std::move(t));
  }
  std::vector<RealTable> hyp = detail::generate_tables(
      lj.contains("hypothesis") ? lj["hypothesis"] : json{{"kind", "zero"}}, a, ctx,
      "csq.learner.hypothesis");
  if (hyp.size() != 1)
    throw ConfigError("csq.learner.hypothesis: must describe exactly one table");
  // Norm violations surface here, before any query is answered.
  for (const RealTable& q : queries)
    check_probe(q);

  ScriptedLearner learner(std::move(queries), std::move(hyp.front()));
  const LearnerReport rep = run_learner(learner, a, tau, loss, max_queries, var.value, keep);

  Result r{"csq"};
  std::size_t worst_correlated = 0;
  for (std::size_t q = 0; q < rep.transcript.size(); ++q) {
    const TranscriptEntry& e = rep.transcript[q];
    worst_correlated = std::max(worst_correlated, e.correlated);
    json line = {{"record", "query"},         {"index", q},
                 {"digest", hex64(e.digest)}, {"response", e.response},
                 {"correlated", e.correlated}, {"removed", e.removed},
                 {"survivors", e.survivors}};
    if (e.table)
      line["table"] = *e.table;
    r.lines.push_back(std::move(line));
  }
  json& s = r.summary;
  s["loss"] = loss.name;
  s["tau"] = tau;
  s["var"] = var.value;
  s["var_source"] = var.source;
  s["queries"] = rep.queries;
  s["query_bound"] = rep.query_bound;
  s["truncated"] = rep.truncated;
  s["survivors"] = rep.survivors;
  s["budget_exceeded"] = rep.budget_exceeded;
  const double cap = var.value / (tau * tau) * static_cast<double>(a.size());
  r.claims.push_back(make_claim("eliminations per query", cap,
                                static_cast<double>(worst_correlated), "<="));
  if (rep.final) {
    s["final"] = {{"worst_member", rep.final->worst_member},
                  {"correlation", rep.final->correlation},
                  {"loss", rep.final->loss},
                  {"clamped_loss", rep.final->clamped_loss},
                  {"floor", rep.final->floor}};
    r.claims.push_back(make_claim("correlation-query loss floor", rep.final->floor,
                                  rep.final->loss, ">="));
  } else {
    s["final"] = nullptr;
    // Exhausting the family is only a violation while the learner stayed under the bound.
    if (static_cast<double>(rep.queries) < rep.query_bound)
      r.claims.push_back(make_claim("survivor exists under the query bound", 1.0, 0.0, "<="));
  }
  detail::stamp(r, ctx);
  return r;
}

inline Result cmd_gd(const Context& ctx) {
  const json& cfg = ctx.config;
  require_keys(cfg, {"family", "model", "mode", "eta", "T", "delta", "sigma", "var", "members",
                     "seed"},
               "gd");
  const LabeledFamily a = detail::load_family(cfg.at("family"), ctx);
  const json& mj = cfg.at("model");
  const std::string kind = get_as<std::string>(mj, "kind", "gd.model");
  std::unique_ptr<HypothesisModel> model;
  if (kind == "linear") {
    require_keys(mj, {"kind", "embedding"}, "gd.model");
    model = std::make_unique<LinearModel>(
        detail::load_embedding(mj.contains("embedding") ? mj["embedding"]
                                                        : json{{"kind", "coordinate"}},
                               a, ctx));
  } else if (kind == "tanh") {
    require_keys(mj, {"kind", "embedding", "units", "output_l1", "init_scale", "seed"}, "gd.model");
    model = std::make_unique<TanhNetModel>(TanhNetModel::random(
        detail::load_embedding(mj.at("embedding"), a, ctx),
        get_or<std::size_t>(mj, "units", 4, "gd.model"),
        get_or<double>(mj, "output_l1", 0.5, "gd.model"),
        get_or<double>(mj, "init_scale", 0.1, "gd.model"), detail::seed_or(mj, ctx, "gd.model")));
  } else {
    throw ConfigError("gd.model: unknown kind '" + kind + "'");
  }

  const detail::VarChoice var = detail::resolve_var(cfg, a);
  const double B = model->gradient_bound();
  const double N = static_cast<double>(model->parameter_dimension());
  const GdThresholds base = gd_thresholds(B, N, var.value);

  GDRun run;
  run.mode = gd_mode_by_name(get_or<std::string>(cfg, "mode", "approx", "gd"));
  run.seed = ctx.seed;
  run.sigma = get_or<double>(cfg, "sigma", 0.0, "gd");
  // delta: a number, or {"min_multiple": c} for c times the smallest admissible Delta.
  if (cfg.contains("delta") && cfg["delta"].is_object()) {
    require_keys(cfg["delta"], {"min_multiple"}, "gd.delta");
    run.delta = get_as<double>(cfg["delta"], "min_multiple", "gd.delta") * base.min_delta;
  } else {
    run.delta = get_or<double>(cfg, "delta", base.min_delta, "gd");
  }
  const GdThresholds thr = gd_thresholds(B, N, var.value, run.delta);
  if (cfg.contains("T") && !(cfg["T"].is_string() && cfg["T"].get<std::string>() == "auto"))
    run.T = get_as<int>(cfg, "T", "gd");
  else
    run.T = noisy_step_count(*thr.max_steps);
  if (cfg.contains("eta") && !(cfg["eta"].is_string() && cfg["eta"].get<std::string>() == "auto"))
    run.eta = get_as<double>(cfg, "eta", "gd");
  else
    run.eta = run.sigma > 0.0 ? 1.0 / (2.0 * run.sigma * B * run.T) : 1.0;

  std::vector<std::size_t> ids;
  if (cfg.contains("members") && cfg["members"].is_array()) {
    ids = get_as<std::vector<std::size_t>>(cfg, "members", "gd");
    for (std::size_t i : ids)
      if (i >= a.size())
        throw ParamError("gd.members: member index out of range");
  } else {
    if (cfg.contains("members") && cfg["members"] != "all")
      throw ConfigError("gd.members: expected \"all\" or an index array");
    ids.resize(a.size());
    for (std::size_t i = 0; i < ids.size(); ++i)
      ids[i] = i;
  }

  const StuckFraction sf = family_stuck_fraction(a, *model, run.delta, var.value);
  struct Outcome {
    GdResult result;
    bool identity = true;
  };
  std::vector<Outcome> outcomes(ids.size());
  parallel_for(ids.size(), [&](std::size_t k) {
    Outcome& o = outcomes[k];
    o.result = run_gd(a.member(ids[k]), *model, run, ids[k]);
    if (run.mode == GdMode::Noisy && o.result.stuck_at_0)
      o.identity = noise_only_trajectory(o.result.trajectory.front(), run.eta, o.result.noise) ==
                   o.result.trajectory;
    o.result.trajectory.clear();
    o.result.steps.clear();
    o.result.noise.clear();
  });

  Result r{"gd"};
  double sum = 0.0;
  double stuck_min = std::numeric_limits<double>::infinity();
  std::size_t stuck = 0, identity_failures = 0;
  std::optional<std::string> warning;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const Outcome& o = outcomes[k];
    sum += o.result.final_loss;
    if (o.result.stuck_at_0) {
      ++stuck;
      stuck_min = std::min(stuck_min, o.result.final_loss);
      identity_failures += o.identity ? 0 : 1;
    }
    if (o.result.warning)
      warning = o.result.warning;
    json line = {{"record", "run"},
                 {"member_id", ids[k]},
                 {"mode", gd_mode_name(run.mode)},
                 {"stuck_at_0", o.result.stuck_at_0},
                 {"final_loss", o.result.final_loss}};
    if (run.mode == GdMode::Noisy && o.result.stuck_at_0)
      line["trajectory_identity"] = o.identity;
    r.lines.push_back(std::move(line));
  }
  const double mean = sum / static_cast<double>(ids.size());
  json& s = r.summary;
  s["mode"] = gd_mode_name(run.mode);
  s["B"] = B;
  s["N"] = N;
  s["var"] = var.value;
  s["var_source"] = var.source;
  s["delta"] = run.delta;
  s["min_delta"] = thr.min_delta;
  s["T"] = run.T;
  s["eta"] = run.eta;
  s["sigma"] = run.sigma;
  s["runs"] = ids.size();
  s["stuck_runs"] = stuck;
  s["stuck_fraction_at_w0"] = sf.fraction;
  s["markov_floor"] = sf.markov_floor;
  s["loss_floor"] = thr.loss_floor;
  s["mean_final_loss"] = mean;
  s["warning"] = warning ? json(*warning) : json(nullptr);
  r.claims.push_back(make_claim("gradient energy at w0", sf.energy_bound, sf.mean_grad_sq, "<="));
  r.claims.push_back(make_claim("stuck fraction", sf.markov_floor, sf.fraction, ">=", 1e-12));
  // The loss floors are only promised when Delta reaches the threshold and, for noisy runs,
  // when T and eta respect their caps; every member must be simulated for the average.
  const bool delta_ok = run.delta >= thr.min_delta * (1.0 - 1e-12);
  const bool noisy_ok = run.mode != GdMode::Noisy ||
                        (run.T <= *thr.max_steps + 1e-9 && !warning);
  if (delta_ok && noisy_ok && ids.size() == a.size() && run.mode != GdMode::Exact)
    r.claims.push_back(make_claim("mean final loss", thr.loss_floor, mean, ">="));
  if (run.mode == GdMode::Noisy && stuck > 0) {
    r.claims.push_back(make_claim("trajectory identity failures", 0.0,
                                  static_cast<double>(identity_failures), "<=", 0.0));
    if (noisy_ok)
      r.claims.push_back(make_claim("stuck member loss", 1.0 - std::sqrt(8.0 * var.value),
                                    stuck_min, ">="));
  }
  detail::stamp(r, ctx);
  return r;
}

inline std::string matrix_csv(const DenseMatrix& m) {
  std::ostringstream out;
  out << std::setprecision(17);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto row = m.row(i);
    for (std::size_t j = 0; j < row.size(); ++j)
      out << (j ? "," : "") << row[j];
    out << "\n";
  }
  return out.str();
}

inline Result cmd_pattern(const Context& ctx) {
  const json& cfg = ctx.config;
  require_keys(cfg, {"m", "clauses", "width", "N", "mu", "encode", "export_matrix", "samples",
                     "seed"},
               "pattern");
  const PatternFamily p = build_pattern_family(detail::pattern_spec(cfg, "pattern"));
  Result r{"pattern"};
  json& s = r.summary;
  s["N"] = p.N;
  s["n"] = p.n;
  s["members"] = p.family.size();
  s["support_size"] = p.family.support_size();
  double norm_err = 0.0;
  for (const Member& m : p.family.members()) {
    double total = 0.0;
    for (double d : m.D)
      total += d;
    norm_err = std::max(norm_err, std::abs(total - 1.0));
  }
  s["normalization_error"] = norm_err;
  const double gap = operator_identity_gap(p);
  s["operator_identity_gap"] = gap;
  r.claims.push_back(make_claim("member distributions sum to 1", 1e-12, norm_err, "<=", 0.0));
  r.claims.push_back(make_claim("operator identity gap", 1e-12, gap, "<=", 0.0));
  if (get_or<bool>(cfg, "encode", true, "pattern") && p.inner.shape) {
    const EncodedFamily e = encode_subcube(p);
    const std::size_t samples = get_or<std::size_t>(cfg, "samples", 1000, "pattern");
    const IdentityCheck ic = check_encoding_identity(p, e, samples, ctx.seed);
    const double before = variance_lower_members(p.family);
    const double after = variance_lower_members(e.family);
    s["encoded_dimension"] = e.encoding.dimension();
    s["identity_samples"] = ic.samples;
    s["identity_mismatches"] = ic.mismatches;
    s["lower_member_original"] = before;
    s["lower_member_encoded"] = after;
    r.claims.push_back(make_claim("encoding identity mismatches", 0.0,
                                  static_cast<double>(ic.mismatches), "<=", 0.0));
    r.claims.push_back(make_claim("variance transport gap", 1e-12, std::abs(before - after),
                                  "<=", 0.0));
  }
  if (p.inner.shape && p.inner.shape->second == 4 * p.inner.shape->first * p.inner.shape->first)
    s["cited_variance"] = {{"value", cited_and_or_variance(p.inner.shape->first)},
                           {"applies_at", "N = 17^6 n with the cited distribution"},
                           {"computed", false}};
  r.artifacts.push_back({"pattern_family.json", family_to_json(p.family).dump() + "\n"});
  if (get_or<bool>(cfg, "export_matrix", false, "pattern"))
    r.artifacts.push_back(
        {"pattern_matrix.csv", matrix_csv(pattern_matrix(p.N, p.n, p.inner.table.to_real()))});
  detail::stamp(r, ctx);
  return r;
}

/// Re-derives every claim's satisfied flag from bound, empirical value and relation.
inline Result cmd_report(const Context& ctx) {
  const json& cfg = ctx.config;
  require_keys(cfg, {"inputs", "claims", "seed"}, "report");
  Result r{"report"};
  Table t{{"source", "name", "bound", "empirical", "relation", "satisfied"}, {}};
  auto absorb = [&](const json& claims, const std::string& source) {
    if (!claims.is_array())
      throw ConfigError(source + ": 'claims' must be an array");
    for (const json& c : claims) {
      if (!c.is_object())
        throw ConfigError(source + ": claim must be an object");
      const std::string name = get_as<std::string>(c, "name", source);
      Claim claim = make_claim(name, get_as<double>(c, "bound", source),
                               get_as<double>(c, "empirical", source),
                               get_as<std::string>(c, "relation", source),
                               get_or<double>(c, "tolerance", 1e-9, source));
      t.rows.push_back({source, claim.name, claim.bound, claim.empirical, claim.relation,
                        claim.satisfied});
      r.claims.push_back(std::move(claim));
    }
  };
  if (cfg.contains("inputs")) {
    for (const std::string& rel : get_as<std::vector<std::string>>(cfg, "inputs", "report")) {
      const std::filesystem::path path = ctx.base_dir / rel;
      std::ifstream in(path);
      if (!in)
        throw ConfigError("report: cannot open '" + path.string() + "'");
      // JSON-lines results carry their summary on the last line.
      std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      json doc;
      try {
        doc = json::parse(text);
      } catch (const json::parse_error&) {
        std::istringstream lines(text);
        std::string line, last;
        while (std::getline(lines, line))
          if (!line.empty())
            last = line;
        try {
          doc = json::parse(last);
        } catch (const json::parse_error& e) {
          throw ConfigError("report: '" + path.string() + "' is not JSON: " + e.what());
        }
      }
      absorb(doc.contains("claims") ? doc["claims"] : json::array(), rel);
    }
  }
  if (cfg.contains("claims"))
    absorb(cfg["claims"], "inline");
  r.summary["rows"] = t.rows.size();
  r.table = std::move(t);
  detail::stamp(r, ctx);
  return r;
}

inline Result run_command(std::string_view name, const Context& ctx) {
  if (name == "variance")
    return cmd_variance(ctx);
  if (name == "bounds")
    return cmd_bounds(ctx);
  if (name == "train-linear")
    return cmd_train_linear(ctx);
  if (name == "csq")
    return cmd_csq(ctx);
  if (name == "gd")
    return cmd_gd(ctx);
  if (name == "pattern")
    return cmd_pattern(ctx);
  if (name == "report")
    return cmd_report(ctx);
  throw ConfigError("unknown command '" + std::string(name) + "'");
}

// ---- rendering ----

inline std::string cell_text(const json& v) {
  if (v.is_string())
    return v.get<std::string>();
  return v.dump();
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos)
    return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"')
      out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string render_csv(const Result& r) {
  std::ostringstream out;
  if (r.table) {
    for (std::size_t c = 0; c < r.table->columns.size(); ++c)
      out << (c ? "," : "") << csv_escape(r.table->columns[c]);
    out << "\n";
    for (const auto& row : r.table->rows) {
      for (std::size_t c = 0; c < row.size(); ++c)
        out << (c ? "," : "") << csv_escape(cell_text(row[c]));
      out << "\n";
    }
    return out.str();
  }
  out << "key,value\n";
  for (const auto& [k, v] : r.summary.items())
    if (k != "claims")
      out << csv_escape(k) << "," << csv_escape(cell_text(v)) << "\n";
  return out.str();
}

inline std::string aligned(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (width.size() <= c)
        width.push_back(0);
      width[c] = std::max(width[c], row[c].size());
    }
  std::ostringstream out;
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      line += row[c];
      if (c + 1 < row.size())
        line += std::string(width[c] - row[c].size() + 2, ' ');
    }
    out << line << "\n";
  }
  return out.str();
}

inline std::string render_text(const Result& r) {
  std::vector<std::vector<std::string>> kv;
  for (const auto& [k, v] : r.summary.items())
    if (k != "claims")
      kv.push_back({k, cell_text(v)});
  std::string out = aligned(kv);
  if (!r.claims.empty()) {
    std::vector<std::vector<std::string>> rows{{"claim", "bound", "relation", "empirical", "ok"}};
    for (const Claim& c : r.claims)
      rows.push_back({c.name, json(c.bound).dump(), c.relation, json(c.empirical).dump(),
                      c.satisfied ? "yes" : "NO"});
    out += "\n" + aligned(rows);
  }
  if (r.table && r.command == "report") {
    std::vector<std::vector<std::string>> rows{r.table->columns};
    for (const auto& row : r.table->rows) {
      std::vector<std::string> cells;
      for (const json& v : row)
        cells.push_back(cell_text(v));
      rows.push_back(std::move(cells));
    }
    out += "\n" + aligned(rows);
  }
  return out;
}

inline std::string render_json(const Result& r) {
  if (r.lines.empty())
    return r.summary.dump(2) + "\n";
  std::string out;
  for (const json& line : r.lines)
    out += line.dump() + "\n";
  json summary = r.summary;
  summary["record"] = "summary";
  return out + summary.dump() + "\n";
}

inline std::string render(const Result& r, Format f) {
  switch (f) {
  case Format::Json:
    return render_json(r);
  case Format::Csv:
    return render_csv(r);
  case Format::Text:
    return render_text(r);
  }
  return {};
}

inline std::string output_filename(const Result& r, Format f) {
  std::string base = r.command;
  std::replace(base.begin(), base.end(), '-', '_');
  switch (f) {
  case Format::Json:
    return base + (r.lines.empty() ? ".json" : ".jsonl");
  case Format::Csv:
    return base + ".csv";
  case Format::Text:
    return base + ".txt";
  }
  return base;
}

/// Writes the rendered result (and artifacts) into `out_dir`, or the result to stdout.
inline void emit(const Result& r, Format f, const std::optional<std::string>& out_dir,
                 std::ostream& stdout_stream) {
  const std::string body = render(r, f);
  if (!out_dir) {
    stdout_stream << body;
    return;
  }
  const std::filesystem::path dir(*out_dir);
  std::filesystem::create_directories(dir);
  auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out)
      throw ConfigError("cannot write '" + (dir / name).string() + "'");
    out << content;
  };
  write(output_filename(r, f), body);
  for (const Artifact& a : r.artifacts)
    write(a.filename, a.content);
}

/// Maps library errors onto the documented exit codes.
inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const DomainTooLarge*>(&e) || dynamic_cast<const InfeasibleScale*>(&e))
    return kExitScale;
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ParamError*>(&e) ||
      dynamic_cast<const NormError*>(&e) || dynamic_cast<const DimensionError*>(&e) ||
      dynamic_cast<const LossContractError*>(&e) || dynamic_cast<const BijectionError*>(&e) ||
      dynamic_cast<const EvalError*>(&e) || dynamic_cast<const json::exception*>(&e))
    return kExitConfig;
  return kExitFailure;
}

} // namespace hardness::cli
