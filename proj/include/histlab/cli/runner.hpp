#pragma once

// Executes the tasks of a loaded scenario and assembles the report document,
// its plain-text rendering and the trajectory CSV.

#include <chrono>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "histlab/cli/scenario_file.hpp"

namespace histlab::cli {

struct RunOptions {
  unsigned threads = 1;
};

struct RunResult {
  Json report;
  std::string summary;
  std::optional<std::string> trajectories_csv;
  bool passed = true;
};

namespace detail {

inline Json check(const std::string& name, double residual, double tolerance) {
  return Json{{"name", name},
              {"residual", residual},
              {"tolerance", tolerance},
              {"passed", residual <= tolerance}};
}

inline Json failed_check(const std::string& name, const std::string& reason) {
  return Json{{"name", name}, {"passed", false}, {"reason", reason}};
}

inline Json times_json(const Analyser& an) {
  Json out = Json::array();
  for (const auto& t : an.times()) out.push_back(t.label());
  return out;
}

class TaskContext {
 public:
  TaskContext(const Scenario& sc, const RunOptions& opt) : sc_(sc), opt_(opt) {}

  [[nodiscard]] const Scenario& scenario() const { return sc_; }
  [[nodiscard]] const RunOptions& options() const { return opt_; }
  [[nodiscard]] const Analyser& an() const { return sc_.an(); }

  const CommutantDecomposition& dec() {
    if (!dec_) dec_ = compute_commutant(an(), sc_.budget, sc_.tol);
    return *dec_;
  }

  /// ||φ̂ - P_pi φ̂||.
  double state_residual() {
    const CVector hat = sc_.state / sc_.state.norm();
    return (hat - dec().h_pi.project(hat)).norm();
  }

  /// Null when the state does not lie in H_pi.
  const PathMeasure* measure() {
    if (!measure_tried_) {
      measure_tried_ = true;
      if (state_residual() < sc_.tol.vec(an().dim())) {
        pm_ = make_path_measure(an(), dec(), sc_.state, sc_.tol);
      }
    }
    return pm_ ? &*pm_ : nullptr;
  }

  Json state_check() {
    return check("state_in_h_pi", state_residual(), sc_.tol.vec(an().dim()));
  }

  std::optional<std::string> csv;

 private:
  const Scenario& sc_;
  const RunOptions& opt_;
  std::optional<CommutantDecomposition> dec_;
  std::optional<PathMeasure> pm_;
  bool measure_tried_ = false;
};

inline Json task_commutant(TaskContext& ctx) {
  const Analyser& an = ctx.an();
  const CommutantDecomposition& dec = ctx.dec();
  const HistorySpace& sp = dec.space;
  Json out{{"dim_h_pi", dec.h_pi.dim()},
           {"dim_n", dec.n_space.dim()},
           {"nodes_visited", dec.nodes_visited},
           {"nonzero_histories", dec.joint_table.size()}};
  Json ranks = Json::array();
  for (const auto& [h, s] : dec.joint_table) ranks.push_back({{"history", sp.describe(h)}, {"rank", s.dim()}});
  out["joint_ranks"] = ranks;
  Json checks = Json::array();
  const double accounting =
      std::abs(static_cast<double>(dec.h_pi.dim() + dec.n_space.dim() - an.dim()));
  checks.push_back(check("dimension_accounting", accounting, 0.0));
  if (an.num_times() <= kMaxWitnessTimes) {
    const HpiReport hr = check_hpi_characterizations(an, dec, 5, ctx.scenario().sample.seed,
                                                     ctx.scenario().tol);
    checks.push_back(check("ordered_products", hr.max_ordered_residual, ctx.scenario().tol.vec(an.dim())));
    checks.push_back(check("permuted_products", hr.max_permutation_residual, ctx.scenario().tol.vec(an.dim())));
    checks.push_back(check("h_pi_equals_n_complement", hr.complement_distance, ctx.scenario().tol.op(an.dim())));
    out["products_checked"] = hr.products_checked;
  } else {
    out["characterization_note"] = "skipped: more than " + std::to_string(kMaxWitnessTimes) + " times";
  }
  out["checks"] = checks;
  return out;
}

inline Json task_probabilities(TaskContext& ctx) {
  const Analyser& an = ctx.an();
  const Tolerances& tol = ctx.scenario().tol;
  Json out;
  Json checks = Json::array();
  checks.push_back(ctx.state_check());
  const PathMeasure* pm = ctx.measure();
  if (!pm) {
    out["checks"] = checks;
    return out;
  }
  const HistorySpace& sp = pm->space();
  Json hist = Json::array();
  double born = 0.0, range = 0.0;
  for (std::size_t h = 0; h < sp.size(); ++h) {
    const auto ls = sp.decode(h);
    CVector v = pm->state;
    for (std::size_t ti = 0; ti < ls.size(); ++ti) v = an.cell(ti, ls[ti]).matrix() * v;
    const double product = v.squaredNorm();
    const double p = pm->probabilities[h];
    born = std::max(born, std::abs(p - product));
    range = std::max({range, -p, p - 1.0});
    hist.push_back({{"history", sp.describe(h)}, {"probability", p}, {"product_form", product}});
  }
  out["histories"] = hist;
  Json events = Json::array();
  double cross = 0.0;
  for (const auto& [name, ev] : ctx.scenario().events) {
    double sum = 0.0;
    for (std::size_t h : ev.histories()) sum += pm->probabilities[h];
    const double direct = (event_projector(pm->decomposition, ev).matrix() * pm->state).squaredNorm();
    cross = std::max(cross, std::abs(sum - direct));
    range = std::max({range, -sum, sum - 1.0});
    events.push_back({{"name", name}, {"probability", sum}});
  }
  out["events"] = events;
  out["total_mass"] = pm->total();
  checks.push_back(check("total_mass", std::abs(pm->total() - 1.0), tol.probability()));
  checks.push_back(check("born_meet_vs_product", born, tol.probability()));
  checks.push_back(check("event_sum_vs_projector", cross, tol.probability()));
  checks.push_back(check("probability_range", std::max(0.0, range), tol.probability()));
  out["checks"] = checks;
  return out;
}

inline const Event& named_event(const Scenario& sc, const std::string& name) {
  for (const auto& [n, e] : sc.events) {
    if (n == name) return e;
  }
  throw InputError("unknown event '" + name + "'");
}

inline Json task_conditional(TaskContext& ctx) {
  const Scenario& sc = ctx.scenario();
  Json out;
  Json checks = Json::array();
  const PathMeasure* pm = ctx.measure();
  if (!pm) {
    checks.push_back(ctx.state_check());
    out["checks"] = checks;
    return out;
  }
  std::vector<std::pair<std::string, std::string>> pairs = sc.conditionals;
  if (pairs.empty()) {
    for (const auto& [a, ea] : sc.events) {
      for (const auto& [b, eb] : sc.events) {
        if (a != b) pairs.emplace_back(a, b);
      }
    }
  }
  Json table = Json::array();
  double worst = 0.0;
  std::size_t null_given = 0;
  for (const auto& [a, b] : pairs) {
    const Event& ea = named_event(sc, a);
    const Event& eb = named_event(sc, b);
    double pa = 0.0, pab = 0.0;
    for (std::size_t h : ea.histories()) {
      pa += pm->probabilities[h];
      if (eb.contains(h)) pab += pm->probabilities[h];
    }
    if (pa <= sc.tol.probability()) {
      ++null_given;
      continue;
    }
    const CVector projected = event_projector(pm->decomposition, ea).matrix() * pm->state;
    const PathMeasure fresh = make_path_measure(ctx.an(), pm->decomposition, projected, sc.tol);
    double direct = 0.0;
    for (std::size_t h : eb.histories()) direct += fresh.probabilities[h];
    const double residual = std::abs(pab / pa - direct);
    worst = std::max(worst, residual);
    table.push_back({{"given", a}, {"event", b}, {"probability", pab / pa}, {"residual", residual}});
  }
  out["table"] = table;
  out["null_conditions_skipped"] = null_given;
  checks.push_back(check("conditional_formula", worst, sc.tol.probability()));
  out["checks"] = checks;
  return out;
}

inline Json task_observables(TaskContext& ctx) {
  const Scenario& sc = ctx.scenario();
  const Analyser& an = ctx.an();
  const CommutantDecomposition& dec = ctx.dec();
  const PathMeasure* pm = ctx.measure();
  Json out;
  Json checks = Json::array();
  std::vector<Observable> qs;
  Json list = Json::array();
  double identity = 0.0, herm = 0.0;
  for (const auto& spec : sc.observables) {
    qs.push_back(observable(an, dec, spec.values));
    herm = std::max(herm, hermitian_defect(qs.back().op));
    Json entry{{"name", spec.name}};
    if (pm) {
      const double e = expectation(qs.back(), pm->state);
      const double i = integral(qs.back(), *pm);
      identity = std::max(identity, std::abs(e - i));
      entry["expectation"] = e;
      entry["integral"] = i;
    }
    list.push_back(entry);
  }
  out["observables"] = list;
  double comm = 0.0;
  Json comms = Json::array();
  for (std::size_t i = 0; i < qs.size(); ++i) {
    for (std::size_t j = i + 1; j < qs.size(); ++j) {
      const double c = restricted_commutator(qs[i], qs[j], dec);
      comm = std::max(comm, c);
      comms.push_back({{"f", sc.observables[i].name}, {"g", sc.observables[j].name}, {"norm", c}});
    }
  }
  out["restricted_commutators"] = comms;
  if (pm) {
    checks.push_back(check("expectation_identity", identity, sc.tol.probability()));
  } else {
    checks.push_back(ctx.state_check());
  }
  checks.push_back(check("hermitian", herm, sc.tol.op(an.dim())));
  checks.push_back(check("restricted_commutator", comm, sc.tol.op(an.dim())));
  out["checks"] = checks;
  return out;
}

inline Json sample_json(const SampleReport& rep) {
  Json freqs = Json::array();
  for (const auto& f : rep.event_frequencies) freqs.push_back({{"name", f.name}, {"frequency", f.frequency}});
  Json corr = Json::array();
  for (const auto& c : rep.record_correlation) {
    corr.push_back({{"s", c.s.label()}, {"t", c.t.label()}, {"agreement", c.frequency}});
  }
  return Json{{"paths", rep.n_paths},
              {"rng_seed", rep.rng_seed},
              {"event_frequencies", freqs},
              {"record_correlation", corr}};
}

inline Json task_sample(TaskContext& ctx) {
  const Scenario& sc = ctx.scenario();
  const Analyser& an = ctx.an();
  const SampleSpec& spec = sc.sample;
  Json out{{"n", spec.n}, {"seed", spec.seed}, {"sampler", spec.sampler}};
  Json checks = Json::array();
  std::vector<Trajectory> for_csv;
  if (spec.sampler != "independent") {
    const PathMeasure* pm = ctx.measure();
    if (!pm) {
      checks.push_back(ctx.state_check());
    } else {
      const auto trajs = sample_exact(*pm, spec.n, spec.seed, ctx.options().threads, sc.tol);
      std::size_t off_support = 0;
      for (const auto& tr : trajs) {
        if (!(pm->probabilities[pm->space().encode(tr.labels)] > 0.0)) ++off_support;
      }
      out["exact"] = sample_json(record_statistics(an, trajs, spec.pairs, sc.events, spec.seed));
      checks.push_back(check("exact_paths_on_support", static_cast<double>(off_support), 0.0));
      for_csv = trajs;
    }
  }
  if (spec.sampler != "exact") {
    const auto trajs = sample_independent(an, sc.state, spec.n, spec.seed, ctx.options().threads);
    out["independent"] = sample_json(record_statistics(an, trajs, spec.pairs, sc.events, spec.seed));
    if (for_csv.empty()) for_csv = trajs;
  }
  if (!for_csv.empty()) {
    if (spec.points) {
      for_csv = to_configuration(for_csv, an, *spec.points);
      out["region_note"] = spec.points->region_note;
    }
    std::ostringstream os;
    write_trajectory_csv(os, an, for_csv);
    ctx.csv = os.str();
  }
  out["checks"] = checks;
  return out;
}

inline Json task_defect(TaskContext& ctx) {
  const Scenario& sc = ctx.scenario();
  const Analyser& an = ctx.an();
  const DefectReport rep = defect_report(an, sc.tol);
  Json entries = Json::array();
  double excess = 0.0, worst_add = 0.0;
  for (const auto& e : rep.defects) {
    const double add = additivity_residual(an, e.s, e.t, e.label, sc.state);
    worst_add = std::max(worst_add, add);
    excess = std::max(excess, add - 2.0 * e.norm);
    entries.push_back({{"s", e.s.label()}, {"t", e.t.label()}, {"label", e.label},
                       {"defect", e.norm}, {"additivity_residual", add}});
  }
  Json out{{"defects", entries},
           {"max_defect", rep.max_defect},
           {"max_commutator", rep.max_commutator},
           {"max_additivity_residual", worst_add},
           {"commuting", rep.commuting},
           {"commuting_tolerance", rep.tolerance}};
  Json checks = Json::array();
  checks.push_back(check("defect_norm_bound", std::max(0.0, rep.max_defect - 2.0), sc.tol.op(an.dim())));
  checks.push_back(check("additivity_within_twice_defect", std::max(0.0, excess), sc.tol.probability()));
  out["checks"] = checks;
  return out;
}

inline Json task_refine(TaskContext& ctx) {
  const Scenario& sc = ctx.scenario();
  const RefinementMap& rm = *sc.refinement;
  const CommutantDecomposition& pd = ctx.dec();
  const CommutantDecomposition cd = compute_commutant(rm.child, sc.budget, sc.tol);
  std::vector<Event> events;
  for (const auto& [n, e] : sc.events) events.push_back(e);
  const RefinementReport rep = check_refinement_theorem(rm, pd, cd, events, sc.tol);
  Json list = Json::array();
  for (std::size_t i = 0; i < rep.events.size(); ++i) {
    const auto& r = rep.events[i];
    list.push_back({{"name", sc.events[i].first},
                    {"child_histories", refine_event(rm, events[i]).child_event.count()},
                    {"operator_residual", r.operator_residual},
                    {"commutation_residual", r.commutation_residual},
                    {"subspace_residual", r.subspace_residual}});
  }
  const Index d = rm.parent.dim();
  Json out{{"child_times", times_json(rm.child)},
           {"child_history_count", cd.space.size()},
           {"child_dim_h_pi", cd.h_pi.dim()},
           {"h_pi_containment", rep.hpi_containment},
           {"events", list}};
  Json checks = Json::array();
  checks.push_back(check("refinement_formula", rep.max_residual, sc.tol.op(d)));
  const CVector hat = sc.state / sc.state.norm();
  if ((hat - cd.h_pi.project(hat)).norm() < sc.tol.vec(d)) {
    const PathMeasure pp = make_path_measure(rm.parent, pd, sc.state, sc.tol);
    const PathMeasure cp = make_path_measure(rm.child, cd, sc.state, sc.tol);
    double worst = 0.0;
    for (const auto& e : events) {
      const Event lifted = refine_event(rm, e).child_event;
      double a = 0.0, b = 0.0;
      for (std::size_t h : e.histories()) a += pp.probabilities[h];
      for (std::size_t h : lifted.histories()) b += cp.probabilities[h];
      worst = std::max(worst, std::abs(a - b));
    }
    checks.push_back(check("probability_preserved", worst, sc.tol.probability()));
  } else {
    out["probability_note"] = "state outside the child H_pi; preservation not applicable";
  }
  out["checks"] = checks;
  return out;
}

inline Json task_logic(TaskContext& ctx) {
  Json out;
  Json checks = Json::array();
  const PathMeasure* pm = ctx.measure();
  if (!pm) {
    checks.push_back(ctx.state_check());
    out["checks"] = checks;
    return out;
  }
  std::vector<Event> events;
  for (const auto& [n, e] : ctx.scenario().events) events.push_back(e);
  constexpr std::size_t kSingletonLimit = 256;
  if (pm->space().size() <= kSingletonLimit) {
    for (std::size_t h = 0; h < pm->space().size(); ++h) {
      const std::vector<std::size_t> one{h};
      events.push_back(Event::from_histories(pm->space(), one));
    }
  }
  const SigmaIdealReport rep = sigma_ideal_checks(*pm, events, ctx.scenario().tol);
  out["events_tested"] = events.size();
  out["checks_run"] = rep.checks;
  out["null_events"] = rep.null_events;
  out["violations"] = rep.violations;
  checks.push_back(check("null_events_form_an_ideal", static_cast<double>(rep.violations), 0.0));
  out["checks"] = checks;
  return out;
}

inline void render_value(std::ostringstream& os, const std::string& key, const Json& v) {
  if (v.is_primitive()) os << "  " << key << ": " << v.dump() << '\n';
}

}  // namespace detail

/// Plain-text rendering of a report: scalar fields and checks of each task.
inline std::string render_summary(const Json& report) {
  std::ostringstream os;
  os << "scenario " << report.at("name").get<std::string>() << ": dimension "
     << report.at("dimension") << ", times " << report.at("times").dump() << ", "
     << report.at("history_count") << " histories\n";
  for (const auto& [task, body] : report.at("tasks").items()) {
    os << task << ": " << (body.at("passed").get<bool>() ? "PASS" : "FAIL") << '\n';
    for (const auto& [k, v] : body.items()) {
      if (k != "passed" && k != "checks") detail::render_value(os, k, v);
    }
    for (const auto& c : body.at("checks")) {
      os << "  [" << (c.at("passed").get<bool>() ? "ok" : "FAILED") << "] "
         << c.at("name").get<std::string>();
      if (c.contains("residual")) {
        os << " residual " << c.at("residual").dump() << " <= " << c.at("tolerance").dump();
      }
      if (c.contains("reason")) os << " (" << c.at("reason").get<std::string>() << ")";
      os << '\n';
    }
  }
  os << "overall: " << (report.at("passed").get<bool>() ? "PASS" : "FAIL") << '\n';
  return os.str();
}

inline RunResult run_scenario(const Scenario& sc, const RunOptions& opt = {}) {
  using Clock = std::chrono::steady_clock;
  detail::TaskContext ctx(sc, opt);
  const Analyser& an = sc.an();
  const Tolerances& tol = sc.tol;
  Json report{{"name", sc.name},
              {"scenario", sc.document},
              {"dimension", an.dim()},
              {"times", detail::times_json(an)},
              {"history_count", HistorySpace(an).size()},
              {"tolerances",
               {{"op", tol.op(an.dim())},
                {"vec", tol.vec(an.dim())},
                {"prob", tol.probability()},
                {"meet", tol.meet}}}};
  Json tasks = Json::object();
  bool all = true;
  for (const auto& name : sc.tasks) {
    const auto start = Clock::now();
    Json body;
    if (name == "commutant") body = detail::task_commutant(ctx);
    else if (name == "probabilities") body = detail::task_probabilities(ctx);
    else if (name == "conditional") body = detail::task_conditional(ctx);
    else if (name == "observables") body = detail::task_observables(ctx);
    else if (name == "sample") body = detail::task_sample(ctx);
    else if (name == "defect") body = detail::task_defect(ctx);
    else if (name == "refine") body = detail::task_refine(ctx);
    else if (name == "logic") body = detail::task_logic(ctx);
    bool ok = true;
    for (const auto& c : body.at("checks")) ok = ok && c.at("passed").get<bool>();
    body["passed"] = ok;
    body["wall_ms"] = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    all = all && ok;
    tasks[name] = std::move(body);
  }
  report["tasks"] = std::move(tasks);
  report["passed"] = all;
  RunResult out{report, render_summary(report), std::move(ctx.csv), all};
  return out;
}

}  // namespace histlab::cli
