#pragma once

// JSON scenario files: strict schema, field-path diagnostics, and conversion
// into analysers, states, events and task lists.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "histlab/histlab.hpp"

namespace histlab::cli {

using Json = nlohmann::json;

/// Malformed scenario input; maps to exit code 1.
class InputError : public Error {
 public:
  using Error::Error;
};

inline const std::vector<std::string>& known_tasks() {
  static const std::vector<std::string> tasks{"commutant", "probabilities", "conditional",
                                              "observables", "sample", "defect",
                                              "refine", "logic"};
  return tasks;
}

struct SampleSpec {
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  std::string sampler = "both";  // exact | independent | both
  std::vector<std::pair<Time, Time>> pairs;
  std::optional<ConfigMap> points;
};

struct ObservableSpec {
  std::string name;
  std::vector<double> values;  // by history index
};

struct Scenario {
  Json document;
  std::string name;
  std::optional<Analyser> analyser;
  CVector state;
  CMatrix hamiltonian;
  std::vector<std::pair<std::string, Event>> events;
  std::vector<std::string> tasks;
  SampleSpec sample;
  std::optional<RefinementMap> refinement;
  std::vector<ObservableSpec> observables;
  std::vector<std::pair<std::string, std::string>> conditionals;
  Tolerances tol;
  std::size_t budget = kDefaultHistoryBudget;

  [[nodiscard]] const Analyser& an() const { return *analyser; }
};

namespace detail {

[[noreturn]] inline void fail(const std::string& path, const std::string& msg) {
  throw InputError((path.empty() ? std::string("scenario") : path) + ": " + msg);
}

inline std::string sub(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}
inline std::string sub(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

inline void only_keys(const Json& j, const std::string& path, std::set<std::string> allowed) {
  if (!j.is_object()) fail(path, "expected an object");
  for (const auto& [k, v] : j.items()) {
    if (!allowed.contains(k)) fail(sub(path, k), "unknown key");
  }
}

inline const Json& need(const Json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key)) fail(sub(path, key), "missing required field");
  return j.at(key);
}

inline double number(const Json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

inline std::uint64_t unsigned_int(const Json& j, const std::string& path) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
    fail(path, "expected a non-negative integer");
  }
  return j.get<std::uint64_t>();
}

inline std::string text(const Json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

inline const Json& array(const Json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array");
  return j;
}

inline Complex complex_number(const Json& j, const std::string& path) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    return {j[0].get<double>(), j[1].get<double>()};
  }
  fail(path, "expected a number or an [re, im] pair");
}

inline std::vector<Index> indices(const Json& j, const std::string& path, Index d) {
  std::vector<Index> out;
  for (std::size_t i = 0; i < array(j, path).size(); ++i) {
    const auto v = unsigned_int(j[i], sub(path, i));
    if (static_cast<Index>(v) >= d) fail(sub(path, i), "index out of range for dimension");
    out.push_back(static_cast<Index>(v));
  }
  if (out.empty()) fail(path, "empty index set");
  return out;
}

inline std::string overlap_message(const std::string& what, const Time& t) {
  const std::string key = "partition cells overlap";
  if (what.rfind(key, 0) == 0) return key + " at time " + t.label() + what.substr(key.size());
  return what + " at time " + t.label();
}

inline Partition cell_partition(const Json& cells, const std::string& path, Index d,
                                const Time& t, const Tolerances& tol) {
  std::vector<Projector> ps;
  std::vector<std::string> labels;
  for (std::size_t c = 0; c < array(cells, path).size(); ++c) {
    const std::string cp = sub(path, c);
    only_keys(cells[c], cp, {"label", "indices"});
    labels.push_back(text(need(cells[c], "label", cp), sub(cp, "label")));
    const auto idx = indices(need(cells[c], "indices", cp), sub(cp, "indices"), d);
    ps.push_back(Projector::coordinates(d, idx));
  }
  try {
    return validate_partition(std::move(ps), std::move(labels), tol);
  } catch (const ValidationError& e) {
    throw InputError(overlap_message(e.what(), t));
  }
}

inline Tolerances tolerances(const Json& j, const std::string& path) {
  only_keys(j, path, {"op", "vec", "prob", "meet", "rank", "global"});
  Tolerances t;
  auto positive = [&](const char* key) {
    const double v = number(j.at(key), sub(path, key));
    if (!(v > 0.0)) fail(sub(path, key), "must be positive");
    return v;
  };
  if (j.contains("op")) t.op_scale = positive("op");
  if (j.contains("vec")) t.vec_scale = positive("vec");
  if (j.contains("prob")) t.prob = positive("prob");
  if (j.contains("meet")) t.meet = positive("meet");
  if (j.contains("rank")) t.rank = positive("rank");
  if (j.contains("global")) t.global = positive("global");
  return t;
}

inline CMatrix hamiltonian(const Json& j, const std::string& path, Index d) {
  only_keys(j, path, {"kind", "data"});
  const std::string kind = text(need(j, "kind", path), sub(path, "kind"));
  if (kind == "zero") {
    if (j.contains("data")) fail(sub(path, "data"), "not allowed for kind 'zero'");
    return CMatrix::Zero(d, d);
  }
  if (kind == "dense") {
    const std::string dp = sub(path, "data");
    const Json& rows = array(need(j, "data", path), dp);
    if (static_cast<Index>(rows.size()) != d) fail(dp, "expected " + std::to_string(d) + " rows");
    CMatrix h(d, d);
    for (Index r = 0; r < d; ++r) {
      const std::string rp = sub(dp, static_cast<std::size_t>(r));
      const Json& row = array(rows[static_cast<std::size_t>(r)], rp);
      if (static_cast<Index>(row.size()) != d) fail(rp, "expected " + std::to_string(d) + " entries");
      for (Index c = 0; c < d; ++c) {
        h(r, c) = complex_number(row[static_cast<std::size_t>(c)], sub(rp, static_cast<std::size_t>(c)));
      }
    }
    if (hermitian_defect(h) > 1e-12 * std::max(1.0, h.norm())) fail(dp, "matrix is not Hermitian");
    return 0.5 * (h + h.adjoint());
  }
  if (kind == "laplacian") {
    // Nearest-neighbour chain 2I - S - S†, periodic unless told otherwise.
    bool periodic = true;
    double scale = 1.0;
    if (j.contains("data")) {
      const std::string dp = sub(path, "data");
      only_keys(j.at("data"), dp, {"periodic", "scale"});
      if (j.at("data").contains("periodic")) {
        if (!j.at("data").at("periodic").is_boolean()) fail(sub(dp, "periodic"), "expected a boolean");
        periodic = j.at("data").at("periodic").get<bool>();
      }
      if (j.at("data").contains("scale")) scale = number(j.at("data").at("scale"), sub(dp, "scale"));
    }
    CMatrix h = CMatrix::Zero(d, d);
    for (Index i = 0; i < d; ++i) {
      h(i, i) += 2.0;
      if (i + 1 < d || periodic) {
        if (d == 1) continue;
        const Index k = (i + 1) % d;
        h(i, k) -= 1.0;
        h(k, i) -= 1.0;
      }
    }
    return scale * h;
  }
  fail(sub(path, "kind"), "expected one of zero, dense, laplacian");
}

inline Time time_value(const Json& j, const std::string& path) { return Time(number(j, path)); }

inline std::size_t history_budget_check(const Analyser& an, std::size_t budget) {
  std::size_t size = 1;
  for (const auto& p : an.partitions()) {
    if (p.size() > budget / size) {
      throw BudgetExceeded("history space exceeds the budget of " + std::to_string(budget) +
                           " histories");
    }
    size *= p.size();
  }
  return size;
}

inline std::vector<std::pair<std::string, Event>> default_events(const Analyser& an) {
  const HistorySpace space(an);
  std::vector<std::pair<std::string, Event>> out;
  for (std::size_t ti = 0; ti < an.num_times(); ++ti) {
    for (const auto& l : an.partition(ti).labels()) {
      out.emplace_back("X_" + an.time(ti).label() + "=" + l, Event::equals(space, an.time(ti), l));
    }
  }
  return out;
}

inline std::vector<ObservableSpec> default_observables(const Analyser& an) {
  // Occupation count of the first label, and the label index at the last time.
  const HistorySpace space(an);
  ObservableSpec count{"first_label_count", std::vector<double>(space.size())};
  ObservableSpec last{"last_label_index", std::vector<double>(space.size())};
  for (std::size_t h = 0; h < space.size(); ++h) {
    const auto ls = space.decode(h);
    count.values[h] = static_cast<double>(std::count(ls.begin(), ls.end(), std::size_t{0}));
    last.values[h] = static_cast<double>(ls.back());
  }
  return {count, last};
}

}  // namespace detail

/// Line and column (1-based) of a byte offset.
inline std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < text.size() && i + 1 < byte; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

inline Json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte);
    throw InputError(source + ":" + std::to_string(line) + ":" + std::to_string(col) +
                     ": syntax error: " + e.what());
  }
}

/// Document for a built-in scenario name with no further settings.
inline Json builtin_document(const std::string& name) { return Json{{"builtin", name}}; }

inline Scenario load_scenario(const Json& doc) {
  using namespace detail;
  only_keys(doc, "", {"name", "builtin", "params", "dimension", "hamiltonian", "state", "times",
                      "partitions", "events", "tasks", "sample", "refinement", "tolerances",
                      "observables", "conditional", "budget"});
  Scenario sc;
  sc.document = doc;
  if (doc.contains("tolerances")) sc.tol = tolerances(doc.at("tolerances"), "tolerances");
  if (doc.contains("budget")) {
    sc.budget = unsigned_int(doc.at("budget"), "budget");
    if (sc.budget == 0) fail("budget", "must be positive");
  }

  if (doc.contains("builtin")) {
    for (const char* k : {"dimension", "hamiltonian", "times", "partitions"}) {
      if (doc.contains(k)) fail(k, "not allowed together with 'builtin'");
    }
    const std::string name = text(doc.at("builtin"), "builtin");
    ScenarioParams params;
    if (doc.contains("params")) {
      if (!doc.at("params").is_object()) fail("params", "expected an object");
      for (const auto& [k, v] : doc.at("params").items()) params[k] = number(v, sub("params", k));
    }
    try {
      ScenarioInstance inst = scenario(name, params);
      sc.name = doc.value("name", name);
      sc.analyser = std::move(inst.analyser);
      sc.state = std::move(inst.state);
      sc.hamiltonian = std::move(inst.hamiltonian);
    } catch (const ValidationError& e) {
      throw InputError(std::string("builtin: ") + e.what());
    }
    if (doc.contains("state")) {
      const Json& st = array(doc.at("state"), "state");
      if (static_cast<Index>(st.size()) != sc.an().dim()) fail("state", "length does not match the dimension");
      for (std::size_t i = 0; i < st.size(); ++i) sc.state(static_cast<Index>(i)) = complex_number(st[i], sub("state", i));
    }
  } else {
    if (doc.contains("params")) fail("params", "only allowed together with 'builtin'");
    sc.name = doc.contains("name") ? text(doc.at("name"), "name") : "scenario";
    const auto dim = unsigned_int(need(doc, "dimension", ""), "dimension");
    if (dim == 0) fail("dimension", "must be positive");
    const Index d = static_cast<Index>(dim);
    sc.hamiltonian = doc.contains("hamiltonian") ? hamiltonian(doc.at("hamiltonian"), "hamiltonian", d)
                                                 : CMatrix::Zero(d, d);
    const Json& st = array(need(doc, "state", ""), "state");
    if (static_cast<Index>(st.size()) != d) fail("state", "length does not match the dimension");
    sc.state = CVector(d);
    for (std::size_t i = 0; i < st.size(); ++i) sc.state(static_cast<Index>(i)) = complex_number(st[i], sub("state", i));

    std::vector<Time> times;
    const Json& tj = array(need(doc, "times", ""), "times");
    for (std::size_t i = 0; i < tj.size(); ++i) times.push_back(time_value(tj[i], sub("times", i)));
    if (times.empty()) fail("times", "at least one time is required");

    const Json& pj = need(doc, "partitions", "");
    std::vector<Partition> parts;
    if (pj.is_object()) {
      only_keys(pj, "partitions", {"base", "heisenberg"});
      bool heis = false;
      if (pj.contains("heisenberg")) {
        if (!pj.at("heisenberg").is_boolean()) fail("partitions.heisenberg", "expected a boolean");
        heis = pj.at("heisenberg").get<bool>();
      }
      const Partition base = cell_partition(need(pj, "base", "partitions"), "partitions.base", d,
                                            times.front(), sc.tol);
      const CMatrix h = heis ? sc.hamiltonian : CMatrix::Zero(d, d);
      try {
        sc.analyser = heisenberg_analyser(base, h, times, sc.tol);
      } catch (const ValidationError& e) {
        fail("times", e.what());
      }
    } else {
      const Json& arr = array(pj, "partitions");
      std::map<Time, std::size_t> seen;
      for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string pp = sub("partitions", i);
        only_keys(arr[i], pp, {"time", "cells"});
        const Time t = time_value(need(arr[i], "time", pp), sub(pp, "time"));
        if (std::find(times.begin(), times.end(), t) == times.end()) fail(sub(pp, "time"), "time not listed in 'times'");
        if (seen.contains(t)) fail(sub(pp, "time"), "duplicate partition for time " + t.label());
        seen[t] = i;
        parts.push_back(cell_partition(need(arr[i], "cells", pp), sub(pp, "cells"), d, t, sc.tol));
      }
      std::vector<Time> ordered;
      for (const Time& t : times) {
        if (!seen.contains(t)) fail("partitions", "no partition for time " + t.label());
      }
      for (const auto& [t, i] : seen) ordered.push_back(t);
      std::vector<Partition> sorted;
      for (const auto& [t, i] : seen) sorted.push_back(parts[i]);
      try {
        sc.analyser = Analyser(std::move(ordered), std::move(sorted));
      } catch (const ValidationError& e) {
        fail("times", e.what());
      }
    }
    if (sc.analyser->num_times() != times.size()) fail("times", "duplicate time");
  }
  if (!(sc.state.norm() > 0.0) || !sc.state.allFinite()) fail("state", "state must be nonzero and finite");

  const Analyser& an = sc.an();
  history_budget_check(an, sc.budget);
  const HistorySpace space(an);

  if (doc.contains("events")) {
    const Json& ev = array(doc.at("events"), "events");
    std::set<std::string> names;
    for (std::size_t i = 0; i < ev.size(); ++i) {
      const std::string ep = sub("events", i);
      only_keys(ev[i], ep, {"name", "constraints"});
      const std::string name = text(need(ev[i], "name", ep), sub(ep, "name"));
      if (!names.insert(name).second) fail(sub(ep, "name"), "duplicate event name");
      std::vector<Constraint> cons;
      const std::string cp = sub(ep, "constraints");
      const Json& cj = array(need(ev[i], "constraints", ep), cp);
      for (std::size_t c = 0; c < cj.size(); ++c) {
        const std::string ccp = sub(cp, c);
        only_keys(cj[c], ccp, {"time", "labels"});
        Constraint con{time_value(need(cj[c], "time", ccp), sub(ccp, "time")), {}};
        const Json& lj = array(need(cj[c], "labels", ccp), sub(ccp, "labels"));
        for (std::size_t l = 0; l < lj.size(); ++l) con.allowed.push_back(text(lj[l], sub(sub(ccp, "labels"), l)));
        cons.push_back(std::move(con));
      }
      try {
        sc.events.emplace_back(name, Event::cylinder(space, cons));
      } catch (const ValidationError& e) {
        fail(cp, e.what());
      }
    }
  } else {
    sc.events = default_events(an);
  }

  if (doc.contains("tasks")) {
    const Json& tj = array(doc.at("tasks"), "tasks");
    for (std::size_t i = 0; i < tj.size(); ++i) {
      const std::string t = text(tj[i], sub("tasks", i));
      const auto& known = known_tasks();
      if (std::find(known.begin(), known.end(), t) == known.end()) fail(sub("tasks", i), "unknown task '" + t + "'");
      if (std::find(sc.tasks.begin(), sc.tasks.end(), t) != sc.tasks.end()) fail(sub("tasks", i), "duplicate task");
      sc.tasks.push_back(t);
    }
  } else {
    sc.tasks = {"commutant", "probabilities", "defect"};
  }

  if (doc.contains("sample")) {
    const Json& sj = doc.at("sample");
    only_keys(sj, "sample", {"n", "seed", "sampler", "pairs", "points", "region_note"});
    if (sj.contains("n")) {
      sc.sample.n = unsigned_int(sj.at("n"), "sample.n");
      if (sc.sample.n == 0) fail("sample.n", "must be positive");
    }
    if (sj.contains("seed")) sc.sample.seed = unsigned_int(sj.at("seed"), "sample.seed");
    if (sj.contains("sampler")) {
      sc.sample.sampler = text(sj.at("sampler"), "sample.sampler");
      if (sc.sample.sampler != "exact" && sc.sample.sampler != "independent" && sc.sample.sampler != "both") {
        fail("sample.sampler", "expected exact, independent or both");
      }
    }
    if (sj.contains("pairs")) {
      const Json& pj = array(sj.at("pairs"), "sample.pairs");
      for (std::size_t i = 0; i < pj.size(); ++i) {
        const std::string pp = sub("sample.pairs", i);
        if (!pj[i].is_array() || pj[i].size() != 2) fail(pp, "expected a [s, t] pair");
        const Time s = time_value(pj[i][0], sub(pp, 0)), t = time_value(pj[i][1], sub(pp, 1));
        if (!an.find_time(s) || !an.find_time(t)) fail(pp, "unknown time");
        sc.sample.pairs.emplace_back(s, t);
      }
    }
    if (sj.contains("points")) {
      ConfigMap cm;
      if (!sj.at("points").is_object()) fail("sample.points", "expected an object");
      for (const auto& [label, v] : sj.at("points").items()) {
        const std::string lp = sub("sample.points", label);
        std::vector<double> x;
        for (std::size_t i = 0; i < array(v, lp).size(); ++i) x.push_back(number(v[i], sub(lp, i)));
        cm.points[label] = std::move(x);
      }
      if (sj.contains("region_note")) cm.region_note = text(sj.at("region_note"), "sample.region_note");
      for (std::size_t ti = 0; ti < an.num_times(); ++ti) {
        for (const auto& l : an.partition(ti).labels()) {
          if (!cm.points.contains(l)) fail("sample.points", "no point for label '" + l + "'");
        }
      }
      sc.sample.points = std::move(cm);
    } else if (sj.contains("region_note")) {
      fail("sample.region_note", "only allowed together with 'points'");
    }
  }
  if (sc.sample.pairs.empty()) {
    for (std::size_t i = 0; i + 1 < an.num_times(); ++i) sc.sample.pairs.emplace_back(an.time(i), an.time(i + 1));
  }

  if (doc.contains("refinement")) {
    const Json& rj = doc.at("refinement");
    only_keys(rj, "refinement", {"splits", "extra_times"});
    std::vector<CellSplit> splits;
    std::vector<ExtraTime> extras;
    const Index d = an.dim();
    if (rj.contains("splits")) {
      const Json& sj = array(rj.at("splits"), "refinement.splits");
      for (std::size_t i = 0; i < sj.size(); ++i) {
        const std::string sp = sub("refinement.splits", i);
        only_keys(sj[i], sp, {"time", "label", "parts"});
        CellSplit cs{time_value(need(sj[i], "time", sp), sub(sp, "time")),
                     text(need(sj[i], "label", sp), sub(sp, "label")), {}};
        const std::string pp = sub(sp, "parts");
        const Json& parts = array(need(sj[i], "parts", sp), pp);
        for (std::size_t c = 0; c < parts.size(); ++c) {
          const std::string cp = sub(pp, c);
          only_keys(parts[c], cp, {"label", "indices"});
          cs.parts.emplace_back(text(need(parts[c], "label", cp), sub(cp, "label")),
                                Projector::coordinates(d, indices(need(parts[c], "indices", cp), sub(cp, "indices"), d)));
        }
        splits.push_back(std::move(cs));
      }
    }
    if (rj.contains("extra_times")) {
      const Json& ej = array(rj.at("extra_times"), "refinement.extra_times");
      for (std::size_t i = 0; i < ej.size(); ++i) {
        const std::string ep = sub("refinement.extra_times", i);
        only_keys(ej[i], ep, {"time", "cells"});
        const Time t = time_value(need(ej[i], "time", ep), sub(ep, "time"));
        extras.push_back({t, cell_partition(need(ej[i], "cells", ep), sub(ep, "cells"), d, t, sc.tol)});
      }
    }
    try {
      sc.refinement = refine(an, splits, extras, sc.tol);
    } catch (const ValidationError& e) {
      fail("refinement", e.what());
    }
    history_budget_check(sc.refinement->child, sc.budget);
  }

  if (doc.contains("observables")) {
    const Json& oj = array(doc.at("observables"), "observables");
    for (std::size_t i = 0; i < oj.size(); ++i) {
      const std::string op = sub("observables", i);
      only_keys(oj[i], op, {"name", "values", "default"});
      ObservableSpec obs{text(need(oj[i], "name", op), sub(op, "name")), {}};
      std::optional<double> fallback;
      if (oj[i].contains("default")) fallback = number(oj[i].at("default"), sub(op, "default"));
      std::map<std::string, double> given;
      const std::string vp = sub(op, "values");
      const Json& vj = need(oj[i], "values", op);
      if (!vj.is_object()) fail(vp, "expected an object keyed by history, e.g. \"(a,b)\"");
      for (const auto& [k, v] : vj.items()) given[k] = number(v, sub(vp, k));
      std::set<std::string> used;
      for (std::size_t h = 0; h < space.size(); ++h) {
        const std::string key = space.describe(h);
        auto it = given.find(key);
        if (it != given.end()) {
          obs.values.push_back(it->second);
          used.insert(key);
        } else if (fallback) {
          obs.values.push_back(*fallback);
        } else {
          fail(vp, "no value for history " + key + " and no default");
        }
      }
      for (const auto& [k, v] : given) {
        if (!used.contains(k)) fail(sub(vp, k), "not a history of this analyser");
      }
      sc.observables.push_back(std::move(obs));
    }
  } else {
    sc.observables = default_observables(an);
  }

  if (doc.contains("conditional")) {
    const Json& cj = array(doc.at("conditional"), "conditional");
    for (std::size_t i = 0; i < cj.size(); ++i) {
      const std::string cp = sub("conditional", i);
      only_keys(cj[i], cp, {"given", "event"});
      const std::string a = text(need(cj[i], "given", cp), sub(cp, "given"));
      const std::string b = text(need(cj[i], "event", cp), sub(cp, "event"));
      for (const auto& n : {a, b}) {
        if (std::none_of(sc.events.begin(), sc.events.end(), [&](const auto& e) { return e.first == n; })) {
          fail(cp, "unknown event '" + n + "'");
        }
      }
      sc.conditionals.emplace_back(a, b);
    }
  }
  if (std::find(sc.tasks.begin(), sc.tasks.end(), "refine") != sc.tasks.end() && !sc.refinement) {
    fail("refinement", "task 'refine' needs a refinement block");
  }
  return sc;
}

}  // namespace histlab::cli
