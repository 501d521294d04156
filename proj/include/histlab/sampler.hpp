#pragma once

// Trajectory sampling in Γ-space: exact path-wise draws from P_φ and the
// marginal-only (independent per time) sampler, plus record statistics and
// CSV export.

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "histlab/histories.hpp"

namespace histlab {

/// Stateless generator keyed by (seed, trajectory, time); uniform in [0, 1).
inline double counter_uniform(std::uint64_t seed, std::uint64_t traj, std::uint64_t time) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t x = mix(seed);
  x = mix(x ^ mix(traj ^ 0x632be59bd9b4e019ULL));
  x = mix(x ^ mix(time ^ 0x8cb92ba72f3d8dd7ULL));
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

struct Trajectory {
  std::vector<std::size_t> labels;              // label index per time
  std::vector<std::vector<double>> points;      // empty unless mapped
};

namespace detail {

inline std::size_t pick(const std::vector<double>& weights, double u) {
  double total = 0.0;
  for (double w : weights) total += w;
  double acc = 0.0;
  const double target = u * total;
  for (std::size_t a = 0; a < weights.size(); ++a) {
    acc += weights[a];
    if (target < acc) return a;
  }
  // Rounding at the top end: fall back to the last label with weight.
  for (std::size_t a = weights.size(); a-- > 0;) {
    if (weights[a] > 0.0) return a;
  }
  return weights.size() - 1;
}

template <class Fill>
void parallel_fill(std::vector<Trajectory>& out, unsigned threads, Fill fill) {
  const std::size_t n = out.size();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n ? n : 1)));
  if (threads == 1) {
    for (std::size_t j = 0; j < n; ++j) out[j] = fill(j);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + threads - 1) / threads;
  for (unsigned w = 0; w < threads; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    pool.emplace_back([&, lo, hi] {
      for (std::size_t j = lo; j < hi; ++j) out[j] = fill(j);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace detail

/// I.i.d. full histories from P_φ by sequential conditional sampling along the
/// time-ordered product (exact for φ in H_pi).
inline std::vector<Trajectory> sample_exact(const PathMeasure& pm, std::size_t n,
                                            std::uint64_t seed, unsigned threads = 1,
                                            const Tolerances& tol = {}) {
  if (n == 0) throw ValidationError("sample_exact: n must be at least 1");
  if (pm.total() < tol.probability()) throw ValidationError("sample_exact: degenerate measure");
  const Analyser& an = pm.analyser;
  std::vector<Trajectory> out(n);
  detail::parallel_fill(out, threads, [&](std::size_t j) {
    Trajectory tr;
    CVector psi = pm.state;
    std::vector<double> w;
    for (std::size_t ti = 0; ti < an.num_times(); ++ti) {
      const Partition& part = an.partition(ti);
      w.assign(part.size(), 0.0);
      for (std::size_t a = 0; a < part.size(); ++a) {
        w[a] = (part.cell(a).matrix() * psi).squaredNorm();
      }
      const std::size_t a = detail::pick(w, counter_uniform(seed, j, ti));
      tr.labels.push_back(a);
      psi = part.cell(a).matrix() * psi;
    }
    return tr;
  });
  return out;
}

/// Each time drawn independently from its single-time Born law ||p^t_a φ̂||².
inline std::vector<Trajectory> sample_independent(const Analyser& an, const CVector& phi,
                                                  std::size_t n, std::uint64_t seed,
                                                  unsigned threads = 1) {
  require_same_dim(phi.size(), an.dim(), "sample_independent");
  if (!(phi.norm() > 0.0)) throw ValidationError("sample_independent: state is zero");
  const CVector hat = phi / phi.norm();
  std::vector<std::vector<double>> marg(an.num_times());
  for (std::size_t ti = 0; ti < an.num_times(); ++ti) {
    for (const auto& c : an.partition(ti).cells()) {
      marg[ti].push_back((c.matrix() * hat).squaredNorm());
    }
  }
  std::vector<Trajectory> out(n);
  detail::parallel_fill(out, threads, [&](std::size_t j) {
    Trajectory tr;
    for (std::size_t ti = 0; ti < an.num_times(); ++ti) {
      tr.labels.push_back(detail::pick(marg[ti], counter_uniform(seed, j, ti)));
    }
    return tr;
  });
  return out;
}

struct EventFrequency {
  std::string name;
  double frequency = 0.0;
};

struct PairAgreement {
  Time s;
  Time t;
  double frequency = 0.0;
};

struct SampleReport {
  std::size_t n_paths = 0;
  std::vector<EventFrequency> event_frequencies;
  std::vector<PairAgreement> record_correlation;
  std::uint64_t rng_seed = 0;
};

inline SampleReport record_statistics(const Analyser& an, const std::vector<Trajectory>& trajs,
                                      const std::vector<std::pair<Time, Time>>& pairs,
                                      const std::vector<std::pair<std::string, Event>>& events,
                                      std::uint64_t seed) {
  if (trajs.empty()) throw ValidationError("record_statistics: no trajectories");
  const HistorySpace space(an);
  SampleReport rep;
  rep.n_paths = trajs.size();
  rep.rng_seed = seed;
  const double n = static_cast<double>(trajs.size());
  for (const auto& [s, t] : pairs) {
    const std::size_t si = an.time_index(s);
    const std::size_t tj = an.time_index(t);
    const auto& ls = an.partition(si).labels();
    const auto& lt = an.partition(tj).labels();
    std::size_t agree = 0;
    for (const auto& tr : trajs) {
      if (ls[tr.labels[si]] == lt[tr.labels[tj]]) ++agree;
    }
    rep.record_correlation.push_back({s, t, static_cast<double>(agree) / n});
  }
  for (const auto& [name, ev] : events) {
    ev.check_space(space);
    std::size_t hits = 0;
    for (const auto& tr : trajs) {
      if (ev.contains(space.encode(tr.labels))) ++hits;
    }
    rep.event_frequencies.push_back({name, static_cast<double>(hits) / n});
  }
  return rep;
}

/// Label -> configuration point x(a). Whether x(a) lies in the cell's region is
/// recorded as free-form metadata, not checked.
struct ConfigMap {
  std::map<std::string, std::vector<double>> points;
  std::string region_note;
};

inline std::vector<Trajectory> to_configuration(const std::vector<Trajectory>& trajs,
                                                const Analyser& an, const ConfigMap& cmap) {
  for (std::size_t ti = 0; ti < an.num_times(); ++ti) {
    for (const auto& l : an.partition(ti).labels()) {
      if (!cmap.points.contains(l)) {
        throw ValidationError("configuration map has no point for label '" + l + "'");
      }
    }
  }
  std::vector<Trajectory> out = trajs;
  for (auto& tr : out) {
    tr.points.clear();
    for (std::size_t ti = 0; ti < tr.labels.size(); ++ti) {
      tr.points.push_back(cmap.points.at(an.partition(ti).labels()[tr.labels[ti]]));
    }
  }
  return out;
}

/// Header `traj_id,t_<time>...[,t_<time>_x...]`; multi-component points are
/// joined with ';'.
inline void write_trajectory_csv(std::ostream& os, const Analyser& an,
                                 const std::vector<Trajectory>& trajs) {
  const bool with_points =
      std::any_of(trajs.begin(), trajs.end(), [](const Trajectory& t) { return !t.points.empty(); });
  os << "traj_id";
  for (const auto& t : an.times()) os << ",t_" << t.label();
  if (with_points) {
    for (const auto& t : an.times()) os << ",t_" << t.label() << "_x";
  }
  os << '\n';
  std::array<char, 32> buf{};
  for (std::size_t j = 0; j < trajs.size(); ++j) {
    const auto& tr = trajs[j];
    os << j;
    for (std::size_t ti = 0; ti < tr.labels.size(); ++ti) {
      os << ',' << an.partition(ti).labels()[tr.labels[ti]];
    }
    if (with_points) {
      for (std::size_t ti = 0; ti < an.num_times(); ++ti) {
        os << ',';
        if (ti >= tr.points.size()) continue;
        for (std::size_t c = 0; c < tr.points[ti].size(); ++c) {
          if (c) os << ';';
          auto res = std::to_chars(buf.data(), buf.data() + buf.size(), tr.points[ti][c]);
          os.write(buf.data(), res.ptr - buf.data());
        }
      }
    }
    os << '\n';
  }
}

}  // namespace histlab
