#pragma once

// Time-indexed partitions of the identity ("analysers"), their Heisenberg
// evolution, refinements and coarsenings.

#include <algorithm>
#include <array>
#include <charconv>
#include <compare>
#include <map>
#include <set>
#include <span>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include "histlab/core.hpp"
#include "histlab/linalg.hpp"

namespace histlab {

/// A time label. Equality is by canonical (shortest round-trip) decimal form.
class Time {
 public:
  Time() : Time(0.0) {}
  explicit Time(double value) : value_(value == 0.0 ? 0.0 : value) {
    std::array<char, 32> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value_);
    label_.assign(buf.data(), res.ptr);
  }

  [[nodiscard]] double value() const { return value_; }
  [[nodiscard]] const std::string& label() const { return label_; }

  friend bool operator==(const Time& a, const Time& b) { return a.label_ == b.label_; }
  friend std::strong_ordering operator<=>(const Time& a, const Time& b) {
    if (a.label_ == b.label_) return std::strong_ordering::equal;
    return a.value_ < b.value_ ? std::strong_ordering::less
                               : std::strong_ordering::greater;
  }

 private:
  double value_ = 0.0;
  std::string label_;
};

class Partition {
 public:
  [[nodiscard]] std::size_t size() const { return cells_.size(); }
  [[nodiscard]] Index dim() const { return cells_.front().dim(); }
  [[nodiscard]] const std::vector<std::string>& labels() const { return labels_; }
  [[nodiscard]] const std::vector<Projector>& cells() const { return cells_; }
  [[nodiscard]] const Projector& cell(std::size_t i) const { return cells_.at(i); }

  [[nodiscard]] std::optional<std::size_t> find(const std::string& label) const {
    auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - labels_.begin());
  }

 private:
  Partition(std::vector<Projector> cells, std::vector<std::string> labels)
      : cells_(std::move(cells)), labels_(std::move(labels)) {}

  friend Partition validate_partition(std::vector<Projector>, std::vector<std::string>,
                                      const Tolerances&);

  std::vector<Projector> cells_;
  std::vector<std::string> labels_;
};

/// Checks that the cells are pairwise orthogonal and sum to the identity.
/// Missing labels default to "0", "1", ...
inline Partition validate_partition(std::vector<Projector> cells,
                                    std::vector<std::string> labels = {},
                                    const Tolerances& tol = {}) {
  if (cells.empty()) throw ValidationError("partition has no cells");
  const Index d = cells.front().dim();
  for (const auto& c : cells) require_same_dim(c.dim(), d, "partition");
  if (labels.empty()) {
    for (std::size_t i = 0; i < cells.size(); ++i) labels.push_back(std::to_string(i));
  }
  if (labels.size() != cells.size()) {
    throw ValidationError("partition: label count does not match cell count");
  }
  std::set<std::string> seen(labels.begin(), labels.end());
  if (seen.size() != labels.size()) throw ValidationError("partition labels are not distinct");

  for (std::size_t a = 0; a < cells.size(); ++a) {
    for (std::size_t b = a + 1; b < cells.size(); ++b) {
      const double overlap = (cells[a].matrix() * cells[b].matrix()).norm();
      if (overlap > tol.op(d)) {
        throw ValidationError("partition cells overlap ('" + labels[a] + "', '" +
                              labels[b] + "')");
      }
    }
  }
  CMatrix sum = CMatrix::Zero(d, d);
  for (const auto& c : cells) sum += c.matrix();
  const double dev = (sum - CMatrix::Identity(d, d)).norm();
  if (dev > tol.op(d)) {
    throw ValidationError("partition cells do not sum to the identity (deviation " +
                          std::to_string(dev) + ")");
  }
  return Partition(std::move(cells), std::move(labels));
}

/// Assignment of one label to each of a set of times.
using Assignment = std::map<Time, std::string>;

class Analyser {
 public:
  /// Times are stored in ascending order and must be distinct.
  Analyser(std::vector<Time> times, std::vector<Partition> partitions) {
    if (times.empty()) throw ValidationError("analyser needs at least one time");
    if (times.size() != partitions.size()) {
      throw ValidationError("analyser: one partition per time is required");
    }
    std::vector<std::size_t> order(times.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });
    for (std::size_t i : order) {
      if (!times_.empty() && times_.back() == times[i]) {
        throw ValidationError("analyser: duplicate time " + times[i].label());
      }
      times_.push_back(times[i]);
      partitions_.push_back(std::move(partitions[i]));
    }
    for (const auto& p : partitions_) {
      require_same_dim(p.dim(), partitions_.front().dim(), "analyser");
    }
  }

  [[nodiscard]] Index dim() const { return partitions_.front().dim(); }
  [[nodiscard]] std::size_t num_times() const { return times_.size(); }
  [[nodiscard]] const std::vector<Time>& times() const { return times_; }
  [[nodiscard]] const Time& time(std::size_t i) const { return times_.at(i); }
  [[nodiscard]] const std::vector<Partition>& partitions() const { return partitions_; }
  [[nodiscard]] const Partition& partition(std::size_t i) const { return partitions_.at(i); }
  [[nodiscard]] const Projector& cell(std::size_t ti, std::size_t a) const {
    return partitions_.at(ti).cell(a);
  }

  [[nodiscard]] std::optional<std::size_t> find_time(const Time& t) const {
    auto it = std::lower_bound(times_.begin(), times_.end(), t);
    if (it == times_.end() || !(*it == t)) return std::nullopt;
    return static_cast<std::size_t>(it - times_.begin());
  }
  [[nodiscard]] std::size_t time_index(const Time& t) const {
    auto i = find_time(t);
    if (!i) throw ValidationError("unknown time " + t.label());
    return *i;
  }
  [[nodiscard]] std::size_t label_index(std::size_t ti, const std::string& label) const {
    auto a = partitions_.at(ti).find(label);
    if (!a) {
      throw ValidationError("unknown label '" + label + "' at time " + times_[ti].label());
    }
    return *a;
  }

  /// (time index, label index) pairs in ascending time order.
  [[nodiscard]] std::vector<std::pair<std::size_t, std::size_t>> resolve(
      const Assignment& assignment) const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    out.reserve(assignment.size());
    for (const auto& [t, label] : assignment) {
      const std::size_t ti = time_index(t);
      out.emplace_back(ti, label_index(ti, label));
    }
    return out;
  }

 private:
  std::vector<Time> times_;
  std::vector<Partition> partitions_;
};

/// Partitions p^t_a = U_{-t} p_a U_t with U_t = exp(-itH).
inline Analyser heisenberg_analyser(const Partition& base, const CMatrix& h,
                                    std::span<const Time> times,
                                    const Tolerances& tol = {}) {
  require_same_dim(base.dim(), h.rows(), "heisenberg_analyser");
  std::vector<Time> ts(times.begin(), times.end());
  std::vector<Partition> parts;
  for (const Time& t : ts) {
    const CMatrix u = hermitian_evolution(h, t.value(), tol);
    std::vector<Projector> cells;
    for (const auto& c : base.cells()) {
      CMatrix m = u.adjoint() * c.matrix() * u;
      m = 0.5 * (m + m.adjoint());
      cells.push_back(Projector::from_matrix(std::move(m), tol));
    }
    parts.push_back(validate_partition(std::move(cells), base.labels(), tol));
  }
  return Analyser(std::move(ts), std::move(parts));
}

/// Parent/child pair of analysers with the cell map Γ'_a(t): for parent time
/// index i and parent label a, the child label indices at the matching child
/// time.
struct RefinementMap {
  Analyser parent;
  Analyser child;
  std::vector<std::size_t> child_time;  // child time index of each parent time
  std::vector<std::vector<std::vector<std::size_t>>> cell_map;

  /// Parent label index owning child label b at parent time index i.
  [[nodiscard]] std::size_t parent_label(std::size_t i, std::size_t b) const {
    const auto& cells = cell_map.at(i);
    for (std::size_t a = 0; a < cells.size(); ++a) {
      if (std::find(cells[a].begin(), cells[a].end(), b) != cells[a].end()) return a;
    }
    throw ValidationError("child label outside the refinement cell map");
  }
};

/// Cell map keyed by labels: time -> parent label -> child labels.
using LabelCellMap = std::map<Time, std::map<std::string, std::vector<std::string>>>;

inline RefinementMap make_refinement_map(Analyser parent, Analyser child,
                                         const LabelCellMap& labels,
                                         const Tolerances& tol = {}) {
  require_same_dim(parent.dim(), child.dim(), "refinement");
  const Index d = parent.dim();
  std::vector<std::size_t> child_time;
  std::vector<std::vector<std::vector<std::size_t>>> cell_map;
  for (std::size_t i = 0; i < parent.num_times(); ++i) {
    const Time& t = parent.time(i);
    auto ci = child.find_time(t);
    if (!ci) throw ValidationError("refinement: parent time " + t.label() + " missing in child");
    child_time.push_back(*ci);
    const Partition& pp = parent.partition(i);
    const Partition& cp = child.partition(*ci);
    auto tl = labels.find(t);
    std::vector<std::vector<std::size_t>> cells(pp.size());
    std::vector<int> owner(cp.size(), -1);
    for (std::size_t a = 0; a < pp.size(); ++a) {
      std::vector<std::string> parts;
      if (tl != labels.end()) {
        auto it = tl->second.find(pp.labels()[a]);
        if (it != tl->second.end()) parts = it->second;
      } else {
        parts = {pp.labels()[a]};
      }
      CMatrix sum = CMatrix::Zero(d, d);
      for (const auto& name : parts) {
        auto b = cp.find(name);
        if (!b) {
          throw ValidationError("refinement: child label '" + name + "' unknown at time " +
                                t.label());
        }
        if (owner[*b] != -1) {
          throw ValidationError("refinement: child label '" + name + "' assigned twice at time " +
                                t.label());
        }
        owner[*b] = static_cast<int>(a);
        cells[a].push_back(*b);
        sum += cp.cell(*b).matrix();
      }
      const double dev = (sum - pp.cell(a).matrix()).norm();
      if (dev > tol.op(d)) {
        throw ValidationError("refinement: cells of '" + pp.labels()[a] + "' at time " +
                              t.label() + " do not sum to the parent cell");
      }
    }
    if (std::find(owner.begin(), owner.end(), -1) != owner.end()) {
      throw ValidationError("refinement: child labels at time " + t.label() +
                            " are not covered by the cell map");
    }
    cell_map.push_back(std::move(cells));
  }
  return RefinementMap{std::move(parent), std::move(child), std::move(child_time),
                       std::move(cell_map)};
}

struct CellSplit {
  Time time;
  std::string label;
  std::vector<std::pair<std::string, Projector>> parts;
};

struct ExtraTime {
  Time time;
  Partition partition;
};

/// Splits selected cells and adds new times. Unsplit cells keep their label.
inline RefinementMap refine(const Analyser& parent, std::span<const CellSplit> splits,
                            std::span<const ExtraTime> extra_times,
                            const Tolerances& tol = {}) {
  const Index d = parent.dim();
  std::vector<Time> times;
  std::vector<Partition> parts;
  LabelCellMap cell_map;
  for (std::size_t i = 0; i < parent.num_times(); ++i) {
    const Time& t = parent.time(i);
    const Partition& pp = parent.partition(i);
    std::vector<Projector> cells;
    std::vector<std::string> labels;
    for (std::size_t a = 0; a < pp.size(); ++a) {
      const std::string& name = pp.labels()[a];
      auto it = std::find_if(splits.begin(), splits.end(), [&](const CellSplit& s) {
        return s.time == t && s.label == name;
      });
      if (it == splits.end()) {
        cells.push_back(pp.cell(a));
        labels.push_back(name);
        cell_map[t][name] = {name};
        continue;
      }
      if (it->parts.empty()) throw ValidationError("refine: empty split for '" + name + "'");
      CMatrix sum = CMatrix::Zero(d, d);
      for (const auto& [sub, proj] : it->parts) {
        require_same_dim(proj.dim(), d, "refine");
        sum += proj.matrix();
        cells.push_back(proj);
        labels.push_back(sub);
        cell_map[t][name].push_back(sub);
      }
      const double dev = (sum - pp.cell(a).matrix()).norm();
      if (dev > tol.op(d)) {
        throw ValidationError("refine: sub-partition of '" + name + "' at time " + t.label() +
                              " does not sum to the cell (deviation " + std::to_string(dev) +
                              ")");
      }
    }
    for (const auto& s : splits) {
      if (s.time == t && !pp.find(s.label)) {
        throw ValidationError("refine: unknown label '" + s.label + "' at time " + t.label());
      }
      if (!parent.find_time(s.time)) {
        throw ValidationError("refine: unknown time " + s.time.label());
      }
    }
    times.push_back(t);
    parts.push_back(validate_partition(std::move(cells), std::move(labels), tol));
  }
  for (const auto& e : extra_times) {
    if (parent.find_time(e.time)) {
      throw ValidationError("refine: extra time " + e.time.label() + " already present");
    }
    require_same_dim(e.partition.dim(), d, "refine");
    times.push_back(e.time);
    parts.push_back(e.partition);
  }
  Analyser child(std::move(times), std::move(parts));
  return make_refinement_map(parent, std::move(child), cell_map, tol);
}

struct LabelMerge {
  Time time;
  /// new label -> merged old labels
  std::vector<std::pair<std::string, std::vector<std::string>>> groups;
};

/// Coarsening of `fine`: merges labels and keeps only `keep_times`. The result
/// has the coarse analyser as parent and `fine` as child.
inline RefinementMap coarsen(const Analyser& fine, std::span<const LabelMerge> merges,
                             std::span<const Time> keep_times,
                             const Tolerances& tol = {}) {
  const Index d = fine.dim();
  for (const auto& m : merges) {
    if (!fine.find_time(m.time)) throw ValidationError("coarsen: unknown time " + m.time.label());
  }
  std::vector<Time> times;
  std::vector<Partition> parts;
  LabelCellMap cell_map;
  for (const Time& t : keep_times) {
    const std::size_t ti = fine.time_index(t);
    const Partition& fp = fine.partition(ti);
    auto mit = std::find_if(merges.begin(), merges.end(),
                            [&](const LabelMerge& m) { return m.time == t; });
    std::vector<Projector> cells;
    std::vector<std::string> labels;
    if (mit == merges.end()) {
      cells = fp.cells();
      labels = fp.labels();
      for (const auto& l : labels) cell_map[t][l] = {l};
    } else {
      std::vector<int> used(fp.size(), 0);
      for (const auto& [name, olds] : mit->groups) {
        if (olds.empty()) throw ValidationError("coarsen: empty group '" + name + "'");
        CMatrix sum = CMatrix::Zero(d, d);
        for (const auto& o : olds) {
          auto a = fp.find(o);
          if (!a) {
            throw ValidationError("coarsen: unknown label '" + o + "' at time " + t.label());
          }
          if (used[*a]++) {
            throw ValidationError("coarsen: label '" + o + "' grouped twice at time " +
                                  t.label());
          }
          sum += fp.cell(*a).matrix();
        }
        sum = 0.5 * (sum + sum.adjoint());
        cells.push_back(Projector::from_matrix(std::move(sum), tol));
        labels.push_back(name);
        cell_map[t][name] = olds;
      }
      if (std::find(used.begin(), used.end(), 0) != used.end()) {
        throw ValidationError("coarsen: grouping does not cover every label at time " +
                              t.label());
      }
    }
    times.push_back(t);
    parts.push_back(validate_partition(std::move(cells), std::move(labels), tol));
  }
  Analyser coarse(std::move(times), std::move(parts));
  return make_refinement_map(std::move(coarse), fine, cell_map, tol);
}

/// Cell map given by label names rather than indices.
inline LabelCellMap label_cell_map(const RefinementMap& rm) {
  LabelCellMap out;
  for (std::size_t i = 0; i < rm.parent.num_times(); ++i) {
    const Time& t = rm.parent.time(i);
    const Partition& cp = rm.child.partition(rm.child_time[i]);
    for (std::size_t a = 0; a < rm.cell_map[i].size(); ++a) {
      auto& dst = out[t][rm.parent.partition(i).labels()[a]];
      for (std::size_t b : rm.cell_map[i][a]) dst.push_back(cp.labels()[b]);
    }
  }
  return out;
}

/// Composes parent -> middle and middle -> grandchild into parent -> grandchild.
inline RefinementMap compose(const RefinementMap& outer, const RefinementMap& inner,
                             const Tolerances& tol = {}) {
  const LabelCellMap first = label_cell_map(outer);
  const LabelCellMap second = label_cell_map(inner);
  LabelCellMap combined;
  for (const auto& [t, by_label] : first) {
    auto st = second.find(t);
    if (st == second.end()) throw ValidationError("compose: maps do not chain");
    for (const auto& [a, mids] : by_label) {
      auto& dst = combined[t][a];
      for (const auto& m : mids) {
        auto it = st->second.find(m);
        if (it == st->second.end()) throw ValidationError("compose: maps do not chain");
        dst.insert(dst.end(), it->second.begin(), it->second.end());
      }
    }
  }
  return make_refinement_map(outer.parent, inner.child, combined, tol);
}

}  // namespace histlab
