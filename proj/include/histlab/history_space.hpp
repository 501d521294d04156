#pragma once

// The finite history space Ω = ×_t Γ(t) and events A ⊆ Ω.

#include <algorithm>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "histlab/analyser.hpp"

namespace histlab {

/// Histories are indexed in mixed radix with the earliest time most significant.
class HistorySpace {
 public:
  explicit HistorySpace(const Analyser& an) : times_(an.times()) {
    std::size_t size = 1;
    for (const auto& p : an.partitions()) {
      labels_.push_back(p.labels());
      const std::size_t r = p.size();
      if (size > std::numeric_limits<std::size_t>::max() / r) {
        throw BudgetExceeded("history space size overflows");
      }
      size *= r;
    }
    size_ = size;
  }

  [[nodiscard]] std::size_t size() const { return size_; }
  [[nodiscard]] std::size_t num_times() const { return times_.size(); }
  [[nodiscard]] const std::vector<Time>& times() const { return times_; }
  [[nodiscard]] const std::vector<std::string>& labels(std::size_t ti) const {
    return labels_.at(ti);
  }
  [[nodiscard]] std::size_t radix(std::size_t ti) const { return labels_.at(ti).size(); }

  [[nodiscard]] std::vector<std::size_t> decode(std::size_t history) const {
    std::vector<std::size_t> out(times_.size());
    for (std::size_t i = times_.size(); i-- > 0;) {
      out[i] = history % radix(i);
      history /= radix(i);
    }
    return out;
  }

  [[nodiscard]] std::size_t encode(std::span<const std::size_t> labels) const {
    if (labels.size() != times_.size()) throw ValidationError("history has wrong length");
    std::size_t idx = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] >= radix(i)) throw ValidationError("history label out of range");
      idx = idx * radix(i) + labels[i];
    }
    return idx;
  }

  /// "(a1,a2,...)" in time order.
  [[nodiscard]] std::string describe(std::size_t history) const {
    const auto ls = decode(history);
    std::string s = "(";
    for (std::size_t i = 0; i < ls.size(); ++i) {
      if (i) s += ",";
      s += labels_[i][ls[i]];
    }
    return s + ")";
  }

  [[nodiscard]] Assignment assignment(std::size_t history) const {
    Assignment a;
    const auto ls = decode(history);
    for (std::size_t i = 0; i < ls.size(); ++i) a[times_[i]] = labels_[i][ls[i]];
    return a;
  }

  [[nodiscard]] bool same_shape(const HistorySpace& o) const {
    return times_ == o.times_ && labels_ == o.labels_;
  }

 private:
  std::vector<Time> times_;
  std::vector<std::vector<std::string>> labels_;
  std::size_t size_ = 0;
};

/// Cylinder constraint X_t ∈ allowed.
struct Constraint {
  Time time;
  std::vector<std::string> allowed;
};

/// An event as an explicit indicator over Ω. Cylinder events are expanded on
/// construction.
class Event {
 public:
  static Event all(const HistorySpace& space) {
    return Event(std::vector<char>(space.size(), 1));
  }
  static Event none(const HistorySpace& space) {
    return Event(std::vector<char>(space.size(), 0));
  }
  static Event from_histories(const HistorySpace& space, std::span<const std::size_t> hs) {
    std::vector<char> m(space.size(), 0);
    for (std::size_t h : hs) {
      if (h >= space.size()) throw ValidationError("event: history index out of range");
      m[h] = 1;
    }
    return Event(std::move(m));
  }
  /// Intersection of the constraints; an empty list is Ω.
  static Event cylinder(const HistorySpace& space, std::span<const Constraint> constraints) {
    std::vector<std::vector<char>> allowed(space.num_times());
    for (std::size_t i = 0; i < space.num_times(); ++i) allowed[i].assign(space.radix(i), 1);
    for (const auto& c : constraints) {
      const auto& ts = space.times();
      auto it = std::find(ts.begin(), ts.end(), c.time);
      if (it == ts.end()) throw ValidationError("event: unknown time " + c.time.label());
      const std::size_t ti = static_cast<std::size_t>(it - ts.begin());
      std::vector<char> mask(space.radix(ti), 0);
      for (const auto& l : c.allowed) {
        const auto& ls = space.labels(ti);
        auto li = std::find(ls.begin(), ls.end(), l);
        if (li == ls.end()) {
          throw ValidationError("event: unknown label '" + l + "' at time " + c.time.label());
        }
        mask[static_cast<std::size_t>(li - ls.begin())] = 1;
      }
      for (std::size_t a = 0; a < mask.size(); ++a) allowed[ti][a] &= mask[a];
    }
    std::vector<char> m(space.size(), 0);
    for (std::size_t h = 0; h < space.size(); ++h) {
      const auto ls = space.decode(h);
      bool in = true;
      for (std::size_t i = 0; i < ls.size() && in; ++i) in = allowed[i][ls[i]] != 0;
      m[h] = in ? 1 : 0;
    }
    return Event(std::move(m));
  }
  /// Single-time cylinder {X_t = label}.
  static Event equals(const HistorySpace& space, const Time& t, const std::string& label) {
    const Constraint c{t, {label}};
    return cylinder(space, std::span<const Constraint>(&c, 1));
  }

  [[nodiscard]] std::size_t space_size() const { return mask_.size(); }
  [[nodiscard]] bool contains(std::size_t h) const { return mask_.at(h) != 0; }
  [[nodiscard]] std::size_t count() const {
    return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), 1));
  }
  [[nodiscard]] bool empty() const { return count() == 0; }
  [[nodiscard]] std::vector<std::size_t> histories() const {
    std::vector<std::size_t> out;
    for (std::size_t h = 0; h < mask_.size(); ++h) {
      if (mask_[h]) out.push_back(h);
    }
    return out;
  }

  [[nodiscard]] Event complement() const {
    std::vector<char> m(mask_.size());
    for (std::size_t h = 0; h < m.size(); ++h) m[h] = mask_[h] ? 0 : 1;
    return Event(std::move(m));
  }
  [[nodiscard]] bool subset_of(const Event& o) const {
    check_same(o);
    for (std::size_t h = 0; h < mask_.size(); ++h) {
      if (mask_[h] && !o.mask_[h]) return false;
    }
    return true;
  }
  [[nodiscard]] bool disjoint(const Event& o) const { return (*this & o).empty(); }

  friend Event operator|(const Event& a, const Event& b) {
    a.check_same(b);
    std::vector<char> m(a.mask_.size());
    for (std::size_t h = 0; h < m.size(); ++h) m[h] = (a.mask_[h] || b.mask_[h]) ? 1 : 0;
    return Event(std::move(m));
  }
  friend Event operator&(const Event& a, const Event& b) {
    a.check_same(b);
    std::vector<char> m(a.mask_.size());
    for (std::size_t h = 0; h < m.size(); ++h) m[h] = (a.mask_[h] && b.mask_[h]) ? 1 : 0;
    return Event(std::move(m));
  }
  friend bool operator==(const Event& a, const Event& b) { return a.mask_ == b.mask_; }

  void check_space(const HistorySpace& space) const {
    if (mask_.size() != space.size()) {
      throw ValidationError("event does not belong to this history space");
    }
  }

 private:
  explicit Event(std::vector<char> mask) : mask_(std::move(mask)) {}
  void check_same(const Event& o) const {
    if (mask_.size() != o.mask_.size()) {
      throw ValidationError("events belong to different history spaces");
    }
  }

  std::vector<char> mask_;
};

}  // namespace histlab
