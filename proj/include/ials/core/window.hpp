#pragma once

#include <cstddef>
#include <deque>
#include <utility>

#include "ials/core/error.hpp"
#include "ials/core/types.hpp"

namespace ials {

/// Truncated history x_{t-k}, a_{t-k}, x_{t-k+1}, ..., a_{t-1}, x_t.
///
/// Holds at most `capacity` (action, state) pairs ordered oldest to newest plus
/// the state that preceded the oldest pair. Appending to a full window evicts the
/// oldest pair; its state becomes the new initial state.
template <class State>
class HistoryWindow {
 public:
  using Entry = std::pair<Action, State>;

  explicit HistoryWindow(std::size_t capacity = 8) : capacity_(capacity) {
    if (capacity_ == 0) throw ConfigError("history window capacity must be >= 1");
  }

  void reset(State initial) {
    entries_.clear();
    initial_ = std::move(initial);
  }

  void append(Action a, State x) {
    if (entries_.size() == capacity_) {
      initial_ = std::move(entries_.front().second);
      entries_.pop_front();
    }
    entries_.emplace_back(a, std::move(x));
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  bool full() const { return entries_.size() == capacity_; }

  const State& initial() const { return initial_; }
  const State& current() const { return entries_.empty() ? initial_ : entries_.back().second; }
  const std::deque<Entry>& entries() const { return entries_; }

  bool operator==(const HistoryWindow&) const = default;

 private:
  std::size_t capacity_;
  State initial_{};
  std::deque<Entry> entries_;
};

using AlshWindow = HistoryWindow<LocalState>;
using AohWindow = HistoryWindow<Observation>;

/// The last <= k d-set rows, oldest first. This is the influence predictor's input.
class DSetWindow {
 public:
  explicit DSetWindow(std::size_t capacity = 8) : capacity_(capacity) {
    if (capacity_ == 0) throw ConfigError("d-set window capacity must be >= 1");
  }

  void clear() { rows_.clear(); }

  void push(DSetRow row) {
    if (!rows_.empty() && row.size() != rows_.front().size()) {
      throw ShapeError("d-set row width changed within a window");
    }
    if (rows_.size() == capacity_) rows_.pop_front();
    rows_.push_back(std::move(row));
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }
  std::size_t width() const { return rows_.empty() ? 0 : rows_.front().size(); }
  const DSetRow& operator[](std::size_t i) const { return rows_[i]; }
  const DSetRow& back() const { return rows_.back(); }
  const std::deque<DSetRow>& rows() const { return rows_; }

  bool operator==(const DSetWindow&) const = default;

 private:
  std::size_t capacity_;
  std::deque<DSetRow> rows_;
};

}  // namespace ials
