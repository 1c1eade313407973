#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "eastwalk/lattice.hpp"
#include "eastwalk/rng.hpp"

// Graphical construction: every site carries an independent Poisson clock
// (rate 1, or gamma for spin refresh) and an i.i.d. Bernoulli(rho) coin per
// ring.  A ring is legal when the constraint holds; a legal ring refreshes
// the site to its coin value.  Event streams are counter-based functions of
// (seed, site, ring index), so the full schedule is reproducible and two
// processes driven by the same seed see identical clocks and coins.

namespace eastwalk {

constexpr double kMaxHorizon = 1099511627776.0;  // 2^40, horizon cap

struct ClockEvent {
  double time = 0.0;
  int site = -1;
  uint8_t coin = 0;
};

struct EventOutcome {
  bool legal = false;
  bool flipped = false;
  uint8_t old_value = 0;
  uint8_t new_value = 0;
};

class EventSchedule {
 public:
  // `site_key_map`, when non-empty, makes site s consume the stream of site
  // site_key_map[s]; used to build reflected-lattice couplings.
  EventSchedule(uint64_t seed, int n_sites, double horizon, double rho,
                double clock_rate = 1.0, std::vector<int> site_key_map = {})
      : seed_(seed),
        n_sites_(n_sites),
        horizon_(horizon),
        rho_(rho),
        clock_rate_(clock_rate),
        key_map_(std::move(site_key_map)) {
    if (n_sites_ < 1) throw ValidationError("schedule needs at least one site");
    if (!(horizon_ > 0.0) || horizon_ > kMaxHorizon)
      throw ValidationError("horizon must lie in (0, 2^40]");
    if (!(clock_rate_ > 0.0)) throw ValidationError("clock rate must be positive");
    if (!key_map_.empty() && static_cast<int>(key_map_.size()) != n_sites_)
      throw ValidationError("site key map size mismatch");
    reset();
  }

  void reset() {
    keys_.resize(n_sites_);
    ctr_.assign(n_sites_, 0);
    next_time_.assign(n_sites_, 0.0);
    next_coin_.assign(n_sites_, 0);
    heap_.clear();
    heap_.reserve(n_sites_);
    for (int s = 0; s < n_sites_; ++s) {
      int key_site = key_map_.empty() ? s : key_map_[s];
      keys_[s] = derive_key(seed_, hash_tag("site-clock") + static_cast<uint64_t>(key_site));
      next_time_[s] = 0.0;
      advance_site(s);
      heap_.push_back({next_time_[s], s});
    }
    std::make_heap(heap_.begin(), heap_.end(), Later{});
    last_returned_ = 0.0;
  }

  // Earliest event strictly after `after` and within the horizon.  Queries
  // must be time-monotone; a query earlier than the last answer replays the
  // schedule from scratch (identical by construction).
  std::optional<ClockEvent> next_event(double after) {
    if (after < last_returned_) reset();
    while (true) {
      const auto& top = heap_.front();
      if (top.time > horizon_) return std::nullopt;
      if (top.time > after) {
        ClockEvent ev{top.time, top.site, next_coin_[top.site]};
        last_returned_ = ev.time;
        pop_and_refill();
        return ev;
      }
      pop_and_refill();
    }
  }

  double peek_time() const { return heap_.front().time; }
  double horizon() const { return horizon_; }
  double rho() const { return rho_; }
  int n_sites() const { return n_sites_; }

 private:
  struct Entry {
    double time;
    int site;
  };
  // min-heap on (time, site): ties resolved toward the lower site index.
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.time != b.time) return a.time > b.time;
      return a.site > b.site;
    }
  };

  void advance_site(int s) {
    uint64_t k = ctr_[s]++;
    double dt = -std::log(to_unit_open_closed(counter_draw(keys_[s], 2 * k))) / clock_rate_;
    next_time_[s] += dt;
    next_coin_[s] = to_unit_half_open(counter_draw(keys_[s], 2 * k + 1)) < rho_ ? 1 : 0;
  }

  void pop_and_refill() {
    std::pop_heap(heap_.begin(), heap_.end(), Later{});
    int s = heap_.back().site;
    advance_site(s);
    heap_.back() = {next_time_[s], s};
    std::push_heap(heap_.begin(), heap_.end(), Later{});
  }

  uint64_t seed_;
  int n_sites_;
  double horizon_;
  double rho_;
  double clock_rate_;
  std::vector<int> key_map_;
  std::vector<uint64_t> keys_;
  std::vector<uint64_t> ctr_;
  std::vector<double> next_time_;
  std::vector<uint8_t> next_coin_;
  std::vector<Entry> heap_;
  double last_returned_ = 0.0;
};

inline EventSchedule make_schedule(const EnvParams& params, double horizon, uint64_t seed,
                                   std::vector<int> site_key_map = {}) {
  params.validate();
  return EventSchedule(seed, params.topology.L, horizon, params.rho, params.kind.clock_rate(),
                       std::move(site_key_map));
}

// Apply one clock ring: refresh to the coin value when the constraint holds.
inline EventOutcome apply_event(SpinConfiguration& cfg, const EnvKind& kind,
                                const ClockEvent& ev) {
  EventOutcome out;
  out.old_value = cfg.bits[ev.site];
  out.legal = constraint(kind, cfg, ev.site) != 0;
  if (out.legal) {
    cfg.bits[ev.site] = ev.coin;
    out.new_value = ev.coin;
    out.flipped = out.new_value != out.old_value;
  } else {
    out.new_value = out.old_value;
  }
  return out;
}

// Run the environment to the schedule horizon.  The observer sees every ring
// (legal or not) after it is applied.
template <class Observer>
uint64_t evolve(SpinConfiguration& cfg, const EnvKind& kind, EventSchedule& sched,
                Observer&& observe, double start = 0.0) {
  uint64_t n = 0;
  double t = start;
  while (auto ev = sched.next_event(t)) {
    t = ev->time;
    EventOutcome out = apply_event(cfg, kind, *ev);
    observe(*ev, out, cfg);
    ++n;
  }
  return n;
}

inline uint64_t evolve(SpinConfiguration& cfg, const EnvKind& kind, EventSchedule& sched,
                       double start = 0.0) {
  return evolve(cfg, kind, sched, [](const ClockEvent&, const EventOutcome&,
                                     const SpinConfiguration&) {}, start);
}

// First legal ring time at `site` (the configuration is evolved along the
// way); +infinity if none occurs before the schedule horizon.
inline double first_legal_ring_time(SpinConfiguration cfg, const EnvKind& kind,
                                    EventSchedule& sched, int site) {
  double t = 0.0;
  while (auto ev = sched.next_event(t)) {
    t = ev->time;
    EventOutcome out = apply_event(cfg, kind, *ev);
    if (ev->site == site && out.legal) return t;
  }
  return std::numeric_limits<double>::infinity();
}

}  // namespace eastwalk
