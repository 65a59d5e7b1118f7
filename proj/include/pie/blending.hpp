#pragma once

// Session-level explore/exploit blending that keeps the share of exploration
// slots on a configured target.

#include <optional>
#include <stdexcept>
#include <string>
#include <type_traits>

#include "pie/ids.hpp"
#include "pie/random.hpp"

namespace pie {

enum class BlendMode : std::uint8_t { credit, bernoulli };

inline BlendMode blend_mode_from_string(const std::string& s) {
  if (s == "credit") return BlendMode::credit;
  if (s == "bernoulli") return BlendMode::bernoulli;
  throw std::invalid_argument("blending.mode must be \"credit\" or \"bernoulli\"");
}

inline const char* to_string(BlendMode m) {
  return m == BlendMode::credit ? "credit" : "bernoulli";
}

struct SessionComposition {
  double target_share{0.06};
  std::int64_t slots_served{0};
  std::int64_t exploration_served{0};
};

// Absorbs rounding in target_share * slots so exact multiples fire on time.
inline constexpr double kCreditEpsilon = 1e-9;

// True once the session has accrued a full slot of exploration deficit.
inline bool should_slot_exploration(const SessionComposition& s) {
  const double credit = s.target_share * static_cast<double>(s.slots_served + 1) -
                        static_cast<double>(s.exploration_served);
  return credit >= 1.0 - kCreditEpsilon;
}

struct FeedItem {
  CreatorId creator;
  VideoId video;
};

enum class Provenance : std::uint8_t { exploit, exploration };

struct BlendedSlot {
  FeedItem item;
  Provenance provenance{Provenance::exploit};
};

// Decides one slot. `exploit` exposes empty() and take(); its next item is
// consumed only when served. `pick` is called only when an exploration slot is
// due and returns std::nullopt when nothing is available; the deficit then
// stays in place so the next available pick fires immediately.
template <typename ExploitSource, typename PickFn>
  requires std::is_invocable_r_v<std::optional<FeedItem>, PickFn&>
BlendedSlot blend_slot(ExploitSource& exploit, PickFn&& pick, SessionComposition& s,
                       BlendMode mode = BlendMode::credit, Rng* rng = nullptr) {
  bool due = false;
  if (mode == BlendMode::credit) {
    due = should_slot_exploration(s);
  } else {
    if (rng == nullptr) throw std::invalid_argument("blend_slot: bernoulli mode needs an rng");
    due = uniform01(*rng) < s.target_share;
  }
  std::optional<FeedItem> exploration;
  if (due || exploit.empty()) exploration = pick();
  if (exploration && (due || exploit.empty())) {
    ++s.slots_served;
    ++s.exploration_served;
    return {*exploration, Provenance::exploration};
  }
  if (exploit.empty()) throw std::invalid_argument("blend_slot: both sources are empty");
  ++s.slots_served;
  return {exploit.take(), Provenance::exploit};
}

template <typename ExploitSource>
BlendedSlot blend_slot(ExploitSource& exploit, const std::optional<FeedItem>& exploration_pick,
                       SessionComposition& s, BlendMode mode = BlendMode::credit,
                       Rng* rng = nullptr) {
  return blend_slot(exploit, [&] { return exploration_pick; }, s, mode, rng);
}

// Cursor over a precomputed exploit feed.
template <typename Range>
class FeedCursor {
 public:
  explicit FeedCursor(const Range& feed) : feed_(&feed) {}
  bool empty() const { return pos_ >= feed_->size(); }
  FeedItem take() { return (*feed_)[pos_++]; }
  std::size_t consumed() const { return pos_; }

 private:
  const Range* feed_;
  std::size_t pos_{0};
};

}  // namespace pie
