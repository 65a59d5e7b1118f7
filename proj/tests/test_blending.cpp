#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace pie;

namespace {

std::vector<FeedItem> exploit_feed(std::size_t n) {
  std::vector<FeedItem> feed;
  for (std::size_t i = 0; i < n; ++i)
    feed.push_back({CreatorId(0), VideoId(static_cast<std::uint32_t>(i))});
  return feed;
}

const FeedItem kExplore{CreatorId(99), VideoId(999)};

}  // namespace

TEST(ShouldSlot, FirstExplorationAtSlot17) {
  SessionComposition s;
  s.target_share = 0.06;
  for (int slot = 1; slot <= 17; ++slot) {
    const bool due = should_slot_exploration(s);
    EXPECT_EQ(due, slot == 17) << "slot " << slot;
    ++s.slots_served;
    s.exploration_served += due;
  }
}

TEST(ShouldSlot, ExtremeTargets) {
  SessionComposition zero{0.0, 0, 0}, one{1.0, 0, 0};
  for (int i = 0; i < 200; ++i) {
    EXPECT_FALSE(should_slot_exploration(zero));
    EXPECT_TRUE(should_slot_exploration(one));
    ++zero.slots_served;
    ++one.slots_served;
    ++one.exploration_served;
  }
}

TEST(BlendSlot, ExactlySixInHundred) {
  const auto feed = exploit_feed(100);
  FeedCursor cursor(feed);
  SessionComposition s;
  int explored = 0;
  for (int i = 0; i < 100; ++i) {
    const auto slot = blend_slot(cursor, std::optional<FeedItem>(kExplore), s);
    explored += slot.provenance == Provenance::exploration;
    EXPECT_EQ(slot.provenance == Provenance::exploration, slot.item.creator == CreatorId(99));
  }
  EXPECT_EQ(explored, 6);
  EXPECT_EQ(s.exploration_served, 6);
  EXPECT_EQ(cursor.consumed(), 94u);
}

TEST(BlendSlot, DeficitCarriesForward) {
  const auto feed = exploit_feed(40);
  FeedCursor cursor(feed);
  SessionComposition s;
  for (int i = 0; i < 16; ++i) blend_slot(cursor, std::optional<FeedItem>(kExplore), s);
  // Slot 17 is due but nothing is available.
  auto slot = blend_slot(cursor, std::optional<FeedItem>(), s);
  EXPECT_EQ(slot.provenance, Provenance::exploit);
  EXPECT_TRUE(should_slot_exploration(s));
  slot = blend_slot(cursor, std::optional<FeedItem>(kExplore), s);
  EXPECT_EQ(slot.provenance, Provenance::exploration);
}

TEST(BlendSlot, PickOnlyCalledWhenDue) {
  const auto feed = exploit_feed(100);
  FeedCursor cursor(feed);
  SessionComposition s;
  int calls = 0;
  auto pick = [&]() -> std::optional<FeedItem> {
    ++calls;
    return kExplore;
  };
  for (int i = 0; i < 100; ++i) blend_slot(cursor, pick, s);
  EXPECT_EQ(calls, 6);
}

TEST(BlendSlot, FallsBackWhenOneSourceIsEmpty) {
  std::vector<FeedItem> none;
  FeedCursor empty(none);
  SessionComposition s;
  auto slot = blend_slot(empty, std::optional<FeedItem>(kExplore), s);
  EXPECT_EQ(slot.provenance, Provenance::exploration);
  EXPECT_THROW(blend_slot(empty, std::optional<FeedItem>(), s), std::invalid_argument);
}

TEST(BlendSlot, BoundedDeviationOverLongRun) {
  for (double target : {0.01, 0.06, 0.25, 0.5, 1.0 / 3.0}) {
    const auto feed = exploit_feed(20000);
    FeedCursor cursor(feed);
    SessionComposition s;
    s.target_share = target;
    std::int64_t gaps = 0, last = 0;
    for (int i = 0; i < 20000; ++i) {
      const auto slot = blend_slot(cursor, std::optional<FeedItem>(kExplore), s);
      EXPECT_LT(std::abs(static_cast<double>(s.exploration_served) - target * s.slots_served), 1.0);
      if (slot.provenance == Provenance::exploration) {
        gaps = std::max(gaps, s.slots_served - last);
        last = s.slots_served;
      }
    }
    // Exploration keeps recurring.
    EXPECT_LE(gaps, static_cast<std::int64_t>(std::ceil(1.0 / target)) + 1);
  }
}

TEST(BlendSlot, BernoulliModeNeedsRngAndHitsShareOnAverage) {
  const auto feed = exploit_feed(100000);
  FeedCursor cursor(feed);
  SessionComposition s;
  EXPECT_THROW(blend_slot(cursor, std::optional<FeedItem>(kExplore), s, BlendMode::bernoulli),
               std::invalid_argument);
  Rng rng(8);
  for (int i = 0; i < 50000; ++i)
    blend_slot(cursor, std::optional<FeedItem>(kExplore), s, BlendMode::bernoulli, &rng);
  EXPECT_NEAR(static_cast<double>(s.exploration_served) / s.slots_served, 0.06, 0.005);
}

TEST(BlendMode, StringRoundTrip) {
  EXPECT_EQ(blend_mode_from_string("credit"), BlendMode::credit);
  EXPECT_EQ(blend_mode_from_string(to_string(BlendMode::bernoulli)), BlendMode::bernoulli);
  EXPECT_THROW(blend_mode_from_string("nope"), std::invalid_argument);
}
