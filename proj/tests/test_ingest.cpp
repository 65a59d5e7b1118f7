#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "support.hpp"

using namespace pie;
using pie::testing::random_log;

TEST(ParseLog, EmptyStreamGivesEmptyLog) {
  std::istringstream in("");
  EXPECT_TRUE(parse_log(in).events.empty());
}

TEST(ParseLog, WellFormedLine) {
  std::istringstream in(
      R"({"user_id":"u1","creator_id":"c1","video_id":"v1","day":0,"kind":"engagement","weight":1.0,"from_exploration":false})");
  const EventLog log = parse_log(in);
  ASSERT_EQ(log.events.size(), 1u);
  const auto& e = log.events[0];
  EXPECT_EQ(log.users.name(e.user), "u1");
  EXPECT_EQ(log.creators.name(e.creator), "c1");
  EXPECT_EQ(log.videos.name(e.video), "v1");
  EXPECT_EQ(e.day, 0);
  EXPECT_EQ(e.kind, EventKind::engagement);
  EXPECT_DOUBLE_EQ(e.weight, 1.0);
  EXPECT_FALSE(e.from_exploration);
}

TEST(ParseLog, OptionalFieldsDefault) {
  std::istringstream in(R"({"user_id":"u","creator_id":"c","video_id":"v","day":3,"kind":"impression"})");
  const EventLog log = parse_log(in);
  ASSERT_EQ(log.events.size(), 1u);
  EXPECT_DOUBLE_EQ(log.events[0].weight, 1.0);
  EXPECT_FALSE(log.events[0].from_exploration);
}

TEST(ParseLog, NegativeWeightIsValidationError) {
  std::istringstream in(
      R"({"user_id":"u1","creator_id":"c1","video_id":"v1","day":0,"kind":"engagement","weight":-1,"from_exploration":false})");
  try {
    parse_log(in);
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("weight"), std::string::npos);
  }
}

TEST(ParseLog, NegativeDayIsValidationError) {
  std::istringstream in(R"({"user_id":"u","creator_id":"c","video_id":"v","day":-2,"kind":"impression"})");
  EXPECT_THROW(parse_log(in), ValidationError);
}

TEST(ParseLog, ZeroWeightEngagementRejected) {
  std::istringstream in(
      R"({"user_id":"u","creator_id":"c","video_id":"v","day":1,"kind":"engagement","weight":0})");
  EXPECT_THROW(parse_log(in), ValidationError);
}

TEST(ParseLog, MalformedLineCarriesLineNumber) {
  std::istringstream in(
      "{\"user_id\":\"u\",\"creator_id\":\"c\",\"video_id\":\"v\",\"day\":1,\"kind\":\"impression\"}\n"
      "\n"
      "{\"user_id\":\"u\",\"creator_id\":\"c\"");
  try {
    parse_log(in);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(ParseLog, RejectsUnknownKeysAndBadTypes) {
  const char* bad[] = {
      R"({"user_id":"u","creator_id":"c","video_id":"v","day":1,"kind":"impression","extra":1})",
      R"({"user_id":"u","creator_id":"c","video_id":"v","day":"1","kind":"impression"})",
      R"({"user_id":"u","creator_id":"c","video_id":"v","day":1,"kind":"click"})",
      R"({"user_id":"u","creator_id":"c","day":1,"kind":"impression"})",
      R"([1,2,3])",
  };
  for (const char* line : bad) {
    std::istringstream in(line);
    EXPECT_THROW(parse_log(in), ParseError) << line;
  }
}

TEST(ParseLog, RoundTripThroughWriter) {
  const auto events = random_log(300, {}, 7);
  EventLog log;
  for (std::uint32_t u = 0; u < 10; ++u) log.users.intern("user " + std::to_string(u));
  for (std::uint32_t c = 0; c < 8; ++c) log.creators.intern("c\"" + std::to_string(c));
  for (std::uint32_t v = 0; v < 24; ++v) log.videos.intern("v" + std::to_string(v));
  log.events = events;
  std::ostringstream out;
  write_log(out, log);
  std::istringstream in(out.str());
  const EventLog back = parse_log(in);
  ASSERT_EQ(back.events.size(), events.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& a = events[i];
    const auto& b = back.events[i];
    EXPECT_EQ(back.users.name(b.user), log.users.name(a.user));
    EXPECT_EQ(back.creators.name(b.creator), log.creators.name(a.creator));
    EXPECT_EQ(back.videos.name(b.video), log.videos.name(a.video));
    EXPECT_EQ(a.day, b.day);
    EXPECT_EQ(a.kind, b.kind);
    EXPECT_EQ(a.weight, b.weight);
    EXPECT_EQ(a.from_exploration, b.from_exploration);
  }
}

TEST(ValidateLog, EngagementNeedsEarlierImpression) {
  std::vector<EngagementEvent> ev(2);
  ev[0].day = 2;
  ev[0].kind = EventKind::impression;
  ev[1].day = 1;
  ev[1].kind = EventKind::engagement;
  EXPECT_THROW(validate_log(ev), ValidationError);
  ev[1].day = 2;
  EXPECT_NO_THROW(validate_log(ev));
  EXPECT_NO_THROW(validate_log(random_log(500, {}, 3)));
}

TEST(WindowEvents, Basic) {
  std::vector<EngagementEvent> ev(3);
  for (int d = 0; d < 3; ++d) ev[d].day = d;
  const auto w = window_events(ev, 1, 2);
  ASSERT_EQ(w.size(), 2u);
  EXPECT_EQ(w[0].day, 1);
  EXPECT_EQ(w[1].day, 2);

  std::vector<EngagementEvent> zeros(4);
  EXPECT_TRUE(window_events(zeros, 5, 5).empty());
  EXPECT_THROW(window_events(zeros, 3, 2), std::invalid_argument);
}

TEST(WindowEvents, MatchesLinearScanAndIsIdempotent) {
  const auto ev = random_log(1000, {}, 11);
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::int32_t a = static_cast<std::int32_t>(rng() % 25) - 2;
    std::int32_t b = a + static_cast<std::int32_t>(rng() % 10);
    std::vector<EngagementEvent> expect;
    for (const auto& e : ev)
      if (e.day >= a && e.day <= b) expect.push_back(e);
    const auto got = window_events(ev, a, b);
    ASSERT_EQ(got.size(), expect.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_EQ(got[i].day, expect[i].day);
      EXPECT_EQ(got[i].user, expect[i].user);
      EXPECT_EQ(got[i].video, expect[i].video);
    }
    EXPECT_EQ(window_events(got, a, b).size(), got.size());
  }
}

TEST(BuildHistories, EmptyAndCounting) {
  EXPECT_TRUE(build_histories({}).empty());
  std::vector<EngagementEvent> ev;
  for (int d = 1; d <= 3; ++d) {
    EngagementEvent e;
    e.user = UserId(1);
    e.creator = CreatorId(1);
    e.day = d;
    e.kind = EventKind::engagement;
    ev.push_back(e);
  }
  const auto h = build_histories(ev);
  const auto& s = h.at(UserId(1)).creators.at(CreatorId(1));
  EXPECT_EQ(s.engagement_count, 3);
  EXPECT_EQ(s.first_day, 1);
  EXPECT_EQ(s.last_day, 3);
}

TEST(BuildHistories, MatchesNestedLoopGroupBy) {
  const auto ev = random_log(500, {}, 21);
  const auto h = build_histories(ev);
  std::set<std::pair<UserId, CreatorId>> pairs;
  for (const auto& e : ev) pairs.insert({e.user, e.creator});
  std::size_t seen = 0;
  for (const auto& [u, c] : pairs) {
    CreatorSummary want;
    bool first = true;
    for (const auto& e : ev) {
      if (e.user != u || e.creator != c) continue;
      if (first) want.first_day = want.last_day = e.day;
      first = false;
      want.first_day = std::min(want.first_day, e.day);
      want.last_day = std::max(want.last_day, e.day);
      if (e.kind == EventKind::impression) {
        ++want.impression_count;
      } else {
        ++want.engagement_count;
        want.engagement_weight_sum += e.weight;
      }
    }
    const auto& got = h.at(u).creators.at(c);
    EXPECT_EQ(got.first_day, want.first_day);
    EXPECT_EQ(got.last_day, want.last_day);
    EXPECT_EQ(got.impression_count, want.impression_count);
    EXPECT_EQ(got.engagement_count, want.engagement_count);
    EXPECT_NEAR(got.engagement_weight_sum, want.engagement_weight_sum, 1e-12);
    EXPECT_LE(got.engagement_count, got.impression_count);
    ++seen;
  }
  std::size_t total = 0;
  for (const auto& [_, hist] : h) total += hist.creators.size();
  EXPECT_EQ(total, seen);
}

TEST(BuildHistories, PermutationInvariantAndConservesEngagements) {
  auto ev = random_log(600, {}, 33);
  const auto h1 = build_histories(ev);
  std::shuffle(ev.begin(), ev.end(), Rng(4));
  const auto h2 = build_histories(ev);
  ASSERT_EQ(h1.size(), h2.size());
  std::int64_t engagements = 0;
  for (const auto& [u, hist] : h1) {
    const auto& other = h2.at(u).creators;
    ASSERT_EQ(hist.creators.size(), other.size());
    for (const auto& [c, s] : hist.creators) {
      const auto& t = other.at(c);
      EXPECT_EQ(s.impression_count, t.impression_count);
      EXPECT_EQ(s.engagement_count, t.engagement_count);
      EXPECT_EQ(s.first_day, t.first_day);
      EXPECT_EQ(s.last_day, t.last_day);
      EXPECT_NEAR(s.engagement_weight_sum, t.engagement_weight_sum, 1e-9);
      engagements += s.engagement_count;
    }
  }
  EXPECT_EQ(engagements, std::count_if(ev.begin(), ev.end(), [](const auto& e) {
              return e.kind == EventKind::engagement;
            }));
}

TEST(IdTable, InternIsStable) {
  CreatorTable t;
  const auto a = t.intern("alpha");
  const auto b = t.intern("beta");
  EXPECT_EQ(t.intern("alpha"), a);
  EXPECT_NE(a, b);
  EXPECT_EQ(t.name(b), "beta");
  EXPECT_TRUE(t.contains("alpha"));
  EXPECT_FALSE(t.contains("gamma"));
  EXPECT_THROW(t.at("gamma"), std::out_of_range);
}
