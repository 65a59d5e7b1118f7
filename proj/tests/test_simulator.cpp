#include <gtest/gtest.h>

#include <map>

#include "support.hpp"

using namespace pie;

namespace {

WorldConfig small_world() {
  WorldConfig c;
  c.n_users = 60;
  c.n_creators = 40;
  c.n_topics = 8;
  c.videos_per_creator = 4;
  c.session_len = 30;
  c.days = 6;
  c.global_seed = 17;
  return c;
}

bool same_events(const std::vector<EngagementEvent>& a, const std::vector<EngagementEvent>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& x = a[i];
    const auto& y = b[i];
    if (x.user != y.user || x.creator != y.creator || x.video != y.video || x.day != y.day ||
        x.kind != y.kind || x.weight != y.weight || x.from_exploration != y.from_exploration)
      return false;
  }
  return true;
}

}  // namespace

TEST(GenerateWorld, ShapeAndMasks) {
  const World w = generate_world(small_world());
  EXPECT_EQ(w.n_users(), 60u);
  EXPECT_EQ(w.n_creators(), 40u);
  EXPECT_EQ(w.catalog.size(), 40u);
  for (const auto& t : w.truth.topic_creators) EXPECT_EQ(t.size(), 5u);
  for (int u = 0; u < 60; ++u) {
    EXPECT_EQ(w.truth.high_topics[u].size(), 3u);
    EXPECT_EQ(w.truth.hidden_topics[u].size(), 1u);
    for (auto t : w.truth.hidden_topics[u])
      EXPECT_DOUBLE_EQ(w.truth.topic_affinity(UserId(u), t), 0.6);
  }

  auto cfg = small_world();
  cfg.hidden_interest_fraction = 0.0;
  const World none = generate_world(cfg);
  for (auto h : none.truth.hidden) EXPECT_EQ(h, 0);
}

TEST(GenerateWorld, SameSeedSameWorld) {
  const World a = generate_world(small_world());
  const World b = generate_world(small_world());
  EXPECT_EQ(a.truth.creator_topic, b.truth.creator_topic);
  EXPECT_EQ(a.truth.affinity, b.truth.affinity);
  EXPECT_EQ(a.truth.hidden, b.truth.hidden);
  auto cfg = small_world();
  cfg.global_seed = 18;
  EXPECT_NE(generate_world(cfg).truth.affinity, a.truth.affinity);
}

TEST(GenerateWorld, SingleTopic) {
  auto cfg = small_world();
  cfg.n_topics = 1;
  cfg.hidden_interest_fraction = 0.0;
  const World w = generate_world(cfg);
  for (auto t : w.truth.creator_topic) EXPECT_EQ(t, 0u);
  for (int u = 0; u < cfg.n_users; ++u)
    EXPECT_DOUBLE_EQ(w.truth.topic_affinity(UserId(u), 0), cfg.affinity_high);
}

TEST(EngageProbability, Formula) {
  GroundTruth gt;
  gt.n_users = 1;
  gt.n_topics = 2;
  gt.creator_topic = {0, 1};
  gt.affinity = {0.8, 0.0};
  gt.hidden = {0, 0};
  EXPECT_DOUBLE_EQ(engage_probability(gt, UserId(0), CreatorId(1), 0, 0.9), 0.0);
  EXPECT_DOUBLE_EQ(engage_probability(gt, UserId(0), CreatorId(1), 5, 0.9), 0.0);
  EXPECT_DOUBLE_EQ(engage_probability(gt, UserId(0), CreatorId(0), 0, 0.9), 0.8);
  EXPECT_NEAR(engage_probability(gt, UserId(0), CreatorId(0), 3, 0.9), 0.5832, 1e-12);
}

TEST(Bootstrap, HiddenTopicsNeverShownAndCountsExact) {
  const World w = generate_world(small_world());
  const auto ev = bootstrap_logs(w, 3);
  EXPECT_TRUE(bootstrap_logs(w, 0).empty());
  std::map<std::int32_t, std::int64_t> per_day;
  for (const auto& e : ev) {
    EXPECT_FALSE(w.truth.is_hidden(e.user, e.creator));
    EXPECT_FALSE(e.from_exploration);
    if (e.kind == EventKind::impression) ++per_day[e.day];
  }
  ASSERT_EQ(per_day.size(), 3u);
  for (const auto& [_, n] : per_day) EXPECT_EQ(n, 60 * 30);
  EXPECT_NO_THROW(validate_log(ev));
}

TEST(RunDay, ExplorationDisabledMeansNoExplorationEvents) {
  const World w = generate_world(small_world());
  Simulator sim(w, {});
  const auto boot = sim.bootstrap(3);
  const auto model = train(make_corpus(boot, true, std::nullopt, 0), 5.0);
  std::vector<UserId> users;
  std::vector<ServingPolicy> policies;
  for (std::uint32_t u = 0; u < 60; ++u) {
    users.emplace_back(u);
    policies.push_back({&model, nullptr, 0.06, BlendMode::credit});
  }
  const auto day = sim.run_day(users, policies, 3);
  std::map<std::uint32_t, int> imps;
  for (const auto& e : day) {
    EXPECT_FALSE(e.from_exploration);
    if (e.kind == EventKind::impression) ++imps[e.user.value];
  }
  for (const auto& [_, n] : imps) EXPECT_EQ(n, 30);
}

TEST(RunDay, SixExplorationImpressionsPerHundredSlots) {
  auto cfg = small_world();
  cfg.session_len = 100;
  const World w = generate_world(cfg);
  Simulator sim(w, {});
  const auto boot = sim.bootstrap(2);
  const auto model = train(make_corpus(boot, true, std::nullopt, 0), 5.0);
  std::vector<UserId> users;
  std::vector<UserBandit> bandits;
  bandits.reserve(60);
  std::vector<ServingPolicy> policies;
  for (std::uint32_t u = 0; u < 60; ++u) {
    users.emplace_back(u);
    std::vector<CreatorId> arms;
    for (std::uint32_t c = 0; c < 40; ++c) arms.emplace_back(c);
    bandits.emplace_back(UserId(u), arms, 1.0, 1.0, u);
    policies.push_back({&model, &bandits.back(), 0.06, BlendMode::credit});
  }
  const auto day = sim.run_day(users, policies, 2);
  std::map<std::uint32_t, int> explored, engaged;
  for (const auto& e : day)
    if (e.from_exploration) (e.kind == EventKind::impression ? explored : engaged)[e.user.value]++;
  ASSERT_EQ(explored.size(), 60u);
  for (const auto& [_, n] : explored) EXPECT_EQ(n, 6);
  // Bandit bookkeeping mirrors the served exploration outcomes.
  for (std::uint32_t u = 0; u < 60; ++u) {
    std::int64_t imps = 0, engs = 0;
    for (const auto& [_, a] : bandits[u].arms()) {
      imps += a.impressions;
      engs += a.engagements;
    }
    EXPECT_EQ(imps, 6);
    EXPECT_EQ(engs, engaged[u]);
  }
}

TEST(RunDay, Deterministic) {
  const World w = generate_world(small_world());
  auto run = [&] {
    Simulator sim(w, {});
    auto ev = sim.bootstrap(2);
    const auto model = train(make_corpus(ev, true, std::nullopt, 0), 5.0);
    std::vector<UserId> users;
    std::vector<UserBandit> bandits;
    bandits.reserve(60);
    std::vector<ServingPolicy> policies;
    for (std::uint32_t u = 0; u < 60; ++u) {
      users.emplace_back(u);
      bandits.emplace_back(UserId(u), std::vector<CreatorId>{CreatorId(u % 40), CreatorId((u + 7) % 40)},
                           1.0, 1.0, 1000 + u);
      policies.push_back({&model, &bandits.back(), 0.1, BlendMode::credit});
    }
    for (int d = 2; d < 5; ++d) {
      auto day = sim.run_day(users, policies, d);
      ev.insert(ev.end(), day.begin(), day.end());
    }
    return ev;
  };
  EXPECT_TRUE(same_events(run(), run()));
}

TEST(RunDay, ConservationAndPolicyArity) {
  const World w = generate_world(small_world());
  Simulator sim(w, {});
  const auto boot = sim.bootstrap(1);
  const std::vector<UserId> users{UserId(0)};
  EXPECT_THROW(sim.run_day(users, {}, 1), std::invalid_argument);
  std::int64_t imps = 0, engs = 0;
  for (const auto& e : boot) (e.kind == EventKind::impression ? imps : engs)++;
  EXPECT_EQ(imps, 60 * 30);
  EXPECT_LE(engs, imps);
}

TEST(Simulator, HiddenInterestsOnlyReachableThroughExploration) {
  auto cfg = small_world();
  cfg.days = 10;
  std::int64_t with_exploration = 0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    cfg.global_seed = seed;
    const World w = generate_world(cfg);
    for (bool explore : {false, true}) {
      Simulator sim(w, {});
      auto boot = sim.bootstrap(3);
      const auto model = train(make_corpus(boot, true, std::nullopt, 0), 5.0);
      std::vector<UserId> users;
      std::vector<UserBandit> bandits;
      bandits.reserve(60);
      std::vector<ServingPolicy> policies;
      for (std::uint32_t u = 0; u < 60; ++u) {
        users.emplace_back(u);
        std::vector<CreatorId> arms;
        for (std::uint32_t c = 0; c < 40; ++c) arms.emplace_back(c);
        bandits.emplace_back(UserId(u), arms, 1.0, 1.0, seed * 100 + u);
        policies.push_back({&model, explore ? &bandits.back() : nullptr, 0.06, BlendMode::credit});
      }
      std::int64_t hidden = 0;
      for (int d = 3; d < 3 + cfg.days; ++d)
        for (const auto& e : sim.run_day(users, policies, d))
          hidden += e.kind == EventKind::engagement && w.truth.is_hidden(e.user, e.creator);
      if (!explore)
        EXPECT_EQ(hidden, 0);
      else
        with_exploration += hidden;
    }
  }
  EXPECT_GT(with_exploration, 0);
}

TEST(WorldConfig, Validation) {
  auto c = small_world();
  c.affinity_low = 0.7;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = small_world();
  c.fatigue_decay = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = small_world();
  c.n_users = 0;
  EXPECT_THROW(generate_world(c), std::invalid_argument);
}
