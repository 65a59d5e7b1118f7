#pragma once

// Synthetic recommender world: users with partially hidden topic interests,
// single-topic creators, a fatigue-aware engagement model, and the daily
// serving loop that blends exploit feeds with exploration picks.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pie/bandit.hpp"
#include "pie/blending.hpp"
#include "pie/ids.hpp"
#include "pie/ingest.hpp"
#include "pie/random.hpp"
#include "pie/ranker.hpp"

namespace pie {

struct WorldConfig {
  int n_users = 2000;
  int n_creators = 200;
  int n_topics = 20;
  int videos_per_creator = 10;
  // Size of each user's high-affinity topic set (consecutive topics on a ring).
  int interests_per_user = 3;
  double hidden_interest_fraction = 0.3;
  double affinity_high = 0.6;
  double affinity_low = 0.02;
  double fatigue_decay = 0.95;
  int session_len = 50;
  int days = 28;
  std::uint64_t global_seed = 1;
  // Zipf exponent of topic popularity when drawing a user's interest centre.
  double topic_popularity_skew = 1.0;
  // Share of bootstrap (and feed back-fill) slots given to random creators.
  double noise_share = 0.1;

  void validate() const {
    if (n_users < 1 || n_creators < 1 || n_topics < 1 || videos_per_creator < 1 ||
        interests_per_user < 1 || session_len < 1 || days < 1)
      throw std::invalid_argument("world: counts must be positive");
    auto prob = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!prob(hidden_interest_fraction) || !prob(affinity_high) || !prob(affinity_low) ||
        !prob(noise_share))
      throw std::invalid_argument("world: probabilities must be in [0, 1]");
    if (!(affinity_high > affinity_low))
      throw std::invalid_argument("world: affinity_high must exceed affinity_low");
    if (!(fatigue_decay > 0.0 && fatigue_decay <= 1.0))
      throw std::invalid_argument("world: fatigue_decay must be in (0, 1]");
    if (!(topic_popularity_skew >= 0.0))
      throw std::invalid_argument("world: topic_popularity_skew must be non-negative");
  }
};

struct GroundTruth {
  int n_users{0};
  int n_topics{0};
  std::vector<std::uint32_t> creator_topic;
  std::vector<std::vector<CreatorId>> topic_creators;
  std::vector<std::vector<std::uint32_t>> high_topics;    // per user
  std::vector<std::vector<std::uint32_t>> hidden_topics;  // per user, subset of high_topics
  std::vector<double> affinity;                           // users x topics
  std::vector<std::uint8_t> hidden;                       // users x topics

  double topic_affinity(UserId u, std::uint32_t t) const {
    return affinity[static_cast<std::size_t>(u.value) * n_topics + t];
  }
  double creator_affinity(UserId u, CreatorId c) const {
    return topic_affinity(u, creator_topic[c.value]);
  }
  bool is_hidden_topic(UserId u, std::uint32_t t) const {
    return hidden[static_cast<std::size_t>(u.value) * n_topics + t] != 0;
  }
  bool is_hidden(UserId u, CreatorId c) const {
    return is_hidden_topic(u, creator_topic[c.value]);
  }
};

struct World {
  WorldConfig cfg;
  GroundTruth truth;
  Catalog catalog;
  UserTable users;
  CreatorTable creators;
  VideoTable videos;

  std::size_t n_users() const { return users.size(); }
  std::size_t n_creators() const { return creators.size(); }
};

inline World generate_world(const WorldConfig& cfg) {
  cfg.validate();
  World w;
  w.cfg = cfg;
  GroundTruth& gt = w.truth;
  gt.n_users = cfg.n_users;
  gt.n_topics = cfg.n_topics;
  Rng rng = make_stream({cfg.global_seed, stream::kWorld});
  const auto T = static_cast<std::uint32_t>(cfg.n_topics);

  for (int u = 0; u < cfg.n_users; ++u) w.users.intern("u" + std::to_string(u));
  for (int c = 0; c < cfg.n_creators; ++c) {
    const CreatorId id = w.creators.intern("c" + std::to_string(c));
    auto& videos = w.catalog[id];
    for (int v = 0; v < cfg.videos_per_creator; ++v)
      videos.push_back(w.videos.intern("c" + std::to_string(c) + "_v" + std::to_string(v)));
  }

  // Balanced topic assignment: creator counts per topic differ by at most one.
  std::vector<std::uint32_t> topics(static_cast<std::size_t>(cfg.n_creators));
  for (std::size_t c = 0; c < topics.size(); ++c) topics[c] = static_cast<std::uint32_t>(c % T);
  std::shuffle(topics.begin(), topics.end(), rng);
  gt.creator_topic = topics;
  gt.topic_creators.assign(T, {});
  for (std::size_t c = 0; c < topics.size(); ++c)
    gt.topic_creators[topics[c]].push_back(CreatorId(static_cast<std::uint32_t>(c)));

  // Topic popularity: Zipf weights over a random ranking of topics.
  std::vector<std::uint32_t> rank(T);
  std::iota(rank.begin(), rank.end(), 0u);
  std::shuffle(rank.begin(), rank.end(), rng);
  std::vector<double> popularity(T);
  for (std::uint32_t t = 0; t < T; ++t)
    popularity[t] = 1.0 / std::pow(static_cast<double>(rank[t]) + 1.0, cfg.topic_popularity_skew);
  std::discrete_distribution<std::uint32_t> pick_centre(popularity.begin(), popularity.end());

  const auto k = static_cast<std::uint32_t>(std::min(cfg.interests_per_user, cfg.n_topics));
  gt.affinity.assign(static_cast<std::size_t>(cfg.n_users) * T, cfg.affinity_low);
  gt.hidden.assign(static_cast<std::size_t>(cfg.n_users) * T, 0);
  gt.high_topics.resize(cfg.n_users);
  gt.hidden_topics.resize(cfg.n_users);
  const auto n_hidden = static_cast<std::size_t>(std::lround(cfg.hidden_interest_fraction * k));
  for (int u = 0; u < cfg.n_users; ++u) {
    const std::uint32_t centre = pick_centre(rng);
    auto& high = gt.high_topics[u];
    for (std::uint32_t i = 0; i < k; ++i) high.push_back((centre + T - k / 2 + i) % T);
    std::sort(high.begin(), high.end());
    for (auto t : high) gt.affinity[static_cast<std::size_t>(u) * T + t] = cfg.affinity_high;
    std::vector<std::uint32_t> shuffled = high;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    auto& hid = gt.hidden_topics[u];
    hid.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_hidden));
    std::sort(hid.begin(), hid.end());
    for (auto t : hid) gt.hidden[static_cast<std::size_t>(u) * T + t] = 1;
  }
  return w;
}

inline double engage_probability(const GroundTruth& gt, UserId user, CreatorId creator,
                                 std::int64_t unengaged_impressions, double fatigue_decay) {
  const double a = gt.creator_affinity(user, creator);
  if (a <= 0.0) return 0.0;
  return a * std::pow(fatigue_decay, static_cast<double>(unengaged_impressions));
}

// How one user is served on a given day.
struct ServingPolicy {
  const RankerModel* model{nullptr};
  UserBandit* bandit{nullptr};  // null: no exploration content
  double target_share{0.0};
  BlendMode mode{BlendMode::credit};
};

// Mutable world state: per (user, creator) run of impressions since the last
// engagement, which drives fatigue.
class Simulator {
 public:
  struct Options {
    int retrieval_k = 30;
    BanditParams bandit;
  };

  Simulator(const World& world, Options opts)
      : world_(&world), opts_(opts),
        unengaged_(world.n_users() * world.n_creators(), 0) {}

  const World& world() const { return *world_; }

  std::uint32_t unengaged(UserId u, CreatorId c) const {
    return unengaged_[index(u, c)];
  }

  // Exploit-only pre-experiment history: each slot shows a creator from the
  // user's visible high-affinity topics, or a random non-hidden creator with
  // probability noise_share. Hidden-topic creators are never shown.
  std::vector<EngagementEvent> bootstrap(int bootstrap_days) {
    std::vector<EngagementEvent> out;
    const auto& cfg = world_->cfg;
    for (int d = 0; d < bootstrap_days; ++d) {
      for (std::uint32_t u = 0; u < world_->n_users(); ++u) {
        const UserId user(u);
        Rng rng = make_stream({cfg.global_seed, stream::kBootstrap, u, static_cast<std::uint64_t>(d)});
        std::vector<CreatorId> visible;
        for (auto t : world_->truth.high_topics[u])
          if (!world_->truth.is_hidden_topic(user, t))
            visible.insert(visible.end(), world_->truth.topic_creators[t].begin(),
                           world_->truth.topic_creators[t].end());
        for (int slot = 0; slot < cfg.session_len; ++slot) {
          std::optional<CreatorId> c;
          if (!visible.empty() && !(uniform01(rng) < cfg.noise_share))
            c = visible[uniform_index(visible.size(), rng)];
          else
            c = noise_creator(user, rng);
          if (!c) continue;
          const VideoId v = select_video(*c, world_->catalog, rng);
          serve(user, {*c, v}, false, d, rng, out);
        }
      }
    }
    return out;
  }

  // One simulated day for the listed users, in the given order. Returns the
  // day's events ordered by (user order, slot). Bandits are updated in place.
  std::vector<EngagementEvent> run_day(std::span<const UserId> users,
                                       std::span<const ServingPolicy> policies, int day) {
    if (users.size() != policies.size())
      throw std::invalid_argument("run_day: one policy per user is required");
    std::vector<EngagementEvent> out;
    const auto& cfg = world_->cfg;
    const auto session = static_cast<std::size_t>(cfg.session_len);
    for (std::size_t i = 0; i < users.size(); ++i) {
      const UserId user = users[i];
      const ServingPolicy& policy = policies[i];
      Rng rng = make_stream({cfg.global_seed, stream::kServe, user.value, static_cast<std::uint64_t>(day)});
      Rng blend_rng = make_stream({cfg.global_seed, stream::kBlend, user.value, static_cast<std::uint64_t>(day)});

      std::vector<FeedItem> feed = exploit_feed(user, policy, session, rng);
      FeedCursor cursor(feed);
      SessionComposition comp;
      comp.target_share = policy.bandit ? policy.target_share : 0.0;
      auto pick = [&]() -> std::optional<FeedItem> {
        if (!policy.bandit) return std::nullopt;
        auto c = policy.bandit->select_creator();
        if (!c) return std::nullopt;
        return FeedItem{*c, select_video(*c, world_->catalog, rng)};
      };
      for (std::size_t slot = 0; slot < session; ++slot) {
        if (cursor.empty() && !policy.bandit) break;
        BlendedSlot s;
        try {
          s = blend_slot(cursor, pick, comp, policy.mode, &blend_rng);
        } catch (const std::invalid_argument&) {
          break;
        }
        const bool explore = s.provenance == Provenance::exploration;
        const bool engaged = serve(user, s.item, explore, day, rng, out);
        if (explore) policy.bandit->record_outcome(s.item.creator, engaged, opts_.bandit);
      }
    }
    return out;
  }

 private:
  std::size_t index(UserId u, CreatorId c) const {
    return static_cast<std::size_t>(u.value) * world_->n_creators() + c.value;
  }

  std::optional<CreatorId> noise_creator(UserId user, Rng& rng) const {
    const auto n = world_->n_creators();
    for (int attempt = 0; attempt < 64; ++attempt) {
      const CreatorId c(static_cast<std::uint32_t>(uniform_index(n, rng)));
      if (!world_->truth.is_hidden(user, c)) return c;
    }
    for (std::uint32_t c = 0; c < n; ++c)
      if (!world_->truth.is_hidden(user, CreatorId(c))) return CreatorId(c);
    return std::nullopt;
  }

  // Retrieval (the user's best-scored known creators) followed by ranking.
  // Short feeds are back-filled with random non-hidden creators.
  std::vector<FeedItem> exploit_feed(UserId user, const ServingPolicy& policy, std::size_t len,
                                     Rng& rng) const {
    std::vector<FeedItem> feed;
    if (policy.model) {
      Catalog pool;
      const auto known = policy.model->known_creators(user);
      const std::size_t k = std::min(known.size(), static_cast<std::size_t>(opts_.retrieval_k));
      for (std::size_t i = 0; i < k; ++i)
        pool.emplace(known[i].creator, world_->catalog.at(known[i].creator));
      feed = rank_feed(*policy.model, user, pool, len, rng);
    }
    while (feed.size() < len) {
      auto c = noise_creator(user, rng);
      if (!c) break;
      feed.push_back({*c, select_video(*c, world_->catalog, rng)});
    }
    return feed;
  }

  bool serve(UserId user, const FeedItem& item, bool explore, int day, Rng& rng,
             std::vector<EngagementEvent>& out) {
    auto& run = unengaged_[index(user, item.creator)];
    const double p =
        engage_probability(world_->truth, user, item.creator, run, world_->cfg.fatigue_decay);
    const bool engaged = uniform01(rng) < p;
    EngagementEvent e;
    e.user = user;
    e.creator = item.creator;
    e.video = item.video;
    e.day = day;
    e.kind = EventKind::impression;
    e.from_exploration = explore;
    e.weight = 1.0;
    out.push_back(e);
    if (engaged) {
      e.kind = EventKind::engagement;
      out.push_back(e);
      run = 0;
    } else if (run < UINT32_MAX) {
      ++run;
    }
    return engaged;
  }

  const World* world_;
  Options opts_;
  std::vector<std::uint32_t> unengaged_;
};

// Convenience wrapper: bootstrap history of a fresh world state.
inline std::vector<EngagementEvent> bootstrap_logs(const World& world, int bootstrap_days) {
  Simulator sim(world, {});
  return sim.bootstrap(bootstrap_days);
}

}  // namespace pie
