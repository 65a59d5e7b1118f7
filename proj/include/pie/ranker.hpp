#pragma once

// Exploit-side stand-in recommender: a shrinkage count model of engagement
// probability trained from logged impressions.

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "pie/bandit.hpp"
#include "pie/blending.hpp"
#include "pie/ids.hpp"
#include "pie/ingest.hpp"
#include "pie/ppr.hpp"
#include "pie/random.hpp"

namespace pie {

struct TrainingExample {
  UserId user;
  CreatorId creator;
  std::uint8_t label{0};
  bool from_exploration{false};

  friend bool operator==(const TrainingExample&, const TrainingExample&) = default;
};

struct TrainingCorpus {
  std::vector<TrainingExample> examples;

  std::size_t size() const { return examples.size(); }
  std::size_t exploration_count() const {
    return static_cast<std::size_t>(std::count_if(examples.begin(), examples.end(),
                                                  [](const auto& e) { return e.from_exploration; }));
  }
};

namespace detail {

struct ServeKey {
  std::uint32_t user;
  std::uint32_t video;
  std::int32_t day;
  friend bool operator==(const ServeKey&, const ServeKey&) = default;
};

struct ServeKeyHash {
  std::size_t operator()(const ServeKey& k) const noexcept {
    return static_cast<std::size_t>(
        splitmix64((static_cast<std::uint64_t>(k.user) << 32 | k.video) ^
                   splitmix64(static_cast<std::uint64_t>(static_cast<std::uint32_t>(k.day)))));
  }
};

}  // namespace detail

// One labelled example per impression, in log order. An impression is
// positive when an engagement for the same (user, video, day) exists; with
// repeated impressions, engagements label the earliest ones first.
inline std::vector<TrainingExample> label_impressions(std::span<const EngagementEvent> events) {
  std::unordered_map<detail::ServeKey, std::int64_t, detail::ServeKeyHash> engaged;
  for (const auto& e : events)
    if (e.kind == EventKind::engagement) ++engaged[{e.user.value, e.video.value, e.day}];
  std::vector<TrainingExample> out;
  for (const auto& e : events) {
    if (e.kind != EventKind::impression) continue;
    TrainingExample ex{e.user, e.creator, 0, e.from_exploration};
    auto it = engaged.find({e.user.value, e.video.value, e.day});
    if (it != engaged.end() && it->second > 0) {
      ex.label = 1;
      --it->second;
    }
    out.push_back(ex);
  }
  return out;
}

// Without exploration data this is Model A's corpus. With `match_size_to`,
// non-exploration examples are uniformly subsampled so the corpus has exactly
// that many examples while every exploration example is kept.
inline TrainingCorpus make_corpus(std::span<const EngagementEvent> events, bool include_exploration,
                                  std::optional<std::size_t> match_size_to, std::uint64_t seed) {
  auto labelled = label_impressions(events);
  TrainingCorpus corpus;
  if (!include_exploration) {
    std::copy_if(labelled.begin(), labelled.end(), std::back_inserter(corpus.examples),
                 [](const auto& e) { return !e.from_exploration; });
  } else {
    corpus.examples = std::move(labelled);
  }
  if (!match_size_to) return corpus;

  const std::size_t target = *match_size_to;
  if (target > corpus.size())
    throw std::invalid_argument("make_corpus: match_size_to exceeds available examples");
  const std::size_t exploration = corpus.exploration_count();
  if (target < exploration)
    throw std::invalid_argument(
        "make_corpus: match_size_to is smaller than the exploration example count");

  std::vector<std::size_t> plain;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    if (!corpus.examples[i].from_exploration) plain.push_back(i);
  const std::size_t keep_plain = target - exploration;
  Rng rng(seed);
  std::shuffle(plain.begin(), plain.end(), rng);
  plain.resize(keep_plain);
  std::vector<bool> keep(corpus.size(), false);
  for (std::size_t i : plain) keep[i] = true;
  std::vector<TrainingExample> out;
  out.reserve(target);
  for (std::size_t i = 0; i < corpus.size(); ++i)
    if (keep[i] || corpus.examples[i].from_exploration) out.push_back(corpus.examples[i]);
  corpus.examples = std::move(out);
  return corpus;
}

class RankerModel;
inline RankerModel train(const TrainingCorpus& corpus, double shrinkage);

class RankerModel {
 public:
  double shrinkage() const { return shrinkage_; }
  double global_rate() const { return global_rate_; }
  const std::map<CreatorId, double>& creator_rates() const { return creator_rates_; }
  const std::unordered_map<std::uint64_t, double>& pair_rates() const { return pair_rates_; }

  bool knows_pair(UserId u, CreatorId c) const { return pair_rates_.count(pair_key(u, c)) != 0; }

  double creator_rate(CreatorId c) const {
    auto it = creator_rates_.find(c);
    return it == creator_rates_.end() ? global_rate_ : it->second;
  }

  // Pair rate when trained on the pair, otherwise the creator's rate.
  double score(UserId u, CreatorId c) const {
    auto it = pair_rates_.find(pair_key(u, c));
    return it == pair_rates_.end() ? creator_rate(c) : it->second;
  }

  // Creators the model holds a pair rate for, best first.
  std::span<const ScoredCreator> known_creators(UserId u) const {
    auto it = by_user_.find(u);
    if (it == by_user_.end()) return {};
    return it->second;
  }

  nlohmann::json to_json(const UserTable* users = nullptr,
                         const CreatorTable* creators = nullptr) const {
    nlohmann::ordered_json j;
    j["shrinkage"] = shrinkage_;
    j["global_rate"] = global_rate_;
    auto cr = nlohmann::ordered_json::array();
    for (const auto& [c, r] : creator_rates_)
      cr.push_back({{"creator", creators ? nlohmann::ordered_json(creators->name(c))
                                         : nlohmann::ordered_json(c.value)},
                    {"rate", r}});
    j["creator_rates"] = std::move(cr);
    std::vector<std::uint64_t> keys;
    keys.reserve(pair_rates_.size());
    for (const auto& [k, _] : pair_rates_) keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    auto pr = nlohmann::ordered_json::array();
    for (auto k : keys) {
      const UserId u = key_user(k);
      const CreatorId c = key_creator(k);
      pr.push_back(
          {{"user", users ? nlohmann::ordered_json(users->name(u)) : nlohmann::ordered_json(u.value)},
           {"creator", creators ? nlohmann::ordered_json(creators->name(c))
                                : nlohmann::ordered_json(c.value)},
           {"rate", pair_rates_.at(k)}});
    }
    j["pair_rates"] = std::move(pr);
    return nlohmann::json(j);
  }

 private:
  friend RankerModel train(const TrainingCorpus&, double);

  double shrinkage_{1.0};
  double global_rate_{0.0};
  std::map<CreatorId, double> creator_rates_;
  std::unordered_map<std::uint64_t, double> pair_rates_;
  std::map<UserId, std::vector<ScoredCreator>> by_user_;
};

// Two-level shrinkage: pair -> creator -> global rate.
inline RankerModel train(const TrainingCorpus& corpus, double shrinkage) {
  if (corpus.examples.empty()) throw std::invalid_argument("train: empty corpus");
  if (!(shrinkage > 0.0)) throw std::invalid_argument("train: shrinkage must be positive");
  struct Counts {
    std::int64_t impressions{0};
    std::int64_t engagements{0};
  };
  Counts total;
  std::map<CreatorId, Counts> per_creator;
  std::unordered_map<std::uint64_t, Counts> per_pair;
  for (const auto& e : corpus.examples) {
    ++total.impressions;
    total.engagements += e.label;
    auto& c = per_creator[e.creator];
    ++c.impressions;
    c.engagements += e.label;
    auto& p = per_pair[pair_key(e.user, e.creator)];
    ++p.impressions;
    p.engagements += e.label;
  }
  RankerModel m;
  m.shrinkage_ = shrinkage;
  m.global_rate_ = static_cast<double>(total.engagements) / static_cast<double>(total.impressions);
  for (const auto& [c, n] : per_creator)
    m.creator_rates_[c] = (static_cast<double>(n.engagements) + shrinkage * m.global_rate_) /
                          (static_cast<double>(n.impressions) + shrinkage);
  m.pair_rates_.reserve(per_pair.size());
  for (const auto& [k, n] : per_pair) {
    const double prior = m.creator_rates_.at(key_creator(k));
    const double rate = (static_cast<double>(n.engagements) + shrinkage * prior) /
                        (static_cast<double>(n.impressions) + shrinkage);
    m.pair_rates_.emplace(k, rate);
    m.by_user_[key_user(k)].push_back({key_creator(k), rate});
  }
  for (auto& [_, list] : m.by_user_) std::sort(list.begin(), list.end(), ranks_before);
  return m;
}

// Orders the catalog's creators by model score and deals one video per
// creator per round until the feed is full or the catalog is exhausted.
inline std::vector<FeedItem> rank_feed(const RankerModel& model, UserId user,
                                       const Catalog& catalog, std::size_t feed_len, Rng& rng) {
  std::vector<ScoredCreator> order;
  order.reserve(catalog.size());
  for (const auto& [c, videos] : catalog)
    if (!videos.empty()) order.push_back({c, model.score(user, c)});
  std::sort(order.begin(), order.end(), ranks_before);

  std::vector<std::vector<VideoId>> decks;
  decks.reserve(order.size());
  std::size_t available = 0;
  for (const auto& sc : order) {
    auto deck = catalog.at(sc.creator);
    std::shuffle(deck.begin(), deck.end(), rng);
    available += deck.size();
    decks.push_back(std::move(deck));
  }
  const std::size_t n = std::min(feed_len, available);
  std::vector<FeedItem> feed;
  feed.reserve(n);
  for (std::size_t round = 0; feed.size() < n; ++round) {
    for (std::size_t i = 0; i < order.size() && feed.size() < n; ++i)
      if (round < decks[i].size()) feed.push_back({order[i].creator, decks[i][round]});
  }
  return feed;
}

}  // namespace pie
