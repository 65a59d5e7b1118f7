#pragma once

// Strong creator connection metrics (SCC, SCC DAU, Novel SCC), engagement
// totals and per-topic interest histograms.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pie/ids.hpp"
#include "pie/ingest.hpp"
#include "pie/simulator.hpp"

namespace pie {

struct SccParams {
  int n_engagements = 3;          // N
  int window_days = 14;           // M
  int novelty_lookback_days = 28; // P

  void validate() const {
    if (n_engagements < 1 || window_days < 1 || novelty_lookback_days < 1)
      throw std::invalid_argument("scc: N, M and P must all be >= 1");
  }
};

using UserCreatorPair = std::pair<UserId, CreatorId>;
using PairSet = std::set<UserCreatorPair>;

// Engagement days per (user, creator), sorted, for repeated window queries.
class SccIndex {
 public:
  explicit SccIndex(std::span<const EngagementEvent> events) {
    for (const auto& e : events)
      if (e.kind == EventKind::engagement) days_[{e.user, e.creator}].push_back(e.day);
    for (auto& [_, d] : days_) std::sort(d.begin(), d.end());
  }

  // Pairs with at least N engagements in [eval_day - M + 1, eval_day].
  PairSet at(const SccParams& p, std::int32_t eval_day) const {
    PairSet out;
    const std::int32_t start = eval_day - p.window_days + 1;
    for (const auto& [pair, d] : days_) {
      const auto lo = std::lower_bound(d.begin(), d.end(), start);
      const auto hi = std::upper_bound(d.begin(), d.end(), eval_day);
      if (hi - lo >= p.n_engagements) out.insert(pair);
    }
    return out;
  }

  // For each pair, the eval days in [first, last] on which it is an SCC.
  template <typename Fn>
  void for_each_scc_day(const SccParams& p, std::int32_t first, std::int32_t last, Fn&& fn) const {
    const auto n = static_cast<std::ptrdiff_t>(p.n_engagements);
    for (const auto& [pair, d] : days_) {
      if (static_cast<std::ptrdiff_t>(d.size()) < n) continue;
      // The window ending at day t holds >= N engagements iff the N-th most
      // recent engagement on or before t is within M days.
      for (std::int32_t t = first; t <= last; ++t) {
        const auto hi = std::upper_bound(d.begin(), d.end(), t);
        if (hi - d.begin() < n) continue;
        if (*(hi - n) >= t - p.window_days + 1) fn(pair, t);
      }
    }
  }

 private:
  std::map<UserCreatorPair, std::vector<std::int32_t>> days_;
};

inline PairSet compute_scc(std::span<const EngagementEvent> events, const SccParams& p,
                           std::int32_t eval_day) {
  p.validate();
  return SccIndex(events).at(p, eval_day);
}

inline std::map<std::int32_t, std::int64_t> compute_scc_dau(std::span<const EngagementEvent> events,
                                                            const SccParams& p, std::int32_t first_day,
                                                            std::int32_t last_day) {
  p.validate();
  std::map<std::int32_t, std::set<UserId>> users;
  SccIndex(events).for_each_scc_day(p, first_day, last_day,
                                    [&](const UserCreatorPair& pr, std::int32_t t) {
                                      users[t].insert(pr.first);
                                    });
  std::map<std::int32_t, std::int64_t> out;
  for (std::int32_t t = first_day; t <= last_day; ++t) {
    auto it = users.find(t);
    out[t] = it == users.end() ? 0 : static_cast<std::int64_t>(it->second.size());
  }
  return out;
}

// Pairs engaged at least once in [epoch_day - P, epoch_day - 1].
inline PairSet engaged_before_epoch(std::span<const EngagementEvent> history_events,
                                    const SccParams& p, std::int32_t epoch_day) {
  PairSet out;
  const std::int32_t start = epoch_day - p.novelty_lookback_days;
  for (const auto& e : history_events)
    if (e.kind == EventKind::engagement && e.day >= start && e.day < epoch_day)
      out.insert({e.user, e.creator});
  return out;
}

// SCC pairs at eval_day with no engagement in the P days before the epoch.
inline PairSet compute_novel_scc(std::span<const EngagementEvent> events,
                                 std::span<const EngagementEvent> history_events,
                                 const SccParams& p, std::int32_t eval_day, std::int32_t epoch_day) {
  const PairSet scc = compute_scc(events, p, eval_day);
  const PairSet seen = engaged_before_epoch(history_events, p, epoch_day);
  PairSet out;
  std::set_difference(scc.begin(), scc.end(), seen.begin(), seen.end(),
                      std::inserter(out, out.end()));
  return out;
}

struct TopicTotals {
  std::uint32_t topic{0};
  std::int64_t impressions{0};
  std::int64_t engagements{0};
  int impression_bucket{-1};  // -1 is the dedicated zero bucket
  int engagement_bucket{-1};
};

struct InterestHistogram {
  double log_base{10.0};
  std::vector<TopicTotals> topics;
  std::map<int, std::int64_t> impression_buckets;  // bucket -> number of topics
  std::map<int, std::int64_t> engagement_buckets;
};

// floor(log_base(count)) for count >= 1, -1 for zero.
inline int log_bucket(std::int64_t count, double log_base) {
  if (count <= 0) return -1;
  int b = static_cast<int>(std::floor(std::log(static_cast<double>(count)) / std::log(log_base)));
  // Correct for rounding at exact powers of the base.
  if (std::pow(log_base, b + 1) <= static_cast<double>(count)) ++b;
  if (b > 0 && std::pow(log_base, b) > static_cast<double>(count)) --b;
  return b;
}

inline InterestHistogram interest_histograms(std::span<const EngagementEvent> events,
                                             const GroundTruth& gt, double log_base) {
  if (!(log_base > 1.0)) throw std::invalid_argument("interest_histograms: log_base must be > 1");
  InterestHistogram h;
  h.log_base = log_base;
  h.topics.resize(static_cast<std::size_t>(gt.n_topics));
  for (std::uint32_t t = 0; t < h.topics.size(); ++t) h.topics[t].topic = t;
  for (const auto& e : events) {
    auto& tt = h.topics.at(gt.creator_topic.at(e.creator.value));
    if (e.kind == EventKind::impression)
      ++tt.impressions;
    else
      ++tt.engagements;
  }
  for (auto& tt : h.topics) {
    tt.impression_bucket = log_bucket(tt.impressions, log_base);
    tt.engagement_bucket = log_bucket(tt.engagements, log_base);
    ++h.impression_buckets[tt.impression_bucket];
    ++h.engagement_buckets[tt.engagement_bucket];
  }
  return h;
}

// Population standard deviation of log_base(1 + impressions) across topics.
inline double impression_log_dispersion(const InterestHistogram& h) {
  if (h.topics.empty()) return 0.0;
  std::vector<double> v;
  for (const auto& t : h.topics)
    v.push_back(std::log1p(static_cast<double>(t.impressions)) / std::log(h.log_base));
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

inline double impression_bucket_variance(const InterestHistogram& h) {
  if (h.topics.empty()) return 0.0;
  double mean = 0.0;
  for (const auto& t : h.topics) mean += t.impression_bucket;
  mean /= static_cast<double>(h.topics.size());
  double ss = 0.0;
  for (const auto& t : h.topics) ss += (t.impression_bucket - mean) * (t.impression_bucket - mean);
  return ss / static_cast<double>(h.topics.size());
}

inline void write_histogram_csv(std::ostream& out, const InterestHistogram& h) {
  out << "topic,impressions,engagements,log_bucket\n";
  for (const auto& t : h.topics)
    out << t.topic << ',' << t.impressions << ',' << t.engagements << ',' << t.impression_bucket
        << '\n';
}

struct MetricReport {
  std::int64_t scc_count{0};        // distinct pairs that were SCC on some eval day
  std::map<std::int32_t, std::int64_t> scc_dau_by_day;
  std::int64_t novel_scc_count{0};
  double engagement_total{0.0};
  std::optional<InterestHistogram> histogram;

  std::int64_t scc_dau_total() const {
    std::int64_t s = 0;
    for (const auto& [_, v] : scc_dau_by_day) s += v;
    return s;
  }
};

// Metrics of `events` over eval days [first_day, last_day]; novelty is judged
// against `history_events` before `epoch_day`.
inline MetricReport compute_report(std::span<const EngagementEvent> events,
                                   std::span<const EngagementEvent> history_events,
                                   const SccParams& p, std::int32_t first_day,
                                   std::int32_t last_day, std::int32_t epoch_day) {
  p.validate();
  MetricReport r;
  SccIndex index(events);
  PairSet ever;
  std::map<std::int32_t, std::set<UserId>> dau;
  index.for_each_scc_day(p, first_day, last_day, [&](const UserCreatorPair& pr, std::int32_t t) {
    ever.insert(pr);
    dau[t].insert(pr.first);
  });
  for (std::int32_t t = first_day; t <= last_day; ++t) {
    auto it = dau.find(t);
    r.scc_dau_by_day[t] = it == dau.end() ? 0 : static_cast<std::int64_t>(it->second.size());
  }
  r.scc_count = static_cast<std::int64_t>(ever.size());
  const PairSet seen = engaged_before_epoch(history_events, p, epoch_day);
  for (const auto& pr : ever) r.novel_scc_count += seen.count(pr) == 0;
  for (const auto& e : events)
    if (e.kind == EventKind::engagement) r.engagement_total += e.weight;
  return r;
}

inline nlohmann::ordered_json to_json(const InterestHistogram& h) {
  nlohmann::ordered_json j;
  j["log_base"] = h.log_base;
  auto topics = nlohmann::ordered_json::array();
  for (const auto& t : h.topics)
    topics.push_back({{"topic", t.topic},
                      {"impressions", t.impressions},
                      {"engagements", t.engagements},
                      {"impression_bucket", t.impression_bucket},
                      {"engagement_bucket", t.engagement_bucket}});
  j["topics"] = std::move(topics);
  auto buckets = [](const std::map<int, std::int64_t>& m) {
    auto a = nlohmann::ordered_json::array();
    for (const auto& [b, n] : m) a.push_back({{"bucket", b}, {"topics", n}});
    return a;
  };
  j["impression_buckets"] = buckets(h.impression_buckets);
  j["engagement_buckets"] = buckets(h.engagement_buckets);
  j["impression_log_dispersion"] = impression_log_dispersion(h);
  return j;
}

inline nlohmann::ordered_json to_json(const MetricReport& r) {
  nlohmann::ordered_json j;
  j["scc_count"] = r.scc_count;
  j["scc_dau_total"] = r.scc_dau_total();
  auto dau = nlohmann::ordered_json::array();
  for (const auto& [d, v] : r.scc_dau_by_day) dau.push_back({{"day", d}, {"users", v}});
  j["scc_dau_by_day"] = std::move(dau);
  j["novel_scc_count"] = r.novel_scc_count;
  j["engagement_total"] = r.engagement_total;
  if (r.histogram) j["interest_histogram"] = to_json(*r.histogram);
  return j;
}

}  // namespace pie
