#pragma once

// Random fixtures and brute-force oracles shared by the unit and acceptance
// tests. Oracles are deliberately naive: linear scans and nested loops.

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <tuple>
#include <vector>

#include "pie/pie.hpp"

namespace pie::testing {

struct LogShape {
  std::uint32_t users = 10;
  std::uint32_t creators = 8;
  std::uint32_t videos_per_creator = 3;
  std::int32_t days = 20;
  double engage_prob = 0.5;
  double exploration_prob = 0.2;
};

// Impressions, each followed by an engagement of the same video with
// probability engage_prob. Weights of engagements vary in {1, 2, 0.5}.
inline std::vector<EngagementEvent> random_log(std::size_t max_events, const LogShape& s,
                                               std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_int_distribution<std::uint32_t> user(0, s.users - 1), creator(0, s.creators - 1),
      video(0, s.videos_per_creator - 1);
  std::uniform_int_distribution<std::int32_t> day(0, s.days - 1);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double weights[] = {1.0, 2.0, 0.5};
  std::vector<EngagementEvent> out;
  while (out.size() < max_events) {
    EngagementEvent e;
    e.user = UserId(user(rng));
    e.creator = CreatorId(creator(rng));
    e.video = VideoId(e.creator.value * s.videos_per_creator + video(rng));
    e.day = day(rng);
    e.kind = EventKind::impression;
    e.from_exploration = u01(rng) < s.exploration_prob;
    out.push_back(e);
    if (out.size() < max_events && u01(rng) < s.engage_prob) {
      e.kind = EventKind::engagement;
      e.weight = weights[rng() % 3];
      out.push_back(e);
    }
  }
  return out;
}

// Edges with integer weights in [1, 5]; every user and creator appears.
inline std::vector<WeightedEdge> random_edges(std::uint32_t users, std::uint32_t creators,
                                              double density, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_int_distribution<int> w(1, 5);
  std::vector<WeightedEdge> edges;
  for (std::uint32_t u = 0; u < users; ++u)
    for (std::uint32_t c = 0; c < creators; ++c)
      if (u01(rng) < density) edges.push_back({UserId(u), CreatorId(c), static_cast<double>(w(rng))});
  return edges;
}

// --- oracles -------------------------------------------------------------

inline std::set<std::pair<UserId, CreatorId>> oracle_scc(const std::vector<EngagementEvent>& ev,
                                                         const SccParams& p, std::int32_t t) {
  std::set<std::pair<UserId, CreatorId>> pairs, out;
  for (const auto& e : ev)
    if (e.kind == EventKind::engagement) pairs.insert({e.user, e.creator});
  for (const auto& pr : pairs) {
    int n = 0;
    for (const auto& e : ev)
      if (e.kind == EventKind::engagement && e.user == pr.first && e.creator == pr.second &&
          e.day <= t && e.day > t - p.window_days)
        ++n;
    if (n >= p.n_engagements) out.insert(pr);
  }
  return out;
}

inline std::map<std::int32_t, std::int64_t> oracle_scc_dau(const std::vector<EngagementEvent>& ev,
                                                           const SccParams& p, std::int32_t first,
                                                           std::int32_t last) {
  std::map<std::int32_t, std::int64_t> out;
  for (std::int32_t t = first; t <= last; ++t) {
    std::set<UserId> users;
    for (const auto& pr : oracle_scc(ev, p, t)) users.insert(pr.first);
    out[t] = static_cast<std::int64_t>(users.size());
  }
  return out;
}

inline std::set<std::pair<UserId, CreatorId>> oracle_novel_scc(
    const std::vector<EngagementEvent>& ev, const std::vector<EngagementEvent>& history,
    const SccParams& p, std::int32_t t, std::int32_t epoch) {
  std::set<std::pair<UserId, CreatorId>> out;
  for (const auto& pr : oracle_scc(ev, p, t)) {
    bool seen = false;
    for (const auto& h : history)
      seen = seen || (h.kind == EventKind::engagement && h.user == pr.first &&
                      h.creator == pr.second && h.day < epoch &&
                      h.day >= epoch - p.novelty_lookback_days);
    if (!seen) out.insert(pr);
  }
  return out;
}

}  // namespace pie::testing
