#pragma once

// Personalized PageRank over the user-creator graph, creator similarity
// lists, and per-user exploration spaces with novelty and quality filters.

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <set>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "pie/graph.hpp"
#include "pie/ingest.hpp"

namespace pie {

struct PprParams {
  double teleport_prob = 0.15;
  double tolerance = 1e-8;  // L1 distance between successive iterates
  int max_iterations = 200;
  int similar_k = 50;
  int user_top_k = 25;

  void validate() const {
    if (!(teleport_prob > 0.0 && teleport_prob < 1.0))
      throw std::invalid_argument("ppr: teleport_prob must be in (0, 1)");
    if (!(tolerance > 0.0)) throw std::invalid_argument("ppr: tolerance must be positive");
    if (max_iterations < 1) throw std::invalid_argument("ppr: max_iterations must be >= 1");
    if (similar_k < 1) throw std::invalid_argument("ppr: similar_k must be >= 1");
    if (user_top_k < 1) throw std::invalid_argument("ppr: user_top_k must be >= 1");
  }
};

struct PprResult {
  std::vector<double> scores;  // indexed by NodeIndex
  int iterations{0};
  double last_delta{0.0};
  bool converged{false};
};

// Power iteration for x = (1 - a) P^T x + a e_seed with dangling mass
// returned to the seed.
inline PprResult personalized_pagerank(const BipartiteGraph& g, NodeIndex seed,
                                       const PprParams& p) {
  p.validate();
  if (seed >= g.num_nodes()) throw std::invalid_argument("personalized_pagerank: seed not in graph");
  const std::size_t n = g.num_nodes();
  const double a = p.teleport_prob;
  const double walk = 1.0 - a;

  PprResult r;
  std::vector<double> x(n, 0.0), next(n, 0.0);
  x[seed] = 1.0;
  for (int it = 1; it <= p.max_iterations; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    double returned = a;
    for (NodeIndex v = 0; v < n; ++v) {
      const double mass = x[v];
      if (mass == 0.0) continue;
      const double total = g.out_weight(v);
      if (!(total > 0.0)) {
        returned += walk * mass;
        continue;
      }
      const double scale = walk * mass / total;
      const auto nb = g.neighbors(v);
      const auto w = g.edge_weights(v);
      for (std::size_t k = 0; k < nb.size(); ++k) next[nb[k]] += scale * w[k];
    }
    next[seed] += returned;
    double delta = 0.0;
    for (std::size_t v = 0; v < n; ++v) delta += std::abs(next[v] - x[v]);
    x.swap(next);
    r.iterations = it;
    r.last_delta = delta;
    if (delta <= p.tolerance) {
      r.converged = true;
      break;
    }
  }
  r.scores = std::move(x);
  return r;
}

struct ScoredCreator {
  CreatorId creator;
  double score{0.0};

  friend bool operator==(const ScoredCreator&, const ScoredCreator&) = default;
};

// Descending score, ascending creator id on ties.
inline bool ranks_before(const ScoredCreator& a, const ScoredCreator& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.creator < b.creator;
}

struct SimilarCreators {
  CreatorId seed;
  std::vector<ScoredCreator> neighbors;
  bool converged{true};
};

using SimilarityMap = std::map<CreatorId, SimilarCreators>;

// Keeps positive-score creators other than the seed, truncates to similar_k,
// then renormalizes the retained scores to sum to one.
inline SimilarCreators similar_creators_from_scores(const BipartiteGraph& g, CreatorId seed,
                                                    std::span<const double> scores,
                                                    int similar_k) {
  SimilarCreators out;
  out.seed = seed;
  for (NodeIndex v = static_cast<NodeIndex>(g.num_users()); v < g.num_nodes(); ++v) {
    const CreatorId c = g.creator_at(v);
    if (c == seed || !(scores[v] > 0.0)) continue;
    out.neighbors.push_back({c, scores[v]});
  }
  std::sort(out.neighbors.begin(), out.neighbors.end(), ranks_before);
  if (out.neighbors.size() > static_cast<std::size_t>(similar_k))
    out.neighbors.resize(static_cast<std::size_t>(similar_k));
  double total = 0.0;
  for (const auto& s : out.neighbors) total += s.score;
  for (auto& s : out.neighbors) s.score /= total;
  return out;
}

inline SimilarCreators similar_creators(const BipartiteGraph& g, CreatorId seed_creator,
                                        const PprParams& p) {
  auto node = g.node_of(seed_creator);
  if (!node) throw std::invalid_argument("similar_creators: seed creator not in graph");
  auto r = personalized_pagerank(g, *node, p);
  auto out = similar_creators_from_scores(g, seed_creator, r.scores, p.similar_k);
  out.converged = r.converged;
  return out;
}

// One PPR run per creator node. Runs are independent; `threads` > 1 splits
// creators across worker threads, results are keyed so order does not matter.
inline SimilarityMap all_similar_creators(const BipartiteGraph& g, const PprParams& p,
                                          unsigned threads = 1) {
  const auto creators = g.creators();
  std::vector<SimilarCreators> results(creators.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) results[i] = similar_creators(g, creators[i], p);
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(creators.size())));
  if (threads <= 1) {
    work(0, creators.size());
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (creators.size() + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t b = t * chunk;
      const std::size_t e = std::min(creators.size(), b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
  }
  SimilarityMap out;
  for (auto& s : results) out.emplace(s.seed, std::move(s));
  return out;
}

struct ExplorationSpace {
  UserId user;
  std::vector<ScoredCreator> candidates;  // descending affinity
};

using ExplorationSpaces = std::map<UserId, ExplorationSpace>;

// Aggregates creator similarity through each user's engagement history, then
// drops creators the user already interacted with and banned creators.
inline ExplorationSpaces build_exploration_space(const HistoryMap& histories,
                                                 const SimilarityMap& sims,
                                                 const std::set<CreatorId>& banned,
                                                 const PprParams& p) {
  ExplorationSpaces out;
  std::map<CreatorId, double> acc;
  for (const auto& [user, history] : histories) {
    acc.clear();
    for (const auto& [source, summary] : history.creators) {
      if (!(summary.engagement_weight_sum > 0.0)) continue;
      auto it = sims.find(source);
      if (it == sims.end()) continue;
      for (const auto& nb : it->second.neighbors)
        acc[nb.creator] += summary.engagement_weight_sum * nb.score;
    }
    ExplorationSpace space;
    space.user = user;
    for (const auto& [c, score] : acc) {
      if (!(score > 0.0) || history.interacted(c) || banned.count(c)) continue;
      space.candidates.push_back({c, score});
    }
    std::sort(space.candidates.begin(), space.candidates.end(), ranks_before);
    if (space.candidates.size() > static_cast<std::size_t>(p.user_top_k))
      space.candidates.resize(static_cast<std::size_t>(p.user_top_k));
    out.emplace(user, std::move(space));
  }
  return out;
}

struct QualityParams {
  int min_impressions = 50;
  double min_engagement_rate = 0.05;
};

// Creators with enough exploration impressions whose exploration engagement
// rate falls below the threshold.
inline std::set<CreatorId> quality_ban_list(std::span<const EngagementEvent> events,
                                            const QualityParams& q) {
  if (q.min_impressions < 1) throw std::invalid_argument("quality: min_impressions must be >= 1");
  if (!(q.min_engagement_rate >= 0.0 && q.min_engagement_rate <= 1.0))
    throw std::invalid_argument("quality: min_engagement_rate must be in [0, 1]");
  std::map<CreatorId, std::pair<std::int64_t, std::int64_t>> counts;
  for (const auto& e : events) {
    if (!e.from_exploration) continue;
    auto& c = counts[e.creator];
    if (e.kind == EventKind::impression)
      ++c.first;
    else
      ++c.second;
  }
  std::set<CreatorId> out;
  for (const auto& [creator, c] : counts) {
    const auto [imps, engs] = c;
    if (imps < q.min_impressions) continue;
    const double rate = static_cast<double>(engs) / static_cast<double>(imps);
    if (rate < q.min_engagement_rate) out.insert(creator);
  }
  return out;
}

// Similarity snapshot: "seed_creator,neighbor,score" per line, with header.
inline void write_similarity_csv(std::ostream& out, const SimilarityMap& sims,
                                 const CreatorTable& creators) {
  out << "seed_creator,neighbor,score\n";
  for (const auto& [seed, s] : sims)
    for (const auto& nb : s.neighbors)
      out << creators.name(seed) << ',' << creators.name(nb.creator) << ','
          << format_weight(nb.score) << '\n';
}

}  // namespace pie
