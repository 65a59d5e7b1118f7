#pragma once

// Weighted user-creator bipartite graph in compressed sparse row form.
//
// Node indices [0, num_users) are users in ascending UserId order, followed by
// creators in ascending CreatorId order. Every undirected engagement edge is
// stored twice (user->creator and creator->user) with the same weight.

#include <algorithm>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "pie/ids.hpp"
#include "pie/ingest.hpp"

namespace pie {

using NodeIndex = std::uint32_t;

struct WeightedEdge {
  UserId user;
  CreatorId creator;
  double weight{0.0};
};

class BipartiteGraph {
 public:
  BipartiteGraph() : offsets_(1, 0) {}

  // Parallel edges are summed; non-positive totals are dropped. Nodes listed
  // in `users` / `creators` are kept even when isolated.
  static BipartiteGraph from_edges(std::span<const WeightedEdge> edges,
                                   std::span<const UserId> users = {},
                                   std::span<const CreatorId> creators = {}) {
    std::map<std::pair<UserId, CreatorId>, double> merged;
    for (const auto& e : edges) merged[{e.user, e.creator}] += e.weight;

    BipartiteGraph g;
    g.users_.assign(users.begin(), users.end());
    g.creators_.assign(creators.begin(), creators.end());
    for (const auto& [key, w] : merged) {
      if (!(w > 0.0)) continue;
      g.users_.push_back(key.first);
      g.creators_.push_back(key.second);
    }
    auto dedup = [](auto& v) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    };
    dedup(g.users_);
    dedup(g.creators_);
    for (NodeIndex i = 0; i < g.users_.size(); ++i) g.user_index_[g.users_[i]] = i;
    for (NodeIndex i = 0; i < g.creators_.size(); ++i)
      g.creator_index_[g.creators_[i]] = static_cast<NodeIndex>(g.users_.size()) + i;

    const std::size_t n = g.num_nodes();
    std::vector<std::vector<std::pair<NodeIndex, double>>> adj(n);
    for (const auto& [key, w] : merged) {
      if (!(w > 0.0)) continue;
      const NodeIndex u = g.user_index_.at(key.first);
      const NodeIndex c = g.creator_index_.at(key.second);
      adj[u].emplace_back(c, w);
      adj[c].emplace_back(u, w);
    }
    g.offsets_.assign(n + 1, 0);
    g.out_weight_.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      std::sort(adj[i].begin(), adj[i].end());
      g.offsets_[i + 1] = g.offsets_[i] + adj[i].size();
      for (const auto& [t, w] : adj[i]) {
        g.targets_.push_back(t);
        g.weights_.push_back(w);
        g.out_weight_[i] += w;
      }
    }
    return g;
  }

  std::size_t num_users() const { return users_.size(); }
  std::size_t num_creators() const { return creators_.size(); }
  std::size_t num_nodes() const { return users_.size() + creators_.size(); }
  // Directed edge count (each engagement edge counted in both directions).
  std::size_t num_directed_edges() const { return targets_.size(); }
  bool empty() const { return num_nodes() == 0; }

  bool is_user(NodeIndex n) const { return n < users_.size(); }
  bool is_creator(NodeIndex n) const { return n >= users_.size() && n < num_nodes(); }

  std::optional<NodeIndex> node_of(UserId u) const {
    auto it = user_index_.find(u);
    if (it == user_index_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<NodeIndex> node_of(CreatorId c) const {
    auto it = creator_index_.find(c);
    if (it == creator_index_.end()) return std::nullopt;
    return it->second;
  }

  UserId user_at(NodeIndex n) const { return users_.at(n); }
  CreatorId creator_at(NodeIndex n) const { return creators_.at(n - users_.size()); }

  std::span<const UserId> users() const { return users_; }
  std::span<const CreatorId> creators() const { return creators_; }

  std::span<const NodeIndex> neighbors(NodeIndex n) const {
    return {targets_.data() + offsets_[n], offsets_[n + 1] - offsets_[n]};
  }
  std::span<const double> edge_weights(NodeIndex n) const {
    return {weights_.data() + offsets_[n], offsets_[n + 1] - offsets_[n]};
  }
  double out_weight(NodeIndex n) const { return out_weight_[n]; }
  std::size_t edge_offset(NodeIndex n) const { return offsets_[n]; }

  // Weight of the user->creator edge, 0 when absent.
  double weight(UserId u, CreatorId c) const {
    auto un = node_of(u);
    auto cn = node_of(c);
    if (!un || !cn) return 0.0;
    auto nb = neighbors(*un);
    auto it = std::lower_bound(nb.begin(), nb.end(), *cn);
    if (it == nb.end() || *it != *cn) return 0.0;
    return edge_weights(*un)[static_cast<std::size_t>(it - nb.begin())];
  }

  // Undirected edges as (user, creator, weight), user-major order.
  std::vector<WeightedEdge> edges() const {
    std::vector<WeightedEdge> out;
    for (NodeIndex u = 0; u < users_.size(); ++u) {
      auto nb = neighbors(u);
      auto w = edge_weights(u);
      for (std::size_t k = 0; k < nb.size(); ++k)
        out.push_back({users_[u], creator_at(nb[k]), w[k]});
    }
    return out;
  }

 private:
  std::vector<UserId> users_;
  std::vector<CreatorId> creators_;
  std::unordered_map<UserId, NodeIndex> user_index_;
  std::unordered_map<CreatorId, NodeIndex> creator_index_;
  std::vector<std::size_t> offsets_;
  std::vector<NodeIndex> targets_;
  std::vector<double> weights_;
  std::vector<double> out_weight_;
};

// Graph over engagement events in [as_of_day - window_days + 1, as_of_day].
inline BipartiteGraph build_graph(std::span<const EngagementEvent> events, int window_days,
                                  std::int32_t as_of_day) {
  if (window_days < 1) throw std::invalid_argument("build_graph: window_days must be >= 1");
  const std::int32_t start = as_of_day - window_days + 1;
  std::vector<WeightedEdge> edges;
  for (const auto& e : events) {
    if (e.kind != EventKind::engagement || e.day < start || e.day > as_of_day) continue;
    edges.push_back({e.user, e.creator, e.weight});
  }
  return BipartiteGraph::from_edges(edges);
}

// Row-stochastic view of a graph. Probabilities are aligned with the graph's
// CSR edge arrays.
struct TransitionView {
  const BipartiteGraph* graph{nullptr};
  std::vector<double> probabilities;
  std::vector<bool> dangling;

  std::span<const double> row(NodeIndex n) const {
    if (dangling[n]) return {};
    return {probabilities.data() + graph->edge_offset(n), graph->neighbors(n).size()};
  }
};

inline TransitionView row_normalize(const BipartiteGraph& g) {
  TransitionView view;
  view.graph = &g;
  view.probabilities.reserve(g.num_directed_edges());
  view.dangling.assign(g.num_nodes(), false);
  for (NodeIndex n = 0; n < g.num_nodes(); ++n) {
    const double total = g.out_weight(n);
    if (!(total > 0.0)) {
      view.dangling[n] = true;
      continue;
    }
    for (double w : g.edge_weights(n)) view.probabilities.push_back(w / total);
  }
  return view;
}

// Debug edge-list dump: "user_id,creator_id,weight" per line, with header.
inline void write_graph_csv(std::ostream& out, const BipartiteGraph& g, const UserTable& users,
                            const CreatorTable& creators) {
  out << "user_id,creator_id,weight\n";
  for (const auto& e : g.edges())
    out << users.name(e.user) << ',' << creators.name(e.creator) << ',' << format_weight(e.weight)
        << '\n';
}

struct GraphFile {
  UserTable users;
  CreatorTable creators;
  BipartiteGraph graph;
};

// Reads the edge-list CSV written by write_graph_csv. A header line is optional.
inline GraphFile read_graph_csv(std::istream& in) {
  GraphFile file;
  std::vector<WeightedEdge> edges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) cols.push_back(col);
    if (cols.size() != 3) throw ParseError(line_no, "expected 3 columns");
    if (line_no == 1 && cols[0] == "user_id") continue;
    double w = 0.0;
    try {
      std::size_t used = 0;
      w = std::stod(cols[2], &used);
      if (used != cols[2].size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw ParseError(line_no, "invalid weight '" + cols[2] + "'");
    }
    if (!(w >= 0.0)) throw ParseError(line_no, "weight must be non-negative");
    edges.push_back({file.users.intern(cols[0]), file.creators.intern(cols[1]), w});
  }
  file.graph = BipartiteGraph::from_edges(edges);
  return file;
}

}  // namespace pie
