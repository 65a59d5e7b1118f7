#pragma once

// Run configuration: every tunable of the pipeline in one JSON document.
// Missing keys keep their defaults; unknown keys are rejected.

#include <fstream>
#include <set>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "pie/bandit.hpp"
#include "pie/blending.hpp"
#include "pie/metrics.hpp"
#include "pie/ppr.hpp"
#include "pie/simulator.hpp"

namespace pie {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ExperimentConfig {
  WorldConfig world;
  int bootstrap_days = 14;
  int warmup_days = 14;
  int graph_window_days = 14;
  PprParams ppr;
  unsigned ppr_threads = 1;
  QualityParams quality;
  BanditParams bandit;
  double target_share = 0.06;
  BlendMode blend_mode = BlendMode::credit;
  double shrinkage = 5.0;
  int retrieval_k = 30;
  SccParams scc;
  double log_base = 10.0;
  unsigned threads = 1;
  bool write_logs = false;

  int epoch_day() const { return bootstrap_days + warmup_days; }
  int last_day() const { return epoch_day() + world.days - 1; }

  void validate() const {
    world.validate();
    if (bootstrap_days < 1) throw ConfigError("experiment.bootstrap_days must be >= 1");
    if (warmup_days < 0) throw ConfigError("experiment.warmup_days must be >= 0");
    if (graph_window_days < 1) throw ConfigError("graph.window_days must be >= 1");
    if (world.n_users < 4) throw ConfigError("world.n_users must be >= 4 (four groups)");
    if (!(target_share >= 0.0 && target_share <= 1.0))
      throw ConfigError("blending.target_share must be in [0, 1]");
    if (!(shrinkage > 0.0)) throw ConfigError("ranker.shrinkage must be positive");
    if (retrieval_k < 1) throw ConfigError("ranker.retrieval_k must be >= 1");
    if (!(log_base > 1.0)) throw ConfigError("metrics.log_base must be > 1");
    if (threads < 1 || ppr_threads < 1) throw ConfigError("thread counts must be >= 1");
    try {
      ppr.validate();
      bandit.validate();
      scc.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    if (quality.min_impressions < 1) throw ConfigError("quality.min_impressions must be >= 1");
    if (!(quality.min_engagement_rate >= 0.0 && quality.min_engagement_rate <= 1.0))
      throw ConfigError("quality.min_engagement_rate must be in [0, 1]");
  }
};

namespace detail {

class Section {
 public:
  Section(const nlohmann::json& root, const std::string& name) : name_(name) {
    auto it = root.find(name);
    if (it == root.end()) return;
    if (!it->is_object()) throw ConfigError("config section '" + name + "' must be an object");
    obj_ = &*it;
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (!obj_) return;
    auto it = obj_->find(key);
    if (it == obj_->end()) return;
    const std::string path = name_ + "." + key;
    if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) throw ConfigError(path + " must be a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_integer()) throw ConfigError(path + " must be an integer");
      if constexpr (std::is_unsigned_v<T>)
        if (it->template get<std::int64_t>() < 0) throw ConfigError(path + " must be >= 0");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!it->is_number()) throw ConfigError(path + " must be a number");
    } else {
      if (!it->is_string()) throw ConfigError(path + " must be a string");
    }
    out = it->template get<T>();
  }

  void finish() const {
    if (!obj_) return;
    for (const auto& [key, _] : obj_->items())
      if (!seen_.count(key)) throw ConfigError("unknown config key '" + name_ + "." + key + "'");
  }

 private:
  std::string name_;
  const nlohmann::json* obj_{nullptr};
  std::set<std::string> seen_;
};

}  // namespace detail

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> kSections = {"world",  "experiment", "graph",   "ppr",
                                                  "quality", "bandit",    "blending", "ranker",
                                                  "metrics"};
  for (const auto& [key, _] : j.items())
    if (!kSections.count(key)) throw ConfigError("unknown config section '" + key + "'");

  ExperimentConfig c;
  {
    detail::Section s(j, "world");
    s.read("n_users", c.world.n_users);
    s.read("n_creators", c.world.n_creators);
    s.read("n_topics", c.world.n_topics);
    s.read("videos_per_creator", c.world.videos_per_creator);
    s.read("interests_per_user", c.world.interests_per_user);
    s.read("hidden_interest_fraction", c.world.hidden_interest_fraction);
    s.read("affinity_high", c.world.affinity_high);
    s.read("affinity_low", c.world.affinity_low);
    s.read("fatigue_decay", c.world.fatigue_decay);
    s.read("session_len", c.world.session_len);
    s.read("days", c.world.days);
    s.read("global_seed", c.world.global_seed);
    s.read("topic_popularity_skew", c.world.topic_popularity_skew);
    s.read("noise_share", c.world.noise_share);
    s.finish();
  }
  {
    detail::Section s(j, "experiment");
    s.read("bootstrap_days", c.bootstrap_days);
    s.read("warmup_days", c.warmup_days);
    s.read("threads", c.threads);
    s.read("write_logs", c.write_logs);
    s.finish();
  }
  {
    detail::Section s(j, "graph");
    s.read("window_days", c.graph_window_days);
    s.finish();
  }
  {
    detail::Section s(j, "ppr");
    s.read("teleport_prob", c.ppr.teleport_prob);
    s.read("tolerance", c.ppr.tolerance);
    s.read("max_iterations", c.ppr.max_iterations);
    s.read("similar_k", c.ppr.similar_k);
    s.read("user_top_k", c.ppr.user_top_k);
    s.read("threads", c.ppr_threads);
    s.finish();
  }
  {
    detail::Section s(j, "quality");
    s.read("min_impressions", c.quality.min_impressions);
    s.read("min_engagement_rate", c.quality.min_engagement_rate);
    s.finish();
  }
  {
    detail::Section s(j, "bandit");
    s.read("prior_alpha", c.bandit.prior_alpha);
    s.read("prior_beta", c.bandit.prior_beta);
    s.read("connect_engagements", c.bandit.connect_engagements);
    s.read("expire_impressions", c.bandit.expire_impressions);
    s.finish();
  }
  {
    detail::Section s(j, "blending");
    s.read("target_share", c.target_share);
    std::string mode = to_string(c.blend_mode);
    s.read("mode", mode);
    try {
      c.blend_mode = blend_mode_from_string(mode);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    s.finish();
  }
  {
    detail::Section s(j, "ranker");
    s.read("shrinkage", c.shrinkage);
    s.read("retrieval_k", c.retrieval_k);
    s.finish();
  }
  {
    detail::Section s(j, "metrics");
    s.read("n_engagements", c.scc.n_engagements);
    s.read("window_days", c.scc.window_days);
    s.read("novelty_lookback_days", c.scc.novelty_lookback_days);
    s.read("log_base", c.log_base);
    s.finish();
  }
  c.validate();
  return c;
}

inline nlohmann::ordered_json config_to_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["world"] = {{"n_users", c.world.n_users},
                {"n_creators", c.world.n_creators},
                {"n_topics", c.world.n_topics},
                {"videos_per_creator", c.world.videos_per_creator},
                {"interests_per_user", c.world.interests_per_user},
                {"hidden_interest_fraction", c.world.hidden_interest_fraction},
                {"affinity_high", c.world.affinity_high},
                {"affinity_low", c.world.affinity_low},
                {"fatigue_decay", c.world.fatigue_decay},
                {"session_len", c.world.session_len},
                {"days", c.world.days},
                {"global_seed", c.world.global_seed},
                {"topic_popularity_skew", c.world.topic_popularity_skew},
                {"noise_share", c.world.noise_share}};
  j["experiment"] = {{"bootstrap_days", c.bootstrap_days},
                     {"warmup_days", c.warmup_days},
                     {"threads", c.threads},
                     {"write_logs", c.write_logs}};
  j["graph"] = {{"window_days", c.graph_window_days}};
  j["ppr"] = {{"teleport_prob", c.ppr.teleport_prob}, {"tolerance", c.ppr.tolerance},
              {"max_iterations", c.ppr.max_iterations}, {"similar_k", c.ppr.similar_k},
              {"user_top_k", c.ppr.user_top_k},         {"threads", c.ppr_threads}};
  j["quality"] = {{"min_impressions", c.quality.min_impressions},
                  {"min_engagement_rate", c.quality.min_engagement_rate}};
  j["bandit"] = {{"prior_alpha", c.bandit.prior_alpha},
                 {"prior_beta", c.bandit.prior_beta},
                 {"connect_engagements", c.bandit.connect_engagements},
                 {"expire_impressions", c.bandit.expire_impressions}};
  j["blending"] = {{"target_share", c.target_share}, {"mode", to_string(c.blend_mode)}};
  j["ranker"] = {{"shrinkage", c.shrinkage}, {"retrieval_k", c.retrieval_k}};
  j["metrics"] = {{"n_engagements", c.scc.n_engagements},
                  {"window_days", c.scc.window_days},
                  {"novelty_lookback_days", c.scc.novelty_lookback_days},
                  {"log_base", c.log_base}};
  return j;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("invalid JSON in '" + path + "': " + e.what());
  }
  return config_from_json(j);
}

}  // namespace pie
