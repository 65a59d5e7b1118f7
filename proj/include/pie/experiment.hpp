#pragma once

// Four-group A/B experiment: bootstrap history, a shared exploration warm-up,
// Model A / Model B training, measurement on disjoint user groups, and the
// delta report comparing groups 2-4 against group 1.

#include <algorithm>
#include <array>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "pie/bandit.hpp"
#include "pie/config.hpp"
#include "pie/graph.hpp"
#include "pie/ingest.hpp"
#include "pie/metrics.hpp"
#include "pie/ppr.hpp"
#include "pie/ranker.hpp"
#include "pie/simulator.hpp"

namespace pie {

enum class ModelKind : std::uint8_t { A, B };

struct GroupSpec {
  int group_id;
  bool exploration_content;
  ModelKind model;
};

inline constexpr std::array<GroupSpec, 4> kGroups{{
    {1, false, ModelKind::A},
    {2, true, ModelKind::A},
    {3, false, ModelKind::B},
    {4, true, ModelKind::B},
}};

inline constexpr std::array<const char*, 4> kMetricNames{"scc", "scc_dau", "novel_scc",
                                                         "engagement"};

inline double metric_value(const MetricReport& r, std::size_t metric) {
  switch (metric) {
    case 0: return static_cast<double>(r.scc_count);
    case 1: return static_cast<double>(r.scc_dau_total());
    case 2: return static_cast<double>(r.novel_scc_count);
    default: return r.engagement_total;
  }
}

struct SeedOutcome {
  std::uint64_t seed{0};
  std::array<MetricReport, 4> groups;
  std::array<MetricReport, 2> control_halves;  // random split of group 1
  std::array<std::size_t, 4> group_sizes{};
  std::size_t corpus_a{0};
  std::size_t corpus_b{0};
  std::int64_t exploration_impressions{0};
  // Exploration impressions to a pair already in the user's prior history.
  std::int64_t novelty_violations{0};
  std::array<std::int64_t, 4> hidden_pair_engagements{};
  bool model_b_lifts_hidden_pair{false};
  std::vector<EngagementEvent> log;  // kept only when requested
};

namespace detail {

inline ExplorationSpaces exploration_spaces(std::span<const EngagementEvent> history,
                                            std::int32_t as_of_day, const ExperimentConfig& cfg) {
  const BipartiteGraph g = build_graph(history, cfg.graph_window_days, as_of_day);
  const SimilarityMap sims = all_similar_creators(g, cfg.ppr, cfg.ppr_threads);
  const HistoryMap histories = build_histories(history);
  const std::set<CreatorId> banned = quality_ban_list(history, cfg.quality);
  return build_exploration_space(histories, sims, banned, cfg.ppr);
}

inline std::int64_t count_novelty_violations(std::span<const EngagementEvent> prior,
                                             std::span<const EngagementEvent> served) {
  std::set<std::pair<UserId, CreatorId>> seen;
  for (const auto& e : prior) seen.insert({e.user, e.creator});
  std::int64_t bad = 0;
  for (const auto& e : served)
    if (e.from_exploration && e.kind == EventKind::impression && seen.count({e.user, e.creator}))
      ++bad;
  return bad;
}

inline UserBandit make_bandit(const ExplorationSpaces& spaces, UserId u,
                              const ExperimentConfig& cfg, std::uint64_t seed, std::uint64_t phase) {
  const std::uint64_t rng_seed = derive_seed({seed, stream::kBandit, u.value, phase});
  auto it = spaces.find(u);
  if (it == spaces.end())
    return UserBandit(u, {}, cfg.bandit.prior_alpha, cfg.bandit.prior_beta, rng_seed);
  return init_bandit(it->second, cfg.bandit.prior_alpha, cfg.bandit.prior_beta, rng_seed);
}

}  // namespace detail

// One full replicate of the experiment for a single seed.
inline SeedOutcome run_seed(const ExperimentConfig& base, std::uint64_t seed, bool keep_log) {
  ExperimentConfig cfg = base;
  cfg.world.global_seed = seed;
  cfg.validate();
  const World world = generate_world(cfg.world);
  Simulator sim(world, {cfg.retrieval_k, cfg.bandit});
  SeedOutcome out;
  out.seed = seed;

  const std::size_t n_users = world.n_users();
  std::vector<UserId> all_users;
  for (std::uint32_t u = 0; u < n_users; ++u) all_users.emplace_back(u);

  // Pre-epoch history: exploit-only bootstrap, then the shared warm-up in which
  // every user receives exploration content.
  std::vector<EngagementEvent> pre = sim.bootstrap(cfg.bootstrap_days);
  const bool exploring = cfg.target_share > 0.0;
  if (cfg.warmup_days > 0) {
    const RankerModel warm_model = train(make_corpus(pre, true, std::nullopt, 0), cfg.shrinkage);
    const auto bootstrap_end = static_cast<std::ptrdiff_t>(pre.size());
    std::vector<UserBandit> bandits;
    std::vector<ServingPolicy> policies(n_users);
    if (exploring) {
      const auto spaces = detail::exploration_spaces(pre, cfg.bootstrap_days - 1, cfg);
      bandits.reserve(n_users);
      for (UserId u : all_users) bandits.push_back(detail::make_bandit(spaces, u, cfg, seed, 0));
    }
    for (std::size_t i = 0; i < n_users; ++i) {
      policies[i].model = &warm_model;
      policies[i].bandit = exploring ? &bandits[i] : nullptr;
      policies[i].target_share = cfg.target_share;
      policies[i].mode = cfg.blend_mode;
    }
    for (int d = cfg.bootstrap_days; d < cfg.epoch_day(); ++d) {
      auto day = sim.run_day(all_users, policies, d);
      pre.insert(pre.end(), day.begin(), day.end());
    }
    out.novelty_violations += detail::count_novelty_violations(
        std::span(pre).first(static_cast<std::size_t>(bootstrap_end)),
        std::span(pre).subspan(static_cast<std::size_t>(bootstrap_end)));
  }

  // Model A drops exploration data; Model B keeps it but is subsampled to the
  // same training-set size.
  const TrainingCorpus corpus_a = make_corpus(pre, false, std::nullopt, 0);
  const TrainingCorpus corpus_b =
      make_corpus(pre, true, corpus_a.size(), derive_seed({seed, stream::kCorpus}));
  out.corpus_a = corpus_a.size();
  out.corpus_b = corpus_b.size();
  const RankerModel model_a = train(corpus_a, cfg.shrinkage);
  const RankerModel model_b = train(corpus_b, cfg.shrinkage);
  for (const auto& e : pre) {
    if (e.kind == EventKind::engagement && e.from_exploration && world.truth.is_hidden(e.user, e.creator) &&
        model_b.score(e.user, e.creator) > model_a.score(e.user, e.creator)) {
      out.model_b_lifts_hidden_pair = true;
      break;
    }
  }

  // Seeded, disjoint, equal-size groups; leftover users sit out.
  std::vector<UserId> shuffled = all_users;
  Rng part_rng = make_stream({seed, stream::kPartition});
  std::shuffle(shuffled.begin(), shuffled.end(), part_rng);
  const std::size_t per_group = n_users / 4;
  std::vector<int> group_of(n_users, -1);
  std::vector<int> half_of(n_users, -1);
  for (std::size_t g = 0; g < 4; ++g) {
    for (std::size_t k = 0; k < per_group; ++k) {
      const UserId u = shuffled[g * per_group + k];
      group_of[u.value] = static_cast<int>(g);
      if (g == 0) half_of[u.value] = k < per_group / 2 ? 0 : 1;
    }
    out.group_sizes[g] = per_group;
  }

  std::optional<ExplorationSpaces> spaces;
  if (exploring) spaces = detail::exploration_spaces(pre, cfg.epoch_day() - 1, cfg);

  std::vector<UserId> served;
  std::vector<UserBandit> bandits;
  bandits.reserve(n_users);
  std::vector<ServingPolicy> policies;
  for (UserId u : all_users) {
    const int g = group_of[u.value];
    if (g < 0) continue;
    const GroupSpec& spec = kGroups[static_cast<std::size_t>(g)];
    ServingPolicy p;
    p.model = spec.model == ModelKind::A ? &model_a : &model_b;
    p.target_share = cfg.target_share;
    p.mode = cfg.blend_mode;
    if (spec.exploration_content && spaces) {
      bandits.push_back(detail::make_bandit(*spaces, u, cfg, seed, 1));
      p.bandit = &bandits.back();
    }
    served.push_back(u);
    policies.push_back(p);
  }

  std::vector<EngagementEvent> measured;
  for (int d = cfg.epoch_day(); d <= cfg.last_day(); ++d) {
    auto day = sim.run_day(served, policies, d);
    measured.insert(measured.end(), day.begin(), day.end());
  }
  out.novelty_violations += detail::count_novelty_violations(pre, measured);

  // Per-group metrics over the measurement window.
  std::array<std::vector<EngagementEvent>, 4> group_measured, group_history;
  std::array<std::vector<EngagementEvent>, 2> half_measured, half_history;
  for (const auto& e : measured) {
    const int g = group_of[e.user.value];
    group_measured[static_cast<std::size_t>(g)].push_back(e);
    if (half_of[e.user.value] >= 0) half_measured[static_cast<std::size_t>(half_of[e.user.value])].push_back(e);
    if (e.from_exploration && e.kind == EventKind::impression) ++out.exploration_impressions;
    if (e.kind == EventKind::engagement && world.truth.is_hidden(e.user, e.creator))
      ++out.hidden_pair_engagements[static_cast<std::size_t>(g)];
  }
  for (const auto& e : pre) {
    const int g = group_of[e.user.value];
    if (g < 0) continue;
    group_history[static_cast<std::size_t>(g)].push_back(e);
    if (half_of[e.user.value] >= 0) half_history[static_cast<std::size_t>(half_of[e.user.value])].push_back(e);
  }
  for (std::size_t g = 0; g < 4; ++g) {
    out.groups[g] = compute_report(group_measured[g], group_history[g], cfg.scc, cfg.epoch_day(),
                                   cfg.last_day(), cfg.epoch_day());
    out.groups[g].histogram = interest_histograms(group_measured[g], world.truth, cfg.log_base);
  }
  for (std::size_t h = 0; h < 2; ++h)
    out.control_halves[h] = compute_report(half_measured[h], half_history[h], cfg.scc,
                                           cfg.epoch_day(), cfg.last_day(), cfg.epoch_day());

  if (keep_log) {
    out.log = std::move(pre);
    out.log.insert(out.log.end(), measured.begin(), measured.end());
  }
  return out;
}

// Percent change of test over control; undefined when control is zero.
inline std::optional<double> percent_delta(double test, double control) {
  if (!(control > 0.0)) return std::nullopt;
  return 100.0 * (test - control) / control;
}

inline std::optional<double> median(std::vector<double> v) {
  if (v.empty()) return std::nullopt;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct MetricDelta {
  std::vector<std::optional<double>> per_seed;
  std::optional<double> median;
  // Signs of (test - control), counted even when the percent delta is undefined.
  int positive{0};
  int negative{0};
  int zero{0};
};

struct DeltaRow {
  std::string label;
  int test_group{0};
  int control_group{1};
  std::array<MetricDelta, 4> metrics;
};

struct DeltaReport {
  std::vector<std::uint64_t> seeds;
  std::array<DeltaRow, 3> rows;
  // Largest |delta| between the two random halves of group 1, per metric.
  std::array<std::optional<double>, 4> noise_band;
  std::array<std::vector<double>, 4> impression_dispersion;  // per group, per seed
  std::array<std::optional<double>, 4> median_impression_dispersion;
  std::vector<std::pair<std::size_t, std::size_t>> corpus_sizes;  // (A, B) per seed
  std::int64_t novelty_violations{0};
  std::vector<std::string> warnings;
};

inline constexpr std::array<const char*, 3> kRowLabels{
    "user_exploration_value", "system_exploration_value", "strict_exploration_value"};
inline constexpr std::array<int, 3> kRowTestGroups{4, 3, 2};

inline DeltaReport summarize(const std::vector<SeedOutcome>& outcomes) {
  DeltaReport r;
  for (const auto& o : outcomes) {
    r.seeds.push_back(o.seed);
    r.corpus_sizes.emplace_back(o.corpus_a, o.corpus_b);
    r.novelty_violations += o.novelty_violations;
  }
  for (std::size_t row = 0; row < 3; ++row) {
    DeltaRow& dr = r.rows[row];
    dr.label = kRowLabels[row];
    dr.test_group = kRowTestGroups[row];
    const auto t = static_cast<std::size_t>(dr.test_group - 1);
    for (std::size_t m = 0; m < 4; ++m) {
      MetricDelta& md = dr.metrics[m];
      std::vector<double> defined;
      for (const auto& o : outcomes) {
        const double test = metric_value(o.groups[t], m);
        const double control = metric_value(o.groups[0], m);
        md.per_seed.push_back(percent_delta(test, control));
        if (md.per_seed.back()) defined.push_back(*md.per_seed.back());
        if (test > control)
          ++md.positive;
        else if (test < control)
          ++md.negative;
        else
          ++md.zero;
      }
      md.median = median(defined);
    }
  }
  for (std::size_t m = 0; m < 4; ++m) {
    std::optional<double> band;
    for (const auto& o : outcomes) {
      auto d = percent_delta(metric_value(o.control_halves[1], m),
                             metric_value(o.control_halves[0], m));
      if (d) band = std::max(band.value_or(0.0), std::abs(*d));
    }
    r.noise_band[m] = band;
  }
  for (std::size_t g = 0; g < 4; ++g) {
    for (const auto& o : outcomes)
      if (o.groups[g].histogram)
        r.impression_dispersion[g].push_back(impression_log_dispersion(*o.groups[g].histogram));
    r.median_impression_dispersion[g] = median(r.impression_dispersion[g]);
  }
  return r;
}

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<SeedOutcome> outcomes;
  DeltaReport report;
};

inline std::vector<std::string> config_warnings(const ExperimentConfig& cfg) {
  std::vector<std::string> w;
  if (cfg.target_share == 0.0)
    w.emplace_back(
        "blending.target_share is 0: no group receives exploration content, exploration "
        "parameters have no effect");
  if (cfg.world.n_users % 4 != 0)
    w.emplace_back("world.n_users is not a multiple of 4: leftover users are not measured");
  return w;
}

// Runs every seed (in parallel up to cfg.threads) and reduces in seed order.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                       const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw std::invalid_argument("run_experiment: at least one seed is required");
  cfg.validate();
  ExperimentResult result;
  result.config = cfg;
  result.outcomes.resize(seeds.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      try {
        result.outcomes[i] = run_seed(cfg, seeds[i], cfg.write_logs);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(seeds.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  result.report = summarize(result.outcomes);
  result.report.warnings = config_warnings(cfg);
  return result;
}

inline nlohmann::ordered_json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

inline nlohmann::ordered_json to_json(const DeltaReport& r) {
  nlohmann::ordered_json j;
  j["seeds"] = r.seeds;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : r.rows) {
    nlohmann::ordered_json jr;
    jr["label"] = row.label;
    jr["test_group"] = row.test_group;
    jr["control_group"] = row.control_group;
    nlohmann::ordered_json metrics;
    for (std::size_t m = 0; m < 4; ++m) {
      const MetricDelta& md = row.metrics[m];
      auto per_seed = nlohmann::ordered_json::array();
      for (const auto& v : md.per_seed) per_seed.push_back(optional_json(v));
      metrics[kMetricNames[m]] = {{"per_seed_percent", per_seed},
                                  {"median_percent", optional_json(md.median)},
                                  {"positive_seeds", md.positive},
                                  {"negative_seeds", md.negative},
                                  {"tied_seeds", md.zero}};
    }
    jr["metrics"] = std::move(metrics);
    rows.push_back(std::move(jr));
  }
  j["rows"] = std::move(rows);
  nlohmann::ordered_json band;
  for (std::size_t m = 0; m < 4; ++m) band[kMetricNames[m]] = optional_json(r.noise_band[m]);
  j["control_noise_band_percent"] = std::move(band);
  auto disp = nlohmann::ordered_json::array();
  for (std::size_t g = 0; g < 4; ++g)
    disp.push_back({{"group", g + 1},
                    {"per_seed", r.impression_dispersion[g]},
                    {"median", optional_json(r.median_impression_dispersion[g])}});
  j["impression_log_dispersion"] = std::move(disp);
  auto sizes = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < r.corpus_sizes.size(); ++i)
    sizes.push_back({{"seed", r.seeds[i]},
                     {"model_a", r.corpus_sizes[i].first},
                     {"model_b", r.corpus_sizes[i].second}});
  j["training_set_sizes"] = std::move(sizes);
  j["novelty_violations"] = r.novelty_violations;
  j["warnings"] = r.warnings;
  return j;
}

inline std::string format_percent(const std::optional<double>& v) {
  if (!v) return "n/a";
  std::ostringstream s;
  s << std::showpos << std::fixed << std::setprecision(2) << *v << '%';
  return s.str();
}

inline std::string summary_table(const DeltaReport& r) {
  std::ostringstream s;
  s << "Exploration A/B simulation over " << r.seeds.size() << " seed(s)\n";
  s << "Median percent delta vs group 1 [positive/negative seeds]\n\n";
  s << std::left << std::setw(32) << "row";
  for (const char* m : kMetricNames) s << std::setw(22) << m;
  s << '\n';
  for (const auto& row : r.rows) {
    s << std::setw(32) << (row.label + " (G" + std::to_string(row.test_group) + ")");
    for (const auto& md : row.metrics) {
      std::string cell = format_percent(md.median) + " [" + std::to_string(md.positive) + "/" +
                         std::to_string(md.negative) + "]";
      s << std::setw(22) << cell;
    }
    s << '\n';
  }
  s << '\n' << std::setw(32) << "control noise band";
  for (const auto& b : r.noise_band) s << std::setw(22) << (b ? format_percent(*b) : "n/a");
  s << "\n\nMedian std of per-topic log impressions:";
  for (std::size_t g = 0; g < 4; ++g) {
    s << "  G" << g + 1 << '=';
    if (r.median_impression_dispersion[g])
      s << std::noshowpos << std::fixed << std::setprecision(4) << *r.median_impression_dispersion[g];
    else
      s << "n/a";
  }
  s << "\nNovelty violations: " << r.novelty_violations << '\n';
  for (const auto& w : r.warnings) s << "warning: " << w << '\n';
  return s.str();
}

// Writes report.json, groups.json, config.json, summary.txt, per-group
// histogram CSVs and, when logs were kept, one JSONL event log per seed.
inline void emit_report(const ExperimentResult& result, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + dir.string() + "': " + ec.message());
  auto open = [&](const std::string& name) {
    std::ofstream f(dir / name, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write '" + (dir / name).string() + "'");
    return f;
  };
  {
    auto f = open("report.json");
    f << to_json(result.report).dump(2) << '\n';
  }
  {
    nlohmann::ordered_json groups = nlohmann::ordered_json::array();
    for (const auto& o : result.outcomes) {
      nlohmann::ordered_json js;
      js["seed"] = o.seed;
      auto arr = nlohmann::ordered_json::array();
      for (std::size_t g = 0; g < 4; ++g) {
        auto jg = to_json(o.groups[g]);
        jg["group"] = g + 1;
        jg["users"] = o.group_sizes[g];
        jg["hidden_pair_engagements"] = o.hidden_pair_engagements[g];
        arr.push_back(std::move(jg));
      }
      js["groups"] = std::move(arr);
      js["exploration_impressions"] = o.exploration_impressions;
      js["novelty_violations"] = o.novelty_violations;
      js["model_b_lifts_hidden_pair"] = o.model_b_lifts_hidden_pair;
      groups.push_back(std::move(js));
    }
    auto f = open("groups.json");
    f << groups.dump(2) << '\n';
  }
  {
    auto f = open("config.json");
    f << config_to_json(result.config).dump(2) << '\n';
  }
  for (const auto& o : result.outcomes) {
    for (std::size_t g = 0; g < 4; ++g) {
      if (!o.groups[g].histogram) continue;
      auto f = open("histogram_seed" + std::to_string(o.seed) + "_group" + std::to_string(g + 1) + ".csv");
      write_histogram_csv(f, *o.groups[g].histogram);
    }
    if (!o.log.empty()) {
      ExperimentConfig cfg = result.config;
      cfg.world.global_seed = o.seed;
      const World world = generate_world(cfg.world);
      auto f = open("events_seed" + std::to_string(o.seed) + ".jsonl");
      LogWriter(world.users, world.creators, world.videos).write(f, o.log);
    }
  }
  auto f = open("summary.txt");
  f << summary_table(result.report);
}

}  // namespace pie
