#pragma once

// Per-user Thompson sampling over an exploration space with Beta-Bernoulli
// posteriors and a connected/expired arm lifecycle.

#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pie/ids.hpp"
#include "pie/ppr.hpp"
#include "pie/random.hpp"

namespace pie {

enum class ArmStatus : std::uint8_t { active, connected, expired };

inline const char* to_string(ArmStatus s) {
  switch (s) {
    case ArmStatus::active: return "active";
    case ArmStatus::connected: return "connected";
    case ArmStatus::expired: return "expired";
  }
  return "active";
}

inline ArmStatus arm_status_from_string(const std::string& s) {
  if (s == "active") return ArmStatus::active;
  if (s == "connected") return ArmStatus::connected;
  if (s == "expired") return ArmStatus::expired;
  throw std::invalid_argument("unknown arm status '" + s + "'");
}

struct ArmState {
  CreatorId creator;
  double alpha{1.0};
  double beta{1.0};
  std::int64_t impressions{0};
  std::int64_t engagements{0};
  ArmStatus status{ArmStatus::active};
};

struct BanditParams {
  double prior_alpha = 1.0;
  double prior_beta = 1.0;
  int connect_engagements = 3;
  int expire_impressions = 20;

  void validate() const {
    if (!(prior_alpha > 0.0) || !(prior_beta > 0.0))
      throw std::invalid_argument("bandit: priors must be positive");
    if (connect_engagements < 1 || expire_impressions < 1)
      throw std::invalid_argument("bandit: lifecycle thresholds must be >= 1");
  }
};

class UserBandit {
 public:
  UserBandit() = default;

  UserBandit(UserId user, const std::vector<CreatorId>& creators, double prior_alpha,
             double prior_beta, std::uint64_t seed)
      : user_(user), prior_alpha_(prior_alpha), prior_beta_(prior_beta), seed_(seed), rng_(seed) {
    if (!(prior_alpha > 0.0) || !(prior_beta > 0.0))
      throw std::invalid_argument("init_bandit: priors must be positive");
    for (CreatorId c : creators) {
      ArmState arm;
      arm.creator = c;
      arm.alpha = prior_alpha;
      arm.beta = prior_beta;
      arms_.emplace(c, arm);
    }
  }

  UserId user() const { return user_; }
  std::uint64_t rng_seed() const { return seed_; }
  double prior_alpha() const { return prior_alpha_; }
  double prior_beta() const { return prior_beta_; }
  const std::map<CreatorId, ArmState>& arms() const { return arms_; }
  Rng& rng() { return rng_; }

  const ArmState& arm(CreatorId c) const {
    auto it = arms_.find(c);
    if (it == arms_.end()) throw std::invalid_argument("bandit: unknown creator");
    return it->second;
  }

  std::size_t active_arms() const {
    std::size_t n = 0;
    for (const auto& [_, a] : arms_) n += a.status == ArmStatus::active;
    return n;
  }

  // Samples every active arm's posterior and returns the argmax. Arms are
  // visited in ascending creator id, so strict '>' keeps the smallest id on ties.
  std::optional<CreatorId> select_creator() {
    std::optional<CreatorId> best;
    double best_draw = -1.0;
    for (const auto& [c, a] : arms_) {
      if (a.status != ArmStatus::active) continue;
      const double draw = sample_beta(a.alpha, a.beta, rng_);
      if (draw > best_draw) {
        best_draw = draw;
        best = c;
      }
    }
    return best;
  }

  // Updates the posterior and runs the lifecycle check for that arm.
  void record_outcome(CreatorId c, bool engaged, const BanditParams& p) {
    auto it = arms_.find(c);
    if (it == arms_.end()) throw std::invalid_argument("record_outcome: unknown creator");
    ArmState& a = it->second;
    ++a.impressions;
    if (engaged) {
      ++a.engagements;
      a.alpha += 1.0;
    } else {
      a.beta += 1.0;
    }
    advance_lifecycle(p.connect_engagements, p.expire_impressions);
  }

  void advance_lifecycle(int connect_engagements, int expire_impressions) {
    for (auto& [_, a] : arms_) {
      if (a.status != ArmStatus::active) continue;
      if (a.engagements >= connect_engagements)
        a.status = ArmStatus::connected;
      else if (a.impressions >= expire_impressions && a.engagements == 0)
        a.status = ArmStatus::expired;
    }
  }

  nlohmann::json to_json(const CreatorTable* names = nullptr) const {
    nlohmann::ordered_json j;
    j["user"] = user_.value;
    j["rng_seed"] = seed_;
    j["prior_alpha"] = prior_alpha_;
    j["prior_beta"] = prior_beta_;
    std::ostringstream engine;
    engine << rng_;
    j["rng_state"] = engine.str();
    auto arms = nlohmann::ordered_json::array();
    for (const auto& [c, a] : arms_) {
      nlohmann::ordered_json arm;
      arm["creator"] = c.value;
      if (names) arm["creator_id"] = names->name(c);
      arm["alpha"] = a.alpha;
      arm["beta"] = a.beta;
      arm["impressions"] = a.impressions;
      arm["engagements"] = a.engagements;
      arm["status"] = to_string(a.status);
      arms.push_back(std::move(arm));
    }
    j["arms"] = std::move(arms);
    return nlohmann::json(j);
  }

  static UserBandit from_json(const nlohmann::json& j) {
    UserBandit b;
    b.user_ = UserId(j.at("user").get<std::uint32_t>());
    b.seed_ = j.at("rng_seed").get<std::uint64_t>();
    b.prior_alpha_ = j.at("prior_alpha").get<double>();
    b.prior_beta_ = j.at("prior_beta").get<double>();
    std::istringstream engine(j.at("rng_state").get<std::string>());
    engine >> b.rng_;
    if (!engine) throw std::invalid_argument("bandit snapshot: bad rng_state");
    for (const auto& arm : j.at("arms")) {
      ArmState a;
      a.creator = CreatorId(arm.at("creator").get<std::uint32_t>());
      a.alpha = arm.at("alpha").get<double>();
      a.beta = arm.at("beta").get<double>();
      a.impressions = arm.at("impressions").get<std::int64_t>();
      a.engagements = arm.at("engagements").get<std::int64_t>();
      a.status = arm_status_from_string(arm.at("status").get<std::string>());
      if (a.engagements > a.impressions || a.engagements < 0)
        throw std::invalid_argument("bandit snapshot: engagements exceed impressions");
      b.arms_.emplace(a.creator, a);
    }
    return b;
  }

 private:
  UserId user_;
  double prior_alpha_{1.0};
  double prior_beta_{1.0};
  std::uint64_t seed_{0};
  Rng rng_;
  std::map<CreatorId, ArmState> arms_;
};

inline UserBandit init_bandit(const ExplorationSpace& space, double prior_alpha, double prior_beta,
                              std::uint64_t seed) {
  std::vector<CreatorId> creators;
  creators.reserve(space.candidates.size());
  for (const auto& c : space.candidates) creators.push_back(c.creator);
  return UserBandit(space.user, creators, prior_alpha, prior_beta, seed);
}

using Catalog = std::map<CreatorId, std::vector<VideoId>>;

inline VideoId select_video(CreatorId creator, const Catalog& catalog, Rng& rng) {
  auto it = catalog.find(creator);
  if (it == catalog.end() || it->second.empty())
    throw std::invalid_argument("select_video: creator has no videos");
  return it->second[uniform_index(it->second.size(), rng)];
}

}  // namespace pie
