#pragma once

// Engagement log records, JSONL reading/writing, windowing and per-user
// interaction histories.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "pie/ids.hpp"

namespace pie {

enum class EventKind : std::uint8_t { impression, engagement };

inline const char* to_string(EventKind k) {
  return k == EventKind::impression ? "impression" : "engagement";
}

struct EngagementEvent {
  UserId user;
  CreatorId creator;
  VideoId video;
  std::int32_t day{0};
  EventKind kind{EventKind::impression};
  bool from_exploration{false};
  double weight{1.0};

  friend bool operator==(const EngagementEvent&, const EngagementEvent&) = default;
};

// Events together with the name tables that give their ids meaning.
struct EventLog {
  UserTable users;
  CreatorTable creators;
  VideoTable videos;
  std::vector<EngagementEvent> events;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& reason)
      : std::runtime_error("line " + std::to_string(line) + ": " + reason),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void validate_event(const EngagementEvent& e) {
  if (!(e.weight >= 0.0) || !std::isfinite(e.weight))
    throw ValidationError("weight must be a finite non-negative number");
  if (e.weight == 0.0 && e.kind == EventKind::engagement)
    throw ValidationError("weight must be positive for engagement events");
  if (e.day < 0) throw ValidationError("day must be non-negative");
}

namespace detail {

inline const nlohmann::json& require(const nlohmann::json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw std::runtime_error(std::string("missing key '") + key + "'");
  return *it;
}

inline std::string require_string(const nlohmann::json& obj, const char* key) {
  const auto& v = require(obj, key);
  if (!v.is_string()) throw std::runtime_error(std::string("'") + key + "' must be a string");
  return v.get<std::string>();
}

}  // namespace detail

// Parses one JSONL record into `log`. Throws ParseError on malformed input.
inline void parse_log_line(const std::string& line, std::size_t line_no, EventLog& log) {
  static const char* const kKeys[] = {"user_id", "creator_id", "video_id", "day",
                                      "kind",    "weight",     "from_exploration"};
  nlohmann::json obj;
  try {
    obj = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& ex) {
    throw ParseError(line_no, std::string("invalid JSON: ") + ex.what());
  }
  if (!obj.is_object()) throw ParseError(line_no, "record is not a JSON object");
  for (const auto& [key, _] : obj.items()) {
    if (std::find_if(std::begin(kKeys), std::end(kKeys),
                     [&](const char* k) { return key == k; }) == std::end(kKeys))
      throw ParseError(line_no, "unknown key '" + key + "'");
  }
  try {
    EngagementEvent e;
    const std::string user = detail::require_string(obj, "user_id");
    const std::string creator = detail::require_string(obj, "creator_id");
    const std::string video = detail::require_string(obj, "video_id");

    const auto& day = detail::require(obj, "day");
    if (!day.is_number_integer()) throw std::runtime_error("'day' must be an integer");
    const auto day_value = day.get<std::int64_t>();
    if (day_value < 0) throw ValidationError("day must be non-negative");
    if (day_value > std::numeric_limits<std::int32_t>::max())
      throw std::runtime_error("'day' out of range");
    e.day = static_cast<std::int32_t>(day_value);

    const std::string kind = detail::require_string(obj, "kind");
    if (kind == "impression")
      e.kind = EventKind::impression;
    else if (kind == "engagement")
      e.kind = EventKind::engagement;
    else
      throw std::runtime_error("'kind' must be \"impression\" or \"engagement\"");

    if (auto it = obj.find("weight"); it != obj.end()) {
      if (!it->is_number()) throw std::runtime_error("'weight' must be a number");
      e.weight = it->get<double>();
    }
    if (auto it = obj.find("from_exploration"); it != obj.end()) {
      if (!it->is_boolean()) throw std::runtime_error("'from_exploration' must be a boolean");
      e.from_exploration = it->get<bool>();
    }
    validate_event(e);
    e.user = log.users.intern(user);
    e.creator = log.creators.intern(creator);
    e.video = log.videos.intern(video);
    log.events.push_back(e);
  } catch (const ParseError&) {
    throw;
  } catch (const ValidationError& ex) {
    throw ValidationError("line " + std::to_string(line_no) + ": " + ex.what());
  } catch (const std::exception& ex) {
    throw ParseError(line_no, ex.what());
  }
}

// Every engagement needs an impression of the same (user, video) on the same
// or an earlier day somewhere in the log.
inline void validate_log(std::span<const EngagementEvent> events) {
  std::unordered_map<std::uint64_t, std::int32_t> first_impression;
  auto key = [](const EngagementEvent& e) {
    return static_cast<std::uint64_t>(e.user.value) << 32 | e.video.value;
  };
  for (const auto& e : events) {
    if (e.kind != EventKind::impression) continue;
    auto [it, fresh] = first_impression.try_emplace(key(e), e.day);
    if (!fresh) it->second = std::min(it->second, e.day);
  }
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    if (e.kind != EventKind::engagement) continue;
    auto it = first_impression.find(key(e));
    if (it == first_impression.end() || it->second > e.day)
      throw ValidationError("event " + std::to_string(i + 1) +
                            ": engagement without a same-or-earlier impression of the video");
  }
}

// Reads line-delimited JSON records. Blank lines are skipped.
inline EventLog parse_log(std::istream& in) {
  EventLog log;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    parse_log_line(line, line_no, log);
  }
  return log;
}

inline std::string format_weight(double w) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), w);
  std::string s(buf, ptr);
  if (s.find_first_of(".eE") == std::string::npos && s != "inf" && s != "nan") s += ".0";
  return s;
}

// Writes events in the JSONL schema with a fixed key order.
class LogWriter {
 public:
  LogWriter(const UserTable& users, const CreatorTable& creators, const VideoTable& videos)
      : users_(quote_all(users)), creators_(quote_all(creators)), videos_(quote_all(videos)) {}

  void write(std::ostream& out, const EngagementEvent& e) const {
    out << "{\"user_id\":" << users_.at(e.user.value)
        << ",\"creator_id\":" << creators_.at(e.creator.value)
        << ",\"video_id\":" << videos_.at(e.video.value) << ",\"day\":" << e.day
        << ",\"kind\":\"" << to_string(e.kind) << "\",\"weight\":" << format_weight(e.weight)
        << ",\"from_exploration\":" << (e.from_exploration ? "true" : "false") << "}\n";
  }

  void write(std::ostream& out, std::span<const EngagementEvent> events) const {
    for (const auto& e : events) write(out, e);
  }

 private:
  template <typename Table>
  static std::vector<std::string> quote_all(const Table& t) {
    std::vector<std::string> out;
    out.reserve(t.size());
    for (std::uint32_t i = 0; i < t.size(); ++i)
      out.push_back(nlohmann::json(t.name(typename Table::id_type(i))).dump());
    return out;
  }

  std::vector<std::string> users_;
  std::vector<std::string> creators_;
  std::vector<std::string> videos_;
};

inline void write_log(std::ostream& out, const EventLog& log) {
  LogWriter(log.users, log.creators, log.videos).write(out, log.events);
}

inline std::vector<EngagementEvent> window_events(std::span<const EngagementEvent> events,
                                                  std::int32_t start_day, std::int32_t end_day) {
  if (start_day > end_day)
    throw std::invalid_argument("window_events: start_day must not exceed end_day");
  std::vector<EngagementEvent> out;
  std::copy_if(events.begin(), events.end(), std::back_inserter(out), [&](const auto& e) {
    return e.day >= start_day && e.day <= end_day;
  });
  return out;
}

struct CreatorSummary {
  std::int32_t first_day{0};
  std::int32_t last_day{0};
  std::int64_t impression_count{0};
  std::int64_t engagement_count{0};
  double engagement_weight_sum{0.0};

  friend bool operator==(const CreatorSummary&, const CreatorSummary&) = default;
};

struct InteractionHistory {
  UserId user;
  std::map<CreatorId, CreatorSummary> creators;

  bool interacted(CreatorId c) const { return creators.count(c) != 0; }
};

using HistoryMap = std::map<UserId, InteractionHistory>;

// Any event (impression or engagement) counts as an interaction.
inline HistoryMap build_histories(std::span<const EngagementEvent> events) {
  HistoryMap out;
  for (const auto& e : events) {
    auto [it, inserted] = out.try_emplace(e.user);
    if (inserted) it->second.user = e.user;
    auto [cit, fresh] = it->second.creators.try_emplace(e.creator);
    CreatorSummary& s = cit->second;
    if (fresh) {
      s.first_day = e.day;
      s.last_day = e.day;
    } else {
      s.first_day = std::min(s.first_day, e.day);
      s.last_day = std::max(s.last_day, e.day);
    }
    if (e.kind == EventKind::impression) {
      ++s.impression_count;
    } else {
      ++s.engagement_count;
      s.engagement_weight_sum += e.weight;
    }
  }
  return out;
}

}  // namespace pie
