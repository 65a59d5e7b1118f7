#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pie {

// Dense integer handle for an entity. Ordering of handles is the tie-break
// order used throughout the library.
template <typename Tag>
struct Id {
  std::uint32_t value{0};

  constexpr Id() = default;
  constexpr explicit Id(std::uint32_t v) : value(v) {}

  friend constexpr auto operator<=>(Id, Id) = default;
};

struct UserTag {};
struct CreatorTag {};
struct VideoTag {};

using UserId = Id<UserTag>;
using CreatorId = Id<CreatorTag>;
using VideoId = Id<VideoTag>;

// Maps opaque external names to dense ids, in order of first registration.
template <typename IdType>
class IdTable {
 public:
  using id_type = IdType;

  IdType intern(std::string_view name) {
    auto it = index_.find(std::string(name));
    if (it != index_.end()) return it->second;
    IdType id(static_cast<std::uint32_t>(names_.size()));
    names_.emplace_back(name);
    index_.emplace(names_.back(), id);
    return id;
  }

  const std::string& name(IdType id) const {
    if (id.value >= names_.size())
      throw std::out_of_range("unknown id " + std::to_string(id.value));
    return names_[id.value];
  }

  bool contains(std::string_view name) const {
    return index_.count(std::string(name)) != 0;
  }

  IdType at(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end())
      throw std::out_of_range("unknown name '" + std::string(name) + "'");
    return it->second;
  }

  std::size_t size() const { return names_.size(); }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, IdType> index_;
};

using UserTable = IdTable<UserId>;
using CreatorTable = IdTable<CreatorId>;
using VideoTable = IdTable<VideoId>;

// Packs a (user, creator) pair into one key for hashed lookups.
constexpr std::uint64_t pair_key(UserId u, CreatorId c) {
  return (static_cast<std::uint64_t>(u.value) << 32) | c.value;
}

constexpr UserId key_user(std::uint64_t key) {
  return UserId(static_cast<std::uint32_t>(key >> 32));
}

constexpr CreatorId key_creator(std::uint64_t key) {
  return CreatorId(static_cast<std::uint32_t>(key & 0xffffffffu));
}

}  // namespace pie

template <typename Tag>
struct std::hash<pie::Id<Tag>> {
  std::size_t operator()(pie::Id<Tag> id) const noexcept {
    return std::hash<std::uint32_t>{}(id.value);
  }
};
