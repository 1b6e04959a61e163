#pragma once
// Shared ids, error types and sorted-set helpers used across the library.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace srkbqa {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;

// Virtual END relation: never interned, always a valid scoring target.
inline constexpr RelationId kEndRelation = std::numeric_limits<std::uint32_t>::max();

// Sorted, duplicate-free entity ids.
using EntitySet = std::vector<EntityId>;

struct Triple {
  EntityId head;
  RelationId rel;
  EntityId tail;
  auto operator<=>(const Triple&) const = default;
};

// Input/domain errors. The CLI maps these to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

template <typename T>
void sort_unique(std::vector<T>& ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
}

inline bool set_contains(const EntitySet& ids, EntityId id) {
  return std::binary_search(ids.begin(), ids.end(), id);
}

inline EntitySet set_union_sorted(const EntitySet& a, const EntitySet& b) {
  EntitySet out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline EntitySet set_intersection_sorted(const EntitySet& a, const EntitySet& b) {
  EntitySet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

}  // namespace srkbqa
