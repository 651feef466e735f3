#pragma once

#include "f2v/types.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace f2v {

/// Ordered set of unique, non-empty, whitespace-free tokens with a
/// bidirectional token <-> 0-based index map. Insertion order is the index
/// order, so rebuilding from the entry list reproduces the same indices.
class Vocabulary {
 public:
  Vocabulary() = default;

  /// Adds a new token; throws InputError if already present or malformed.
  Index add_unique(std::string token);

  /// Index of an existing token, or adds it at the end.
  Index get_or_add(std::string token);

  std::optional<Index> find(std::string_view token) const;
  bool contains(std::string_view token) const { return find(token).has_value(); }

  const std::string& at(Index i) const;
  Index size() const { return static_cast<Index>(entries_.size()); }
  bool empty() const { return entries_.empty(); }
  const std::vector<std::string>& entries() const { return entries_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.entries_ == b.entries_;
  }

 private:
  std::vector<std::string> entries_;
  std::unordered_map<std::string, Index> index_;
};

/// Lowercases ASCII letters in place (embedding lexicons are lowercase).
std::string to_lower(std::string token);

/// Throws InputError if the token is empty or contains whitespace.
void validate_token(std::string_view token, std::string_view what);

}  // namespace f2v
