#include "f2v/vocab.hpp"

#include <cctype>

namespace f2v {

void validate_token(std::string_view token, std::string_view what) {
  if (token.empty())
    throw InputError(std::string(what) + ": empty token");
  for (const char c : token) {
    if (std::isspace(static_cast<unsigned char>(c)))
      throw InputError(std::string(what) + ": token '" + std::string(token) +
                       "' contains whitespace");
  }
}

std::string to_lower(std::string token) {
  for (char& c : token) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return token;
}

Index Vocabulary::add_unique(std::string token) {
  validate_token(token, "vocabulary");
  if (index_.count(token) > 0)
    throw InputError("vocabulary: duplicate token '" + token + "'");
  const Index i = size();
  index_.emplace(token, i);
  entries_.push_back(std::move(token));
  return i;
}

Index Vocabulary::get_or_add(std::string token) {
  if (const auto found = find(token)) return *found;
  return add_unique(std::move(token));
}

std::optional<Index> Vocabulary::find(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::at(Index i) const {
  if (i < 0 || i >= size()) throw Error("vocabulary: index out of range");
  return entries_[static_cast<std::size_t>(i)];
}

}  // namespace f2v
