#include "sitemt/vocab.hpp"

namespace sitemt {

Vocabulary::Vocabulary() {
  for (std::string_view t : {kBosToken, kEosToken, kUnkToken}) {
    index_.emplace(std::string(t), static_cast<WordId>(tokens_.size()));
    tokens_.emplace_back(t);
  }
}

WordId Vocabulary::insert(std::string_view token) {
  if (auto it = index_.find(token); it != index_.end()) return it->second;
  WordId id = static_cast<WordId>(tokens_.size());
  tokens_.emplace_back(token);
  index_.emplace(tokens_.back(), id);
  return id;
}

WordId Vocabulary::id(std::string_view token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

std::optional<WordId> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<WordId> Vocabulary::ids(const std::vector<std::string>& tokens) const {
  std::vector<WordId> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

std::vector<WordId> Vocabulary::insert_all(const std::vector<std::string>& tokens) {
  std::vector<WordId> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(insert(t));
  return out;
}

}  // namespace sitemt
