#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace sitemt {

using WordId = std::uint32_t;

// Token <-> id bijection. Ids 0..2 are reserved for sentence begin, sentence
// end and unknown; corpus tokens are numbered from 3 in insertion order.
class Vocabulary {
 public:
  static constexpr WordId kBos = 0;
  static constexpr WordId kEos = 1;
  static constexpr WordId kUnk = 2;
  static constexpr WordId kFirstFree = 3;

  static constexpr std::string_view kBosToken = "<s>";
  static constexpr std::string_view kEosToken = "</s>";
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocabulary();

  WordId insert(std::string_view token);
  // kUnk for tokens never inserted.
  WordId id(std::string_view token) const;
  std::optional<WordId> find(std::string_view token) const;
  const std::string& token(WordId id) const { return tokens_.at(id); }

  std::size_t size() const { return tokens_.size(); }
  static bool is_reserved(WordId id) { return id < kFirstFree; }

  std::vector<WordId> ids(const std::vector<std::string>& tokens) const;
  std::vector<WordId> insert_all(const std::vector<std::string>& tokens);

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
  };
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, WordId, Hash, std::equal_to<>> index_;
};

}  // namespace sitemt
