#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "sitemt/vocab.hpp"

namespace sitemt::lm {

inline constexpr int kMaxOrder = 9;
inline constexpr int kDefaultOrder = 5;
// ARPA convention for the sentence-begin unigram, which is never predicted.
inline constexpr double kBosLogProb = -99.0;

struct NGramEntry {
  double log_prob = 0.0;  // log10
  double backoff = 0.0;   // log10; 0 when the n-gram is never a context
  bool has_backoff = false;
};

// Backoff n-gram model. N-grams are indexed by a 64-bit hash built from the
// last word leftwards, so extending a match by one context word is a single
// probe.
class NGramModel {
 public:
  NGramModel(int order, Vocabulary vocab);

  int order() const { return static_cast<int>(levels_.size()); }
  const Vocabulary& vocab() const { return vocab_; }
  Vocabulary& mutable_vocab() { return vocab_; }

  // log10 P(word | context); only the last order-1 context words matter.
  double log_prob(WordId word, std::span<const WordId> context) const;
  double log_prob(std::string_view word, const std::vector<std::string>& context) const;

  // ngram in natural (left-to-right) order.
  const NGramEntry* find(std::span<const WordId> ngram) const;
  NGramEntry* find(std::span<const WordId> ngram);
  void set(std::span<const WordId> ngram, const NGramEntry& entry);

  // Number of stored n-grams of length n (1-based).
  std::size_t count(int n) const { return levels_.at(n - 1).entries.size(); }
  std::span<const WordId> words(int n, std::size_t index) const;
  const NGramEntry& entry(int n, std::size_t index) const { return levels_.at(n - 1).entries[index]; }

  // Restricts queries to n-grams of length <= max_n; used while training.
  double log_prob_up_to(WordId word, std::span<const WordId> context, int max_n) const;

 private:
  struct Level {
    std::unordered_map<std::uint64_t, std::uint32_t> index;
    std::vector<NGramEntry> entries;
    std::vector<WordId> words;  // n per entry
  };

  Vocabulary vocab_;
  std::vector<Level> levels_;
};

std::uint64_t ngram_key(std::span<const WordId> ngram);

NGramModel train_ngram(const std::vector<std::vector<std::string>>& sentences,
                       int order = kDefaultOrder);

// Sum of per-token log10 probabilities after a sentence-begin marker, plus the
// sentence-end term.
double sentence_log_prob(const NGramModel& model, const std::vector<std::string>& tokens);
double perplexity(const NGramModel& model, const std::vector<std::vector<std::string>>& corpus);

// n1/(n1 + 2 n2) clamped to [0.1, 0.9]; 0.1 when no n-gram occurs once or twice.
double absolute_discount(std::uint64_t n1, std::uint64_t n2);

void write_arpa(const NGramModel& model, std::ostream& out);
void write_arpa(const NGramModel& model, const std::filesystem::path& path);
NGramModel read_arpa(std::istream& in);
NGramModel read_arpa(const std::filesystem::path& path);

}  // namespace sitemt::lm
