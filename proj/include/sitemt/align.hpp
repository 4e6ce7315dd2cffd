#pragma once

#include <cstdint>
#include <limits>
#include <set>
#include <span>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sitemt/vocab.hpp"

namespace sitemt::align {

// Source-side NULL word prepended to every sentence by Model 1.
inline constexpr WordId kNullWord = std::numeric_limits<WordId>::max();
inline constexpr double kProbFloor = 1e-12;

struct IdPair {
  std::vector<WordId> source;
  std::vector<WordId> target;
};

// Sparse t(target | source).
class LexicalTable {
 public:
  double prob(WordId target, WordId source) const;
  void set(WordId source, WordId target, double p) { table_[key(source, target)] = p; }
  std::size_t size() const { return table_.size(); }

  // Sum over targets of t(. | source).
  std::unordered_map<WordId, double> row_sums() const;

  template <class F>
  void for_each(F&& f) const {
    for (const auto& [k, p] : table_)
      f(static_cast<WordId>(k >> 32), static_cast<WordId>(k & 0xffffffffu), p);
  }

  static std::uint64_t key(WordId source, WordId target) {
    return (static_cast<std::uint64_t>(source) << 32) | target;
  }

 private:
  std::unordered_map<std::uint64_t, double> table_;
};

struct Model1Options {
  int iterations = 5;
  // Pairs longer than this on either side are left out of EM.
  std::size_t max_sentence_length = 100;
};

struct Model1Result {
  LexicalTable table;
  // Corpus log-likelihood (natural log) before each iteration and after the
  // last one: iterations + 1 values.
  std::vector<double> log_likelihood;
};

Model1Result train_model1(std::span<const IdPair> corpus, const Model1Options& options = {});

// Swaps source and target of every pair.
std::vector<IdPair> reversed(std::span<const IdPair> corpus);

class AlignmentMatrix {
 public:
  using Link = std::pair<int, int>;  // (source position, target position)

  AlignmentMatrix() = default;
  AlignmentMatrix(int source_len, int target_len) : source_len_(source_len), target_len_(target_len) {}

  int source_len() const { return source_len_; }
  int target_len() const { return target_len_; }
  void add(int i, int j);
  bool contains(int i, int j) const { return links_.count({i, j}) != 0; }
  const std::set<Link>& links() const { return links_; }
  std::size_t size() const { return links_.size(); }

  bool operator==(const AlignmentMatrix&) const = default;

 private:
  int source_len_ = 0;
  int target_len_ = 0;
  std::set<Link> links_;
};

enum class Direction {
  forward,  // table is t(target | source): each target word picks a source word
  reverse,  // table is t(source | target): each source word picks a target word
};

// Model 1 best link per word; a word whose best candidate is NULL stays
// unlinked, ties go to the leftmost position (NULL counts as leftmost).
AlignmentMatrix viterbi_align(const LexicalTable& table, const IdPair& pair, Direction direction);

enum class Heuristic { intersection, union_, grow_diag_final };
Heuristic parse_heuristic(std::string_view name);

AlignmentMatrix symmetrize(const AlignmentMatrix& forward, const AlignmentMatrix& reverse,
                           Heuristic heuristic);

// Half-open spans.
struct PhraseSpan {
  int source_begin, source_end;
  int target_begin, target_end;
  auto operator<=>(const PhraseSpan&) const = default;
};

// Every consistent (source, target) rectangle with both sides at most
// max_len long, including the unaligned-boundary extensions; sorted.
std::vector<PhraseSpan> extract_phrases(const AlignmentMatrix& alignment, int max_len);

}  // namespace sitemt::align
