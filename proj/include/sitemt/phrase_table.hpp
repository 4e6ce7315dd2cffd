#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "sitemt/align.hpp"
#include "sitemt/vocab.hpp"

namespace sitemt {

using Phrase = std::vector<WordId>;

struct PhraseHash {
  std::size_t operator()(const Phrase& p) const noexcept {
    std::size_t h = 1469598103934665603ull;
    for (WordId w : p) h = (h ^ w) * 1099511628211ull;
    return h;
  }
};

struct PhraseScores {
  double phi_fwd = 1.0;  // phi(t|s)
  double phi_rev = 1.0;  // phi(s|t)
  double lex_fwd = 1.0;  // lex(t|s)
  double lex_rev = 1.0;  // lex(s|t)
};

struct PhraseCandidate {
  Phrase target;
  PhraseScores scores;
};

class PhraseTable {
 public:
  PhraseTable() = default;
  PhraseTable(Vocabulary source_vocab, Vocabulary target_vocab, int max_phrase_length)
      : source_vocab_(std::move(source_vocab)),
        target_vocab_(std::move(target_vocab)),
        max_phrase_length_(max_phrase_length) {}

  void add(const Phrase& source, PhraseCandidate candidate);
  // Orders every candidate list: phi(t|s) descending, then target text.
  void finalize();

  // Empty when the phrase is absent.
  const std::vector<PhraseCandidate>& lookup(std::span<const WordId> source) const;
  std::vector<PhraseCandidate> lookup(const std::vector<std::string>& source) const;

  const Vocabulary& source_vocab() const { return source_vocab_; }
  const Vocabulary& target_vocab() const { return target_vocab_; }
  Vocabulary& mutable_source_vocab() { return source_vocab_; }
  Vocabulary& mutable_target_vocab() { return target_vocab_; }
  int max_phrase_length() const { return max_phrase_length_; }

  std::size_t source_count() const { return entries_.size(); }
  std::size_t pair_count() const;
  const std::unordered_map<Phrase, std::vector<PhraseCandidate>, PhraseHash>& entries() const {
    return entries_;
  }

  std::string text(std::span<const WordId> phrase, bool source) const;

 private:
  Vocabulary source_vocab_;
  Vocabulary target_vocab_;
  int max_phrase_length_ = 7;
  std::unordered_map<Phrase, std::vector<PhraseCandidate>, PhraseHash> entries_;
};

// Lexical weight of one phrase pair under its internal links: per target word,
// the mean of t(target | linked source) (or t(target | NULL) when unlinked),
// multiplied over target words. Links are phrase-relative (source, target).
double lexical_weight(std::span<const WordId> source, std::span<const WordId> target,
                      const std::vector<std::pair<int, int>>& links,
                      const align::LexicalTable& table);

PhraseTable build_phrase_table(std::span<const align::IdPair> corpus,
                               std::span<const align::AlignmentMatrix> alignments,
                               const align::LexicalTable& lexical_fwd,
                               const align::LexicalTable& lexical_rev, int max_len,
                               Vocabulary source_vocab, Vocabulary target_vocab);

// SRC ||| TGT ||| phi(t|s) phi(s|t) lex(t|s) lex(s|t), sorted by source then target text.
void write_phrase_table(const PhraseTable& table, std::ostream& out);
void write_phrase_table(const PhraseTable& table, const std::filesystem::path& path);
PhraseTable read_phrase_table(std::istream& in);
PhraseTable read_phrase_table(const std::filesystem::path& path);

}  // namespace sitemt
