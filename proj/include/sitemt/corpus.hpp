#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sitemt/vocab.hpp"

namespace sitemt::corpus {

enum class Origin { common, specific };
enum class Side { source, target };

std::string_view to_string(Origin origin);

struct SentencePair {
  std::vector<std::string> source;
  std::vector<std::string> target;
  Origin origin = Origin::common;

  bool operator==(const SentencePair& o) const {
    return source == o.source && target == o.target;
  }
};

struct ParallelCorpus {
  std::string source_lang = "src";
  std::string target_lang = "tgt";
  std::vector<SentencePair> pairs;
  // Pairs discarded at load time because one side tokenized to nothing.
  std::size_t dropped = 0;

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }
};

struct LoadOptions {
  bool lowercase = true;
  std::string source_lang = "src";
  std::string target_lang = "tgt";
};

// Whitespace split with the punctuation set . , ! ? ; : " ( ) « » — emitted
// as separate tokens. Tokens that spell a reserved vocabulary symbol or the
// phrase-table field separator are rewritten so they cannot collide.
std::vector<std::string> tokenize(std::string_view text, bool lowercase = true);

ParallelCorpus load_parallel(const std::filesystem::path& source_path,
                             const std::filesystem::path& target_path, Origin origin,
                             const LoadOptions& options = {});

void write_parallel(const ParallelCorpus& corpus, const std::filesystem::path& source_path,
                    const std::filesystem::path& target_path);

// common followed by specific; with dedup, later exact duplicates are dropped.
ParallelCorpus combine(const ParallelCorpus& common, const ParallelCorpus& specific, bool dedup);

// Keeps the first occurrence of every (source, target) pair.
ParallelCorpus deduplicate(const ParallelCorpus& corpus);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> tune;
  std::vector<std::size_t> test;
};

// Seeded partition of [0, corpus_size); each part is sorted ascending.
Split split(std::size_t corpus_size, std::uint64_t seed, std::size_t n_tune, std::size_t n_test);
inline Split split(const ParallelCorpus& corpus, std::uint64_t seed, std::size_t n_tune,
                   std::size_t n_test) {
  return split(corpus.size(), seed, n_tune, n_test);
}

ParallelCorpus subset(const ParallelCorpus& corpus, const std::vector<std::size_t>& indices);
ParallelCorpus prefix(const ParallelCorpus& corpus, std::size_t n);

std::string format_split_manifest(const Split& split);
Split parse_split_manifest(std::string_view text);

Vocabulary build_vocab(const ParallelCorpus& corpus, Side side);

std::vector<std::vector<std::string>> side_of(const ParallelCorpus& corpus, Side side);

}  // namespace sitemt::corpus
