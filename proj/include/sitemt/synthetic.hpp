#pragma once

#include <cstdint>
#include <filesystem>

#include "sitemt/corpus.hpp"

namespace sitemt::synthetic {

// Two-domain word-substitution grammar. Both domains translate with the same
// dictionary; target noun phrases put the adjective after the noun.
struct Options {
  std::uint64_t seed = 7;
  std::size_t common_pairs = 50000;
  std::size_t specific_pairs = 1100;
  // Share of each specific content category borrowed from the common lexicon.
  double shared_fraction = 0.3;
  double zipf_exponent = 1.0;

  std::size_t common_nouns = 1500;
  std::size_t common_adjectives = 300;
  std::size_t common_verbs = 300;
  std::size_t specific_nouns = 300;
  std::size_t specific_adjectives = 80;
  std::size_t specific_verbs = 80;
};

struct Data {
  corpus::ParallelCorpus common;
  // Pairs are unique within the domain.
  corpus::ParallelCorpus specific;
};

Data generate(const Options& options);

// Writes common.src/.tgt and specific.src/.tgt into dir.
void write(const Data& data, const std::filesystem::path& dir);

}  // namespace sitemt::synthetic
