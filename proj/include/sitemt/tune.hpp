#pragma once

#include <string>
#include <vector>

#include "sitemt/decoder.hpp"

namespace sitemt::tune {

using Sentences = std::vector<std::vector<std::string>>;

struct TuneOptions {
  std::size_t max_passes = 5;
  std::vector<double> multipliers = {0.25, 0.5, 1.0, 2.0, 4.0};
  // 0 picks the hardware concurrency.
  unsigned threads = 0;
};

struct TuneResult {
  decoder::FeatureWeights weights;
  double initial_wer = 0.0;
  double final_wer = 0.0;
  std::size_t passes = 0;
  // One line per accepted move.
  std::vector<std::string> log;
};

// 1-best translations in input order; sentences are decoded concurrently.
std::vector<decoder::Translation> translate_all(const decoder::Decoder& decoder,
                                                const Sentences& sources,
                                                const decoder::FeatureWeights& weights,
                                                const decoder::DecoderParams& params,
                                                unsigned threads = 0);

// Corpus WER: summed edit distance over summed reference length.
double corpus_wer(const std::vector<decoder::Translation>& hyps, const Sentences& refs);

// Coordinate search over feature weights with dev-set WER as the objective.
// For each feature in fixed order, every multiplier and its negation is tried
// on the current weight; a move is kept only if it lowers WER.
TuneResult tune_weights(const Sentences& dev_source, const Sentences& dev_reference,
                        const decoder::Decoder& decoder, const decoder::FeatureWeights& initial,
                        const decoder::DecoderParams& params, const TuneOptions& options = {});

}  // namespace sitemt::tune
