#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "sitemt/lm.hpp"
#include "sitemt/phrase_table.hpp"

namespace sitemt::decoder {

enum class Feature : std::size_t { lm, phi_fwd, phi_rev, lex_fwd, lex_rev, word_penalty, distortion };
inline constexpr std::size_t kNumFeatures = 7;
inline constexpr std::array<std::string_view, kNumFeatures> kFeatureNames = {
    "lm", "phi_fwd", "phi_rev", "lex_fwd", "lex_rev", "word_penalty", "distortion"};

using FeatureVector = std::array<double, kNumFeatures>;

// log10-scale value given to each of the four phrase features of a word
// copied through untranslated.
inline constexpr double kOovFeatureCost = -10.0;

class FeatureWeights {
 public:
  FeatureWeights() { values_.fill(0.0); }
  explicit FeatureWeights(const FeatureVector& values) : values_(values) {}

  // lm 0.5, phrase scores 0.2 each, word penalty -1, distortion 0.3.
  static FeatureWeights defaults();

  double operator[](Feature f) const { return values_[static_cast<std::size_t>(f)]; }
  double& operator[](Feature f) { return values_[static_cast<std::size_t>(f)]; }
  double get(std::string_view name) const;
  void set(std::string_view name, double value);

  double dot(const FeatureVector& features) const;
  const FeatureVector& values() const { return values_; }

  bool operator==(const FeatureWeights&) const = default;

 private:
  FeatureVector values_;
};

std::size_t feature_index(std::string_view name);

// name<TAB>value per line; all seven names exactly once.
FeatureWeights parse_weights(std::string_view text);
std::string format_weights(const FeatureWeights& weights);
FeatureWeights read_weights(const std::filesystem::path& path);
void write_weights(const FeatureWeights& weights, const std::filesystem::path& path);

struct DecoderParams {
  static constexpr std::size_t kUnlimitedBeam = std::numeric_limits<std::size_t>::max();
  static constexpr int kUnlimitedDistortion = -1;

  std::size_t beam = 100;
  int distortion_limit = 6;
  int max_phrase_length = 7;
  // Translation options kept per source span, best phi(t|s) first.
  std::size_t max_options = 20;
};

struct DerivationStep {
  int source_begin = 0;
  int source_end = 0;
  std::vector<std::string> target;
  PhraseScores scores;
  bool oov = false;
};

struct Translation {
  std::vector<std::string> target;
  FeatureVector features{};
  double score = 0.0;
  // Phrases in the order they were applied.
  std::vector<DerivationStep> derivation;

  std::string text() const;
};

inline const FeatureVector& score_breakdown(const Translation& t) { return t.features; }

// Phrase-based stack decoder. Holds references to immutable models; a single
// instance may serve concurrent translate calls.
class Decoder {
 public:
  Decoder(const PhraseTable& table, const lm::NGramModel& lm);

  Translation translate(const std::vector<std::string>& source, const FeatureWeights& weights,
                        const DecoderParams& params = {}) const;

  // Up to n distinct target strings, best first.
  std::vector<Translation> decode_nbest(const std::vector<std::string>& source,
                                        const FeatureWeights& weights, const DecoderParams& params,
                                        std::size_t n) const;

  // Feature values of a derivation, recomputed from scratch.
  FeatureVector features_of(const std::vector<DerivationStep>& derivation) const;

  const PhraseTable& table() const { return table_; }
  const lm::NGramModel& lm() const { return lm_; }

 private:
  std::vector<Translation> search(const std::vector<std::string>& source,
                                  const FeatureWeights& weights, const DecoderParams& params,
                                  std::size_t n) const;

  const PhraseTable& table_;
  const lm::NGramModel& lm_;
  std::vector<WordId> lm_ids_;  // phrase-table target id -> LM id
};

}  // namespace sitemt::decoder
