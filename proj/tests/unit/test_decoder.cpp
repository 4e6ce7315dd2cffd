#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles/decoder_oracle.hpp"
#include "sitemt/decoder.hpp"
#include "sitemt/error.hpp"
#include "support.hpp"
#include "toy.hpp"

using namespace sitemt;
using namespace sitemt::decoder;

namespace {

lm::NGramModel uniform_lm(const std::vector<std::string>& words) {
  Vocabulary v;
  for (const auto& w : words) v.insert(w);
  lm::NGramModel m(1, v);
  const double lp = std::log10(1.0 / static_cast<double>(v.size() - 1));
  for (WordId id = 0; id < v.size(); ++id)
    m.set(std::vector<WordId>{id}, lm::NGramEntry{id == Vocabulary::kBos ? -99.0 : lp, 0.0, false});
  return m;
}

DecoderParams exhaustive() {
  DecoderParams p;
  p.beam = DecoderParams::kUnlimitedBeam;
  p.distortion_limit = DecoderParams::kUnlimitedDistortion;
  return p;
}

double dot(const FeatureWeights& w, const FeatureVector& f) {
  double s = 0.0;
  for (std::size_t k = 0; k < kNumFeatures; ++k) s += w.values()[k] * f[k];
  return s;
}

}  // namespace

TEST_SUITE("decoder") {
  TEST_CASE("weights file format") {
    auto w = FeatureWeights::defaults();
    auto text = format_weights(w);
    CHECK(text.find("lm\t0.5\n") != std::string::npos);
    CHECK(parse_weights(text) == w);
    CHECK_THROWS_AS(parse_weights("lm\t1\n"), Error);
    CHECK_THROWS_AS(parse_weights(text + "bogus\t1\n"), Error);
    CHECK_THROWS_AS(parse_weights(text + "lm\t1\n"), Error);
    std::string bad = text;
    bad.replace(bad.find("0.5"), 3, "nan");
    CHECK_THROWS_AS(parse_weights(bad), Error);
    CHECK(feature_index("distortion") == 6);
    CHECK_THROWS_AS(feature_index("nope"), Error);
  }

  TEST_CASE("weights file round trip on disk") {
    testing::TempDir dir;
    FeatureWeights w = FeatureWeights::defaults();
    w.set("distortion", -0.123456789012345678);
    write_weights(w, dir / "w.txt");
    CHECK(read_weights(dir / "w.txt") == w);
  }

  TEST_CASE("identity table reproduces the input") {
    auto t = testing::toy_table({{"a", "a"}, {"b", "b"}, {"c", "c"}});
    auto m = uniform_lm({"a", "b", "c"});
    Decoder d(t, m);
    std::vector<std::string> src = {"c", "a", "b", "a"};
    CHECK(d.translate(src, FeatureWeights::defaults()).target == src);
    FeatureWeights w = FeatureWeights::defaults();
    w[Feature::phi_fwd] = 3.0;
    CHECK(d.translate(src, w, exhaustive()).target == src);
  }

  TEST_CASE("unknown word copied through with the fixed cost") {
    auto t = testing::toy_table({{"a", "x"}});
    auto m = uniform_lm({"x"});
    Decoder d(t, m);
    auto r = d.translate({"a", "Zork"}, FeatureWeights::defaults());
    CHECK(r.target == std::vector<std::string>{"x", "Zork"});
    CHECK(r.derivation.back().oov);
    CHECK(r.features[static_cast<std::size_t>(Feature::phi_fwd)] == doctest::Approx(kOovFeatureCost));
  }

  TEST_CASE("breakdown definitions") {
    auto t = testing::toy_table({{"a", "x y"}, {"b", "z"}});
    auto m = lm::train_ngram({{"x", "y", "z"}, {"z", "x"}}, 2);
    Decoder d(t, m);
    auto r = d.translate({"a", "b"}, FeatureWeights::defaults(), exhaustive());
    CHECK(r.features[static_cast<std::size_t>(Feature::word_penalty)] == -static_cast<double>(r.target.size()));
    CHECK(r.features[static_cast<std::size_t>(Feature::lm)] ==
          doctest::Approx(lm::sentence_log_prob(m, r.target)).epsilon(1e-12));
    double dist = 0.0;
    int last_end = -1;
    for (const auto& s : r.derivation) {
      dist -= std::abs(s.source_begin - last_end - 1);
      last_end = s.source_end - 1;
    }
    CHECK(r.features[static_cast<std::size_t>(Feature::distortion)] == dist);
    CHECK(score_breakdown(r) == r.features);
  }

  TEST_CASE("reordering when the language model asks for it") {
    auto t = testing::toy_table({{"a", "x"}, {"b", "y"}});
    auto m = lm::train_ngram(std::vector<std::vector<std::string>>(20, {"y", "x"}), 2);
    Decoder d(t, m);
    FeatureWeights w = FeatureWeights::defaults();
    w[Feature::distortion] = 0.01;
    CHECK(d.translate({"a", "b"}, w, exhaustive()).target == std::vector<std::string>{"y", "x"});
    DecoderParams mono = exhaustive();
    mono.distortion_limit = 0;
    CHECK(d.translate({"a", "b"}, w, mono).target == std::vector<std::string>{"x", "y"});
  }

  TEST_CASE("empty source and bad n-best size") {
    auto t = testing::toy_table({{"a", "x"}});
    auto m = uniform_lm({"x"});
    Decoder d(t, m);
    CHECK_THROWS_AS(d.translate({}, FeatureWeights::defaults()), Error);
    CHECK_THROWS_AS(d.decode_nbest({"a"}, FeatureWeights::defaults(), {}, 0), Error);
  }

  TEST_CASE("exhaustive search matches brute force") {
    for (std::uint64_t seed = 1; seed <= 60; ++seed) {
      auto inst = testing::random_decoder_instance(seed);
      Decoder d(inst.table, inst.lm);
      auto best = oracle::enumerate_translations(inst.source, inst.table, inst.lm, inst.weights, 7);
      double top = -1e300;
      for (const auto& [s, der] : best) top = std::max(top, der.score);
      auto r = d.translate(inst.source, inst.weights, exhaustive());
      INFO("seed " << seed);
      CHECK(r.score == doctest::Approx(top).epsilon(1e-12));
      CHECK(std::abs(r.score - dot(inst.weights, r.features)) <= 1e-9);
    }
  }

  TEST_CASE("n-best equals top of the enumeration") {
    for (std::uint64_t seed = 100; seed < 130; ++seed) {
      auto inst = testing::random_decoder_instance(seed);
      Decoder d(inst.table, inst.lm);
      auto best = oracle::enumerate_translations(inst.source, inst.table, inst.lm, inst.weights, 7);
      std::vector<double> scores;
      for (const auto& [s, der] : best) scores.push_back(der.score);
      std::sort(scores.rbegin(), scores.rend());
      auto nb = d.decode_nbest(inst.source, inst.weights, exhaustive(), 5);
      INFO("seed " << seed);
      REQUIRE(nb.size() == std::min<std::size_t>(5, scores.size()));
      std::set<std::string> texts;
      for (std::size_t k = 0; k < nb.size(); ++k) {
        CHECK(nb[k].score == doctest::Approx(scores[k]).epsilon(1e-12));
        CHECK(texts.insert(nb[k].text()).second);
        CHECK(best.count(nb[k].text()));
        if (k > 0) CHECK(nb[k].score <= nb[k - 1].score);
      }
      auto one = d.decode_nbest(inst.source, inst.weights, exhaustive(), 1);
      CHECK(one.front().text() == d.translate(inst.source, inst.weights, exhaustive()).text());
    }
  }

  TEST_CASE("n-best with two candidates per word is ordered") {
    auto t = testing::toy_table({{"a", "x", {0.6, 1, 1, 1}}, {"a", "x2", {0.4, 1, 1, 1}},
                                  {"b", "y", {0.7, 1, 1, 1}}, {"b", "y2", {0.3, 1, 1, 1}}});
    auto m = uniform_lm({"x", "x2", "y", "y2"});
    Decoder d(t, m);
    auto nb = d.decode_nbest({"a", "b"}, FeatureWeights::defaults(), {}, 10);
    CHECK(nb.size() >= 4);
    for (std::size_t k = 1; k < nb.size(); ++k) CHECK(nb[k].score <= nb[k - 1].score);
  }

  TEST_CASE("unlimited beam dominates narrow beams") {
    for (std::uint64_t seed = 200; seed < 230; ++seed) {
      auto inst = testing::random_decoder_instance(seed);
      Decoder d(inst.table, inst.lm);
      double full = d.translate(inst.source, inst.weights, exhaustive()).score;
      for (std::size_t beam : {1, 2, 5}) {
        DecoderParams p = exhaustive();
        p.beam = beam;
        auto r = d.translate(inst.source, inst.weights, p);
        CHECK(r.score <= full + 1e-9);
        CHECK(std::abs(r.score - dot(inst.weights, r.features)) <= 1e-9);
      }
    }
  }

  TEST_CASE("distortion limit falls back to monotone when stranded") {
    auto t = testing::toy_table({{"a", "x"}, {"b", "y"}, {"c", "z"}});
    auto m = uniform_lm({"x", "y", "z"});
    Decoder d(t, m);
    DecoderParams p;
    p.distortion_limit = 0;
    CHECK(d.translate({"a", "b", "c"}, FeatureWeights::defaults(), p).target ==
          std::vector<std::string>{"x", "y", "z"});
  }

  TEST_CASE("deterministic across repeated calls") {
    auto inst = testing::random_decoder_instance(999);
    Decoder d(inst.table, inst.lm);
    auto a = d.decode_nbest(inst.source, inst.weights, {}, 4);
    auto b = d.decode_nbest(inst.source, inst.weights, {}, 4);
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      CHECK(a[k].text() == b[k].text());
      CHECK(a[k].score == b[k].score);
    }
  }
}
