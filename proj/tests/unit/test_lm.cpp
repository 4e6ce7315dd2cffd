#include <doctest.h>

#include <cmath>
#include <sstream>

#include "oracles/lm_oracle.hpp"
#include "sitemt/error.hpp"
#include "sitemt/lm.hpp"
#include "sitemt/synthetic.hpp"
#include "sitemt/util.hpp"
#include "support.hpp"

using namespace sitemt;
using namespace sitemt::lm;
using Sentences = std::vector<std::vector<std::string>>;

namespace {

double p(const NGramModel& m, const std::string& w, const std::vector<std::string>& ctx) {
  return std::pow(10.0, m.log_prob(w, ctx));
}

// Every word the model can emit after a context.
std::vector<std::string> predictable(const NGramModel& m) {
  std::vector<std::string> out;
  for (WordId id = 0; id < m.vocab().size(); ++id)
    if (id != Vocabulary::kBos) out.push_back(m.vocab().token(id));
  return out;
}

double mass(const NGramModel& m, const std::vector<std::string>& ctx) {
  double s = 0.0;
  for (const auto& w : predictable(m)) s += p(m, w, ctx);
  return s;
}

Sentences random_sentences(std::uint64_t seed, std::size_t count, std::size_t vocab, std::size_t max_len) {
  Rng rng(seed);
  Sentences out;
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<std::string> s;
    std::size_t len = 1 + rng.below(max_len);
    for (std::size_t k = 0; k < len; ++k) s.push_back("w" + std::to_string(rng.below(vocab)));
    out.push_back(s);
  }
  return out;
}

std::string code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

}  // namespace

TEST_SUITE("lm") {
  TEST_CASE("discount formula and clamps") {
    CHECK(absolute_discount(0, 0) == doctest::Approx(0.1));
    CHECK(absolute_discount(0, 5) == doctest::Approx(0.1));
    CHECK(absolute_discount(5, 0) == doctest::Approx(0.9));
    CHECK(absolute_discount(2, 1) == doctest::Approx(0.5));
  }

  TEST_CASE("single-sentence unigram model normalizes") {
    auto m = train_ngram({{"a"}}, 1);
    // <unk> holds the discounted mass the example's two-term sum leaves out.
    double total = p(m, "a", {}) + p(m, "</s>", {}) + p(m, "<unk>", {});
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(p(m, "<unk>", {}) > 0.0);
  }

  TEST_CASE("hand-computed bigram values for {a b, a b}") {
    auto m = train_ngram({{"a", "b"}, {"a", "b"}}, 2);
    // D = 0.1 at both orders (no singletons); P1(w) = (2 - D)/6 + D*3/6/4.
    CHECK(p(m, "b", {}) == doctest::Approx(0.3291666667).epsilon(1e-9));
    CHECK(p(m, "<unk>", {}) == doctest::Approx(0.0125).epsilon(1e-9));
    CHECK(p(m, "b", {"a"}) == doctest::Approx(0.9664583333).epsilon(1e-9));
    CHECK(p(m, "</s>", {"a"}) == doctest::Approx(0.0164583333).epsilon(1e-9));
    CHECK(p(m, "b", {"a"}) > p(m, "</s>", {"a"}));
  }

  TEST_CASE("model matches the counting oracle on random corpora") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      auto sents = random_sentences(seed, 12, 4, 5);
      for (int order = 1; order <= 4; ++order) {
        auto m = train_ngram(sents, order);
        oracle::AbsoluteDiscountLM o(sents, order);
        for (int n = 1; n <= order; ++n)
          for (const auto& ctx : o.contexts(n))
            for (const auto& w : o.predictable()) {
              INFO("seed " << seed << " order " << order << " word " << w);
              CHECK(p(m, w, ctx) == doctest::Approx(o.prob(w, ctx)).epsilon(1e-9));
            }
      }
    }
  }

  TEST_CASE("every stored context sums to one") {
    auto sents = random_sentences(77, 100, 8, 7);
    auto m = train_ngram(sents, 5);
    for (int n = 1; n < 5; ++n)
      for (std::size_t i = 0; i < m.count(n); ++i) {
        auto ids = m.words(n, i);
        if (ids.back() == Vocabulary::kEos) continue;
        std::vector<std::string> ctx;
        for (WordId w : ids) ctx.push_back(m.vocab().token(w));
        CHECK(mass(m, ctx) == doctest::Approx(1.0).epsilon(1e-6));
      }
    CHECK(mass(m, {}) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(mass(m, {"never", "seen"}) == doctest::Approx(1.0).epsilon(1e-6));
  }

  TEST_CASE("stored prefixes and non-positive log probabilities") {
    auto m = train_ngram(random_sentences(3, 30, 5, 6), 4);
    for (int n = 1; n <= 4; ++n)
      for (std::size_t i = 0; i < m.count(n); ++i) {
        CHECK(m.entry(n, i).log_prob <= 0.0);
        if (n > 1) CHECK(m.find(m.words(n, i).first(static_cast<std::size_t>(n - 1))) != nullptr);
      }
  }

  TEST_CASE("unigram-only word backs off through the context") {
    auto m = train_ngram({{"a", "b"}, {"c"}}, 2);
    // c never follows a: P(c|a) = bo(a) + P1(c) in log space.
    const NGramEntry* a = m.find(std::vector<WordId>{m.vocab().id("a")});
    REQUIRE(a != nullptr);
    CHECK(m.log_prob("c", {"a"}) == doctest::Approx(a->backoff + m.log_prob("c", {})).epsilon(1e-12));
  }

  TEST_CASE("context longer than order-1 is truncated") {
    auto m = train_ngram(random_sentences(8, 20, 4, 6), 3);
    CHECK(m.log_prob("w1", {"w0", "w2", "w3", "w1"}) == m.log_prob("w1", {"w3", "w1"}));
  }

  TEST_CASE("unknown words get a finite probability") {
    auto m = train_ngram({{"a"}}, 3);
    double lp = m.log_prob("zzz", {"a", "b"});
    CHECK(std::isfinite(lp));
    CHECK(lp == doctest::Approx(m.log_prob("<unk>", {})));
  }

  TEST_CASE("sentence_log_prob definition") {
    auto m = train_ngram(random_sentences(2, 10, 3, 4), 3);
    CHECK(sentence_log_prob(m, {}) == doctest::Approx(m.log_prob("</s>", {"<s>"})));
    std::vector<std::string> s = {"w0", "w1", "w2"};
    double manual = m.log_prob("w0", {"<s>"}) + m.log_prob("w1", {"<s>", "w0"}) +
                    m.log_prob("w2", {"<s>", "w0", "w1"}) + m.log_prob("</s>", {"<s>", "w0", "w1", "w2"});
    CHECK(sentence_log_prob(m, s) == doctest::Approx(manual).epsilon(1e-12));
  }

  TEST_CASE("appending a token lowers the running log probability") {
    // Checked on the prefix sum without the sentence-end term, which can
    // itself change when a token is appended.
    auto m = train_ngram(random_sentences(12, 30, 5, 6), 3);
    Rng rng(1);
    for (int k = 0; k < 50; ++k) {
      std::vector<WordId> ctx{Vocabulary::kBos};
      double run = 0.0;
      for (int i = 0; i < 6; ++i) {
        WordId w = m.vocab().id("w" + std::to_string(rng.below(6)));
        double next = run + m.log_prob(w, ctx);
        CHECK(next < run);
        run = next;
        ctx.push_back(w);
      }
    }
  }

  TEST_CASE("perplexity bounds") {
    auto m = train_ngram({{"a"}}, 1);
    CHECK(perplexity(m, {{"a"}}) <= static_cast<double>(m.vocab().size()));

    Vocabulary v;
    for (const char* w : {"x", "y", "z"}) v.insert(w);
    NGramModel uniform(1, v);
    const double lp = std::log10(1.0 / 5.0);  // x y z </s> <unk>
    for (WordId id = 0; id < v.size(); ++id)
      uniform.set(std::vector<WordId>{id}, NGramEntry{id == Vocabulary::kBos ? -99.0 : lp, 0.0, false});
    CHECK(perplexity(uniform, {{"x", "y"}, {"z"}}) == doctest::Approx(5.0).epsilon(1e-9));
  }

  TEST_CASE("in-domain perplexity drops when specific text joins the LM data") {
    synthetic::Options o;
    o.common_pairs = 3000;
    o.specific_pairs = 500;
    auto data = synthetic::generate(o);
    Sentences common, combined, held_out;
    for (const auto& p : data.common.pairs) common.push_back(p.target);
    combined = common;
    for (std::size_t i = 0; i < data.specific.size(); ++i)
      (i < 400 ? combined : held_out).push_back(data.specific.pairs[i].target);
    CHECK(perplexity(train_ngram(combined, 3), held_out) < perplexity(train_ngram(common, 3), held_out));
  }

  TEST_CASE("arpa round trip") {
    auto m = train_ngram(random_sentences(21, 40, 6, 6), 4);
    std::ostringstream a;
    write_arpa(m, a);
    std::istringstream in(a.str());
    auto back = read_arpa(in);
    REQUIRE(back.order() == 4);
    for (int n = 1; n <= 4; ++n) {
      REQUIRE(back.count(n) == m.count(n));
      for (std::size_t i = 0; i < m.count(n); ++i) {
        std::vector<std::string> toks;
        for (WordId w : m.words(n, i)) toks.push_back(m.vocab().token(w));
        std::vector<WordId> ids;
        for (const auto& t : toks) ids.push_back(back.vocab().id(t));
        const NGramEntry* e = back.find(ids);
        REQUIRE(e != nullptr);
        CHECK(e->log_prob == std::stod(format_g(m.entry(n, i).log_prob, 7)));
        CHECK(e->has_backoff == m.entry(n, i).has_backoff);
        if (e->has_backoff) CHECK(e->backoff == std::stod(format_g(m.entry(n, i).backoff, 7)));
      }
    }
    std::ostringstream b;
    write_arpa(back, b);
    CHECK(b.str() == a.str());
  }

  TEST_CASE("arpa layout") {
    auto m = train_ngram({{"a", "b"}}, 2);
    std::ostringstream a;
    write_arpa(m, a);
    std::string text = a.str();
    CHECK(text.rfind("\\data\\\nngram 1=", 0) == 0);
    CHECK(text.find("\\1-grams:\n") != std::string::npos);
    CHECK(text.find("\\2-grams:\n") != std::string::npos);
    CHECK(text.find("\\end\\") != std::string::npos);
    CHECK(text.find("-99\t<s>\t") != std::string::npos);
  }

  TEST_CASE("arpa errors") {
    std::istringstream no_end("\\data\\\nngram 1=1\n\n\\1-grams:\n-1\ta\n");
    CHECK(code_of([&] { read_arpa(no_end); }) == "malformed-arpa");
    std::istringstream bad_header("hello\n");
    CHECK(code_of([&] { read_arpa(bad_header); }) == "malformed-arpa");
    std::istringstream short_section("\\data\\\nngram 1=3\n\n\\1-grams:\n-1\ta\n-1\tb\n\n\\end\\\n");
    CHECK(code_of([&] { read_arpa(short_section); }) == "count-mismatch");
  }

  TEST_CASE("training errors and determinism") {
    CHECK(code_of([] { train_ngram({}, 3); }) == "empty-input");
    CHECK(code_of([] { train_ngram({{}}, 3); }) == "empty-input");
    CHECK(code_of([] { train_ngram({{"a"}}, 0); }) == "invalid-argument");
    CHECK(code_of([] { train_ngram({{"a"}}, 10); }) == "invalid-argument");
    auto s = random_sentences(31, 25, 5, 5);
    std::ostringstream a, b;
    write_arpa(train_ngram(s, 5), a);
    write_arpa(train_ngram(s, 5), b);
    CHECK(a.str() == b.str());
  }
}
