#include "sitemt/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "sitemt/error.hpp"
#include "sitemt/util.hpp"

namespace sitemt::synthetic {

namespace {

constexpr const char* kSourceSyllables[] = {"ba", "ke", "li", "mo", "nu", "ra", "si", "to", "vu", "ze"};
constexpr const char* kTargetSyllables[] = {"da", "fe", "gi", "ho", "ju", "la",
                                            "me", "no", "pi", "ru", "so", "ti"};

enum Category { kDet, kPrep, kNoun, kAdj, kVerb, kCategories };

// Distinct prefix per category keeps word forms from colliding.
constexpr const char* kSourcePrefix[] = {"e", "u", "", "a", "o"};
constexpr const char* kTargetPrefix[] = {"y", "w", "", "i", "ex"};

template <std::size_t N>
std::string spell(std::size_t index, const char* const (&syllables)[N], const char* prefix) {
  std::string w = prefix;
  // Two syllables minimum so that short indices still look like words.
  std::size_t v = index + N;
  std::string body;
  do {
    body.insert(0, syllables[v % N]);
    v /= N;
  } while (v > 0);
  return w + body;
}

struct Word {
  std::string source;
  std::string target;
};

struct Concepts {
  std::vector<Word> words[kCategories];
};

Concepts make_common(const Options& o) {
  Concepts c;
  const std::size_t sizes[] = {6, 8, o.common_nouns, o.common_adjectives, o.common_verbs};
  for (int cat = 0; cat < kCategories; ++cat)
    for (std::size_t i = 0; i < sizes[cat]; ++i)
      c.words[cat].push_back({spell(i, kSourceSyllables, kSourcePrefix[cat]),
                              spell(i, kTargetSyllables, kTargetPrefix[cat])});
  return c;
}

Concepts make_specific(const Options& o, const Concepts& common, Rng& rng) {
  Concepts c;
  c.words[kDet] = common.words[kDet];
  c.words[kPrep] = common.words[kPrep];
  const std::size_t sizes[] = {0, 0, o.specific_nouns, o.specific_adjectives, o.specific_verbs};
  for (int cat = kNoun; cat < kCategories; ++cat) {
    std::size_t shared = static_cast<std::size_t>(std::lround(o.shared_fraction * static_cast<double>(sizes[cat])));
    std::vector<std::size_t> pick(common.words[cat].size());
    std::iota(pick.begin(), pick.end(), 0);
    rng.shuffle(pick);
    for (std::size_t i = 0; i < shared && i < pick.size(); ++i) c.words[cat].push_back(common.words[cat][pick[i]]);
    // New forms continue the common index range so they never collide.
    std::size_t base = common.words[cat].size();
    for (std::size_t i = shared; i < sizes[cat]; ++i)
      c.words[cat].push_back({spell(base + i, kSourceSyllables, kSourcePrefix[cat]),
                              spell(base + i, kTargetSyllables, kTargetPrefix[cat])});
    // Shared words get arbitrary ranks in this domain.
    rng.shuffle(c.words[cat]);
  }
  return c;
}

class Zipf {
 public:
  Zipf(std::size_t n, double s) : cdf_(n) {
    double total = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      total += 1.0 / std::pow(static_cast<double>(r + 1), s);
      cdf_[r] = total;
    }
    for (double& v : cdf_) v /= total;
  }
  std::size_t operator()(Rng& rng) const {
    double u = rng.uniform();
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
  }

 private:
  std::vector<double> cdf_;
};

class Grammar {
 public:
  Grammar(const Concepts& c, double s) : c_(c) {
    for (int cat = 0; cat < kCategories; ++cat) zipf_.emplace_back(c.words[cat].size(), s);
  }

  corpus::SentencePair sentence(Rng& rng, corpus::Origin origin) const {
    corpus::SentencePair p;
    p.origin = origin;
    noun_phrase(rng, p);
    const Word& v = pick(kVerb, rng);
    p.source.push_back(v.source);
    p.target.push_back(v.target);
    noun_phrase(rng, p);
    if (rng.uniform() < 0.4) {
      const Word& prep = pick(kPrep, rng);
      p.source.push_back(prep.source);
      p.target.push_back(prep.target);
      noun_phrase(rng, p);
    }
    p.source.push_back(".");
    p.target.push_back(".");
    return p;
  }

 private:
  const Word& pick(int cat, Rng& rng) const { return c_.words[cat][zipf_[cat](rng)]; }

  void noun_phrase(Rng& rng, corpus::SentencePair& p) const {
    const Word& det = pick(kDet, rng);
    const Word* adj = rng.uniform() < 0.4 ? &pick(kAdj, rng) : nullptr;
    const Word& noun = pick(kNoun, rng);
    p.source.push_back(det.source);
    p.target.push_back(det.target);
    if (adj) p.source.push_back(adj->source);
    p.source.push_back(noun.source);
    p.target.push_back(noun.target);
    if (adj) p.target.push_back(adj->target);
  }

  const Concepts& c_;
  std::vector<Zipf> zipf_;
};

}  // namespace

Data generate(const Options& o) {
  if (o.shared_fraction < 0.0 || o.shared_fraction > 1.0)
    throw Error("invalid-argument", "shared fraction must lie in [0, 1]");
  Rng rng(o.seed);
  Concepts common = make_common(o);
  Concepts specific = make_specific(o, common, rng);
  Grammar common_grammar(common, o.zipf_exponent);
  Grammar specific_grammar(specific, o.zipf_exponent);

  Data d;
  d.common.pairs.reserve(o.common_pairs);
  for (std::size_t i = 0; i < o.common_pairs; ++i)
    d.common.pairs.push_back(common_grammar.sentence(rng, corpus::Origin::common));

  std::set<std::vector<std::string>> seen;
  std::size_t attempts = 0;
  while (d.specific.pairs.size() < o.specific_pairs) {
    if (++attempts > o.specific_pairs * 100)
      throw Error("invalid-argument", "specific lexicon too small for the requested unique pairs");
    auto p = specific_grammar.sentence(rng, corpus::Origin::specific);
    if (seen.insert(p.source).second) d.specific.pairs.push_back(std::move(p));
  }
  return d;
}

void write(const Data& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  corpus::write_parallel(data.common, dir / "common.src", dir / "common.tgt");
  corpus::write_parallel(data.specific, dir / "specific.src", dir / "specific.tgt");
}

}  // namespace sitemt::synthetic
