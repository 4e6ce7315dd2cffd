#include "sitemt/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <optional>
#include <queue>
#include <unordered_map>
#include <unordered_set>

#include "sitemt/error.hpp"
#include "sitemt/util.hpp"

namespace sitemt::decoder {

// ---------------------------------------------------------------------------
// Weights

FeatureWeights FeatureWeights::defaults() {
  FeatureWeights w;
  w[Feature::lm] = 0.5;
  w[Feature::phi_fwd] = 0.2;
  w[Feature::phi_rev] = 0.2;
  w[Feature::lex_fwd] = 0.2;
  w[Feature::lex_rev] = 0.2;
  w[Feature::word_penalty] = -1.0;
  w[Feature::distortion] = 0.3;
  return w;
}

std::size_t feature_index(std::string_view name) {
  for (std::size_t i = 0; i < kNumFeatures; ++i)
    if (kFeatureNames[i] == name) return i;
  throw Error("unknown-feature", "unknown feature name: " + std::string(name));
}

double FeatureWeights::get(std::string_view name) const { return values_[feature_index(name)]; }
void FeatureWeights::set(std::string_view name, double value) { values_[feature_index(name)] = value; }

double FeatureWeights::dot(const FeatureVector& features) const {
  double s = 0.0;
  for (std::size_t i = 0; i < kNumFeatures; ++i) s += values_[i] * features[i];
  return s;
}

FeatureWeights parse_weights(std::string_view text) {
  FeatureWeights w;
  std::array<bool, kNumFeatures> seen{};
  std::size_t line_no = 0;
  for (const auto& raw : split_lines(text)) {
    ++line_no;
    if (trim(raw).empty()) continue;
    auto tab = raw.find('\t');
    if (tab == std::string::npos)
      throw Error("malformed-weights", "line " + std::to_string(line_no) + ": expected name<TAB>value");
    std::string name = trim(raw.substr(0, tab));
    std::size_t idx = feature_index(name);
    if (seen[idx]) throw Error("malformed-weights", "duplicate weight for " + name);
    seen[idx] = true;
    double v;
    try {
      v = std::stod(trim(raw.substr(tab + 1)));
    } catch (const std::exception&) {
      throw Error("malformed-weights", "line " + std::to_string(line_no) + ": bad number");
    }
    if (!std::isfinite(v)) throw Error("malformed-weights", "non-finite weight for " + name);
    w.set(name, v);
  }
  for (std::size_t i = 0; i < kNumFeatures; ++i)
    if (!seen[i]) throw Error("malformed-weights", "missing weight for " + std::string(kFeatureNames[i]));
  return w;
}

std::string format_weights(const FeatureWeights& weights) {
  std::string out;
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    out += kFeatureNames[i];
    out += '\t';
    out += format_g(weights.values()[i], 17);
    out += '\n';
  }
  return out;
}

FeatureWeights read_weights(const std::filesystem::path& path) { return parse_weights(read_file(path)); }

void write_weights(const FeatureWeights& weights, const std::filesystem::path& path) {
  write_file_atomic(path, format_weights(weights));
}

std::string Translation::text() const { return join(target); }

// ---------------------------------------------------------------------------
// Search

namespace {

double log10_floored(double p) { return std::log10(std::max(p, align::kProbFloor)); }

struct Option {
  int begin = 0;
  int end = 0;
  const PhraseCandidate* candidate = nullptr;  // null: copy-through
  std::vector<WordId> lm_ids;
  std::vector<std::string> target;
  FeatureVector features{};  // phrase scores and word penalty
  double static_score = 0.0;
};

class Coverage {
 public:
  explicit Coverage(int n = 0) : bits_((static_cast<std::size_t>(n) + 63) / 64, 0) {}
  bool test(int i) const { return (bits_[i >> 6] >> (i & 63)) & 1u; }
  void set(int i) { bits_[i >> 6] |= std::uint64_t{1} << (i & 63); }
  bool free(int b, int e) const {
    for (int i = b; i < e; ++i)
      if (test(i)) return false;
    return true;
  }
  const std::vector<std::uint64_t>& words() const { return bits_; }

 private:
  std::vector<std::uint64_t> bits_;
};

struct Hyp;

struct Arc {
  const Hyp* prev;
  const Option* option;
  double delta;
};

struct Hyp {
  Coverage coverage;
  std::vector<WordId> context;
  int last_end = -1;  // inclusive end of the last source span
  int covered = 0;
  double score = 0.0;
  double future = 0.0;
  std::size_t id = 0;
  std::vector<Arc> arcs;  // empty only for the initial hypothesis
};

std::string state_key(const Coverage& cov, const std::vector<WordId>& ctx, int last_end) {
  std::string key;
  key.reserve(cov.words().size() * 8 + ctx.size() * 4 + 4);
  auto put = [&](const void* p, std::size_t n) { key.append(static_cast<const char*>(p), n); };
  for (std::uint64_t w : cov.words()) put(&w, sizeof w);
  put(&last_end, sizeof last_end);
  for (WordId w : ctx) put(&w, sizeof w);
  return key;
}

}  // namespace

Decoder::Decoder(const PhraseTable& table, const lm::NGramModel& lm) : table_(table), lm_(lm) {
  const Vocabulary& tv = table.target_vocab();
  lm_ids_.resize(tv.size());
  for (WordId i = 0; i < tv.size(); ++i) lm_ids_[i] = lm.vocab().id(tv.token(i));
}

FeatureVector Decoder::features_of(const std::vector<DerivationStep>& derivation) const {
  FeatureVector f{};
  std::vector<std::string> output;
  int last_end = -1;
  for (const auto& step : derivation) {
    if (step.oov) {
      for (auto feat : {Feature::phi_fwd, Feature::phi_rev, Feature::lex_fwd, Feature::lex_rev})
        f[static_cast<std::size_t>(feat)] += kOovFeatureCost;
    } else {
      f[static_cast<std::size_t>(Feature::phi_fwd)] += log10_floored(step.scores.phi_fwd);
      f[static_cast<std::size_t>(Feature::phi_rev)] += log10_floored(step.scores.phi_rev);
      f[static_cast<std::size_t>(Feature::lex_fwd)] += log10_floored(step.scores.lex_fwd);
      f[static_cast<std::size_t>(Feature::lex_rev)] += log10_floored(step.scores.lex_rev);
    }
    f[static_cast<std::size_t>(Feature::distortion)] -= std::abs(step.source_begin - last_end - 1);
    last_end = step.source_end - 1;
    output.insert(output.end(), step.target.begin(), step.target.end());
  }
  f[static_cast<std::size_t>(Feature::word_penalty)] = -static_cast<double>(output.size());
  f[static_cast<std::size_t>(Feature::lm)] = lm::sentence_log_prob(lm_, output);
  return f;
}

Translation Decoder::translate(const std::vector<std::string>& source, const FeatureWeights& weights,
                               const DecoderParams& params) const {
  return search(source, weights, params, 1).front();
}

std::vector<Translation> Decoder::decode_nbest(const std::vector<std::string>& source,
                                               const FeatureWeights& weights,
                                               const DecoderParams& params, std::size_t n) const {
  if (n < 1) throw Error("invalid-argument", "n-best size must be at least 1");
  return search(source, weights, params, n);
}

std::vector<Translation> Decoder::search(const std::vector<std::string>& source,
                                         const FeatureWeights& weights, const DecoderParams& params,
                                         std::size_t n_best) const {
  if (source.empty()) throw Error("empty-input", "cannot translate an empty sentence");
  if (params.beam < 1) throw Error("invalid-argument", "beam must be at least 1");
  const int n = static_cast<int>(source.size());
  const int max_len = std::max(1, std::min(params.max_phrase_length, table_.max_phrase_length()));
  const std::size_t lm_ctx = static_cast<std::size_t>(lm_.order() - 1);
  const double w_lm = weights[Feature::lm];

  // Translation options per span.
  std::vector<std::optional<WordId>> src_ids(source.size());
  for (int i = 0; i < n; ++i) src_ids[i] = table_.source_vocab().find(source[i]);
  std::deque<Option> options;
  std::vector<std::vector<const Option*>> by_begin(static_cast<std::size_t>(n));
  auto finish_option = [&](Option& o) {
    o.features[static_cast<std::size_t>(Feature::word_penalty)] = -static_cast<double>(o.target.size());
    o.static_score = weights.dot(o.features);
    by_begin[o.begin].push_back(&o);
  };
  Phrase key;
  for (int b = 0; b < n; ++b) {
    bool has_single = false;
    for (int e = b + 1; e <= n && e - b <= max_len; ++e) {
      if (!src_ids[e - 1]) break;
      key.clear();
      for (int i = b; i < e; ++i) key.push_back(*src_ids[i]);
      const auto& cands = table_.lookup(key);
      std::size_t limit = std::min(cands.size(), params.max_options);
      for (std::size_t c = 0; c < limit; ++c) {
        Option& o = options.emplace_back();
        o.begin = b;
        o.end = e;
        o.candidate = &cands[c];
        for (WordId t : cands[c].target) {
          o.lm_ids.push_back(lm_ids_[t]);
          o.target.push_back(table_.target_vocab().token(t));
        }
        const PhraseScores& s = cands[c].scores;
        o.features[static_cast<std::size_t>(Feature::phi_fwd)] = log10_floored(s.phi_fwd);
        o.features[static_cast<std::size_t>(Feature::phi_rev)] = log10_floored(s.phi_rev);
        o.features[static_cast<std::size_t>(Feature::lex_fwd)] = log10_floored(s.lex_fwd);
        o.features[static_cast<std::size_t>(Feature::lex_rev)] = log10_floored(s.lex_rev);
        finish_option(o);
        if (e == b + 1) has_single = true;
      }
    }
    if (!has_single) {
      Option& o = options.emplace_back();
      o.begin = b;
      o.end = b + 1;
      o.target = {source[b]};
      o.lm_ids = {lm_.vocab().id(source[b])};
      for (auto feat : {Feature::phi_fwd, Feature::phi_rev, Feature::lex_fwd, Feature::lex_rev})
        o.features[static_cast<std::size_t>(feat)] = kOovFeatureCost;
      finish_option(o);
    }
  }

  // Future cost: best context-free estimate for every span.
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> future(static_cast<std::size_t>(n + 1),
                                          std::vector<double>(static_cast<std::size_t>(n + 1), kNegInf));
  for (int b = 0; b < n; ++b) {
    for (const Option* o : by_begin[b]) {
      double est = o->static_score;
      for (WordId w : o->lm_ids) est += w_lm * lm_.log_prob(w, {});
      future[b][o->end] = std::max(future[b][o->end], est);
    }
  }
  for (int len = 2; len <= n; ++len) {
    for (int b = 0; b + len <= n; ++b) {
      int e = b + len;
      for (int k = b + 1; k < e; ++k)
        future[b][e] = std::max(future[b][e], future[b][k] + future[k][e]);
    }
  }
  auto future_of = [&](const Coverage& cov) {
    double f = 0.0;
    int i = 0;
    while (i < n) {
      if (cov.test(i)) {
        ++i;
        continue;
      }
      int j = i;
      while (j < n && !cov.test(j)) ++j;
      f += future[i][j];
      i = j;
    }
    return f;
  };

  auto run = [&](int distortion_limit) {
    std::deque<Hyp> pool;
    std::vector<std::vector<Hyp*>> stacks(static_cast<std::size_t>(n + 1));
    std::vector<std::unordered_map<std::string, Hyp*>> recombine(static_cast<std::size_t>(n + 1));

    Hyp& root = pool.emplace_back();
    root.coverage = Coverage(n);
    root.context = {Vocabulary::kBos};
    root.future = future_of(root.coverage);
    stacks[0].push_back(&root);

    std::vector<WordId> ctx;
    for (int k = 0; k < n; ++k) {
      auto& stack = stacks[k];
      std::sort(stack.begin(), stack.end(), [](const Hyp* a, const Hyp* b) {
        double sa = a->score + a->future, sb = b->score + b->future;
        if (sa != sb) return sa > sb;
        return a->id < b->id;
      });
      if (stack.size() > params.beam) stack.resize(params.beam);

      for (const Hyp* h : stack) {
        for (int b = 0; b < n; ++b) {
          if (h->coverage.test(b)) continue;
          if (distortion_limit >= 0 && std::abs(b - h->last_end - 1) > distortion_limit) continue;
          for (const Option* o : by_begin[b]) {
            if (!h->coverage.free(o->begin, o->end)) continue;
            Coverage cov = h->coverage;
            for (int i = o->begin; i < o->end; ++i) cov.set(i);
            const int covered = h->covered + (o->end - o->begin);
            if (distortion_limit >= 0 && covered < n) {
              int gap = 0;
              while (cov.test(gap)) ++gap;
              if (gap < o->begin && o->end - gap > distortion_limit) continue;
            }
            double lm_delta = 0.0;
            ctx = h->context;
            for (WordId w : o->lm_ids) {
              lm_delta += lm_.log_prob(w, ctx);
              ctx.push_back(w);
              if (ctx.size() > lm_ctx) ctx.erase(ctx.begin(), ctx.end() - static_cast<std::ptrdiff_t>(lm_ctx));
            }
            if (covered == n) lm_delta += lm_.log_prob(Vocabulary::kEos, ctx);
            const double jump = std::abs(o->begin - h->last_end - 1);
            const double delta = o->static_score + w_lm * lm_delta -
                                 weights[Feature::distortion] * jump;
            const double score = h->score + delta;

            const int last_end = o->end - 1;
            std::string skey = state_key(cov, ctx, last_end);
            auto& slot = recombine[covered][skey];
            if (slot) {
              slot->arcs.push_back({h, o, delta});
              if (score > slot->score) slot->score = score;
              continue;
            }
            Hyp& nh = pool.emplace_back();
            nh.coverage = std::move(cov);
            nh.context = ctx;
            nh.last_end = last_end;
            nh.covered = covered;
            nh.score = score;
            nh.future = future_of(nh.coverage);
            nh.id = pool.size();
            nh.arcs.push_back({h, o, delta});
            slot = &nh;
            stacks[covered].push_back(&nh);
          }
        }
      }
    }

    // Best-first walk back through the recombination graph. The priority of
    // a partial path is its exact suffix score plus the best prefix score of
    // its head node, so complete paths come out in score order.
    std::vector<Translation> results;
    auto& finals = stacks[n];
    if (finals.empty()) return results;

    struct Cell {
      const Arc* arc;
      int parent;
    };
    struct Item {
      double priority;
      double suffix;
      const Hyp* node;
      int cell;
      std::size_t seq;
    };
    auto worse = [](const Item& a, const Item& b) {
      if (a.priority != b.priority) return a.priority < b.priority;
      return a.seq > b.seq;
    };
    std::priority_queue<Item, std::vector<Item>, decltype(worse)> heap(worse);
    std::vector<Cell> cells;
    std::size_t seq = 0;
    for (const Hyp* f : finals) heap.push({f->score, 0.0, f, -1, seq++});

    std::unordered_set<std::string> seen;
    const std::size_t max_pops = 200000 + 2000 * n_best;
    std::size_t pops = 0;
    double cutoff = kNegInf;
    while (!heap.empty() && pops++ < max_pops) {
      Item it = heap.top();
      heap.pop();
      if (results.size() >= n_best && it.priority < cutoff) break;
      if (!it.node->arcs.empty()) {
        for (const Arc& a : it.node->arcs) {
          cells.push_back({&a, it.cell});
          double suffix = it.suffix + a.delta;
          heap.push({a.prev->score + suffix, suffix, a.prev, static_cast<int>(cells.size() - 1), seq++});
        }
        continue;
      }
      Translation t;
      for (int c = it.cell; c >= 0; c = cells[c].parent) {
        const Option* o = cells[c].arc->option;
        DerivationStep step;
        step.source_begin = o->begin;
        step.source_end = o->end;
        step.target = o->target;
        step.oov = o->candidate == nullptr;
        if (o->candidate) step.scores = o->candidate->scores;
        t.target.insert(t.target.end(), o->target.begin(), o->target.end());
        t.derivation.push_back(std::move(step));
      }
      if (!seen.insert(t.text()).second) continue;
      t.features = features_of(t.derivation);
      t.score = weights.dot(t.features);
      results.push_back(std::move(t));
      // Keep going a little past the n-th path so near-ties are ordered on
      // recomputed scores rather than search-order accumulation.
      if (results.size() == n_best) cutoff = it.priority - 1e-9;
    }
    std::stable_sort(results.begin(), results.end(), [](const Translation& a, const Translation& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.text() < b.text();
    });
    if (results.size() > n_best) results.resize(n_best);
    return results;
  };

  auto results = run(params.distortion_limit);
  // A distortion limit can strand hypotheses with unreachable gaps; monotone
  // decoding always completes.
  if (results.empty()) results = run(0);
  return results;
}

}  // namespace sitemt::decoder
