#include "sitemt/align.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "sitemt/error.hpp"

namespace sitemt::align {

double LexicalTable::prob(WordId target, WordId source) const {
  auto it = table_.find(key(source, target));
  return it == table_.end() ? 0.0 : it->second;
}

std::unordered_map<WordId, double> LexicalTable::row_sums() const {
  std::unordered_map<WordId, double> sums;
  for_each([&](WordId f, WordId, double p) { sums[f] += p; });
  return sums;
}

std::vector<IdPair> reversed(std::span<const IdPair> corpus) {
  std::vector<IdPair> out;
  out.reserve(corpus.size());
  for (const auto& p : corpus) out.push_back(IdPair{p.target, p.source});
  return out;
}

Model1Result train_model1(std::span<const IdPair> corpus, const Model1Options& options) {
  if (corpus.empty()) throw Error("empty-input", "Model 1 needs a non-empty corpus");
  if (options.iterations < 1) throw Error("invalid-argument", "Model 1 needs at least one iteration");

  std::vector<const IdPair*> used;
  std::unordered_set<WordId> targets;
  for (const auto& p : corpus) {
    if (p.source.empty() || p.target.empty()) continue;
    if (p.source.size() > options.max_sentence_length ||
        p.target.size() > options.max_sentence_length)
      continue;
    used.push_back(&p);
    targets.insert(p.target.begin(), p.target.end());
  }
  if (used.empty()) throw Error("empty-input", "no usable sentence pairs for Model 1");
  const double uniform = 1.0 / static_cast<double>(targets.size());

  Model1Result result;
  LexicalTable& table = result.table;
  std::unordered_map<std::uint64_t, double> counts;
  std::unordered_map<WordId, double> totals;
  std::vector<double> t;
  std::vector<WordId> src;

  for (int it = 0; it <= options.iterations; ++it) {
    const bool collect = it < options.iterations;
    counts.clear();
    totals.clear();
    double ll = 0.0;
    for (const IdPair* p : used) {
      src.assign(1, kNullWord);
      src.insert(src.end(), p->source.begin(), p->source.end());
      const double log_len = std::log(static_cast<double>(src.size()));
      t.resize(src.size());
      for (WordId e : p->target) {
        double denom = 0.0;
        for (std::size_t i = 0; i < src.size(); ++i) {
          t[i] = it == 0 ? uniform : table.prob(e, src[i]);
          denom += t[i];
        }
        ll += std::log(denom) - log_len;
        if (!collect) continue;
        for (std::size_t i = 0; i < src.size(); ++i) {
          double c = t[i] / denom;
          counts[LexicalTable::key(src[i], e)] += c;
          totals[src[i]] += c;
        }
      }
    }
    result.log_likelihood.push_back(ll);
    if (!collect) break;
    table = LexicalTable{};
    for (const auto& [k, c] : counts) {
      WordId f = static_cast<WordId>(k >> 32);
      table.set(f, static_cast<WordId>(k & 0xffffffffu), c / totals[f]);
    }
  }
  return result;
}

void AlignmentMatrix::add(int i, int j) {
  if (i < 0 || i >= source_len_ || j < 0 || j >= target_len_)
    throw Error("invalid-argument", "alignment link out of bounds");
  links_.insert({i, j});
}

AlignmentMatrix viterbi_align(const LexicalTable& table, const IdPair& pair, Direction direction) {
  const int m = static_cast<int>(pair.source.size());
  const int n = static_cast<int>(pair.target.size());
  AlignmentMatrix a(m, n);
  if (direction == Direction::forward) {
    for (int j = 0; j < n; ++j) {
      double best = table.prob(pair.target[j], kNullWord);
      int best_i = -1;
      for (int i = 0; i < m; ++i) {
        double p = table.prob(pair.target[j], pair.source[i]);
        if (p > best) {
          best = p;
          best_i = i;
        }
      }
      if (best_i >= 0) a.add(best_i, j);
    }
  } else {
    for (int i = 0; i < m; ++i) {
      double best = table.prob(pair.source[i], kNullWord);
      int best_j = -1;
      for (int j = 0; j < n; ++j) {
        double p = table.prob(pair.source[i], pair.target[j]);
        if (p > best) {
          best = p;
          best_j = j;
        }
      }
      if (best_j >= 0) a.add(i, best_j);
    }
  }
  return a;
}

Heuristic parse_heuristic(std::string_view name) {
  if (name == "intersection") return Heuristic::intersection;
  if (name == "union") return Heuristic::union_;
  if (name == "grow-diag-final") return Heuristic::grow_diag_final;
  throw Error("invalid-argument", "unknown symmetrization heuristic: " + std::string(name));
}

AlignmentMatrix symmetrize(const AlignmentMatrix& forward, const AlignmentMatrix& reverse,
                           Heuristic heuristic) {
  if (forward.source_len() != reverse.source_len() || forward.target_len() != reverse.target_len())
    throw Error("dimension-mismatch", "cannot symmetrize alignments of different shapes");
  const int m = forward.source_len();
  const int n = forward.target_len();
  AlignmentMatrix out(m, n);
  auto in_union = [&](int i, int j) { return forward.contains(i, j) || reverse.contains(i, j); };

  if (heuristic == Heuristic::union_) {
    for (auto [i, j] : forward.links()) out.add(i, j);
    for (auto [i, j] : reverse.links()) out.add(i, j);
    return out;
  }
  for (auto [i, j] : forward.links())
    if (reverse.contains(i, j)) out.add(i, j);
  if (heuristic == Heuristic::intersection) return out;

  std::vector<bool> src_covered(static_cast<std::size_t>(m)), tgt_covered(static_cast<std::size_t>(n));
  auto add = [&](int i, int j) {
    out.add(i, j);
    src_covered[i] = true;
    tgt_covered[j] = true;
  };
  for (auto [i, j] : out.links()) add(i, j);

  static constexpr int kNeighbors[8][2] = {{-1, 0}, {0, -1}, {1, 0},  {0, 1},
                                           {-1, -1}, {-1, 1}, {1, -1}, {1, 1}};
  bool added = true;
  while (added) {
    added = false;
    const auto current = out.links();
    for (auto [i, j] : current) {
      for (const auto& d : kNeighbors) {
        int ni = i + d[0], nj = j + d[1];
        if (ni < 0 || nj < 0 || ni >= m || nj >= n) continue;
        if (out.contains(ni, nj) || !in_union(ni, nj)) continue;
        if (!src_covered[ni] || !tgt_covered[nj]) {
          add(ni, nj);
          added = true;
        }
      }
    }
  }
  for (const AlignmentMatrix* dir : {&forward, &reverse}) {
    for (auto [i, j] : dir->links()) {
      if (!out.contains(i, j) && (!src_covered[i] || !tgt_covered[j])) add(i, j);
    }
  }
  return out;
}

std::vector<PhraseSpan> extract_phrases(const AlignmentMatrix& alignment, int max_len) {
  const int m = alignment.source_len();
  const int n = alignment.target_len();
  std::vector<PhraseSpan> out;
  if (alignment.size() == 0 || max_len < 1) return out;

  std::vector<bool> src_aligned(static_cast<std::size_t>(m));
  std::vector<std::vector<int>> by_target(static_cast<std::size_t>(n));
  std::vector<std::vector<int>> by_source(static_cast<std::size_t>(m));
  for (auto [i, j] : alignment.links()) {
    src_aligned[i] = true;
    by_target[j].push_back(i);
    by_source[i].push_back(j);
  }

  for (int tb = 0; tb < n; ++tb) {
    for (int te = tb; te < n && te - tb < max_len; ++te) {
      int sb = m, se = -1;
      for (int j = tb; j <= te; ++j)
        for (int i : by_target[j]) {
          sb = std::min(sb, i);
          se = std::max(se, i);
        }
      if (se < 0 || se - sb + 1 > max_len) continue;
      bool consistent = true;
      for (int i = sb; i <= se && consistent; ++i)
        for (int j : by_source[i])
          if (j < tb || j > te) {
            consistent = false;
            break;
          }
      if (!consistent) continue;
      // Grow over unaligned source words on both boundaries.
      for (int fs = sb;; --fs) {
        for (int fe = se;; ++fe) {
          if (fe - fs + 1 > max_len) break;
          out.push_back({fs, fe + 1, tb, te + 1});
          if (fe + 1 >= m || src_aligned[fe + 1]) break;
        }
        if (fs - 1 < 0 || src_aligned[fs - 1] || se - (fs - 1) + 1 > max_len) break;
      }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace sitemt::align
