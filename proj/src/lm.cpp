#include "sitemt/lm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sitemt/error.hpp"
#include "sitemt/util.hpp"

namespace sitemt::lm {

namespace {

constexpr std::uint64_t kKeySeed = 0x6a09e667f3bcc908ull;

std::uint64_t mix(std::uint64_t h, WordId w) {
  std::uint64_t z = h ^ (static_cast<std::uint64_t>(w) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t ngram_key(std::span<const WordId> ngram) {
  std::uint64_t h = kKeySeed;
  for (std::size_t i = ngram.size(); i-- > 0;) h = mix(h, ngram[i]);
  return h;
}

NGramModel::NGramModel(int order, Vocabulary vocab) : vocab_(std::move(vocab)) {
  if (order < 1 || order > kMaxOrder) {
    throw Error("invalid-argument", "n-gram order must be in [1, " + std::to_string(kMaxOrder) +
                                        "], got " + std::to_string(order));
  }
  levels_.resize(static_cast<std::size_t>(order));
}

std::span<const WordId> NGramModel::words(int n, std::size_t index) const {
  const Level& level = levels_.at(n - 1);
  return {level.words.data() + index * n, static_cast<std::size_t>(n)};
}

const NGramEntry* NGramModel::find(std::span<const WordId> ngram) const {
  if (ngram.empty() || ngram.size() > levels_.size()) return nullptr;
  const Level& level = levels_[ngram.size() - 1];
  auto it = level.index.find(ngram_key(ngram));
  return it == level.index.end() ? nullptr : &level.entries[it->second];
}

NGramEntry* NGramModel::find(std::span<const WordId> ngram) {
  return const_cast<NGramEntry*>(std::as_const(*this).find(ngram));
}

void NGramModel::set(std::span<const WordId> ngram, const NGramEntry& entry) {
  if (ngram.empty() || ngram.size() > levels_.size())
    throw Error("invalid-argument", "n-gram length outside model order");
  Level& level = levels_[ngram.size() - 1];
  std::uint64_t key = ngram_key(ngram);
  auto [it, inserted] = level.index.try_emplace(key, static_cast<std::uint32_t>(level.entries.size()));
  if (inserted) {
    level.entries.push_back(entry);
    level.words.insert(level.words.end(), ngram.begin(), ngram.end());
    return;
  }
  auto stored = words(static_cast<int>(ngram.size()), it->second);
  if (!std::equal(stored.begin(), stored.end(), ngram.begin()))
    throw Error("hash-collision", "n-gram key collision");
  level.entries[it->second] = entry;
}

double NGramModel::log_prob_up_to(WordId word, std::span<const WordId> context, int max_n) const {
  max_n = std::min(max_n, order());
  if (static_cast<int>(context.size()) > max_n - 1)
    context = context.subspan(context.size() - static_cast<std::size_t>(max_n - 1));
  const std::size_t m = context.size();

  std::uint64_t key = mix(kKeySeed, word);
  auto it = levels_[0].index.find(key);
  if (it == levels_[0].index.end()) {
    word = Vocabulary::kUnk;
    key = mix(kKeySeed, word);
    it = levels_[0].index.find(key);
    if (it == levels_[0].index.end()) return -99.0;
  }
  double result = levels_[0].entries[it->second].log_prob;
  std::size_t matched = 0;
  for (std::size_t j = 1; j <= m; ++j) {
    key = mix(key, context[m - j]);
    const Level& level = levels_[j];
    auto found = level.index.find(key);
    if (found == level.index.end()) break;
    result = level.entries[found->second].log_prob;
    matched = j;
  }
  // Backoff weights of the contexts longer than the match.
  std::uint64_t ckey = kKeySeed;
  for (std::size_t l = 1; l <= m; ++l) {
    ckey = mix(ckey, context[m - l]);
    if (l <= matched) continue;
    const Level& level = levels_[l - 1];
    auto found = level.index.find(ckey);
    if (found == level.index.end()) break;
    result += level.entries[found->second].backoff;
  }
  return result;
}

double NGramModel::log_prob(WordId word, std::span<const WordId> context) const {
  return log_prob_up_to(word, context, order());
}

double NGramModel::log_prob(std::string_view word, const std::vector<std::string>& context) const {
  std::vector<WordId> ids = vocab_.ids(context);
  return log_prob(vocab_.id(word), ids);
}

double absolute_discount(std::uint64_t n1, std::uint64_t n2) {
  if (n1 + 2 * n2 == 0) return 0.1;
  double d = static_cast<double>(n1) / static_cast<double>(n1 + 2 * n2);
  return std::clamp(d, 0.1, 0.9);
}

NGramModel train_ngram(const std::vector<std::vector<std::string>>& sentences, int order) {
  if (order < 1 || order > kMaxOrder) {
    throw Error("invalid-argument", "n-gram order must be in [1, " + std::to_string(kMaxOrder) +
                                        "], got " + std::to_string(order));
  }
  bool any = std::any_of(sentences.begin(), sentences.end(),
                         [](const auto& s) { return !s.empty(); });
  if (!any) throw Error("empty-input", "language model needs at least one non-empty sentence");

  Vocabulary vocab;
  for (const auto& s : sentences)
    for (const auto& t : s) vocab.insert(t);

  NGramModel model(order, vocab);
  // Raw counts live alongside the entries, indexed the same way.
  std::vector<std::vector<std::uint64_t>> counts(static_cast<std::size_t>(order));
  auto bump = [&](std::span<const WordId> ngram) {
    NGramEntry* e = model.find(ngram);
    int n = static_cast<int>(ngram.size());
    if (!e) {
      model.set(ngram, NGramEntry{});
      counts[n - 1].push_back(0);
    }
    // Entry indices are append-only, so the index equals position of the key.
    std::size_t idx = static_cast<std::size_t>(model.find(ngram) - &model.entry(n, 0));
    ++counts[n - 1][idx];
  };

  std::vector<WordId> seq;
  for (const auto& s : sentences) {
    seq.clear();
    seq.push_back(Vocabulary::kBos);
    for (const auto& t : s) seq.push_back(vocab.id(t));
    seq.push_back(Vocabulary::kEos);
    for (std::size_t end = 1; end < seq.size(); ++end) {
      for (int n = 1; n <= order && static_cast<std::size_t>(n) <= end + 1; ++n) {
        bump(std::span<const WordId>(seq.data() + end + 1 - n, static_cast<std::size_t>(n)));
      }
    }
  }
  // Sentence begin and unknown are unigrams with zero count.
  for (WordId special : {Vocabulary::kBos, Vocabulary::kUnk}) {
    if (!model.find(std::span<const WordId>(&special, 1))) {
      model.set(std::span<const WordId>(&special, 1), NGramEntry{});
      counts[0].push_back(0);
    }
  }

  std::vector<double> discount(static_cast<std::size_t>(order));
  for (int n = 1; n <= order; ++n) {
    std::uint64_t n1 = 0, n2 = 0;
    for (std::uint64_t c : counts[n - 1]) {
      n1 += c == 1;
      n2 += c == 2;
    }
    discount[n - 1] = absolute_discount(n1, n2);
  }

  // Unigrams: discounted relative frequency plus the freed mass spread
  // uniformly over every predictable word (unknown and sentence end included).
  {
    std::uint64_t total = 0, types = 0;
    std::size_t predictable = 0;
    for (std::size_t i = 0; i < counts[0].size(); ++i) {
      if (model.words(1, i)[0] == Vocabulary::kBos) continue;
      total += counts[0][i];
      types += counts[0][i] > 0;
      ++predictable;
    }
    const double d = discount[0];
    const double freed = d * static_cast<double>(types) / static_cast<double>(total);
    for (std::size_t i = 0; i < counts[0].size(); ++i) {
      WordId w = model.words(1, i)[0];
      NGramEntry e;
      if (w == Vocabulary::kBos) {
        e.log_prob = kBosLogProb;
      } else {
        double c = static_cast<double>(counts[0][i]);
        double p = std::max(c - d, 0.0) / static_cast<double>(total) +
                   freed / static_cast<double>(predictable);
        e.log_prob = std::log10(p);
      }
      model.set(model.words(1, i), e);
    }
  }

  // Higher orders: interpolate with the already finished lower-order model.
  for (int n = 2; n <= order; ++n) {
    const std::size_t ctx_count = model.count(n - 1);
    std::vector<std::uint64_t> ctx_total(ctx_count, 0), ctx_types(ctx_count, 0);
    std::vector<std::uint32_t> ctx_of(model.count(n));
    for (std::size_t i = 0; i < model.count(n); ++i) {
      auto ngram = model.words(n, i);
      auto ctx = ngram.first(static_cast<std::size_t>(n - 1));
      const NGramEntry* ce = model.find(ctx);
      std::size_t ci = static_cast<std::size_t>(ce - &model.entry(n - 1, 0));
      ctx_of[i] = static_cast<std::uint32_t>(ci);
      ctx_total[ci] += counts[n - 1][i];
      ctx_types[ci] += 1;
    }
    const double d = discount[n - 1];
    std::vector<NGramEntry> updated(model.count(n));
    for (std::size_t i = 0; i < model.count(n); ++i) {
      auto ngram = model.words(n, i);
      std::size_t ci = ctx_of[i];
      double ctot = static_cast<double>(ctx_total[ci]);
      double gamma = d * static_cast<double>(ctx_types[ci]) / ctot;
      double lower = std::pow(10.0, model.log_prob_up_to(ngram.back(), ngram.subspan(1, n - 2),
                                                         n - 1));
      double p = (static_cast<double>(counts[n - 1][i]) - d) / ctot + gamma * lower;
      updated[i].log_prob = std::log10(p);
    }
    for (std::size_t i = 0; i < model.count(n); ++i) model.set(model.words(n, i), updated[i]);
    for (std::size_t ci = 0; ci < ctx_count; ++ci) {
      if (ctx_types[ci] == 0) continue;
      NGramEntry e = model.entry(n - 1, ci);
      e.backoff = std::log10(d * static_cast<double>(ctx_types[ci]) /
                             static_cast<double>(ctx_total[ci]));
      e.has_backoff = true;
      model.set(model.words(n - 1, ci), e);
    }
  }
  return model;
}

double sentence_log_prob(const NGramModel& model, const std::vector<std::string>& tokens) {
  std::vector<WordId> ctx{Vocabulary::kBos};
  double total = 0.0;
  for (const auto& t : tokens) {
    WordId w = model.vocab().id(t);
    total += model.log_prob(w, ctx);
    ctx.push_back(w);
  }
  total += model.log_prob(Vocabulary::kEos, ctx);
  return total;
}

double perplexity(const NGramModel& model, const std::vector<std::vector<std::string>>& corpus) {
  if (corpus.empty()) throw Error("empty-input", "perplexity needs a non-empty corpus");
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& s : corpus) {
    total += sentence_log_prob(model, s);
    n += s.size() + 1;
  }
  return std::pow(10.0, -total / static_cast<double>(n));
}

void write_arpa(const NGramModel& model, std::ostream& out) {
  const Vocabulary& vocab = model.vocab();
  out << "\\data\\\n";
  for (int n = 1; n <= model.order(); ++n) out << "ngram " << n << '=' << model.count(n) << '\n';
  for (int n = 1; n <= model.order(); ++n) {
    out << "\n\\" << n << "-grams:\n";
    std::vector<std::pair<std::vector<std::string>, std::size_t>> rows;
    rows.reserve(model.count(n));
    for (std::size_t i = 0; i < model.count(n); ++i) {
      std::vector<std::string> toks;
      for (WordId w : model.words(n, i)) toks.push_back(vocab.token(w));
      rows.emplace_back(std::move(toks), i);
    }
    std::sort(rows.begin(), rows.end());
    for (const auto& [toks, i] : rows) {
      const NGramEntry& e = model.entry(n, i);
      out << format_g(e.log_prob, 7) << '\t' << join(toks);
      if (e.has_backoff && n < model.order()) out << '\t' << format_g(e.backoff, 7);
      out << '\n';
    }
  }
  out << "\n\\end\\\n";
}

void write_arpa(const NGramModel& model, const std::filesystem::path& path) {
  std::ostringstream ss;
  write_arpa(model, ss);
  write_file_atomic(path, ss.str());
}

NGramModel read_arpa(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next = [&](bool skip_blank) -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!skip_blank || !trim(line).empty()) return true;
    }
    return false;
  };
  auto malformed = [&](const std::string& why) {
    return Error("malformed-arpa", "line " + std::to_string(line_no) + ": " + why);
  };

  if (!next(true) || trim(line) != "\\data\\") throw malformed("expected \\data\\ header");
  std::vector<std::size_t> declared;
  while (next(true)) {
    std::string t = trim(line);
    if (t.rfind("ngram ", 0) != 0) break;
    auto eq = t.find('=');
    if (eq == std::string::npos) throw malformed("bad ngram count line");
    int n = std::stoi(t.substr(6, eq - 6));
    if (n != static_cast<int>(declared.size()) + 1) throw malformed("ngram counts out of order");
    declared.push_back(std::stoull(t.substr(eq + 1)));
  }
  if (declared.empty() || declared.size() > static_cast<std::size_t>(kMaxOrder))
    throw malformed("no ngram counts declared");

  const int order = static_cast<int>(declared.size());
  NGramModel model(order, Vocabulary{});
  bool at_eof = false;
  std::vector<WordId> ids;
  for (int n = 1; n <= order; ++n) {
    std::string header = "\\" + std::to_string(n) + "-grams:";
    if (at_eof || trim(line) != header) throw malformed("expected " + header);
    std::size_t seen = 0;
    at_eof = true;
    while (next(true)) {
      if (line[0] == '\\') {
        at_eof = false;
        break;
      }
      std::vector<std::string> fields;
      std::size_t start = 0;
      while (true) {
        auto tab = line.find('\t', start);
        fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
        if (tab == std::string::npos) break;
        start = tab + 1;
      }
      if (fields.size() < 2 || fields.size() > 3) throw malformed("expected 2 or 3 tab-separated fields");
      auto toks = split_ws(fields[1]);
      if (static_cast<int>(toks.size()) != n) throw malformed("wrong n-gram length in " + header);
      ids.clear();
      for (const auto& t : toks) {
        if (n == 1) {
          ids.push_back(model.mutable_vocab().insert(t));
        } else {
          auto id = model.vocab().find(t);
          if (!id) throw malformed("token '" + t + "' missing from unigrams");
          ids.push_back(*id);
        }
      }
      NGramEntry e;
      try {
        e.log_prob = std::stod(fields[0]);
        if (fields.size() == 3) {
          e.backoff = std::stod(fields[2]);
          e.has_backoff = true;
        }
      } catch (const std::exception&) {
        throw malformed("unparsable number");
      }
      model.set(ids, e);
      ++seen;
    }
    if (seen != declared[n - 1]) {
      throw Error("count-mismatch", "declared ngram " + std::to_string(n) + "=" +
                                        std::to_string(declared[n - 1]) + " but found " +
                                        std::to_string(seen));
    }
  }
  if (at_eof || trim(line) != "\\end\\") throw malformed("missing \\end\\ marker");
  return model;
}

NGramModel read_arpa(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open " + path.string());
  return read_arpa(in);
}

}  // namespace sitemt::lm
