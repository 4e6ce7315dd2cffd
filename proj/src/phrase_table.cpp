#include "sitemt/phrase_table.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "sitemt/error.hpp"
#include "sitemt/util.hpp"

namespace sitemt {

void PhraseTable::add(const Phrase& source, PhraseCandidate candidate) {
  max_phrase_length_ = std::max<int>(
      max_phrase_length_, static_cast<int>(std::max(source.size(), candidate.target.size())));
  entries_[source].push_back(std::move(candidate));
}

void PhraseTable::finalize() {
  for (auto& [src, cands] : entries_) {
    std::vector<std::pair<std::string, PhraseCandidate>> keyed;
    keyed.reserve(cands.size());
    for (auto& c : cands) keyed.emplace_back(text(c.target, false), std::move(c));
    std::stable_sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
      if (a.second.scores.phi_fwd != b.second.scores.phi_fwd)
        return a.second.scores.phi_fwd > b.second.scores.phi_fwd;
      return a.first < b.first;
    });
    for (std::size_t i = 0; i < cands.size(); ++i) cands[i] = std::move(keyed[i].second);
  }
}

const std::vector<PhraseCandidate>& PhraseTable::lookup(std::span<const WordId> source) const {
  static const std::vector<PhraseCandidate> kEmpty;
  auto it = entries_.find(Phrase(source.begin(), source.end()));
  return it == entries_.end() ? kEmpty : it->second;
}

std::vector<PhraseCandidate> PhraseTable::lookup(const std::vector<std::string>& source) const {
  Phrase ids;
  for (const auto& t : source) {
    auto id = source_vocab_.find(t);
    if (!id) return {};
    ids.push_back(*id);
  }
  return lookup(ids);
}

std::size_t PhraseTable::pair_count() const {
  std::size_t n = 0;
  for (const auto& [src, cands] : entries_) n += cands.size();
  return n;
}

std::string PhraseTable::text(std::span<const WordId> phrase, bool source) const {
  const Vocabulary& v = source ? source_vocab_ : target_vocab_;
  std::string out;
  for (std::size_t i = 0; i < phrase.size(); ++i) {
    if (i) out += ' ';
    out += v.token(phrase[i]);
  }
  return out;
}

double lexical_weight(std::span<const WordId> source, std::span<const WordId> target,
                      const std::vector<std::pair<int, int>>& links,
                      const align::LexicalTable& table) {
  double weight = 1.0;
  for (std::size_t j = 0; j < target.size(); ++j) {
    double sum = 0.0;
    int linked = 0;
    for (auto [i, jj] : links) {
      if (jj != static_cast<int>(j)) continue;
      sum += table.prob(target[j], source[static_cast<std::size_t>(i)]);
      ++linked;
    }
    weight *= linked ? sum / linked : table.prob(target[j], align::kNullWord);
  }
  return std::max(weight, align::kProbFloor);
}

PhraseTable build_phrase_table(std::span<const align::IdPair> corpus,
                               std::span<const align::AlignmentMatrix> alignments,
                               const align::LexicalTable& lexical_fwd,
                               const align::LexicalTable& lexical_rev, int max_len,
                               Vocabulary source_vocab, Vocabulary target_vocab) {
  if (corpus.size() != alignments.size())
    throw Error("invalid-argument", "need exactly one alignment per sentence pair");

  struct Stat {
    std::uint64_t count = 0;
    double lex_fwd = 0.0;
    double lex_rev = 0.0;
  };
  std::unordered_map<Phrase, std::unordered_map<Phrase, Stat, PhraseHash>, PhraseHash> pairs;
  std::unordered_map<Phrase, std::uint64_t, PhraseHash> source_counts, target_counts;

  std::vector<std::pair<int, int>> local, local_rev;
  for (std::size_t k = 0; k < corpus.size(); ++k) {
    const auto& pair = corpus[k];
    const auto& a = alignments[k];
    for (const auto& span : align::extract_phrases(a, max_len)) {
      std::span<const WordId> src(pair.source.data() + span.source_begin,
                                  static_cast<std::size_t>(span.source_end - span.source_begin));
      std::span<const WordId> tgt(pair.target.data() + span.target_begin,
                                  static_cast<std::size_t>(span.target_end - span.target_begin));
      local.clear();
      local_rev.clear();
      for (auto [i, j] : a.links()) {
        if (i >= span.source_begin && i < span.source_end && j >= span.target_begin &&
            j < span.target_end) {
          local.emplace_back(i - span.source_begin, j - span.target_begin);
          local_rev.emplace_back(j - span.target_begin, i - span.source_begin);
        }
      }
      double lf = lexical_weight(src, tgt, local, lexical_fwd);
      double lr = lexical_weight(tgt, src, local_rev, lexical_rev);
      Phrase s(src.begin(), src.end()), t(tgt.begin(), tgt.end());
      Stat& st = pairs[s][t];
      ++st.count;
      // Multiple internal alignments: keep the highest lexical weight.
      st.lex_fwd = std::max(st.lex_fwd, lf);
      st.lex_rev = std::max(st.lex_rev, lr);
      ++source_counts[s];
      ++target_counts[t];
    }
  }

  PhraseTable table(std::move(source_vocab), std::move(target_vocab), max_len);
  for (const auto& [s, targets] : pairs) {
    const double cs = static_cast<double>(source_counts[s]);
    for (const auto& [t, st] : targets) {
      PhraseCandidate c;
      c.target = t;
      c.scores.phi_fwd = static_cast<double>(st.count) / cs;
      c.scores.phi_rev = static_cast<double>(st.count) / static_cast<double>(target_counts[t]);
      c.scores.lex_fwd = st.lex_fwd;
      c.scores.lex_rev = st.lex_rev;
      table.add(s, std::move(c));
    }
  }
  table.finalize();
  return table;
}

void write_phrase_table(const PhraseTable& table, std::ostream& out) {
  std::vector<std::tuple<std::string, std::string, const PhraseScores*>> rows;
  rows.reserve(table.pair_count());
  for (const auto& [s, cands] : table.entries()) {
    std::string st = table.text(s, true);
    for (const auto& c : cands) rows.emplace_back(st, table.text(c.target, false), &c.scores);
  }
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) < std::get<0>(b);
    return std::get<1>(a) < std::get<1>(b);
  });
  for (const auto& [s, t, sc] : rows) {
    out << s << " ||| " << t << " ||| " << format_g(sc->phi_fwd, 12) << ' '
        << format_g(sc->phi_rev, 12) << ' ' << format_g(sc->lex_fwd, 12) << ' '
        << format_g(sc->lex_rev, 12) << '\n';
  }
}

void write_phrase_table(const PhraseTable& table, const std::filesystem::path& path) {
  std::ostringstream ss;
  write_phrase_table(table, ss);
  write_file_atomic(path, ss.str());
}

PhraseTable read_phrase_table(std::istream& in) {
  PhraseTable table(Vocabulary{}, Vocabulary{}, 1);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto bad = [&](const std::string& why) {
      return Error("malformed-phrase-table", "line " + std::to_string(line_no) + ": " + why);
    };
    auto a = line.find(" ||| ");
    auto b = a == std::string::npos ? a : line.find(" ||| ", a + 5);
    if (b == std::string::npos) throw bad("expected three ||| separated fields");
    auto src = split_ws(std::string_view(line).substr(0, a));
    auto tgt = split_ws(std::string_view(line).substr(a + 5, b - a - 5));
    auto nums = split_ws(std::string_view(line).substr(b + 5));
    if (src.empty() || tgt.empty() || nums.size() != 4) throw bad("wrong field contents");
    PhraseCandidate c;
    c.target = table.mutable_target_vocab().insert_all(tgt);
    try {
      c.scores = {std::stod(nums[0]), std::stod(nums[1]), std::stod(nums[2]), std::stod(nums[3])};
    } catch (const std::exception&) {
      throw bad("unparsable score");
    }
    for (double p : {c.scores.phi_fwd, c.scores.phi_rev, c.scores.lex_fwd, c.scores.lex_rev})
      if (!(p > 0.0 && p <= 1.0)) throw bad("score outside (0, 1]");
    table.add(table.mutable_source_vocab().insert_all(src), std::move(c));
  }
  table.finalize();
  return table;
}

PhraseTable read_phrase_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open " + path.string());
  return read_phrase_table(in);
}

}  // namespace sitemt
