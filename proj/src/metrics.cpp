#include "sitemt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "sitemt/error.hpp"
#include "sitemt/util.hpp"

namespace sitemt::metrics {

namespace {

std::vector<std::size_t> edit_table(std::span<const std::string> hyp, std::span<const std::string> ref) {
  const std::size_t h = hyp.size(), r = ref.size();
  std::vector<std::size_t> d((h + 1) * (r + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return d[i * (r + 1) + j]; };
  for (std::size_t i = 0; i <= h; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= r; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= h; ++i)
    for (std::size_t j = 1; j <= r; ++j)
      at(i, j) = std::min({at(i - 1, j - 1) + (hyp[i - 1] == ref[j - 1] ? 0 : 1), at(i - 1, j) + 1,
                           at(i, j - 1) + 1});
  return d;
}

// Alignment facts of one minimum edit path.
struct Trace {
  std::vector<bool> hyp_ok;          // hyp word matched exactly
  std::vector<bool> ref_ok;          // ref word matched exactly
  std::vector<std::size_t> hyp_pos;  // hyp words consumed before ref word j
};

Trace trace(std::span<const std::string> hyp, std::span<const std::string> ref) {
  const std::size_t r = ref.size();
  auto d = edit_table(hyp, ref);
  auto at = [&](std::size_t i, std::size_t j) { return d[i * (r + 1) + j]; };
  Trace t{std::vector<bool>(hyp.size()), std::vector<bool>(ref.size()),
          std::vector<std::size_t>(ref.size() + 1)};
  std::size_t i = hyp.size(), j = r;
  t.hyp_pos[r] = hyp.size();
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && at(i, j) == at(i - 1, j - 1) + (hyp[i - 1] == ref[j - 1] ? 0 : 1)) {
      if (hyp[i - 1] == ref[j - 1]) {
        t.hyp_ok[i - 1] = true;
        t.ref_ok[j - 1] = true;
      }
      --i;
      --j;
      t.hyp_pos[j] = i;
    } else if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      --i;
    } else {
      --j;
      t.hyp_pos[j] = i;
    }
  }
  return t;
}

Tokens apply_shift(const Tokens& words, std::size_t start, std::size_t len, std::size_t dest) {
  // dest indexes the sequence with the block removed.
  Tokens rest;
  rest.reserve(words.size());
  rest.insert(rest.end(), words.begin(), words.begin() + static_cast<std::ptrdiff_t>(start));
  rest.insert(rest.end(), words.begin() + static_cast<std::ptrdiff_t>(start + len), words.end());
  rest.insert(rest.begin() + static_cast<std::ptrdiff_t>(dest),
              words.begin() + static_cast<std::ptrdiff_t>(start),
              words.begin() + static_cast<std::ptrdiff_t>(start + len));
  return rest;
}

}  // namespace

std::size_t edit_distance(std::span<const std::string> hyp, std::span<const std::string> ref) {
  return edit_table(hyp, ref).back();
}

double wer(const Tokens& hyp, const Tokens& ref) {
  if (ref.empty()) throw Error("empty-reference", "WER needs a non-empty reference");
  return static_cast<double>(edit_distance(hyp, ref)) / static_cast<double>(ref.size());
}

BleuStats& BleuStats::operator+=(const BleuStats& o) {
  for (std::size_t n = 0; n < matches.size(); ++n) {
    matches[n] += o.matches[n];
    totals[n] += o.totals[n];
  }
  hyp_length += o.hyp_length;
  ref_length += o.ref_length;
  return *this;
}

BleuStats bleu_stats(const Tokens& hyp, const Tokens& ref, int max_n) {
  if (max_n < 1 || max_n > 9) throw Error("invalid-argument", "BLEU order must be in [1, 9]");
  BleuStats s;
  s.max_n = max_n;
  s.hyp_length = hyp.size();
  s.ref_length = ref.size();
  for (int n = 1; n <= max_n; ++n) {
    std::map<std::vector<std::string>, std::size_t> ref_counts;
    for (std::size_t i = 0; i + n <= ref.size(); ++i)
      ++ref_counts[Tokens(ref.begin() + i, ref.begin() + i + n)];
    std::map<std::vector<std::string>, std::size_t> hyp_counts;
    for (std::size_t i = 0; i + n <= hyp.size(); ++i)
      ++hyp_counts[Tokens(hyp.begin() + i, hyp.begin() + i + n)];
    for (const auto& [g, c] : hyp_counts) {
      auto it = ref_counts.find(g);
      s.matches[n - 1] += std::min(c, it == ref_counts.end() ? 0 : it->second);
      s.totals[n - 1] += c;
    }
  }
  return s;
}

double bleu_from_stats(const BleuStats& s) {
  if (s.hyp_length == 0) return 0.0;
  double log_sum = 0.0;
  for (int n = 0; n < s.max_n; ++n) {
    if (s.matches[n] == 0 || s.totals[n] == 0) return 0.0;
    log_sum += std::log(static_cast<double>(s.matches[n]) / static_cast<double>(s.totals[n]));
  }
  double bp = 1.0;
  if (s.hyp_length < s.ref_length)
    bp = std::exp(1.0 - static_cast<double>(s.ref_length) / static_cast<double>(s.hyp_length));
  return 100.0 * bp * std::exp(log_sum / s.max_n);
}

double bleu_corpus(const std::vector<Tokens>& hyps, const std::vector<Tokens>& refs, int max_n) {
  if (hyps.size() != refs.size())
    throw Error("length-mismatch", std::to_string(hyps.size()) + " hypotheses for " +
                                       std::to_string(refs.size()) + " references");
  if (hyps.empty()) throw Error("empty-input", "BLEU needs at least one sentence");
  BleuStats total;
  total.max_n = max_n;
  for (std::size_t i = 0; i < hyps.size(); ++i) total += bleu_stats(hyps[i], refs[i], max_n);
  return bleu_from_stats(total);
}

TerResult ter_detail(const Tokens& hyp, const Tokens& ref) {
  if (ref.empty()) throw Error("empty-reference", "TER needs a non-empty reference");
  TerResult result;
  result.ref_length = ref.size();
  Tokens cur = hyp;
  std::size_t cur_ed = edit_distance(cur, ref);

  while (result.shifts < kMaxShifts && cur_ed > 0) {
    Trace tr = trace(cur, ref);
    std::size_t best_ed = cur_ed;
    Tokens best;
    const std::size_t max_len = std::min(kMaxShiftSize, cur.size());
    for (std::size_t len = max_len; len >= 1; --len) {
      for (std::size_t i = 0; i + len <= cur.size(); ++i) {
        bool aligned = std::all_of(tr.hyp_ok.begin() + i, tr.hyp_ok.begin() + i + len,
                                   [](bool b) { return b; });
        if (aligned) continue;
        for (std::size_t j = 0; j + len <= ref.size(); ++j) {
          if (!std::equal(cur.begin() + i, cur.begin() + i + len, ref.begin() + j)) continue;
          bool ref_aligned = std::all_of(tr.ref_ok.begin() + j, tr.ref_ok.begin() + j + len,
                                         [](bool b) { return b; });
          if (ref_aligned) continue;
          // Insertion points next to where ref[j] currently aligns.
          std::size_t anchor = tr.hyp_pos[j];
          for (std::size_t q : {anchor, anchor + 1, anchor == 0 ? anchor : anchor - 1}) {
            if (q > cur.size() || (q >= i && q <= i + len)) continue;
            std::size_t dest = q > i + len ? q - len : q;
            Tokens moved = apply_shift(cur, i, len, dest);
            std::size_t ed = edit_distance(moved, ref);
            if (ed < best_ed) {
              best_ed = ed;
              best = std::move(moved);
            }
          }
        }
      }
    }
    // A shift costs one edit, so it must save at least two.
    if (best_ed + 1 >= cur_ed) break;
    cur = std::move(best);
    cur_ed = best_ed;
    ++result.shifts;
  }
  result.edits = cur_ed;
  result.shifted_hyp = std::move(cur);
  return result;
}

double ter(const Tokens& hyp, const Tokens& ref) { return ter_detail(hyp, ref).rate(); }

std::size_t length_bucket(std::size_t n) {
  if (n <= 10) return 0;
  if (n <= 20) return 1;
  if (n <= 30) return 2;
  return 3;
}

MetricReport evaluate_system(const std::vector<Tokens>& hyps, const std::vector<Tokens>& refs,
                             const std::string& label) {
  if (hyps.size() != refs.size())
    throw Error("line-count-mismatch", std::to_string(hyps.size()) + " hypothesis lines vs " +
                                           std::to_string(refs.size()) + " reference lines");
  if (hyps.empty()) throw Error("empty-input", "nothing to evaluate");
  MetricReport report;
  report.label = label;
  report.sentences = hyps.size();
  BleuStats total;
  std::array<BleuStats, 4> buckets{};
  std::size_t ter_num = 0, wer_num = 0, ref_len = 0;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    if (refs[i].empty())
      throw Error("empty-reference", "reference line " + std::to_string(i + 1) + " is empty");
    BleuStats s = bleu_stats(hyps[i], refs[i]);
    total += s;
    std::size_t b = length_bucket(refs[i].size());
    buckets[b] += s;
    ++report.bucket_sentences[b];
    TerResult t = ter_detail(hyps[i], refs[i]);
    ter_num += t.edits + t.shifts;
    wer_num += edit_distance(hyps[i], refs[i]);
    ref_len += refs[i].size();
  }
  report.bleu = bleu_from_stats(total);
  report.ter = static_cast<double>(ter_num) / static_cast<double>(ref_len);
  report.wer = static_cast<double>(wer_num) / static_cast<double>(ref_len);
  for (std::size_t b = 0; b < 4; ++b)
    if (report.bucket_sentences[b]) report.bucket_bleu[b] = bleu_from_stats(buckets[b]);
  return report;
}

MetricReport evaluate_files(const std::filesystem::path& hyp_path,
                            const std::filesystem::path& ref_path, const std::string& label) {
  auto hyp_lines = read_lines(hyp_path);
  auto ref_lines = read_lines(ref_path);
  std::vector<Tokens> hyps, refs;
  for (const auto& l : hyp_lines) hyps.push_back(split_ws(l));
  for (const auto& l : ref_lines) refs.push_back(split_ws(l));
  return evaluate_system(hyps, refs, label);
}

nlohmann::json to_json(const MetricReport& r) {
  nlohmann::json buckets = nlohmann::json::object();
  for (std::size_t b = 0; b < 4; ++b) {
    buckets[kBucketNames[b]] = {
        {"bleu", r.bucket_bleu[b] ? nlohmann::json(*r.bucket_bleu[b]) : nlohmann::json(nullptr)},
        {"sentences", r.bucket_sentences[b]}};
  }
  return {{"label", r.label}, {"bleu", r.bleu}, {"ter", r.ter}, {"wer", r.wer},
          {"sentences", r.sentences}, {"buckets", buckets}};
}

MetricReport report_from_json(const nlohmann::json& j) {
  MetricReport r;
  try {
    r.label = j.at("label").get<std::string>();
    r.bleu = j.at("bleu").get<double>();
    r.ter = j.at("ter").get<double>();
    r.wer = j.at("wer").get<double>();
    r.sentences = j.at("sentences").get<std::size_t>();
    if (j.contains("buckets")) {
      for (std::size_t b = 0; b < 4; ++b) {
        const auto& bj = j.at("buckets").at(kBucketNames[b]);
        if (!bj.at("bleu").is_null()) r.bucket_bleu[b] = bj.at("bleu").get<double>();
        r.bucket_sentences[b] = bj.at("sentences").get<std::size_t>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed-record", e.what());
  }
  return r;
}

std::vector<MetricReport> read_records(const std::filesystem::path& path) {
  std::vector<MetricReport> out;
  for (const auto& line : read_lines(path)) {
    if (trim(line).empty()) continue;
    try {
      out.push_back(report_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error("malformed-record", path.string() + ": " + e.what());
    }
  }
  return out;
}

std::string format_records(std::span<const MetricReport> reports) {
  std::string out;
  for (const auto& r : reports) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

namespace {
std::string pad(const std::string& s, std::size_t width, bool right = false) {
  if (s.size() >= width) return s;
  std::string fill(width - s.size(), ' ');
  return right ? fill + s : s + fill;
}
}  // namespace

std::string format_report(const MetricReport& r) {
  std::ostringstream out;
  out << "System: " << r.label << '\n'
      << "Sentences: " << r.sentences << '\n'
      << "BLEU: " << format_fixed(r.bleu, 2) << '\n'
      << "TER: " << format_fixed(r.ter, 3) << '\n'
      << "WER: " << format_fixed(r.wer, 3) << '\n'
      << "BLEU by reference length:\n";
  for (std::size_t b = 0; b < 4; ++b) {
    out << "  " << pad(kBucketNames[b], 6) << ' '
        << pad(r.bucket_bleu[b] ? format_fixed(*r.bucket_bleu[b], 2) : "-", 7, true) << "  ("
        << r.bucket_sentences[b] << " sentences)\n";
  }
  return out.str();
}

std::string format_comparison(std::span<const MetricReport> reports) {
  std::size_t width = 6;
  for (const auto& r : reports) width = std::max(width, r.label.size());
  std::string out = pad("System", width) + "  " + pad("BLEU", 6, true) + "  " + pad("TER", 6, true) + '\n';
  for (const auto& r : reports) {
    out += pad(r.label, width) + "  " + pad(format_fixed(r.bleu, 2), 6, true) + "  " +
           pad(format_fixed(r.ter, 3), 6, true) + '\n';
  }
  return out;
}

}  // namespace sitemt::metrics
