#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace sitemt::metrics {

using Tokens = std::vector<std::string>;

// Token-level Levenshtein distance with unit costs.
std::size_t edit_distance(std::span<const std::string> hyp, std::span<const std::string> ref);

// edit_distance / |ref|; throws on an empty reference.
double wer(const Tokens& hyp, const Tokens& ref);

struct BleuStats {
  int max_n = 4;
  std::array<std::size_t, 9> matches{};  // clipped, per n-1
  std::array<std::size_t, 9> totals{};
  std::size_t hyp_length = 0;
  std::size_t ref_length = 0;

  BleuStats& operator+=(const BleuStats& o);
};

BleuStats bleu_stats(const Tokens& hyp, const Tokens& ref, int max_n = 4);
// 0..100; zero whenever any n-gram precision is zero.
double bleu_from_stats(const BleuStats& stats);
double bleu_corpus(const std::vector<Tokens>& hyps, const std::vector<Tokens>& refs, int max_n = 4);

struct TerResult {
  std::size_t edits = 0;
  std::size_t shifts = 0;
  std::size_t ref_length = 0;
  Tokens shifted_hyp;
  double rate() const {
    return static_cast<double>(edits + shifts) / static_cast<double>(ref_length);
  }
};

inline constexpr std::size_t kMaxShifts = 50;
inline constexpr std::size_t kMaxShiftSize = 10;

TerResult ter_detail(const Tokens& hyp, const Tokens& ref);
double ter(const Tokens& hyp, const Tokens& ref);

inline constexpr std::array<const char*, 4> kBucketNames = {"1-10", "11-20", "21-30", ">30"};
std::size_t length_bucket(std::size_t ref_length);

struct MetricReport {
  std::string label;
  double bleu = 0.0;
  double ter = 0.0;
  double wer = 0.0;
  std::size_t sentences = 0;
  std::array<std::optional<double>, 4> bucket_bleu{};
  std::array<std::size_t, 4> bucket_sentences{};
};

MetricReport evaluate_system(const std::vector<Tokens>& hyps, const std::vector<Tokens>& refs,
                             const std::string& label);
// Files hold one whitespace-tokenized sentence per line.
MetricReport evaluate_files(const std::filesystem::path& hyp_path,
                            const std::filesystem::path& ref_path, const std::string& label);

nlohmann::json to_json(const MetricReport& report);
MetricReport report_from_json(const nlohmann::json& j);
// One JSON record per line.
std::vector<MetricReport> read_records(const std::filesystem::path& path);
std::string format_records(std::span<const MetricReport> reports);

// Single-system detail: scores and the per-length breakdown.
std::string format_report(const MetricReport& report);
// System / BLEU / TER rows, one per report.
std::string format_comparison(std::span<const MetricReport> reports);

}  // namespace sitemt::metrics
