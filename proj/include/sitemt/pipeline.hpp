#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sitemt/metrics.hpp"
#include "sitemt/tune.hpp"

namespace sitemt::pipeline {

struct PipelineConfig {
  std::filesystem::path common_source;
  std::filesystem::path common_target;
  std::filesystem::path specific_source;
  std::filesystem::path specific_target;
  std::filesystem::path workdir = "work";

  int order = 5;
  int max_phrase_length = 7;
  std::size_t beam = 100;
  int distortion_limit = 6;  // -1 = unlimited
  std::uint64_t seed = 1;
  std::size_t tune_size = 500;
  std::size_t test_size = 700;

  bool lowercase = true;
  bool dedup = true;
  int em_iterations = 5;
  std::string heuristic = "grow-diag-final";
  std::size_t tune_passes = 5;
  std::size_t tune_max_sentences = 0;  // 0 = whole tune partition
  unsigned threads = 0;
  std::string label = "system";

  std::vector<std::size_t> sweep_sizes;
  bool sweep_parallel = false;
  bool sweep_tune = false;
};

// Flat key=value text; '#' starts a comment line. Unknown keys are rejected.
PipelineConfig parse_config(std::string_view text, PipelineConfig base = {});
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});
void apply_setting(PipelineConfig& config, std::string_view key, std::string_view value);
std::vector<std::string> config_keys();
// Canonical rendering of every key, used for provenance hashes.
std::string format_config(const PipelineConfig& config);

decoder::DecoderParams decoder_params(const PipelineConfig& config);

struct PrepareResult {
  std::size_t common_pairs = 0;
  std::size_t specific_pairs = 0;
  std::size_t dropped = 0;
  std::size_t train_pairs = 0;
  std::size_t tune_pairs = 0;
  std::size_t test_pairs = 0;
  std::size_t overlap_removed = 0;
};

struct TrainResult {
  std::size_t train_pairs = 0;
  std::size_t phrase_pairs = 0;
  std::vector<double> likelihood_forward;
  std::vector<double> likelihood_reverse;
};

// Stage directories under the work directory.
std::filesystem::path prepare_dir(const PipelineConfig& config);
std::filesystem::path train_dir(const PipelineConfig& config);
std::filesystem::path tune_dir(const PipelineConfig& config);
std::filesystem::path evaluate_dir(const PipelineConfig& config);

PrepareResult run_prepare(const PipelineConfig& config);
TrainResult run_train(const PipelineConfig& config);
tune::TuneResult run_tune(const PipelineConfig& config);
// Uses tuned weights when present, else the defaults. Returns lines written.
std::size_t run_translate(const PipelineConfig& config, const std::filesystem::path& input,
                          const std::filesystem::path& output, bool breakdown = false,
                          const std::filesystem::path& weights_path = {});
metrics::MetricReport run_evaluate(const PipelineConfig& config);

// Specific-only and common-only baselines plus one combined engine per size,
// all scored on the same test partition. Rows in that order.
std::vector<metrics::MetricReport> run_experiment_sweep(const PipelineConfig& config,
                                                        std::vector<std::size_t> specific_sizes);

}  // namespace sitemt::pipeline
