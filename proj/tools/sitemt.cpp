#include <csignal>
#include <cstdio>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "sitemt/error.hpp"
#include "sitemt/eval_http.hpp"
#include "sitemt/metrics.hpp"
#include "sitemt/pipeline.hpp"
#include "sitemt/util.hpp"

namespace {

using sitemt::pipeline::PipelineConfig;

struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> values;
};

std::string flag_name(const std::string& key) {
  std::string f = key;
  for (char& c : f)
    if (c == '_') c = '-';
  return "--" + f;
}

void add_config_flags(CLI::App* cmd, ConfigFlags& flags) {
  cmd->add_option("--config", flags.config_path, "key=value configuration file");
  for (const auto& key : sitemt::pipeline::config_keys())
    cmd->add_option_function<std::string>(
        flag_name(key), [&flags, key](const std::string& v) { flags.values[key] = v; },
        "config key " + key);
}

PipelineConfig resolve(const ConfigFlags& flags) {
  PipelineConfig c;
  if (!flags.config_path.empty()) c = sitemt::pipeline::load_config(flags.config_path);
  for (const auto& [k, v] : flags.values) sitemt::pipeline::apply_setting(c, k, v);
  return c;
}

sitemt::evalsvc::HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Site-specific phrase-based translation toolkit"};
  app.require_subcommand(1);

  ConfigFlags flags;
  auto* prepare = app.add_subcommand("prepare", "tokenize, combine and split the corpora");
  auto* train = app.add_subcommand("train", "train the language model and phrase table");
  auto* tune = app.add_subcommand("tune", "tune feature weights for dev-set WER");
  auto* translate = app.add_subcommand("translate", "translate a file line by line");
  auto* evaluate = app.add_subcommand("evaluate", "score the test partition");
  auto* sweep = app.add_subcommand("sweep", "train and score engines over specific corpus sizes");
  for (auto* cmd : {prepare, train, tune, translate, evaluate, sweep}) add_config_flags(cmd, flags);

  std::string input, output, weights;
  bool breakdown = false;
  translate->add_option("-i,--input", input, "source text, one sentence per line")->required();
  translate->add_option("-o,--output", output, "output path")->required();
  translate->add_option("--weights", weights, "weights file (default: tuned weights if present)");
  translate->add_flag("--breakdown", breakdown, "append tab-separated feature values");

  std::vector<std::size_t> sizes;
  sweep->add_option("--sizes", sizes, "specific corpus sizes")->delimiter(',');

  std::string log_path = "eval-log.jsonl", host = "127.0.0.1", static_dir;
  int port = 8080;
  auto* serve = app.add_subcommand("serve-eval", "serve pairwise evaluation sessions over HTTP");
  serve->add_option("--log", log_path, "append-only judgment log");
  serve->add_option("--host", host);
  serve->add_option("--port", port);
  serve->add_option("--static", static_dir, "directory of static files to serve at /");

  std::vector<std::string> records;
  bool compare = false;
  auto* report = app.add_subcommand("report", "render metric records");
  report->add_option("records", records, "records files (JSON lines)")->required();
  report->add_flag("--compare", compare, "one comparison table over all systems");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: usage: %s\n", e.what());
    return 2;
  }

  try {
    if (*prepare) {
      auto r = sitemt::pipeline::run_prepare(resolve(flags));
      std::printf("train=%zu tune=%zu test=%zu dropped=%zu overlap_removed=%zu\n", r.train_pairs, r.tune_pairs,
                  r.test_pairs, r.dropped, r.overlap_removed);
    } else if (*train) {
      auto r = sitemt::pipeline::run_train(resolve(flags));
      std::printf("train_pairs=%zu phrase_pairs=%zu\n", r.train_pairs, r.phrase_pairs);
    } else if (*tune) {
      auto r = sitemt::pipeline::run_tune(resolve(flags));
      std::printf("initial_wer=%.6f final_wer=%.6f passes=%zu\n", r.initial_wer, r.final_wer, r.passes);
    } else if (*translate) {
      auto n = sitemt::pipeline::run_translate(resolve(flags), input, output, breakdown, weights);
      std::printf("lines=%zu\n", n);
    } else if (*evaluate) {
      auto r = sitemt::pipeline::run_evaluate(resolve(flags));
      std::fputs(sitemt::metrics::format_report(r).c_str(), stdout);
    } else if (*sweep) {
      auto reports = sitemt::pipeline::run_experiment_sweep(resolve(flags), sizes);
      std::fputs(sitemt::metrics::format_comparison(reports).c_str(), stdout);
    } else if (*serve) {
      sitemt::evalsvc::EvalService service(log_path);
      for (const auto& w : service.replay_warnings()) std::fprintf(stderr, "warning: %s\n", w.c_str());
      std::optional<std::filesystem::path> mount;
      if (!static_dir.empty()) mount = static_dir;
      sitemt::evalsvc::HttpServer server(service, mount);
      int bound = server.bind(host, port);
      if (bound < 0) throw sitemt::Error("bind", "cannot listen on " + host + ":" + std::to_string(port));
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::printf("listening on %s:%d\n", host.c_str(), bound);
      std::fflush(stdout);
      server.listen_after_bind();
      g_server = nullptr;
    } else if (*report) {
      std::vector<sitemt::metrics::MetricReport> all;
      for (const auto& path : records) {
        auto r = sitemt::metrics::read_records(path);
        all.insert(all.end(), r.begin(), r.end());
      }
      if (compare) {
        std::fputs(sitemt::metrics::format_comparison(all).c_str(), stdout);
      } else {
        for (const auto& r : all) std::fputs(sitemt::metrics::format_report(r).c_str(), stdout);
      }
    }
  } catch (const sitemt::Error& e) {
    std::fprintf(stderr, "error: %s: %s\n", e.code().c_str(), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: internal: %s\n", e.what());
    return 1;
  }
  return 0;
}
