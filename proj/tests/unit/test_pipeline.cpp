#include <doctest.h>

#include "pipeline_fixture.hpp"
#include "sitemt/error.hpp"

using namespace sitemt;
using namespace sitemt::pipeline;

namespace {

std::string code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("config parsing") {
    auto c = parse_config("# comment\norder = 3\nbeam=unlimited\ndistortion_limit=unlimited\nlabel=x y\n");
    CHECK(c.order == 3);
    CHECK(c.beam == decoder::DecoderParams::kUnlimitedBeam);
    CHECK(c.distortion_limit == -1);
    CHECK(c.label == "x y");
    CHECK(parse_config("").order == 5);
    CHECK(code_of([] { parse_config("colour=blue\n"); }) == "invalid-config");
    CHECK(code_of([] { parse_config("order\n"); }) == "invalid-config");
    CHECK(code_of([] { parse_config("order=abc\n"); }) == "invalid-config");
    auto again = parse_config(format_config(c));
    CHECK(format_config(again) == format_config(c));
    CHECK(config_keys().size() >= 20);
  }

  TEST_CASE("missing target file fails before any output") {
    testing::TempDir dir;
    PipelineConfig c;
    testing::write_text(dir / "s.src", "a b\n");
    c.specific_source = dir / "s.src";
    c.specific_target = dir / "s.tgt";
    c.workdir = dir / "work";
    CHECK(code_of([&] { run_prepare(c); }) == "missing-input");
    CHECK_FALSE(std::filesystem::exists(c.workdir));
  }

  TEST_CASE("stages refuse to run out of order") {
    testing::TempDir dir;
    auto c = testing::synthetic_config(dir.path(), testing::small_synthetic(200, 120));
    CHECK(code_of([&] { run_train(c); }) == "stage-order");
    CHECK(code_of([&] { run_evaluate(c); }) == "stage-order");
    CHECK(code_of([&] { run_tune(c); }) == "stage-order");
  }

  TEST_CASE("full pipeline on synthetic data") {
    testing::TempDir dir;
    auto c = testing::synthetic_config(dir.path(), testing::small_synthetic());
    auto p = run_prepare(c);
    CHECK(p.common_pairs == 1500);
    CHECK(p.specific_pairs == 260);
    CHECK(p.tune_pairs == 30);
    CHECK(p.test_pairs == 60);
    auto prov = testing::read_text(prepare_dir(c) / "provenance.txt");
    CHECK(prov.find("combined_pairs=1760") != std::string::npos);

    auto t = run_train(c);
    CHECK(t.phrase_pairs > 0);
    auto arpa = testing::read_text(train_dir(c) / "model.arpa");
    CHECK(arpa.find("ngram 5=") != std::string::npos);
    for (const auto* ll : {&t.likelihood_forward, &t.likelihood_reverse}) {
      REQUIRE(ll->size() == 4);
      for (std::size_t i = 1; i < ll->size(); ++i) CHECK((*ll)[i] >= (*ll)[i - 1] - 1e-9);
    }
    auto log = split_lines(testing::read_text(train_dir(c) / "train.log"));
    CHECK(log.size() >= 8);

    auto tuned = run_tune(c);
    CHECK(tuned.final_wer <= tuned.initial_wer);
    CHECK(std::filesystem::exists(tune_dir(c) / "weights.txt"));

    auto report = run_evaluate(c);
    CHECK(report.sentences == 60);
    CHECK(report.bleu > 0.0);
    CHECK(split_lines(testing::read_text(evaluate_dir(c) / "test.hyp")).size() == 60);
    auto records = metrics::read_records(evaluate_dir(c) / "records.jsonl");
    REQUIRE(records.size() == 1);
    CHECK(records[0].bleu == doctest::Approx(report.bleu));
  }

  TEST_CASE("stage reruns are byte-identical") {
    testing::TempDir dir;
    auto c = testing::synthetic_config(dir.path(), testing::small_synthetic(600, 160));
    run_prepare(c);
    auto prep = testing::snapshot(prepare_dir(c));
    run_train(c);
    auto train = testing::snapshot(train_dir(c));
    run_evaluate(c);
    auto eval = testing::snapshot(evaluate_dir(c));
    run_prepare(c);
    run_train(c);
    run_evaluate(c);
    CHECK(testing::snapshot(prepare_dir(c)) == prep);
    CHECK(testing::snapshot(train_dir(c)) == train);
    CHECK(testing::snapshot(evaluate_dir(c)) == eval);
    // No temp files left behind.
    for (const auto& [name, bytes] : testing::snapshot(c.workdir)) CHECK(name.find(".tmp") == std::string::npos);
  }

  TEST_CASE("held-out sentinel never reaches training artifacts") {
    testing::TempDir dir;
    auto c = testing::synthetic_config(dir.path(), testing::small_synthetic(600, 160));
    run_prepare(c);
    CHECK(testing::poison_test_pairs(c) == 60);
    run_prepare(c);
    for (const auto& line : split_lines(testing::read_text(prepare_dir(c) / "test.src")))
      CHECK(line.find(testing::kSentinel) != std::string::npos);
    run_train(c);
    CHECK(testing::sentinel_leaks(c).empty());
  }

  TEST_CASE("evaluate refuses a test pair seen in training") {
    testing::TempDir dir;
    auto c = testing::synthetic_config(dir.path(), testing::small_synthetic(300, 140));
    run_prepare(c);
    run_train(c);
    auto test_src = split_lines(testing::read_text(prepare_dir(c) / "test.src"));
    auto test_tgt = split_lines(testing::read_text(prepare_dir(c) / "test.tgt"));
    std::ofstream(prepare_dir(c) / "train.src", std::ios::app) << test_src[7] << "\n";
    std::ofstream(prepare_dir(c) / "train.tgt", std::ios::app) << test_tgt[7] << "\n";
    try {
      run_evaluate(c);
      FAIL("expected overlap error");
    } catch (const Error& e) {
      CHECK(e.code() == "overlap");
      CHECK(std::string(e.what()).find("test pair 7") != std::string::npos);
    }
  }

  TEST_CASE("translate preserves line count and order") {
    testing::TempDir dir;
    auto c = testing::synthetic_config(dir.path(), testing::small_synthetic(400, 140));
    run_prepare(c);
    run_train(c);
    auto src = split_lines(testing::read_text(prepare_dir(c) / "test.src"));
    std::string input;
    for (const auto& l : src) input += l + "\n";
    input += "\n" + src[0] + "\n";
    testing::write_text(dir / "in.txt", input);
    CHECK(run_translate(c, dir / "in.txt", dir / "out.txt") == src.size() + 2);
    auto text = testing::read_text(dir / "out.txt");
    std::size_t newlines = std::count(text.begin(), text.end(), '\n');
    CHECK(newlines == src.size() + 2);
    auto lines = split_lines(text);
    CHECK(lines[0] == lines.back());

    CHECK(run_translate(c, dir / "in.txt", dir / "bd.txt", true) == src.size() + 2);
    auto bd = split_lines(testing::read_text(dir / "bd.txt"));
    CHECK(std::count(bd[0].begin(), bd[0].end(), '\t') == 7);
    CHECK(code_of([&] { run_translate(c, dir / "absent.txt", dir / "o.txt"); }) == "missing-input");
  }

  TEST_CASE("sweep emits baselines plus one row per size") {
    testing::TempDir dir;
    auto c = testing::synthetic_config(dir.path(), testing::small_synthetic(400, 200));
    c.em_iterations = 2;
    auto rows = run_experiment_sweep(c, {60, 110, 80});
    REQUIRE(rows.size() == 5);
    CHECK(rows[0].label == "specific-only 110");
    CHECK(rows[1].label == "common-only");
    CHECK(rows[2].label == "common + specific 60");
    CHECK(rows[4].label == "common + specific 110");
    for (const auto& r : rows) CHECK(r.sentences == 60);
    CHECK(metrics::read_records(c.workdir / "sweep" / "records.jsonl").size() == 5);
    CHECK(code_of([&] { run_experiment_sweep(c, {5000}); }) == "insufficient-data");

    // The full specific pool reproduces the plain pipeline.
    auto full = run_experiment_sweep(c, {110});
    run_train(c);
    auto plain = run_evaluate(c);
    CHECK(full.back().bleu == doctest::Approx(plain.bleu).epsilon(1e-12));
  }

  TEST_CASE("parallel sweep matches sequential") {
    testing::TempDir a, b;
    auto ca = testing::synthetic_config(a.path(), testing::small_synthetic(300, 160));
    auto cb = testing::synthetic_config(b.path(), testing::small_synthetic(300, 160));
    ca.em_iterations = cb.em_iterations = 2;
    cb.sweep_parallel = true;
    auto ra = run_experiment_sweep(ca, {40, 70});
    auto rb = run_experiment_sweep(cb, {40, 70});
    REQUIRE(ra.size() == rb.size());
    for (std::size_t i = 0; i < ra.size(); ++i) {
      CHECK(ra[i].bleu == rb[i].bleu);
      CHECK(ra[i].ter == rb[i].ter);
    }
  }
}
