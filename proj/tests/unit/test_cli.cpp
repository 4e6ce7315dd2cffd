#include <doctest.h>

#include <cstdio>
#include <sys/wait.h>

#include "pipeline_fixture.hpp"
#include "sitemt/metrics.hpp"

namespace {

struct Run {
  int status;
  std::string out;
};

Run run(const std::string& args) {
  std::string cmd = std::string(SITEMT_CLI_PATH) + " " + args + " 2>&1";
  FILE* p = ::popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::string out;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, p)) out.append(buf, n);
  int st = ::pclose(p);
  return {WIFEXITED(st) ? WEXITSTATUS(st) : -1, out};
}

std::string q(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("errors are one machine-readable line") {
    testing::TempDir dir;
    auto r = run("prepare --specific-source " + q(dir / "nope.src") + " --specific-target " + q(dir / "nope.tgt") +
                 " --workdir " + q(dir / "w"));
    CHECK(r.status == 1);
    CHECK(r.out.rfind("error: missing-input: ", 0) == 0);
    CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 1);

    auto order = run("train --workdir " + q(dir / "w"));
    CHECK(order.status == 1);
    CHECK(order.out.rfind("error: stage-order: ", 0) == 0);

    auto bad = run("prepare --no-such-flag 1");
    CHECK(bad.status == 2);
    CHECK(bad.out.rfind("error: usage: ", 0) == 0);

    testing::write_text(dir / "bad.conf", "colour=blue\n");
    auto conf = run("prepare --config " + q(dir / "bad.conf"));
    CHECK(conf.status == 1);
    CHECK(conf.out.rfind("error: invalid-config: ", 0) == 0);
  }

  TEST_CASE("flags override the config file") {
    testing::TempDir dir;
    auto c = testing::synthetic_config(dir.path(), testing::small_synthetic(200, 120));
    std::string conf = "common_source=" + c.common_source.string() + "\ncommon_target=" + c.common_target.string() +
                       "\nspecific_source=" + c.specific_source.string() + "\nspecific_target=" +
                       c.specific_target.string() + "\nworkdir=" + c.workdir.string() +
                       "\ntune_size=10\ntest_size=20\n";
    testing::write_text(dir / "run.conf", conf);
    auto r = run("prepare --config " + q(dir / "run.conf") + " --test-size 25");
    CHECK(r.status == 0);
    CHECK(r.out.find("tune=10 test=25") != std::string::npos);
    CHECK(sitemt::split_lines(testing::read_text(c.workdir / "prepare" / "test.src")).size() == 25);
  }

  TEST_CASE("end to end through the binary") {
    testing::TempDir dir;
    auto c = testing::synthetic_config(dir.path(), testing::small_synthetic(300, 120));
    std::string base = " --common-source " + q(c.common_source) + " --common-target " + q(c.common_target) +
                       " --specific-source " + q(c.specific_source) + " --specific-target " +
                       q(c.specific_target) + " --workdir " + q(c.workdir) +
                       " --tune-size 10 --test-size 20 --em-iterations 2 --beam 10";
    CHECK(run("prepare" + base).status == 0);
    CHECK(run("train" + base).status == 0);
    auto ev = run("evaluate" + base + " --label engine-one");
    CHECK(ev.status == 0);
    CHECK(ev.out.find("engine-one") != std::string::npos);

    auto tr = run("translate" + base + " -i " + q(c.workdir / "prepare" / "test.src") + " -o " + q(dir / "out.txt"));
    CHECK(tr.status == 0);
    CHECK(tr.out.find("lines=20") != std::string::npos);
    CHECK(sitemt::split_lines(testing::read_text(dir / "out.txt")).size() == 20);
  }

  TEST_CASE("report --compare renders one row per system") {
    testing::TempDir dir;
    std::vector<sitemt::metrics::MetricReport> reports(3);
    reports[0].label = "alpha-sys";
    reports[1].label = "beta-sys";
    reports[2].label = "gamma-sys";
    testing::write_text(dir / "a.jsonl", sitemt::metrics::format_records({reports.data(), 2}));
    testing::write_text(dir / "b.jsonl", sitemt::metrics::format_records({reports.data() + 2, 1}));
    auto r = run("report --compare " + q(dir / "a.jsonl") + " " + q(dir / "b.jsonl"));
    CHECK(r.status == 0);
    for (const char* label : {"alpha-sys", "beta-sys", "gamma-sys"}) {
      auto pos = r.out.find(label);
      CHECK(pos != std::string::npos);
      CHECK(r.out.find(label, pos + 1) == std::string::npos);
    }
    auto missing = run("report " + q(dir / "none.jsonl"));
    CHECK(missing.status == 1);
  }

  TEST_CASE("synthetic corpus tool") {
    testing::TempDir dir;
    std::string cmd = std::string(SITEMT_SYNTH_PATH) + " -o '" + (dir / "syn").string() +
                      "' --common 50 --specific 20 --seed 3 > /dev/null";
    REQUIRE(std::system(cmd.c_str()) == 0);
    CHECK(sitemt::split_lines(testing::read_text(dir / "syn" / "common.src")).size() == 50);
    CHECK(sitemt::split_lines(testing::read_text(dir / "syn" / "specific.tgt")).size() == 20);
  }
}
