#include <cstdio>

#include <CLI11.hpp>

#include "sitemt/error.hpp"
#include "sitemt/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate the synthetic two-domain parallel corpora"};
  sitemt::synthetic::Options o;
  std::string out = "synthetic";
  app.add_option("-o,--out", out, "output directory");
  app.add_option("--seed", o.seed);
  app.add_option("--common", o.common_pairs, "common-domain pairs");
  app.add_option("--specific", o.specific_pairs, "specific-domain pairs");
  app.add_option("--shared", o.shared_fraction, "share of specific vocabulary taken from the common domain");
  CLI11_PARSE(app, argc, argv);
  try {
    auto data = sitemt::synthetic::generate(o);
    sitemt::synthetic::write(data, out);
    std::printf("common=%zu specific=%zu\n", data.common.size(), data.specific.size());
  } catch (const sitemt::Error& e) {
    std::fprintf(stderr, "error: %s: %s\n", e.code().c_str(), e.what());
    return 1;
  }
  return 0;
}
