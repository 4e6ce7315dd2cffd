#include "sitemt/pipeline.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "sitemt/align.hpp"
#include "sitemt/corpus.hpp"
#include "sitemt/error.hpp"
#include "sitemt/lm.hpp"
#include "sitemt/phrase_table.hpp"
#include "sitemt/util.hpp"

namespace sitemt::pipeline {

namespace fs = std::filesystem;

namespace {

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw Error("invalid-config", "bad value '" + std::string(value) + "' for " + std::string(key));
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw Error("invalid-config", "bad boolean '" + std::string(value) + "' for " + std::string(key));
}

std::vector<std::size_t> parse_sizes(std::string_view key, std::string_view value) {
  std::vector<std::size_t> out;
  std::string s(value);
  for (char& c : s)
    if (c == ',') c = ' ';
  for (const auto& tok : split_ws(s)) out.push_back(parse_number<std::size_t>(key, tok));
  return out;
}

struct Key {
  const char* name;
  std::function<void(PipelineConfig&, std::string_view)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

const std::vector<Key>& keys() {
  static const std::vector<Key> k = [] {
    std::vector<Key> v;
    auto path = [&](const char* name, fs::path PipelineConfig::*m) {
      v.push_back({name, [m](PipelineConfig& c, std::string_view s) { c.*m = fs::path(std::string(s)); },
                   [m](const PipelineConfig& c) { return (c.*m).string(); }});
    };
    auto text = [&](const char* name, std::string PipelineConfig::*m) {
      v.push_back({name, [m](PipelineConfig& c, std::string_view s) { c.*m = std::string(s); },
                   [m](const PipelineConfig& c) { return c.*m; }});
    };
    auto boolean = [&](const char* name, bool PipelineConfig::*m) {
      v.push_back({name, [m, name](PipelineConfig& c, std::string_view s) { c.*m = parse_bool(name, s); },
                   [m](const PipelineConfig& c) { return std::string(c.*m ? "true" : "false"); }});
    };
    auto number = [&]<typename T>(const char* name, T PipelineConfig::*m) {
      v.push_back({name, [m, name](PipelineConfig& c, std::string_view s) { c.*m = parse_number<T>(name, s); },
                   [m](const PipelineConfig& c) { return std::to_string(c.*m); }});
    };
    path("common_source", &PipelineConfig::common_source);
    path("common_target", &PipelineConfig::common_target);
    path("specific_source", &PipelineConfig::specific_source);
    path("specific_target", &PipelineConfig::specific_target);
    path("workdir", &PipelineConfig::workdir);
    number("order", &PipelineConfig::order);
    number("max_phrase_length", &PipelineConfig::max_phrase_length);
    v.push_back({"beam",
                 [](PipelineConfig& c, std::string_view s) {
                   c.beam = s == "unlimited" ? decoder::DecoderParams::kUnlimitedBeam
                                             : parse_number<std::size_t>("beam", s);
                 },
                 [](const PipelineConfig& c) {
                   return c.beam == decoder::DecoderParams::kUnlimitedBeam ? std::string("unlimited")
                                                                           : std::to_string(c.beam);
                 }});
    v.push_back({"distortion_limit",
                 [](PipelineConfig& c, std::string_view s) {
                   c.distortion_limit = s == "unlimited" ? -1 : parse_number<int>("distortion_limit", s);
                 },
                 [](const PipelineConfig& c) {
                   return c.distortion_limit < 0 ? std::string("unlimited") : std::to_string(c.distortion_limit);
                 }});
    number("seed", &PipelineConfig::seed);
    number("tune_size", &PipelineConfig::tune_size);
    number("test_size", &PipelineConfig::test_size);
    boolean("lowercase", &PipelineConfig::lowercase);
    boolean("dedup", &PipelineConfig::dedup);
    number("em_iterations", &PipelineConfig::em_iterations);
    text("heuristic", &PipelineConfig::heuristic);
    number("tune_passes", &PipelineConfig::tune_passes);
    number("tune_max_sentences", &PipelineConfig::tune_max_sentences);
    number("threads", &PipelineConfig::threads);
    text("label", &PipelineConfig::label);
    v.push_back({"sweep_sizes",
                 [](PipelineConfig& c, std::string_view s) { c.sweep_sizes = parse_sizes("sweep_sizes", s); },
                 [](const PipelineConfig& c) {
                   std::string out;
                   for (std::size_t i = 0; i < c.sweep_sizes.size(); ++i)
                     out += (i ? "," : "") + std::to_string(c.sweep_sizes[i]);
                   return out;
                 }});
    boolean("sweep_parallel", &PipelineConfig::sweep_parallel);
    boolean("sweep_tune", &PipelineConfig::sweep_tune);
    return v;
  }();
  return k;
}

void validate(const PipelineConfig& c) {
  if (c.order < 1 || c.order > 9) throw Error("invalid-config", "order must lie in 1..9");
  if (c.max_phrase_length < 1) throw Error("invalid-config", "max_phrase_length must be >= 1");
  if (c.beam < 1) throw Error("invalid-config", "beam must be >= 1");
  if (c.distortion_limit < -1) throw Error("invalid-config", "distortion_limit must be >= 0 or unlimited");
  if (c.em_iterations < 1) throw Error("invalid-config", "em_iterations must be >= 1");
  align::parse_heuristic(c.heuristic);
}

void require_file(const fs::path& p, const std::string& what) {
  if (p.empty()) throw Error("invalid-config", what + " is not configured");
  if (!fs::is_regular_file(p)) throw Error("missing-input", what + " not found: " + p.string());
}

void require_stage(const fs::path& marker, const std::string& stage) {
  if (!fs::is_regular_file(marker))
    throw Error("stage-order", "stage '" + stage + "' has not completed (missing " + marker.string() + ")");
}

using Lines = std::vector<std::vector<std::string>>;

Lines read_tokenized(const fs::path& p) {
  Lines out;
  for (const auto& line : read_lines(p)) out.push_back(split_ws(line));
  return out;
}

corpus::ParallelCorpus read_pairs(const fs::path& src, const fs::path& tgt, corpus::Origin origin) {
  Lines s = read_tokenized(src), t = read_tokenized(tgt);
  if (s.size() != t.size())
    throw Error("line-count-mismatch", src.string() + " has " + std::to_string(s.size()) + " lines, " +
                                           tgt.string() + " has " + std::to_string(t.size()));
  corpus::ParallelCorpus c;
  for (std::size_t i = 0; i < s.size(); ++i) c.pairs.push_back({std::move(s[i]), std::move(t[i]), origin});
  return c;
}

std::string render_corpus(const corpus::ParallelCorpus& c, bool source) {
  std::string out;
  for (const auto& p : c.pairs) {
    out += join(source ? p.source : p.target);
    out += '\n';
  }
  return out;
}

void write_pairs_atomic(const corpus::ParallelCorpus& c, const fs::path& src, const fs::path& tgt) {
  write_file_atomic(src, render_corpus(c, true));
  write_file_atomic(tgt, render_corpus(c, false));
}

std::string provenance(const std::string& stage, const PipelineConfig& config,
                       const std::vector<std::pair<std::string, fs::path>>& inputs,
                       const std::vector<std::pair<std::string, std::string>>& facts) {
  std::string out = "stage=" + stage + "\n";
  out += "config=" + hex64(fnv1a64(format_config(config))) + "\n";
  for (const auto& [name, p] : inputs) out += "input." + name + "=" + hash_file(p) + "\n";
  for (const auto& [k, v] : facts) out += k + "=" + v + "\n";
  return out;
}

using PairKey = std::pair<std::vector<std::string>, std::vector<std::string>>;

std::set<PairKey> pair_set(const corpus::ParallelCorpus& c) {
  std::set<PairKey> s;
  for (const auto& p : c.pairs) s.insert({p.source, p.target});
  return s;
}

corpus::ParallelCorpus drop_overlap(const corpus::ParallelCorpus& c, const std::set<PairKey>& held_out,
                                    std::size_t& removed) {
  corpus::ParallelCorpus out;
  out.source_lang = c.source_lang;
  out.target_lang = c.target_lang;
  for (const auto& p : c.pairs) {
    if (held_out.count({p.source, p.target})) {
      ++removed;
      continue;
    }
    out.pairs.push_back(p);
  }
  return out;
}

struct Models {
  lm::NGramModel lm;
  PhraseTable table;
};

Models load_models(const PipelineConfig& config) {
  require_stage(train_dir(config) / "provenance.txt", "train");
  return {lm::read_arpa(train_dir(config) / "model.arpa"),
          read_phrase_table(train_dir(config) / "phrase-table.txt")};
}

std::string format_line(const decoder::Translation& t, bool breakdown) {
  std::string line = t.text();
  if (breakdown)
    for (double f : t.features) line += "\t" + format_g(f, 10);
  return line;
}

// Prepare directory for one sweep system: shared held-out partitions, own training data.
void stage_system(const PipelineConfig& base, const PipelineConfig& sys, const corpus::ParallelCorpus& train) {
  fs::path from = prepare_dir(base), to = prepare_dir(sys);
  fs::create_directories(to);
  for (const char* name : {"tune.src", "tune.tgt", "test.src", "test.tgt", "split.manifest"})
    write_file_atomic(to / name, read_file(from / name));
  write_pairs_atomic(train, to / "train.src", to / "train.tgt");
  write_file_atomic(to / "provenance.txt",
                    provenance("prepare", sys, {{"base_train_source", from / "train.src"}},
                               {{"train_pairs", std::to_string(train.size())}}));
}

}  // namespace

void apply_setting(PipelineConfig& config, std::string_view key, std::string_view value) {
  for (const auto& k : keys()) {
    if (key == k.name) {
      k.set(config, value);
      return;
    }
  }
  throw Error("invalid-config", "unknown config key '" + std::string(key) + "'");
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& k : keys()) out.emplace_back(k.name);
  return out;
}

PipelineConfig parse_config(std::string_view text, PipelineConfig base) {
  std::size_t line_no = 0;
  for (const auto& raw : split_lines(text)) {
    ++line_no;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error("invalid-config", "line " + std::to_string(line_no) + ": expected key=value");
    apply_setting(base, trim(std::string_view(line).substr(0, eq)), trim(std::string_view(line).substr(eq + 1)));
  }
  return base;
}

PipelineConfig load_config(const fs::path& path, PipelineConfig base) {
  if (!fs::is_regular_file(path)) throw Error("missing-input", "config file not found: " + path.string());
  return parse_config(read_file(path), std::move(base));
}

std::string format_config(const PipelineConfig& config) {
  std::string out;
  for (const auto& k : keys()) out += std::string(k.name) + "=" + k.get(config) + "\n";
  return out;
}

decoder::DecoderParams decoder_params(const PipelineConfig& config) {
  decoder::DecoderParams p;
  p.beam = config.beam;
  p.distortion_limit = config.distortion_limit;
  p.max_phrase_length = config.max_phrase_length;
  return p;
}

fs::path prepare_dir(const PipelineConfig& c) { return c.workdir / "prepare"; }
fs::path train_dir(const PipelineConfig& c) { return c.workdir / "train"; }
fs::path tune_dir(const PipelineConfig& c) { return c.workdir / "tune"; }
fs::path evaluate_dir(const PipelineConfig& c) { return c.workdir / "evaluate"; }

PrepareResult run_prepare(const PipelineConfig& config) {
  validate(config);
  require_file(config.specific_source, "specific source corpus");
  require_file(config.specific_target, "specific target corpus");
  const bool has_common = !config.common_source.empty() || !config.common_target.empty();
  if (has_common) {
    require_file(config.common_source, "common source corpus");
    require_file(config.common_target, "common target corpus");
  }

  corpus::LoadOptions lo;
  lo.lowercase = config.lowercase;
  corpus::ParallelCorpus specific =
      corpus::load_parallel(config.specific_source, config.specific_target, corpus::Origin::specific, lo);
  corpus::ParallelCorpus common;
  if (has_common)
    common = corpus::load_parallel(config.common_source, config.common_target, corpus::Origin::common, lo);

  PrepareResult r;
  r.common_pairs = common.size();
  r.specific_pairs = specific.size();
  r.dropped = specific.dropped + common.dropped;

  // Held-out partitions come from the distinct specific pairs so that no
  // duplicate can straddle train and test.
  corpus::ParallelCorpus distinct = corpus::deduplicate(specific);
  corpus::Split parts = corpus::split(distinct, config.seed, config.tune_size, config.test_size);
  corpus::ParallelCorpus tune = corpus::subset(distinct, parts.tune);
  corpus::ParallelCorpus test = corpus::subset(distinct, parts.test);
  corpus::ParallelCorpus specific_train = corpus::subset(distinct, parts.train);

  std::set<PairKey> held_out = pair_set(tune);
  for (const auto& p : test.pairs) held_out.insert({p.source, p.target});
  corpus::ParallelCorpus common_train = drop_overlap(common, held_out, r.overlap_removed);
  corpus::ParallelCorpus train = corpus::combine(common_train, specific_train, config.dedup);

  r.train_pairs = train.size();
  r.tune_pairs = tune.size();
  r.test_pairs = test.size();

  fs::path dir = prepare_dir(config);
  fs::create_directories(dir);
  write_pairs_atomic(train, dir / "train.src", dir / "train.tgt");
  write_pairs_atomic(common_train, dir / "train-common.src", dir / "train-common.tgt");
  write_pairs_atomic(specific_train, dir / "train-specific.src", dir / "train-specific.tgt");
  write_pairs_atomic(tune, dir / "tune.src", dir / "tune.tgt");
  write_pairs_atomic(test, dir / "test.src", dir / "test.tgt");
  write_file_atomic(dir / "split.manifest", corpus::format_split_manifest(parts));

  std::vector<std::pair<std::string, fs::path>> inputs = {{"specific_source", config.specific_source},
                                                          {"specific_target", config.specific_target}};
  if (has_common) {
    inputs.emplace_back("common_source", config.common_source);
    inputs.emplace_back("common_target", config.common_target);
  }
  write_file_atomic(dir / "provenance.txt",
                    provenance("prepare", config, inputs,
                               {{"common_pairs", std::to_string(r.common_pairs)},
                                {"specific_pairs", std::to_string(r.specific_pairs)},
                                {"specific_distinct", std::to_string(distinct.size())},
                                {"combined_pairs", std::to_string(r.common_pairs + r.specific_pairs)},
                                {"dropped", std::to_string(r.dropped)},
                                {"overlap_removed", std::to_string(r.overlap_removed)},
                                {"train_pairs", std::to_string(r.train_pairs)},
                                {"tune_pairs", std::to_string(r.tune_pairs)},
                                {"test_pairs", std::to_string(r.test_pairs)}}));
  return r;
}

TrainResult run_train(const PipelineConfig& config) {
  validate(config);
  fs::path in = prepare_dir(config);
  require_stage(in / "provenance.txt", "prepare");
  corpus::ParallelCorpus train = read_pairs(in / "train.src", in / "train.tgt", corpus::Origin::common);
  if (train.empty()) throw Error("empty-input", "training partition is empty");

  Vocabulary src_vocab = corpus::build_vocab(train, corpus::Side::source);
  Vocabulary tgt_vocab = corpus::build_vocab(train, corpus::Side::target);
  std::vector<align::IdPair> ids;
  ids.reserve(train.size());
  for (const auto& p : train.pairs) {
    align::IdPair ip;
    for (const auto& w : p.source) ip.source.push_back(src_vocab.id(w));
    for (const auto& w : p.target) ip.target.push_back(tgt_vocab.id(w));
    ids.push_back(std::move(ip));
  }

  align::Model1Options mo;
  mo.iterations = config.em_iterations;
  align::Model1Result fwd, rev;
  {
    std::vector<align::IdPair> flipped = align::reversed(ids);
    std::jthread worker([&] { rev = align::train_model1(flipped, mo); });
    fwd = align::train_model1(ids, mo);
  }

  const align::Heuristic heuristic = align::parse_heuristic(config.heuristic);
  std::vector<align::AlignmentMatrix> alignments;
  alignments.reserve(ids.size());
  for (const auto& p : ids) {
    auto f = align::viterbi_align(fwd.table, p, align::Direction::forward);
    auto r = align::viterbi_align(rev.table, p, align::Direction::reverse);
    alignments.push_back(align::symmetrize(f, r, heuristic));
  }
  PhraseTable table = build_phrase_table(ids, alignments, fwd.table, rev.table, config.max_phrase_length,
                                         src_vocab, tgt_vocab);
  lm::NGramModel model = lm::train_ngram(corpus::side_of(train, corpus::Side::target), config.order);

  fs::path dir = train_dir(config);
  fs::create_directories(dir);
  {
    std::ostringstream os;
    write_phrase_table(table, os);
    write_file_atomic(dir / "phrase-table.txt", os.str());
  }
  {
    std::ostringstream os;
    lm::write_arpa(model, os);
    write_file_atomic(dir / "model.arpa", os.str());
  }
  std::string log = "direction\titeration\tlog_likelihood\n";
  for (std::size_t i = 0; i < fwd.log_likelihood.size(); ++i)
    log += "forward\t" + std::to_string(i) + "\t" + format_g(fwd.log_likelihood[i], 17) + "\n";
  for (std::size_t i = 0; i < rev.log_likelihood.size(); ++i)
    log += "reverse\t" + std::to_string(i) + "\t" + format_g(rev.log_likelihood[i], 17) + "\n";
  write_file_atomic(dir / "train.log", log);

  TrainResult r;
  r.train_pairs = train.size();
  r.phrase_pairs = table.pair_count();
  r.likelihood_forward = fwd.log_likelihood;
  r.likelihood_reverse = rev.log_likelihood;
  write_file_atomic(dir / "provenance.txt",
                    provenance("train", config,
                               {{"train_source", in / "train.src"},
                                {"train_target", in / "train.tgt"},
                                {"model", dir / "model.arpa"},
                                {"phrase_table", dir / "phrase-table.txt"}},
                               {{"train_pairs", std::to_string(r.train_pairs)},
                                {"phrase_pairs", std::to_string(r.phrase_pairs)}}));
  return r;
}

tune::TuneResult run_tune(const PipelineConfig& config) {
  validate(config);
  Models m = load_models(config);
  fs::path in = prepare_dir(config);
  Lines src = read_tokenized(in / "tune.src"), ref = read_tokenized(in / "tune.tgt");
  if (config.tune_max_sentences > 0 && src.size() > config.tune_max_sentences) {
    src.resize(config.tune_max_sentences);
    ref.resize(config.tune_max_sentences);
  }
  decoder::Decoder dec(m.table, m.lm);
  tune::TuneOptions opts;
  opts.max_passes = config.tune_passes;
  opts.threads = config.threads;
  tune::TuneResult r =
      tune::tune_weights(src, ref, dec, decoder::FeatureWeights::defaults(), decoder_params(config), opts);

  fs::path dir = tune_dir(config);
  fs::create_directories(dir);
  write_file_atomic(dir / "weights.txt", decoder::format_weights(r.weights));
  std::string log = "initial_wer\t" + format_g(r.initial_wer, 17) + "\n";
  for (const auto& line : r.log) log += line + "\n";
  log += "final_wer\t" + format_g(r.final_wer, 17) + "\npasses\t" + std::to_string(r.passes) + "\n";
  write_file_atomic(dir / "tune.log", log);
  write_file_atomic(dir / "provenance.txt",
                    provenance("tune", config,
                               {{"model", train_dir(config) / "model.arpa"},
                                {"phrase_table", train_dir(config) / "phrase-table.txt"},
                                {"tune_source", in / "tune.src"},
                                {"tune_target", in / "tune.tgt"}},
                               {{"dev_sentences", std::to_string(src.size())}}));
  return r;
}

namespace {

decoder::FeatureWeights active_weights(const PipelineConfig& config, const fs::path& explicit_path) {
  if (!explicit_path.empty()) return decoder::read_weights(explicit_path);
  fs::path tuned = tune_dir(config) / "weights.txt";
  if (fs::is_regular_file(tuned)) return decoder::read_weights(tuned);
  return decoder::FeatureWeights::defaults();
}

std::vector<std::string> translate_lines(const Models& m, const Lines& src, const decoder::FeatureWeights& w,
                                         const PipelineConfig& config, bool breakdown) {
  decoder::Decoder dec(m.table, m.lm);
  // Blank lines pass through as blank output.
  Lines non_empty;
  std::vector<std::size_t> where;
  for (std::size_t i = 0; i < src.size(); ++i)
    if (!src[i].empty()) {
      non_empty.push_back(src[i]);
      where.push_back(i);
    }
  auto hyps = tune::translate_all(dec, non_empty, w, decoder_params(config), config.threads);
  std::vector<std::string> out(src.size());
  for (std::size_t k = 0; k < hyps.size(); ++k) out[where[k]] = format_line(hyps[k], breakdown);
  return out;
}

}  // namespace

std::size_t run_translate(const PipelineConfig& config, const fs::path& input, const fs::path& output,
                          bool breakdown, const fs::path& weights_path) {
  validate(config);
  require_file(input, "translation input");
  Models m = load_models(config);
  Lines src;
  for (const auto& line : read_lines(input)) src.push_back(corpus::tokenize(line, config.lowercase));
  auto lines = translate_lines(m, src, active_weights(config, weights_path), config, breakdown);
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  if (output.has_parent_path()) fs::create_directories(output.parent_path());
  write_file_atomic(output, out);
  return lines.size();
}

metrics::MetricReport run_evaluate(const PipelineConfig& config) {
  validate(config);
  fs::path in = prepare_dir(config);
  require_stage(in / "provenance.txt", "prepare");
  corpus::ParallelCorpus train = read_pairs(in / "train.src", in / "train.tgt", corpus::Origin::common);
  corpus::ParallelCorpus test = read_pairs(in / "test.src", in / "test.tgt", corpus::Origin::specific);

  corpus::Split parts = corpus::parse_split_manifest(read_file(in / "split.manifest"));
  std::set<std::size_t> test_idx(parts.test.begin(), parts.test.end());
  for (std::size_t i : parts.train)
    if (test_idx.count(i))
      throw Error("overlap", "split manifest lists specific pair " + std::to_string(i) + " in train and test");
  std::set<PairKey> seen = pair_set(train);
  for (std::size_t i = 0; i < test.size(); ++i)
    if (seen.count({test.pairs[i].source, test.pairs[i].target}))
      throw Error("overlap", "test pair " + std::to_string(i) + " also appears in the training data");

  Models m = load_models(config);
  Lines src = corpus::side_of(test, corpus::Side::source);
  auto lines = translate_lines(m, src, active_weights(config, {}), config, false);
  Lines hyps;
  std::string hyp_text;
  for (const auto& l : lines) {
    hyps.push_back(split_ws(l));
    hyp_text += l + "\n";
  }
  metrics::MetricReport report =
      metrics::evaluate_system(hyps, corpus::side_of(test, corpus::Side::target), config.label);

  fs::path dir = evaluate_dir(config);
  fs::create_directories(dir);
  write_file_atomic(dir / "test.hyp", hyp_text);
  write_file_atomic(dir / "report.txt", metrics::format_report(report));
  std::vector<metrics::MetricReport> one{report};
  write_file_atomic(dir / "records.jsonl", metrics::format_records(one));
  return report;
}

std::vector<metrics::MetricReport> run_experiment_sweep(const PipelineConfig& config,
                                                        std::vector<std::size_t> sizes) {
  validate(config);
  if (sizes.empty()) sizes = config.sweep_sizes;
  if (sizes.empty()) throw Error("invalid-argument", "no specific corpus sizes given");
  std::sort(sizes.begin(), sizes.end());
  if (sizes.front() == 0) throw Error("invalid-argument", "specific corpus sizes must be positive");

  run_prepare(config);
  fs::path in = prepare_dir(config);
  corpus::ParallelCorpus common =
      read_pairs(in / "train-common.src", in / "train-common.tgt", corpus::Origin::common);
  corpus::ParallelCorpus specific =
      read_pairs(in / "train-specific.src", in / "train-specific.tgt", corpus::Origin::specific);
  if (specific.size() < sizes.back())
    throw Error("insufficient-data", "specific training pool has " + std::to_string(specific.size()) +
                                         " pairs, sweep needs " + std::to_string(sizes.back()));
  if (common.empty()) throw Error("insufficient-data", "sweep needs a common corpus");

  struct System {
    std::string name;
    std::string label;
    corpus::ParallelCorpus train;
  };
  std::vector<System> systems;
  systems.push_back({"specific-only", "specific-only " + std::to_string(sizes.back()),
                     corpus::prefix(specific, sizes.back())});
  systems.push_back({"common-only", "common-only", common});
  for (std::size_t n : sizes)
    systems.push_back({"combined-" + std::to_string(n), "common + specific " + std::to_string(n),
                       corpus::combine(common, corpus::prefix(specific, n), config.dedup)});

  std::vector<metrics::MetricReport> reports(systems.size());
  auto run_one = [&](std::size_t k) {
    PipelineConfig sys = config;
    sys.workdir = config.workdir / "sweep" / systems[k].name;
    sys.label = systems[k].label;
    stage_system(config, sys, systems[k].train);
    run_train(sys);
    if (config.sweep_tune) run_tune(sys);
    reports[k] = run_evaluate(sys);
  };
  if (config.sweep_parallel) {
    std::vector<std::jthread> workers;
    std::vector<std::exception_ptr> errors(systems.size());
    for (std::size_t k = 0; k < systems.size(); ++k)
      workers.emplace_back([&, k] {
        try {
          run_one(k);
        } catch (...) {
          errors[k] = std::current_exception();
        }
      });
    workers.clear();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  } else {
    for (std::size_t k = 0; k < systems.size(); ++k) run_one(k);
  }

  fs::path dir = config.workdir / "sweep";
  write_file_atomic(dir / "report.txt", metrics::format_comparison(reports));
  write_file_atomic(dir / "records.jsonl", metrics::format_records(reports));
  return reports;
}

}  // namespace sitemt::pipeline
