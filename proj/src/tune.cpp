#include "sitemt/tune.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "sitemt/error.hpp"
#include "sitemt/metrics.hpp"
#include "sitemt/util.hpp"

namespace sitemt::tune {

using decoder::FeatureWeights;
using decoder::Translation;

std::vector<Translation> translate_all(const decoder::Decoder& decoder, const Sentences& sources,
                                       const FeatureWeights& weights,
                                       const decoder::DecoderParams& params, unsigned threads) {
  std::vector<Translation> out(sources.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(1, sources.size())));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < sources.size(); i = next++) {
      try {
        out[i] = decoder.translate(sources[i], weights, params);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

double corpus_wer(const std::vector<Translation>& hyps, const Sentences& refs) {
  if (hyps.size() != refs.size()) throw Error("length-mismatch", "hypothesis/reference count differs");
  std::size_t edits = 0, length = 0;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    edits += metrics::edit_distance(hyps[i].target, refs[i]);
    length += refs[i].size();
  }
  if (length == 0) throw Error("empty-reference", "dev references are empty");
  return static_cast<double>(edits) / static_cast<double>(length);
}

TuneResult tune_weights(const Sentences& dev_source, const Sentences& dev_reference,
                        const decoder::Decoder& decoder, const FeatureWeights& initial,
                        const decoder::DecoderParams& params, const TuneOptions& options) {
  if (dev_source.empty()) throw Error("empty-input", "tuning needs a non-empty dev corpus");
  if (dev_source.size() != dev_reference.size())
    throw Error("line-count-mismatch", "dev source and reference sizes differ");

  auto evaluate = [&](const FeatureWeights& w) {
    return corpus_wer(translate_all(decoder, dev_source, w, params, options.threads), dev_reference);
  };

  TuneResult result;
  result.weights = initial;
  result.initial_wer = evaluate(initial);
  double current = result.initial_wer;

  for (std::size_t pass = 0; pass < options.max_passes; ++pass) {
    ++result.passes;
    bool improved = false;
    for (std::size_t f = 0; f < decoder::kNumFeatures; ++f) {
      const double base = result.weights.values()[f];
      double best_value = base;
      double best_wer = current;
      for (double m : options.multipliers) {
        for (double sign : {1.0, -1.0}) {
          double value = sign * m * base;
          if (value == base) continue;
          FeatureWeights trial = result.weights;
          trial.set(decoder::kFeatureNames[f], value);
          double w = evaluate(trial);
          if (w < best_wer) {
            best_wer = w;
            best_value = value;
          }
        }
      }
      if (best_value != base) {
        result.weights.set(decoder::kFeatureNames[f], best_value);
        result.log.push_back("pass " + std::to_string(pass + 1) + " " +
                             std::string(decoder::kFeatureNames[f]) + " " + format_g(base, 6) +
                             " -> " + format_g(best_value, 6) + " wer " + format_g(current, 6) +
                             " -> " + format_g(best_wer, 6));
        current = best_wer;
        improved = true;
      }
    }
    if (!improved) break;
  }
  result.final_wer = current;
  return result;
}

}  // namespace sitemt::tune
