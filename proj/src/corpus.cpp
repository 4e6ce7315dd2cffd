#include "sitemt/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_set>

#include "sitemt/error.hpp"
#include "sitemt/util.hpp"

namespace sitemt::corpus {

namespace {

// Decodes one code point starting at s[i]; advances i. Invalid bytes are
// passed through as single-byte code points.
char32_t next_codepoint(std::string_view s, std::size_t& i) {
  unsigned char c = static_cast<unsigned char>(s[i]);
  int len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 0;
  if (len == 0 || i + len > s.size()) {
    ++i;
    return c;
  }
  char32_t cp = len == 1 ? c : len == 2 ? (c & 0x1F) : len == 3 ? (c & 0x0F) : (c & 0x07);
  for (int k = 1; k < len; ++k) {
    unsigned char cc = static_cast<unsigned char>(s[i + k]);
    if ((cc >> 6) != 0x2) {
      ++i;
      return c;
    }
    cp = (cp << 6) | (cc & 0x3F);
  }
  i += len;
  return cp;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

bool is_space(char32_t cp) {
  return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\v' || cp == '\f' ||
         cp == 0xA0;
}

bool is_punct(char32_t cp) {
  switch (cp) {
    case '.': case ',': case '!': case '?': case ';': case ':': case '"': case '(': case ')':
    case 0xAB:    // «
    case 0xBB:    // »
    case 0x2014:  // —
      return true;
    default:
      return false;
  }
}

// Latin, Latin-1 and Cyrillic upper case.
char32_t to_lower(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 32;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 32;
  if (cp >= 0x410 && cp <= 0x42F) return cp + 32;
  if (cp >= 0x400 && cp <= 0x40F) return cp + 80;
  return cp;
}

std::string escape_special(std::string token) {
  if (token == "<s>") return "‹s›";
  if (token == "</s>") return "‹/s›";
  if (token == "<unk>") return "‹unk›";
  if (token == "|||") return "¦¦¦";
  return token;
}

struct PairHash {
  std::size_t operator()(const SentencePair& p) const {
    std::uint64_t h = kFnvOffset;
    for (const auto& t : p.source) h = fnv1a64(t, fnv1a64(" ", h));
    h = fnv1a64("\t", h);
    for (const auto& t : p.target) h = fnv1a64(t, fnv1a64(" ", h));
    return static_cast<std::size_t>(h);
  }
};

}  // namespace

std::string_view to_string(Origin origin) {
  return origin == Origin::common ? "common" : "specific";
}

std::vector<std::string> tokenize(std::string_view text, bool lowercase) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(escape_special(std::move(current)));
    current.clear();
  };
  std::size_t i = 0;
  while (i < text.size()) {
    char32_t cp = next_codepoint(text, i);
    if (is_space(cp)) {
      flush();
    } else if (is_punct(cp)) {
      flush();
      std::string p;
      append_utf8(p, cp);
      tokens.push_back(std::move(p));
    } else {
      append_utf8(current, lowercase ? to_lower(cp) : cp);
    }
  }
  flush();
  return tokens;
}

ParallelCorpus load_parallel(const std::filesystem::path& source_path,
                             const std::filesystem::path& target_path, Origin origin,
                             const LoadOptions& options) {
  if (!std::filesystem::exists(source_path))
    throw Error("missing-input", "source file not found: " + source_path.string());
  if (!std::filesystem::exists(target_path))
    throw Error("missing-input", "target file not found: " + target_path.string());
  auto src = read_lines(source_path);
  auto tgt = read_lines(target_path);
  if (src.size() != tgt.size()) {
    throw Error("line-count-mismatch", source_path.string() + " has " +
                                           std::to_string(src.size()) + " lines, " +
                                           target_path.string() + " has " +
                                           std::to_string(tgt.size()));
  }
  ParallelCorpus corpus;
  corpus.source_lang = options.source_lang;
  corpus.target_lang = options.target_lang;
  corpus.pairs.reserve(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    SentencePair pair{tokenize(src[i], options.lowercase), tokenize(tgt[i], options.lowercase),
                      origin};
    if (pair.source.empty() || pair.target.empty()) {
      ++corpus.dropped;
      continue;
    }
    corpus.pairs.push_back(std::move(pair));
  }
  return corpus;
}

void write_parallel(const ParallelCorpus& corpus, const std::filesystem::path& source_path,
                    const std::filesystem::path& target_path) {
  std::string src, tgt;
  for (const auto& p : corpus.pairs) {
    src += join(p.source);
    src += '\n';
    tgt += join(p.target);
    tgt += '\n';
  }
  write_file_atomic(source_path, src);
  write_file_atomic(target_path, tgt);
}

ParallelCorpus deduplicate(const ParallelCorpus& corpus) {
  ParallelCorpus out;
  out.source_lang = corpus.source_lang;
  out.target_lang = corpus.target_lang;
  out.dropped = corpus.dropped;
  std::unordered_set<SentencePair, PairHash> seen;
  for (const auto& p : corpus.pairs) {
    if (seen.insert(p).second) out.pairs.push_back(p);
  }
  return out;
}

ParallelCorpus combine(const ParallelCorpus& common, const ParallelCorpus& specific, bool dedup) {
  if (common.source_lang != specific.source_lang || common.target_lang != specific.target_lang) {
    throw Error("language-mismatch", "cannot combine " + common.source_lang + "-" +
                                         common.target_lang + " with " + specific.source_lang +
                                         "-" + specific.target_lang);
  }
  ParallelCorpus out;
  out.source_lang = common.source_lang;
  out.target_lang = common.target_lang;
  out.dropped = common.dropped + specific.dropped;
  out.pairs.reserve(common.size() + specific.size());
  out.pairs.insert(out.pairs.end(), common.pairs.begin(), common.pairs.end());
  out.pairs.insert(out.pairs.end(), specific.pairs.begin(), specific.pairs.end());
  if (dedup) {
    std::size_t dropped = out.dropped;
    out = deduplicate(out);
    out.dropped = dropped;
  }
  return out;
}

Split split(std::size_t corpus_size, std::uint64_t seed, std::size_t n_tune, std::size_t n_test) {
  if (n_tune + n_test >= corpus_size) {
    throw Error("insufficient-data", "cannot take " + std::to_string(n_tune) + " tune + " +
                                         std::to_string(n_test) + " test pairs from a corpus of " +
                                         std::to_string(corpus_size));
  }
  std::vector<std::size_t> order(corpus_size);
  for (std::size_t i = 0; i < corpus_size; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  Split s;
  s.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  s.tune.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test),
                order.begin() + static_cast<std::ptrdiff_t>(n_test + n_tune));
  s.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test + n_tune), order.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.tune.begin(), s.tune.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

ParallelCorpus subset(const ParallelCorpus& corpus, const std::vector<std::size_t>& indices) {
  ParallelCorpus out;
  out.source_lang = corpus.source_lang;
  out.target_lang = corpus.target_lang;
  out.pairs.reserve(indices.size());
  for (std::size_t i : indices) out.pairs.push_back(corpus.pairs.at(i));
  return out;
}

ParallelCorpus prefix(const ParallelCorpus& corpus, std::size_t n) {
  if (n > corpus.size()) {
    throw Error("insufficient-data", "requested " + std::to_string(n) + " pairs from a corpus of " +
                                         std::to_string(corpus.size()));
  }
  ParallelCorpus out;
  out.source_lang = corpus.source_lang;
  out.target_lang = corpus.target_lang;
  out.pairs.assign(corpus.pairs.begin(), corpus.pairs.begin() + static_cast<std::ptrdiff_t>(n));
  return out;
}

std::string format_split_manifest(const Split& split) {
  std::string out;
  auto section = [&](const char* name, const std::vector<std::size_t>& idx) {
    out += name;
    out += '\n';
    for (std::size_t i : idx) {
      out += std::to_string(i);
      out += '\n';
    }
  };
  section("#train", split.train);
  section("#tune", split.tune);
  section("#test", split.test);
  return out;
}

Split parse_split_manifest(std::string_view text) {
  Split s;
  std::vector<std::size_t>* current = nullptr;
  std::size_t line_no = 0;
  for (const auto& raw : split_lines(text)) {
    ++line_no;
    std::string line = trim(raw);
    if (line.empty()) continue;
    if (line == "#train") {
      current = &s.train;
    } else if (line == "#tune") {
      current = &s.tune;
    } else if (line == "#test") {
      current = &s.test;
    } else {
      if (!current || line.find_first_not_of("0123456789") != std::string::npos) {
        throw Error("malformed-manifest", "bad split manifest line " + std::to_string(line_no) +
                                              ": " + line);
      }
      current->push_back(std::stoull(line));
    }
  }
  return s;
}

Vocabulary build_vocab(const ParallelCorpus& corpus, Side side) {
  Vocabulary vocab;
  for (const auto& p : corpus.pairs) {
    for (const auto& t : side == Side::source ? p.source : p.target) vocab.insert(t);
  }
  return vocab;
}

std::vector<std::vector<std::string>> side_of(const ParallelCorpus& corpus, Side side) {
  std::vector<std::vector<std::string>> out;
  out.reserve(corpus.size());
  for (const auto& p : corpus.pairs) out.push_back(side == Side::source ? p.source : p.target);
  return out;
}

}  // namespace sitemt::corpus
