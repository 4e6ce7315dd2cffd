#include "sitemt/evalsvc.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <ctime>
#include <mutex>

#include "sitemt/error.hpp"
#include "sitemt/util.hpp"

namespace sitemt::evalsvc {

namespace {

std::string utc_timestamp() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

nlohmann::json session_record(const EvalSession& s) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& it : s.items)
    items.push_back({{"source", it.source}, {"a", it.a}, {"b", it.b}, {"a_left", it.a_left}});
  return {{"kind", "session"}, {"session_id", s.id}, {"label_a", s.label_a},
          {"label_b", s.label_b}, {"seed", s.seed}, {"items", items}};
}

nlohmann::json judgment_record(const JudgmentRecord& j) {
  return {{"kind", "judgment"},       {"session_id", j.session_id},
          {"index", j.index},         {"annotator", j.annotator},
          {"choice", to_string(j.choice)}, {"resolved", to_string(j.resolved)},
          {"timestamp", j.timestamp}};
}

// Applies one decoded record to the state map; throws on semantic errors.
void apply_record(std::map<std::string, SessionState>& sessions, const nlohmann::json& rec) {
  const std::string kind = rec.at("kind").get<std::string>();
  if (kind == "session") {
    EvalSession s;
    s.id = rec.at("session_id").get<std::string>();
    s.label_a = rec.at("label_a").get<std::string>();
    s.label_b = rec.at("label_b").get<std::string>();
    s.seed = rec.at("seed").get<std::uint64_t>();
    for (const auto& it : rec.at("items"))
      s.items.push_back({it.at("source").get<std::string>(), it.at("a").get<std::string>(),
                         it.at("b").get<std::string>(), it.at("a_left").get<bool>()});
    if (sessions.count(s.id)) throw Error("corrupt-log", "session " + s.id + " created twice");
    std::string id = s.id;
    sessions[id].session = std::move(s);
  } else if (kind == "judgment") {
    JudgmentRecord j;
    j.session_id = rec.at("session_id").get<std::string>();
    j.index = rec.at("index").get<std::size_t>();
    j.annotator = rec.at("annotator").get<std::string>();
    auto choice = parse_choice(rec.at("choice").get<std::string>());
    auto resolved = parse_resolved(rec.at("resolved").get<std::string>());
    if (!choice || !resolved) throw Error("corrupt-log", "bad choice in judgment record");
    j.choice = *choice;
    j.resolved = *resolved;
    j.timestamp = rec.value("timestamp", "");
    auto it = sessions.find(j.session_id);
    if (it == sessions.end()) throw Error("corrupt-log", "judgment for unknown session " + j.session_id);
    SessionState& st = it->second;
    if (j.index >= st.session.items.size()) throw Error("corrupt-log", "judgment index out of range");
    if (!st.judged.insert({j.index, j.annotator}).second)
      throw Error("corrupt-log", "duplicate judgment in log");
    st.judgments.push_back(std::move(j));
  } else {
    throw Error("corrupt-log", "unknown record kind " + kind);
  }
}

}  // namespace

std::optional<Choice> parse_choice(std::string_view t) {
  if (t == "first") return Choice::first;
  if (t == "second") return Choice::second;
  if (t == "tie") return Choice::tie;
  return std::nullopt;
}

std::string_view to_string(Choice c) {
  switch (c) {
    case Choice::first: return "first";
    case Choice::second: return "second";
    case Choice::tie: return "tie";
  }
  return "tie";
}

std::string_view to_string(Resolved r) {
  switch (r) {
    case Resolved::a: return "A";
    case Resolved::b: return "B";
    case Resolved::tie: return "tie";
  }
  return "tie";
}

std::optional<Resolved> parse_resolved(std::string_view t) {
  if (t == "A") return Resolved::a;
  if (t == "B") return Resolved::b;
  if (t == "tie") return Resolved::tie;
  return std::nullopt;
}

Tally tally_of(const std::vector<Resolved>& judgments) {
  // Counted in half points so the sums stay exact.
  std::size_t half_a = 0, half_b = 0;
  for (Resolved r : judgments) {
    if (r == Resolved::a) half_a += 2;
    else if (r == Resolved::b) half_b += 2;
    else {
      ++half_a;
      ++half_b;
    }
  }
  return {static_cast<double>(half_a) / 2.0, static_cast<double>(half_b) / 2.0, judgments.size()};
}

Resolved resolve(const EvalItem& item, Choice choice) {
  if (choice == Choice::tie) return Resolved::tie;
  bool picked_left = choice == Choice::first;
  return picked_left == item.a_left ? Resolved::a : Resolved::b;
}

std::vector<bool> presentation_order(std::uint64_t seed, std::size_t items) {
  Rng rng(seed);
  std::vector<bool> a_left(items);
  for (std::size_t i = 0; i < items; ++i) a_left[i] = rng.coin();
  return a_left;
}

nlohmann::json to_json(const PresentedItem& item) {
  return {{"index", item.index}, {"source", item.source}, {"left", item.left}, {"right", item.right}};
}

nlohmann::json to_json(const Tally& t) {
  return {{"points_a", t.points_a}, {"points_b", t.points_b}, {"count", t.count}};
}

ReplayResult replay(const std::filesystem::path& log_path) {
  ReplayResult result;
  if (!std::filesystem::exists(log_path)) return result;
  const std::string data = read_file(log_path);
  std::size_t pos = 0;
  std::size_t record_no = 0;
  while (pos < data.size()) {
    ++record_no;
    std::size_t nl = data.find('\n', pos);
    bool last = nl == std::string::npos || nl + 1 >= data.size();
    if (nl == std::string::npos) {
      result.warnings.push_back("dropped unterminated trailing record " + std::to_string(record_no));
      break;
    }
    std::string_view line(data.data() + pos, nl - pos);
    if (trim(line).empty()) {
      pos = nl + 1;
      result.valid_bytes = pos;
      continue;
    }
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
      apply_record(result.sessions, rec);
    } catch (const nlohmann::json::exception& e) {
      if (!last)
        throw Error("corrupt-log", "record " + std::to_string(record_no) + " is damaged: " + e.what());
      result.warnings.push_back("dropped damaged trailing record " + std::to_string(record_no));
      break;
    }
    pos = nl + 1;
    result.valid_bytes = pos;
  }
  return result;
}

EvalService::EvalService(std::filesystem::path log_path) : log_path_(std::move(log_path)) {
  if (log_path_.has_parent_path()) std::filesystem::create_directories(log_path_.parent_path());
  ReplayResult r = replay(log_path_);
  sessions_ = std::move(r.sessions);
  warnings_ = std::move(r.warnings);
  if (std::filesystem::exists(log_path_) && std::filesystem::file_size(log_path_) != r.valid_bytes)
    std::filesystem::resize_file(log_path_, r.valid_bytes);
  fd_ = ::open(log_path_.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) throw Error("io", "cannot open evaluation log " + log_path_.string());
}

EvalService::~EvalService() {
  if (fd_ >= 0) ::close(fd_);
}

void EvalService::append(const nlohmann::json& record) {
  std::string line = record.dump();
  line += '\n';
  std::size_t off = 0;
  while (off < line.size()) {
    ssize_t w = ::write(fd_, line.data() + off, line.size() - off);
    if (w < 0) {
      if (errno == EINTR) continue;
      throw Error("io", "append to evaluation log failed");
    }
    off += static_cast<std::size_t>(w);
  }
  if (::fsync(fd_) != 0) throw Error("io", "fsync of evaluation log failed");
}

const SessionState& EvalService::state(const std::string& session_id) const {
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw Error("not-found", "unknown session " + session_id);
  return it->second;
}

std::string EvalService::create_session(const std::string& label_a, const std::string& label_b,
                                        const std::vector<ItemInput>& items, std::uint64_t seed,
                                        std::optional<std::string> session_id) {
  if (items.empty()) throw Error("validation", "a session needs at least one item");
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (trim(items[i].source).empty() || trim(items[i].a).empty() || trim(items[i].b).empty())
      throw Error("validation", "item " + std::to_string(i) + " has an empty field");
  }
  if (label_a.empty() || label_b.empty()) throw Error("validation", "system labels must be non-empty");
  if (session_id && session_id->empty()) throw Error("validation", "session id must be non-empty");

  std::unique_lock lock(mutex_);
  std::string id;
  if (session_id) {
    id = *session_id;
    if (sessions_.count(id)) throw Error("duplicate", "session " + id + " already exists");
  } else {
    for (std::size_t k = sessions_.size() + 1;; ++k) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "s%06zu", k);
      if (!sessions_.count(buf)) {
        id = buf;
        break;
      }
    }
  }
  EvalSession s;
  s.id = id;
  s.label_a = label_a;
  s.label_b = label_b;
  s.seed = seed;
  auto order = presentation_order(seed, items.size());
  for (std::size_t i = 0; i < items.size(); ++i)
    s.items.push_back({items[i].source, items[i].a, items[i].b, order[i]});
  append(session_record(s));
  sessions_[id].session = std::move(s);
  return id;
}

std::optional<PresentedItem> EvalService::next_item(const std::string& session_id,
                                                    const std::string& annotator) const {
  std::shared_lock lock(mutex_);
  const SessionState& st = state(session_id);
  for (std::size_t i = 0; i < st.session.items.size(); ++i) {
    if (st.judged.count({i, annotator})) continue;
    const EvalItem& it = st.session.items[i];
    return PresentedItem{i, it.source, it.a_left ? it.a : it.b, it.a_left ? it.b : it.a};
  }
  return std::nullopt;
}

JudgmentRecord EvalService::submit_judgment(const std::string& session_id, std::size_t index,
                                            const std::string& annotator, Choice choice) {
  if (annotator.empty()) throw Error("validation", "annotator id must be non-empty");
  std::unique_lock lock(mutex_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw Error("not-found", "unknown session " + session_id);
  SessionState& st = it->second;
  if (index >= st.session.items.size())
    throw Error("validation", "item index " + std::to_string(index) + " out of range");
  if (st.judged.count({index, annotator}))
    throw Error("duplicate", "annotator " + annotator + " already judged item " + std::to_string(index));
  JudgmentRecord j{session_id, index, annotator, choice, resolve(st.session.items[index], choice),
                   utc_timestamp()};
  append(judgment_record(j));
  st.judged.insert({index, annotator});
  st.judgments.push_back(j);
  return j;
}

Tally EvalService::tally(const std::string& session_id) const {
  std::shared_lock lock(mutex_);
  const SessionState& st = state(session_id);
  std::vector<Resolved> r;
  r.reserve(st.judgments.size());
  for (const auto& j : st.judgments) r.push_back(j.resolved);
  return tally_of(r);
}

std::vector<std::string> EvalService::session_ids() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, st] : sessions_) ids.push_back(id);
  return ids;
}

EvalSession EvalService::session(const std::string& session_id) const {
  std::shared_lock lock(mutex_);
  return state(session_id).session;
}

}  // namespace sitemt::evalsvc
