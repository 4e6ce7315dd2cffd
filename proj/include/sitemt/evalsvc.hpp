#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace sitemt::evalsvc {

// What the annotator clicked, relative to the presented layout.
enum class Choice { first, second, tie };
// The same judgment resolved to the systems being compared.
enum class Resolved { a, b, tie };

std::optional<Choice> parse_choice(std::string_view text);
std::string_view to_string(Choice c);
std::string_view to_string(Resolved r);
std::optional<Resolved> parse_resolved(std::string_view text);

struct ItemInput {
  std::string source;
  std::string a;
  std::string b;
};

struct EvalItem {
  std::string source;
  std::string a;
  std::string b;
  bool a_left = true;  // fixed at session creation
};

struct EvalSession {
  std::string id;
  std::string label_a;
  std::string label_b;
  std::uint64_t seed = 0;
  std::vector<EvalItem> items;
};

struct JudgmentRecord {
  std::string session_id;
  std::size_t index = 0;
  std::string annotator;
  Choice choice = Choice::tie;
  Resolved resolved = Resolved::tie;
  std::string timestamp;
};

// Blind payload: no system labels.
struct PresentedItem {
  std::size_t index = 0;
  std::string source;
  std::string left;
  std::string right;
};

struct Tally {
  double points_a = 0.0;
  double points_b = 0.0;
  std::size_t count = 0;
};

// Win = 1 point, tie = 0.5 points to each side.
Tally tally_of(const std::vector<Resolved>& judgments);
Resolved resolve(const EvalItem& item, Choice choice);

// Per-item left/right coin flips for a seed.
std::vector<bool> presentation_order(std::uint64_t seed, std::size_t items);

nlohmann::json to_json(const PresentedItem& item);
nlohmann::json to_json(const Tally& tally);

struct SessionState {
  EvalSession session;
  std::vector<JudgmentRecord> judgments;
  std::set<std::pair<std::size_t, std::string>> judged;  // (item, annotator)
};

struct ReplayResult {
  std::map<std::string, SessionState> sessions;
  std::vector<std::string> warnings;
  // Length of the valid prefix; anything after it was a torn final record.
  std::uintmax_t valid_bytes = 0;
};

// Rebuilds state from the record log. A damaged final record is dropped with
// a warning; damage anywhere earlier is an error.
ReplayResult replay(const std::filesystem::path& log_path);

// Pairwise evaluation state backed by an append-only JSON-lines log. Every
// mutation is written and fsynced before it becomes visible.
class EvalService {
 public:
  explicit EvalService(std::filesystem::path log_path);
  ~EvalService();
  EvalService(const EvalService&) = delete;
  EvalService& operator=(const EvalService&) = delete;

  std::string create_session(const std::string& label_a, const std::string& label_b,
                             const std::vector<ItemInput>& items, std::uint64_t seed,
                             std::optional<std::string> session_id = std::nullopt);
  // nullopt once the annotator has judged every item.
  std::optional<PresentedItem> next_item(const std::string& session_id,
                                         const std::string& annotator) const;
  JudgmentRecord submit_judgment(const std::string& session_id, std::size_t index,
                                 const std::string& annotator, Choice choice);
  Tally tally(const std::string& session_id) const;

  std::vector<std::string> session_ids() const;
  EvalSession session(const std::string& session_id) const;
  const std::vector<std::string>& replay_warnings() const { return warnings_; }

 private:
  void append(const nlohmann::json& record);
  const SessionState& state(const std::string& session_id) const;

  std::filesystem::path log_path_;
  int fd_ = -1;
  mutable std::shared_mutex mutex_;
  std::map<std::string, SessionState> sessions_;
  std::vector<std::string> warnings_;
};

}  // namespace sitemt::evalsvc
