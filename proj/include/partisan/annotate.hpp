#pragma once

#include <cstddef>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "partisan/corpus.hpp"
#include "partisan/errors.hpp"

namespace partisan {

struct AnnotationRecord {
  std::string instance_id;
  FeatureKind feature = FeatureKind::stance;
  std::vector<std::string> labels;
  std::string annotator;
  std::optional<std::vector<double>> confidence;

  friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

// Throws ValidationError unless: ids and annotator are non-empty, every label
// belongs to the feature (moral foundation labels may be poles or collapsed
// "virtue/vice" pairs), labels are distinct, stance has exactly one label, and
// confidences (if any) are in [0,1] and parallel to the labels.
void validate_record(const AnnotationRecord& r);

AnnotationRecord record_from_json(const nlohmann::json& j);
nlohmann::ordered_json record_to_json(const AnnotationRecord& r);

class AnnotationConflict : public ValidationError {
 public:
  AnnotationConflict(std::vector<std::string> instance_ids, const std::string& what)
      : ValidationError(what), ids_(std::move(instance_ids)) {}
  const std::vector<std::string>& instance_ids() const noexcept { return ids_; }

 private:
  std::vector<std::string> ids_;
};

// Records keyed by (instance_id, feature, annotator). Identical re-adds are
// no-ops; a re-add with different labels is a conflict.
class AnnotationStore {
 public:
  using Key = std::tuple<std::string, FeatureKind, std::string>;

  // Returns false when an identical record was already present.
  bool add(AnnotationRecord r);

  const AnnotationRecord* find(const std::string& instance_id, FeatureKind f,
                               const std::string& annotator) const;
  bool contains(const std::string& instance_id, FeatureKind f,
                const std::string& annotator) const {
    return find(instance_id, f, annotator) != nullptr;
  }

  // The single record for (id, feature), optionally restricted to one
  // annotator. Returns nullptr if none; throws ValidationError if several
  // annotators match and none was named.
  const AnnotationRecord* lookup(const std::string& instance_id, FeatureKind f,
                                 const std::optional<std::string>& annotator = {}) const;

  // Records in key order.
  std::vector<AnnotationRecord> records() const;
  std::size_t size() const noexcept { return records_.size(); }

 private:
  static bool same_labels(const AnnotationRecord& a, const AnnotationRecord& b);

  std::map<Key, AnnotationRecord> records_;
  std::map<std::pair<std::string, FeatureKind>, std::vector<std::string>> annotators_;
};

// Throws ParseError (with line number) on malformed or invalid rows and
// AnnotationConflict on conflicting duplicates.
AnnotationStore parse_annotations(std::istream& in, const std::string& path = {});
AnnotationStore load_annotations(const std::string& path);
// Missing files yield an empty store (used for resume).
AnnotationStore load_annotations_if_exists(const std::string& path);

// Union of the stores. Identical duplicates collapse; differing duplicates
// are collected and reported together in one AnnotationConflict.
AnnotationStore merge_annotations(const std::vector<AnnotationStore>& stores);

void write_annotations(const AnnotationStore& store, std::ostream& out);

// Append-only JSONL sink. Each record is written and flushed under a lock.
class AnnotationWriter {
 public:
  AnnotationWriter(const std::string& path, bool append);
  void write(const AnnotationRecord& r);

 private:
  std::mutex mu_;
  std::ofstream out_;
  std::string path_;
};

// ---- stance -----------------------------------------------------------------

inline constexpr std::string_view kStanceInstruction =
    "Given the following statement and the target, infer the stance of the statement towards "
    "the target. Answer with only one word: neutral, positive, or negative.";

struct StanceRequest {
  std::string statement;
  std::string target;
};

// The instruction sentence, then "Statement: ..." and "Target: ..." lines.
std::string render_stance_prompt(const StanceRequest& req);

class UnparseableStance : public Error {
 public:
  explicit UnparseableStance(std::string raw)
      : Error("unparseable stance response: '" + raw + "'"), raw_(std::move(raw)) {}
  const std::string& raw() const noexcept { return raw_; }

 private:
  std::string raw_;
};

// Accepts a bare stance word with trailing punctuation, or any reply in which
// exactly one distinct stance word occurs as a token.
std::string parse_stance_response(std::string_view raw);

// ---- chat endpoint ----------------------------------------------------------

struct EndpointConfig {
  std::string url = "http://127.0.0.1:8000/v1/chat/completions";
  std::string model = "gpt-3.5-turbo";
  std::string token;
  double timeout_s = 60.0;

  // Overrides from ANNOTATOR_ENDPOINT, ANNOTATOR_MODEL, ANNOTATOR_TOKEN.
  static EndpointConfig from_env(EndpointConfig base);
  static EndpointConfig from_env() { return from_env(EndpointConfig()); }
};

nlohmann::ordered_json build_chat_request(const std::string& model, const std::string& prompt);

struct ChatReply {
  enum class Status { ok, transient, rate_limited, fatal };
  Status status = Status::ok;
  std::string content;
  int http_status = 0;
  double retry_after_s = 0.0;
  std::string error;
};

class ChatClient {
 public:
  virtual ~ChatClient() = default;
  // Must be safe to call from several threads at once.
  virtual ChatReply complete(const std::string& prompt) = 0;
};

// Chat-completions over HTTP(S). Connection errors and 5xx are transient,
// 429 is rate_limited (Retry-After honored), other 4xx are fatal.
class HttpChatClient : public ChatClient {
 public:
  explicit HttpChatClient(EndpointConfig cfg);
  ChatReply complete(const std::string& prompt) override;

 private:
  EndpointConfig cfg_;
  std::string origin_;
  std::string path_;
};

// ---- resumable annotation run ----------------------------------------------

struct RetryPolicy {
  int max_retries = 3;
  double backoff_base_s = 1.0;
  double backoff_factor = 2.0;
  double jitter = 0.25;  // multiplicative, uniform in [1, 1 + jitter)
  double max_retry_after_s = 120.0;
};

struct StanceAnnotationOptions {
  std::string annotator = "gpt-3.5-turbo";
  RetryPolicy retry;
  int max_inflight = 4;
  std::function<void(double)> sleep;  // seconds; defaults to std::this_thread::sleep_for
};

struct SkipRecord {
  std::string instance_id;
  std::string reason;
  int attempts = 0;
  std::string last_response;
};

nlohmann::ordered_json skip_to_json(const SkipRecord& s);

struct StanceRunResult {
  std::vector<AnnotationRecord> records;  // newly created, in corpus order
  std::vector<SkipRecord> skips;          // in corpus order
  std::size_t already_annotated = 0;
  std::size_t requests = 0;
};

// Annotates every instance not already in `store` under the options'
// annotator tag. New records go into `store` and, if given, `sink` as they
// complete. Throws ValidationError before sending anything if an instance's
// topic has no stance target.
StanceRunResult annotate_stances(const Corpus& corpus,
                                 const std::map<std::string, std::string>& target_by_topic,
                                 ChatClient& client, const StanceAnnotationOptions& opts,
                                 AnnotationStore& store, AnnotationWriter* sink = nullptr);

}  // namespace partisan
