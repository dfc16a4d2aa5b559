#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "psim/domain.hpp"

namespace psim {

enum class Role { System, User, Assistant };

std::string_view to_token(Role r);

struct ChatMessage {
  Role role = Role::User;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

struct ChatParams {
  std::string model;
  double temperature = 0.7;
  int max_tokens = 256;
  std::vector<std::string> stop;
  // Forwarded to the server and folded into the cache key, so repeated
  // conversations with the same opening do not collapse onto one cache entry.
  std::optional<std::uint64_t> seed;

  void validate() const;
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;

  // Returns the assistant text. Throws psim::Error on failure.
  virtual std::string chat(std::span<const ChatMessage> messages, const ChatParams& params) = 0;

  virtual std::string describe() const = 0;
};

/// Content hash (SHA-256 hex) of model, messages, temperature, max_tokens,
/// stop and seed. Stable across runs and platforms.
std::string cache_key(std::span<const ChatMessage> messages, const ChatParams& params);

// ---------------------------------------------------------------------------

/// Deterministic backend for tests and offline runs.
///
/// Queue pops responses in order and fails once they run out; Cycle wraps
/// around; Hash picks responses[key mod n] from the request's cache key, which
/// makes the reply a pure function of the request and safe under concurrency.
class ScriptedBackend : public ChatBackend {
 public:
  enum class Mode { Queue, Cycle, Hash };
  using Responder = std::function<std::string(std::span<const ChatMessage>, const ChatParams&)>;

  explicit ScriptedBackend(std::vector<std::string> responses, Mode mode = Mode::Queue,
                           std::string name = "scripted");
  explicit ScriptedBackend(Responder responder, std::string name = "scripted");

  std::string chat(std::span<const ChatMessage> messages, const ChatParams& params) override;
  std::string describe() const override { return name_; }

  std::size_t calls() const { return calls_.load(); }

  // Opt-in request log, off by default to keep large batches lean.
  void record_requests(bool on) { record_ = on; }
  std::vector<std::vector<ChatMessage>> requests() const;

 private:
  std::vector<std::string> responses_;
  Responder responder_;
  Mode mode_ = Mode::Queue;
  std::string name_;
  std::size_t next_ = 0;
  std::atomic<std::size_t> calls_{0};
  bool record_ = false;
  mutable std::mutex mu_;
  std::vector<std::vector<ChatMessage>> requests_;
};

std::optional<ScriptedBackend::Mode> scripted_mode_from_token(std::string_view token);

// ---------------------------------------------------------------------------

struct HttpOptions {
  std::string endpoint;                    // e.g. "http://127.0.0.1:8000"
  std::string api_key_env = "OPENAI_API_KEY";  // empty disables auth
  double timeout_seconds = 60.0;
  int max_attempts = 5;
  int initial_backoff_ms = 500;
  int max_backoff_ms = 8000;
  int max_in_flight = 4;
};

/// OpenAI-compatible chat-completions client. POSTs to
/// `<endpoint>/v1/chat/completions` and reads `choices[0].message.content`.
/// 429, 5xx and transport failures are retried with exponential backoff.
class HttpBackend : public ChatBackend {
 public:
  explicit HttpBackend(HttpOptions options);
  ~HttpBackend() override;

  std::string chat(std::span<const ChatMessage> messages, const ChatParams& params) override;
  std::string describe() const override;

  // Total HTTP attempts issued, including retries.
  std::size_t attempts() const { return attempts_.load(); }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::atomic<std::size_t> attempts_{0};
};

// ---------------------------------------------------------------------------

/// Append-only JSONL store of `{key, model, response, created_at}` lines.
/// Safe for concurrent use within a process; existing lines are never
/// rewritten.
class ReplayStore {
 public:
  explicit ReplayStore(std::filesystem::path path);

  std::optional<std::string> find(const std::string& key) const;
  void append(const std::string& key, const std::string& model, const std::string& response);
  std::size_t size() const;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, std::string> entries_;
};

class ReplayBackend : public ChatBackend {
 public:
  // inner may be null only in strict mode.
  ReplayBackend(std::shared_ptr<ChatBackend> inner, std::shared_ptr<ReplayStore> store,
                bool strict);

  std::string chat(std::span<const ChatMessage> messages, const ChatParams& params) override;
  std::string describe() const override;

  std::size_t hits() const { return hits_.load(); }
  std::size_t misses() const { return misses_.load(); }

 private:
  std::shared_ptr<ChatBackend> inner_;
  std::shared_ptr<ReplayStore> store_;
  bool strict_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
};

// ---------------------------------------------------------------------------

enum class BackendKind { Http, Scripted, Replay };

struct BackendSpec {
  BackendKind kind = BackendKind::Scripted;
  HttpOptions http;
  std::vector<std::string> responses;                 // scripted
  ScriptedBackend::Mode mode = ScriptedBackend::Mode::Hash;
  std::filesystem::path cache_path;                   // replay
  bool strict = false;                                // replay
  std::shared_ptr<const BackendSpec> inner;           // replay

  void validate() const;
};

void to_json(Json& j, const BackendSpec& v);
void from_json(const Json& j, BackendSpec& v);

/// Builds backends from specs. Replay wrappers that name the same cache file
/// share one store so their writes are serialized.
class BackendFactory {
 public:
  std::shared_ptr<ChatBackend> make(const BackendSpec& spec);

 private:
  std::mutex mu_;
  std::map<std::filesystem::path, std::shared_ptr<ReplayStore>> stores_;
};

}  // namespace psim
