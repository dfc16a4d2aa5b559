#include "psim/backends.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <openssl/evp.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <semaphore>
#include <thread>

#include "psim/error.hpp"
#include "psim/logging.hpp"
#include "text_util.hpp"

namespace psim {

namespace {

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kInternal, "SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

Json messages_json(std::span<const ChatMessage> messages) {
  Json arr = Json::array();
  for (const auto& m : messages) arr.push_back({{"role", to_token(m.role)}, {"content", m.content}});
  return arr;
}

std::string utc_now_iso() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Splits "https://host:port/prefix" into ("https://host:port", "/prefix").
std::pair<std::string, std::string> split_endpoint(std::string_view endpoint) {
  std::string ep(detail::trim(endpoint));
  while (!ep.empty() && ep.back() == '/') ep.pop_back();
  auto scheme = ep.find("://");
  auto path_start = ep.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (path_start == std::string::npos) return {ep, ""};
  return {ep.substr(0, path_start), ep.substr(path_start)};
}

}  // namespace

std::string_view to_token(Role r) {
  switch (r) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return "";
}

void ChatParams::validate() const {
  if (temperature < 0.0) throw Error(ErrorCode::kConfig, "temperature must be >= 0");
  if (max_tokens <= 0) throw Error(ErrorCode::kConfig, "max_tokens must be positive");
}

std::string cache_key(std::span<const ChatMessage> messages, const ChatParams& params) {
  Json canonical{{"model", params.model},
                 {"messages", messages_json(messages)},
                 {"temperature", params.temperature},
                 {"max_tokens", params.max_tokens},
                 {"stop", params.stop}};
  if (params.seed) canonical["seed"] = *params.seed;
  return sha256_hex(canonical.dump());
}

// ---------------------------------------------------------------------------
// Scripted
// ---------------------------------------------------------------------------

ScriptedBackend::ScriptedBackend(std::vector<std::string> responses, Mode mode, std::string name)
    : responses_(std::move(responses)), mode_(mode), name_(std::move(name)) {}

ScriptedBackend::ScriptedBackend(Responder responder, std::string name)
    : responder_(std::move(responder)), name_(std::move(name)) {}

std::string ScriptedBackend::chat(std::span<const ChatMessage> messages, const ChatParams& params) {
  if (messages.empty()) throw Error(ErrorCode::kInvalidArgument, "chat called with no messages");
  calls_.fetch_add(1);
  if (record_) {
    std::lock_guard lock(mu_);
    requests_.emplace_back(messages.begin(), messages.end());
  }
  if (responder_) return responder_(messages, params);
  if (responses_.empty()) {
    throw Error(ErrorCode::kScriptExhausted, name_ + ": no scripted responses configured");
  }
  switch (mode_) {
    case Mode::Hash: {
      auto key = cache_key(messages, params);
      std::uint64_t h = std::stoull(key.substr(0, 15), nullptr, 16);
      return responses_[h % responses_.size()];
    }
    case Mode::Cycle: {
      std::lock_guard lock(mu_);
      return responses_[next_++ % responses_.size()];
    }
    case Mode::Queue: {
      std::lock_guard lock(mu_);
      if (next_ >= responses_.size()) {
        throw Error(ErrorCode::kScriptExhausted,
                    name_ + ": scripted queue exhausted after " + std::to_string(next_) + " replies");
      }
      return responses_[next_++];
    }
  }
  return {};
}

std::vector<std::vector<ChatMessage>> ScriptedBackend::requests() const {
  std::lock_guard lock(mu_);
  return requests_;
}

std::optional<ScriptedBackend::Mode> scripted_mode_from_token(std::string_view token) {
  if (token == "queue") return ScriptedBackend::Mode::Queue;
  if (token == "cycle") return ScriptedBackend::Mode::Cycle;
  if (token == "hash") return ScriptedBackend::Mode::Hash;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// HTTP
// ---------------------------------------------------------------------------

struct HttpBackend::Impl {
  HttpOptions options;
  std::string host;
  std::string path;
  std::counting_semaphore<1024> in_flight;

  explicit Impl(HttpOptions o)
      : options(std::move(o)), in_flight(std::clamp(options.max_in_flight, 1, 1024)) {
    auto [h, prefix] = split_endpoint(options.endpoint);
    host = std::move(h);
    path = prefix + "/v1/chat/completions";
  }
};

HttpBackend::HttpBackend(HttpOptions options) {
  if (detail::trim(options.endpoint).empty()) {
    throw Error(ErrorCode::kConfig, "http backend requires an endpoint");
  }
  if (options.max_attempts < 1) throw Error(ErrorCode::kConfig, "max_attempts must be >= 1");
  impl_ = std::make_unique<Impl>(std::move(options));
}

HttpBackend::~HttpBackend() = default;

std::string HttpBackend::describe() const { return "http:" + impl_->options.endpoint; }

std::string HttpBackend::chat(std::span<const ChatMessage> messages, const ChatParams& params) {
  if (messages.empty()) throw Error(ErrorCode::kInvalidArgument, "chat called with no messages");
  const auto& opt = impl_->options;

  std::string api_key;
  if (!opt.api_key_env.empty()) {
    const char* value = std::getenv(opt.api_key_env.c_str());
    if (value == nullptr || *value == '\0') {
      throw Error(ErrorCode::kAuthMissing,
                  "environment variable " + opt.api_key_env + " is not set");
    }
    api_key = value;
  }

  Json body{{"model", params.model},
            {"messages", messages_json(messages)},
            {"temperature", params.temperature},
            {"max_tokens", params.max_tokens}};
  if (!params.stop.empty()) body["stop"] = params.stop;
  if (params.seed) body["seed"] = *params.seed;
  const std::string payload = body.dump();

  httplib::Headers headers;
  if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);

  impl_->in_flight.acquire();
  struct Release {
    std::counting_semaphore<1024>& s;
    ~Release() { s.release(); }
  } release{impl_->in_flight};

  auto timeout = std::chrono::duration<double>(opt.timeout_seconds);
  auto usec = std::chrono::duration_cast<std::chrono::microseconds>(timeout).count();
  int delay_ms = opt.initial_backoff_ms;
  std::string last_error;
  bool last_was_rate_limit = false;

  for (int attempt = 1; attempt <= opt.max_attempts; ++attempt) {
    attempts_.fetch_add(1);
    httplib::Client client(impl_->host);
    client.set_connection_timeout(usec / 1000000, usec % 1000000);
    client.set_read_timeout(usec / 1000000, usec % 1000000);
    client.set_write_timeout(usec / 1000000, usec % 1000000);

    auto res = client.Post(impl_->path, headers, payload, "application/json");
    bool retryable = false;
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      last_was_rate_limit = false;
      retryable = true;
    } else if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      last_was_rate_limit = res->status == 429;
      retryable = true;
    } else if (res->status == 401 || res->status == 403) {
      throw Error(ErrorCode::kAuthMissing,
                  "HTTP " + std::to_string(res->status) + " from " + opt.endpoint);
    } else if (res->status != 200) {
      throw Error(ErrorCode::kTransport,
                  "HTTP " + std::to_string(res->status) + " from " + opt.endpoint + ": " + res->body);
    } else {
      Json parsed = Json::parse(res->body, nullptr, false);
      if (parsed.is_discarded()) {
        throw Error(ErrorCode::kMalformedResponse, "response body is not JSON");
      }
      try {
        const auto& content = parsed.at("choices").at(0).at("message").at("content");
        if (content.is_null()) return std::string{};
        if (attempt > 1) {
          logger()->info("{} succeeded after {} attempts", describe(), attempt);
        }
        return content.get<std::string>();
      } catch (const Json::exception& e) {
        throw Error(ErrorCode::kMalformedResponse,
                    std::string("missing choices[0].message.content: ") + e.what());
      }
    }

    if (retryable && attempt < opt.max_attempts) {
      logger()->warn("{} attempt {}/{} failed ({}); retrying in {} ms", describe(), attempt,
                     opt.max_attempts, last_error, delay_ms);
      std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
      delay_ms = std::min(delay_ms * 2, opt.max_backoff_ms);
    }
  }
  throw Error(last_was_rate_limit ? ErrorCode::kRateLimited : ErrorCode::kTransport,
              describe() + " gave up after " + std::to_string(opt.max_attempts) +
                  " attempts: " + last_error);
}

// ---------------------------------------------------------------------------
// Replay
// ---------------------------------------------------------------------------

ReplayStore::ReplayStore(std::filesystem::path path) : path_(std::move(path)) {
  std::ifstream in(path_);
  if (!in) return;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("key") || !j.contains("response")) {
      logger()->warn("{}:{}: skipping unreadable replay entry", path_.string(), lineno);
      continue;
    }
    entries_.emplace(j["key"].get<std::string>(), j["response"].get<std::string>());
  }
}

std::optional<std::string> ReplayStore::find(const std::string& key) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ReplayStore::append(const std::string& key, const std::string& model,
                         const std::string& response) {
  Json line{{"key", key}, {"model", model}, {"response", response}, {"created_at", utc_now_iso()}};
  std::lock_guard lock(mu_);
  if (entries_.count(key)) return;
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  std::ofstream out(path_, std::ios::app);
  if (!out) throw Error(ErrorCode::kIo, "cannot append to replay cache " + path_.string());
  out << line.dump() << '\n';
  out.flush();
  entries_.emplace(key, response);
}

std::size_t ReplayStore::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

ReplayBackend::ReplayBackend(std::shared_ptr<ChatBackend> inner, std::shared_ptr<ReplayStore> store,
                             bool strict)
    : inner_(std::move(inner)), store_(std::move(store)), strict_(strict) {
  if (!store_) throw Error(ErrorCode::kConfig, "replay backend requires a store");
  if (!inner_ && !strict_) throw Error(ErrorCode::kConfig, "non-strict replay requires an inner backend");
}

std::string ReplayBackend::chat(std::span<const ChatMessage> messages, const ChatParams& params) {
  auto key = cache_key(messages, params);
  if (auto hit = store_->find(key)) {
    hits_.fetch_add(1);
    return *hit;
  }
  misses_.fetch_add(1);
  if (strict_ || !inner_) {
    throw Error(ErrorCode::kReplayMiss, "replay cache " + store_->path().string() +
                                            " has no entry for key " + key);
  }
  auto response = inner_->chat(messages, params);
  store_->append(key, params.model, response);
  return response;
}

std::string ReplayBackend::describe() const {
  return "replay(" + store_->path().string() + (inner_ ? ", " + inner_->describe() : "") + ")";
}

// ---------------------------------------------------------------------------
// Specs
// ---------------------------------------------------------------------------

void BackendSpec::validate() const {
  switch (kind) {
    case BackendKind::Http:
      if (detail::trim(http.endpoint).empty()) {
        throw Error(ErrorCode::kConfig, "http backend requires an endpoint");
      }
      break;
    case BackendKind::Replay:
      if (cache_path.empty()) throw Error(ErrorCode::kConfig, "replay backend requires a cache path");
      if (inner) inner->validate();
      else if (!strict) throw Error(ErrorCode::kConfig, "non-strict replay backend requires an inner backend");
      break;
    case BackendKind::Scripted:
      break;
  }
}

void to_json(Json& j, const BackendSpec& v) {
  switch (v.kind) {
    case BackendKind::Http:
      j = Json{{"kind", "http"},
               {"endpoint", v.http.endpoint},
               {"api_key_env", v.http.api_key_env},
               {"timeout_s", v.http.timeout_seconds},
               {"max_attempts", v.http.max_attempts},
               {"initial_backoff_ms", v.http.initial_backoff_ms},
               {"max_backoff_ms", v.http.max_backoff_ms},
               {"max_in_flight", v.http.max_in_flight}};
      break;
    case BackendKind::Scripted: {
      const char* mode = v.mode == ScriptedBackend::Mode::Queue   ? "queue"
                         : v.mode == ScriptedBackend::Mode::Cycle ? "cycle"
                                                                  : "hash";
      j = Json{{"kind", "scripted"}, {"mode", mode}, {"responses", v.responses}};
      break;
    }
    case BackendKind::Replay:
      j = Json{{"kind", "replay"}, {"cache", v.cache_path.string()}, {"strict", v.strict}};
      j["inner"] = v.inner ? Json(*v.inner) : Json(nullptr);
      break;
  }
}

void from_json(const Json& j, BackendSpec& v) {
  auto kind = j.at("kind").get<std::string>();
  v = BackendSpec{};
  if (kind == "http") {
    v.kind = BackendKind::Http;
    v.http.endpoint = j.value("endpoint", std::string{});
    v.http.api_key_env = j.value("api_key_env", v.http.api_key_env);
    v.http.timeout_seconds = j.value("timeout_s", v.http.timeout_seconds);
    v.http.max_attempts = j.value("max_attempts", v.http.max_attempts);
    v.http.initial_backoff_ms = j.value("initial_backoff_ms", v.http.initial_backoff_ms);
    v.http.max_backoff_ms = j.value("max_backoff_ms", v.http.max_backoff_ms);
    v.http.max_in_flight = j.value("max_in_flight", v.http.max_in_flight);
  } else if (kind == "scripted") {
    v.kind = BackendKind::Scripted;
    v.responses = j.value("responses", std::vector<std::string>{});
    auto mode = j.value("mode", std::string("hash"));
    auto parsed = scripted_mode_from_token(mode);
    if (!parsed) throw Error(ErrorCode::kConfig, "unknown scripted mode '" + mode + "'");
    v.mode = *parsed;
  } else if (kind == "replay") {
    v.kind = BackendKind::Replay;
    v.cache_path = j.at("cache").get<std::string>();
    v.strict = j.value("strict", false);
    if (auto it = j.find("inner"); it != j.end() && !it->is_null()) {
      v.inner = std::make_shared<BackendSpec>(it->get<BackendSpec>());
    }
  } else {
    throw Error(ErrorCode::kConfig, "unknown backend kind '" + kind + "'");
  }
  v.validate();
}

std::shared_ptr<ChatBackend> BackendFactory::make(const BackendSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case BackendKind::Http:
      return std::make_shared<HttpBackend>(spec.http);
    case BackendKind::Scripted:
      return std::make_shared<ScriptedBackend>(spec.responses, spec.mode);
    case BackendKind::Replay: {
      std::shared_ptr<ReplayStore> store;
      {
        std::lock_guard lock(mu_);
        auto key = std::filesystem::weakly_canonical(spec.cache_path);
        auto& slot = stores_[key];
        if (!slot) slot = std::make_shared<ReplayStore>(spec.cache_path);
        store = slot;
      }
      std::shared_ptr<ChatBackend> inner = spec.inner ? make(*spec.inner) : nullptr;
      return std::make_shared<ReplayBackend>(std::move(inner), std::move(store), spec.strict);
    }
  }
  throw Error(ErrorCode::kInternal, "unhandled backend kind");
}

}  // namespace psim
