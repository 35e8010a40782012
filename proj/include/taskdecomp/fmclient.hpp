#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "taskdecomp/prompt.hpp"

namespace taskdecomp {

struct HttpResponse {
  int status = 0;
  std::string body;
};

// Connection-level failure (no HTTP response at all).
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post(const std::string& url,
                            const std::vector<std::pair<std::string, std::string>>& headers,
                            const std::string& body) = 0;
};

// Real transport backed by cpp-httplib.
std::shared_ptr<HttpTransport> make_httplib_transport();
// Transport that throws on any use; lets tests and replay-only setups assert
// that no live traffic happens.
std::shared_ptr<HttpTransport> make_failing_transport(std::string message = "network disabled");

enum class FmErrorKind {
  ModalityUnsupported,
  TokenLimitExceeded,
  Transport,
  AuthMissing,
  CacheMiss,
  Config,
};

std::string to_string(FmErrorKind kind);

class FmError : public std::runtime_error {
 public:
  FmError(FmErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  FmErrorKind kind() const { return kind_; }

 private:
  FmErrorKind kind_;
};

struct RetryPolicy {
  int max_attempts = 3;
  double base_backoff_s = 0.5;  // doubled per attempt
};

// Deterministic offline provider: canned response text per environment, with
// optional noise transforms for pipeline testing. Noise is scheduled on the
// trajectory seed so it is reproducible and independent of call order.
struct StubScript {
  enum class Noise { None, SwapOrder, ShiftBoundaries, Malformed };

  std::map<std::string, std::string> canned;  // env name -> decomposition JSON array text
  Noise noise = Noise::None;
  int noise_period = 0;  // 0: noise (if any) applies to every call
  int noise_offset = 0;  // applies when seed % period == offset

  bool applies(std::int64_t seed) const;
};

std::string to_string(StubScript::Noise noise);
StubScript::Noise stub_noise_from_string(const std::string& name);

struct ProviderConfig {
  std::string name;
  std::string endpoint;
  std::string model;
  std::string auth_env_var;  // empty: no auth header
  bool supports_images = false;
  long max_prompt_tokens = 128000;
  nlohmann::json request_template;  // declarative body/message mapping; see default_request_template()
  RetryPolicy retry;
  int max_in_flight = 4;
  std::optional<StubScript> stub;  // set: provider is served locally, no transport
};

// OpenAI-style chat-completions mapping. Placeholders: {{model}} and
// {{messages}} in "body", {{text}} in "text_part", {{base64}} in "image_part".
// "response_text_pointer" / usage pointers are JSON pointers into the reply.
nlohmann::json default_request_template();

ProviderConfig provider_config_from_json(const nlohmann::json& j);
nlohmann::json provider_config_to_json(const ProviderConfig& config);

// Canned-script provider factory.
ProviderConfig stub_provider(std::map<std::string, std::string> canned_by_env,
                             StubScript::Noise noise = StubScript::Noise::None,
                             int noise_period = 0, int noise_offset = 0);

struct FmResponse {
  std::string raw_text;  // may be empty; that is a parse concern, not transport
  long prompt_tokens = 0;
  long completion_tokens = 0;
  double latency_s = 0.0;
  double cost_estimate = 0.0;
};

nlohmann::json fm_response_to_json(const FmResponse& r);
FmResponse fm_response_from_json(const nlohmann::json& j);

// Per-1k-token prices by model name; kept in a config file since prices drift.
class PriceTable {
 public:
  PriceTable() = default;
  static PriceTable load(const std::filesystem::path& path);
  static PriceTable from_json(const nlohmann::json& j);
  double cost(const std::string& model, long prompt_tokens, long completion_tokens) const;

 private:
  struct Price {
    double prompt_per_1k = 0.0;
    double completion_per_1k = 0.0;
  };
  std::map<std::string, Price> prices_;
};

// Chat-completion client over a pluggable transport. Thread-safe; concurrent
// completions against one provider are bounded by max_in_flight.
class FmClient {
 public:
  explicit FmClient(std::shared_ptr<HttpTransport> transport = make_httplib_transport(),
                    PriceTable prices = {});

  // Pre-flight checks (modality, token budget, auth) never consume retry
  // budget; transient transport and 429/5xx failures retry with exponential
  // backoff up to retry.max_attempts.
  FmResponse complete(const Prompt& prompt, const ProviderConfig& provider);

  // Renders the provider request body for a prompt; exposed for inspection.
  nlohmann::json render_request(const Prompt& prompt, const ProviderConfig& provider) const;

  void set_sleeper(std::function<void(double)> sleeper) { sleeper_ = std::move(sleeper); }

 private:
  FmResponse complete_stub(const Prompt& prompt, const ProviderConfig& provider);

  std::shared_ptr<HttpTransport> transport_;
  PriceTable prices_;
  std::function<void(double)> sleeper_;
  std::mutex gates_mutex_;
  std::map<std::string, std::shared_ptr<class InFlightGate>> gates_;
};

enum class CassetteMode { Record, Replay, Passthrough };

std::string to_string(CassetteMode mode);
CassetteMode cassette_mode_from_string(const std::string& name);

// Record/replay wrapper. The cassette is a JSON map from the SHA-256 of the
// serialized prompt to the stored response. Replay serves only stored entries
// and raises CacheMiss otherwise; no network is touched.
class CassetteClient {
 public:
  CassetteClient(std::shared_ptr<FmClient> inner, CassetteMode mode,
                 std::filesystem::path cassette_path);

  FmResponse complete(const Prompt& prompt, const ProviderConfig& provider);

  static std::string prompt_key(const Prompt& prompt);

 private:
  std::shared_ptr<FmClient> inner_;
  CassetteMode mode_;
  std::filesystem::path path_;
  std::mutex mutex_;
  nlohmann::json entries_;
};

}  // namespace taskdecomp
