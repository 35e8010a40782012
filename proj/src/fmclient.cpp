#include "taskdecomp/fmclient.hpp"

#include <httplib.h>

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <thread>

#include "taskdecomp/util.hpp"

namespace taskdecomp {

using nlohmann::json;

std::string to_string(FmErrorKind kind) {
  switch (kind) {
    case FmErrorKind::ModalityUnsupported: return "ModalityUnsupported";
    case FmErrorKind::TokenLimitExceeded: return "TokenLimitExceeded";
    case FmErrorKind::Transport: return "Transport";
    case FmErrorKind::AuthMissing: return "AuthMissing";
    case FmErrorKind::CacheMiss: return "CacheMiss";
    case FmErrorKind::Config: return "Config";
  }
  return "Unknown";
}

std::string to_string(StubScript::Noise noise) {
  switch (noise) {
    case StubScript::Noise::None: return "none";
    case StubScript::Noise::SwapOrder: return "swap_order";
    case StubScript::Noise::ShiftBoundaries: return "shift_boundaries";
    case StubScript::Noise::Malformed: return "malformed";
  }
  return "none";
}

StubScript::Noise stub_noise_from_string(const std::string& name) {
  if (name == "none") return StubScript::Noise::None;
  if (name == "swap_order") return StubScript::Noise::SwapOrder;
  if (name == "shift_boundaries") return StubScript::Noise::ShiftBoundaries;
  if (name == "malformed") return StubScript::Noise::Malformed;
  throw std::invalid_argument("unknown stub noise mode: " + name);
}

bool StubScript::applies(std::int64_t seed) const {
  if (noise == Noise::None) return false;
  if (noise_period <= 0) return true;
  std::int64_t r = seed % noise_period;
  if (r < 0) r += noise_period;
  return r == noise_offset;
}

std::string to_string(CassetteMode mode) {
  switch (mode) {
    case CassetteMode::Record: return "record";
    case CassetteMode::Replay: return "replay";
    case CassetteMode::Passthrough: return "passthrough";
  }
  return "passthrough";
}

CassetteMode cassette_mode_from_string(const std::string& name) {
  if (name == "record") return CassetteMode::Record;
  if (name == "replay") return CassetteMode::Replay;
  if (name == "passthrough") return CassetteMode::Passthrough;
  throw std::invalid_argument("unknown cassette mode: " + name);
}

namespace {

class HttplibTransport : public HttpTransport {
 public:
  HttpResponse post(const std::string& url,
                    const std::vector<std::pair<std::string, std::string>>& headers,
                    const std::string& body) override {
    const std::size_t scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw TransportError("malformed URL: " + url);
    const std::size_t path_begin = url.find('/', scheme_end + 3);
    const std::string base = path_begin == std::string::npos ? url : url.substr(0, path_begin);
    const std::string path = path_begin == std::string::npos ? "/" : url.substr(path_begin);

    httplib::Client client(base);
    client.set_connection_timeout(15, 0);
    client.set_read_timeout(300, 0);
    httplib::Headers hl_headers;
    std::string content_type = "application/json";
    for (const auto& [name, value] : headers) {
      if (name == "Content-Type")
        content_type = value;
      else
        hl_headers.emplace(name, value);
    }
    auto result = client.Post(path, hl_headers, body, content_type);
    if (!result) throw TransportError("connection failed: " + httplib::to_string(result.error()));
    return {result->status, result->body};
  }
};

class FailingTransport : public HttpTransport {
 public:
  explicit FailingTransport(std::string message) : message_(std::move(message)) {}
  HttpResponse post(const std::string&, const std::vector<std::pair<std::string, std::string>>&,
                    const std::string&) override {
    throw TransportError(message_);
  }

 private:
  std::string message_;
};

void replace_placeholder(std::string& s, std::string_view placeholder, std::string_view value) {
  std::size_t pos = 0;
  while ((pos = s.find(placeholder, pos)) != std::string::npos) {
    s.replace(pos, placeholder.size(), value);
    pos += value.size();
  }
}

json instantiate(const json& tpl, const std::string& placeholder, const std::string& value) {
  json out = tpl;
  std::function<void(json&)> walk = [&](json& node) {
    if (node.is_string()) {
      std::string s = node.get<std::string>();
      replace_placeholder(s, placeholder, value);
      node = s;
    } else if (node.is_object() || node.is_array()) {
      for (json& child : node) walk(child);
    }
  };
  walk(out);
  return out;
}

}  // namespace

class InFlightGate {
 public:
  explicit InFlightGate(int limit) : available_(std::max(limit, 1)) {}

  void acquire() {
    std::unique_lock<std::mutex> lock(mutex_);
    cv_.wait(lock, [&] { return available_ > 0; });
    --available_;
  }

  void release() {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      ++available_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  int available_;
};

namespace {

struct GateGuard {
  InFlightGate& gate;
  explicit GateGuard(InFlightGate& g) : gate(g) { gate.acquire(); }
  ~GateGuard() { gate.release(); }
};

}  // namespace

std::shared_ptr<HttpTransport> make_httplib_transport() {
  return std::make_shared<HttplibTransport>();
}

std::shared_ptr<HttpTransport> make_failing_transport(std::string message) {
  return std::make_shared<FailingTransport>(std::move(message));
}

json default_request_template() {
  return json{
      {"body", {{"model", "{{model}}"}, {"messages", "{{messages}}"}, {"temperature", 0}}},
      {"message",
       {{"role_key", "role"},
        {"content_key", "content"},
        {"system_role", "system"},
        {"user_role", "user"}}},
      {"text_part", {{"type", "text"}, {"text", "{{text}}"}}},
      {"image_part",
       {{"type", "image_url"}, {"image_url", {{"url", "data:image/png;base64,{{base64}}"}}}}},
      {"response_text_pointer", "/choices/0/message/content"},
      {"prompt_tokens_pointer", "/usage/prompt_tokens"},
      {"completion_tokens_pointer", "/usage/completion_tokens"},
  };
}

ProviderConfig provider_config_from_json(const json& j) {
  ProviderConfig config;
  config.name = j.at("name").get<std::string>();
  config.endpoint = j.value("endpoint", "");
  config.model = j.value("model", "");
  config.auth_env_var = j.value("auth_env_var", "");
  config.supports_images = j.value("supports_images", false);
  config.max_prompt_tokens = j.value("max_prompt_tokens", 128000L);
  config.request_template =
      j.contains("request_template") ? j["request_template"] : default_request_template();
  if (j.contains("retry")) {
    config.retry.max_attempts = j["retry"].value("max_attempts", 3);
    config.retry.base_backoff_s = j["retry"].value("base_backoff_s", 0.5);
  }
  config.max_in_flight = j.value("max_in_flight", 4);
  if (j.contains("stub")) {
    StubScript stub;
    const json& s = j["stub"];
    if (s.contains("canned"))
      stub.canned = s["canned"].get<std::map<std::string, std::string>>();
    stub.noise = stub_noise_from_string(s.value("noise", "none"));
    stub.noise_period = s.value("noise_period", 0);
    stub.noise_offset = s.value("noise_offset", 0);
    config.stub = std::move(stub);
  }
  return config;
}

json provider_config_to_json(const ProviderConfig& config) {
  json j{{"name", config.name},
         {"endpoint", config.endpoint},
         {"model", config.model},
         {"auth_env_var", config.auth_env_var},
         {"supports_images", config.supports_images},
         {"max_prompt_tokens", config.max_prompt_tokens},
         {"request_template", config.request_template},
         {"retry",
          {{"max_attempts", config.retry.max_attempts},
           {"base_backoff_s", config.retry.base_backoff_s}}},
         {"max_in_flight", config.max_in_flight}};
  if (config.stub) {
    j["stub"] = json{{"canned", config.stub->canned},
                     {"noise", to_string(config.stub->noise)},
                     {"noise_period", config.stub->noise_period},
                     {"noise_offset", config.stub->noise_offset}};
  }
  return j;
}

ProviderConfig stub_provider(std::map<std::string, std::string> canned_by_env,
                             StubScript::Noise noise, int noise_period, int noise_offset) {
  ProviderConfig config;
  config.name = "stub";
  config.model = "stub-1";
  config.endpoint = "stub://local";
  config.supports_images = true;
  config.max_prompt_tokens = 1000000000L;
  config.request_template = default_request_template();
  StubScript script;
  script.canned = std::move(canned_by_env);
  script.noise = noise;
  script.noise_period = noise_period;
  script.noise_offset = noise_offset;
  config.stub = std::move(script);
  return config;
}

json fm_response_to_json(const FmResponse& r) {
  return json{{"raw_text", r.raw_text},
              {"prompt_tokens", r.prompt_tokens},
              {"completion_tokens", r.completion_tokens},
              {"latency_s", r.latency_s},
              {"cost_estimate", r.cost_estimate}};
}

FmResponse fm_response_from_json(const json& j) {
  FmResponse r;
  r.raw_text = j.at("raw_text").get<std::string>();
  r.prompt_tokens = j.value("prompt_tokens", 0L);
  r.completion_tokens = j.value("completion_tokens", 0L);
  r.latency_s = j.value("latency_s", 0.0);
  r.cost_estimate = j.value("cost_estimate", 0.0);
  return r;
}

PriceTable PriceTable::load(const std::filesystem::path& path) {
  return from_json(json::parse(read_text_file(path)));
}

PriceTable PriceTable::from_json(const json& j) {
  PriceTable table;
  for (auto it = j.begin(); it != j.end(); ++it) {
    Price price;
    price.prompt_per_1k = it.value().value("prompt_per_1k", 0.0);
    price.completion_per_1k = it.value().value("completion_per_1k", 0.0);
    table.prices_[it.key()] = price;
  }
  return table;
}

double PriceTable::cost(const std::string& model, long prompt_tokens,
                        long completion_tokens) const {
  auto it = prices_.find(model);
  if (it == prices_.end()) return 0.0;
  return prompt_tokens / 1000.0 * it->second.prompt_per_1k +
         completion_tokens / 1000.0 * it->second.completion_per_1k;
}

FmClient::FmClient(std::shared_ptr<HttpTransport> transport, PriceTable prices)
    : transport_(std::move(transport)), prices_(std::move(prices)) {
  sleeper_ = [](double seconds) {
    std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
  };
}

json FmClient::render_request(const Prompt& prompt, const ProviderConfig& provider) const {
  const json& tpl = provider.request_template;
  const json& message_shape = tpl.at("message");
  const std::string role_key = message_shape.value("role_key", "role");
  const std::string content_key = message_shape.value("content_key", "content");

  json messages = json::array();
  std::size_t first_user_segment = 0;
  if (!prompt.segments.empty() && std::holds_alternative<TextSegment>(prompt.segments[0])) {
    json system;
    system[role_key] = message_shape.value("system_role", "system");
    system[content_key] = std::get<TextSegment>(prompt.segments[0]).content;
    messages.push_back(std::move(system));
    first_user_segment = 1;
  }

  json parts = json::array();
  for (std::size_t i = first_user_segment; i < prompt.segments.size(); ++i) {
    if (const auto* text = std::get_if<TextSegment>(&prompt.segments[i]))
      parts.push_back(instantiate(tpl.at("text_part"), "{{text}}", text->content));
    else
      parts.push_back(instantiate(tpl.at("image_part"), "{{base64}}",
                                  std::get<ImageSegment>(prompt.segments[i]).base64_png));
  }
  json user;
  user[role_key] = message_shape.value("user_role", "user");
  user[content_key] = std::move(parts);
  messages.push_back(std::move(user));

  json body = instantiate(tpl.at("body"), "{{model}}", provider.model);
  std::function<void(json&)> splice = [&](json& node) {
    if (node.is_string() && node.get<std::string>() == "{{messages}}") {
      node = messages;
    } else if (node.is_object() || node.is_array()) {
      for (json& child : node) splice(child);
    }
  };
  splice(body);
  return body;
}

FmResponse FmClient::complete_stub(const Prompt& prompt, const ProviderConfig& provider) {
  const StubScript& script = *provider.stub;
  auto it = script.canned.find(prompt.env_name);
  if (it == script.canned.end())
    throw FmError(FmErrorKind::Config,
                  "stub script has no canned response for environment " + prompt.env_name);

  std::string payload = it->second;
  bool malformed = false;
  if (script.applies(prompt.seed)) {
    switch (script.noise) {
      case StubScript::Noise::SwapOrder: {
        json array = json::parse(payload);
        if (array.is_array() && array.size() >= 2) std::swap(array[0], array[1]);
        payload = array.dump(2);
        break;
      }
      case StubScript::Noise::ShiftBoundaries: {
        // Object-form payloads only; shift is a deterministic function of the seed.
        const int shift = 1 + static_cast<int>(((prompt.seed % 3) + 3) % 3);
        json array = json::parse(payload);
        for (std::size_t i = 0; i < array.size(); ++i) {
          if (i > 0) array[i]["start"] = array[i]["start"].get<int>() + shift;
          array[i]["end"] = array[i]["end"].get<int>() + shift;
        }
        payload = array.dump(2);
        break;
      }
      case StubScript::Noise::Malformed:
        malformed = true;
        break;
      case StubScript::Noise::None:
        break;
    }
  }

  FmResponse response;
  if (malformed) {
    response.raw_text = "The sub-task decomposition is:\n```json\n{\"start\": 0, \"end\":";
  } else {
    response.raw_text = "Sub-task decomposition:\n```json\n" + payload + "\n```\n";
  }
  response.prompt_tokens = prompt.estimated_tokens;
  response.completion_tokens = estimate_text_tokens(response.raw_text);
  response.latency_s = 0.0;
  response.cost_estimate =
      prices_.cost(provider.model, response.prompt_tokens, response.completion_tokens);
  return response;
}

FmResponse FmClient::complete(const Prompt& prompt, const ProviderConfig& provider) {
  bool has_images = false;
  for (const PromptSegment& segment : prompt.segments)
    if (std::holds_alternative<ImageSegment>(segment)) has_images = true;

  if (has_images && !provider.supports_images)
    throw FmError(FmErrorKind::ModalityUnsupported,
                  "provider " + provider.name + " does not accept image inputs");
  if (prompt.estimated_tokens > provider.max_prompt_tokens)
    throw FmError(FmErrorKind::TokenLimitExceeded,
                  "estimated " + std::to_string(prompt.estimated_tokens) + " tokens exceeds " +
                      provider.name + " limit of " + std::to_string(provider.max_prompt_tokens));

  if (provider.stub) return complete_stub(prompt, provider);

  std::vector<std::pair<std::string, std::string>> headers{{"Content-Type", "application/json"}};
  if (!provider.auth_env_var.empty()) {
    const char* key = std::getenv(provider.auth_env_var.c_str());
    if (!key || !*key)
      throw FmError(FmErrorKind::AuthMissing, "auth env var not set: " + provider.auth_env_var);
    headers.emplace_back("Authorization", std::string("Bearer ") + key);
  }

  const json body = render_request(prompt, provider);
  const std::string body_text = body.dump();

  std::shared_ptr<InFlightGate> gate;
  {
    std::lock_guard<std::mutex> lock(gates_mutex_);
    auto& slot = gates_[provider.name];
    if (!slot) slot = std::make_shared<InFlightGate>(provider.max_in_flight);
    gate = slot;
  }
  GateGuard guard(*gate);

  std::string last_error;
  const int max_attempts = std::max(provider.retry.max_attempts, 1);
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    const auto began = std::chrono::steady_clock::now();
    HttpResponse http;
    try {
      http = transport_->post(provider.endpoint, headers, body_text);
    } catch (const TransportError& error) {
      last_error = error.what();
      if (attempt < max_attempts)
        sleeper_(provider.retry.base_backoff_s * std::pow(2.0, attempt - 1));
      continue;
    }
    if (http.status == 429 || http.status >= 500) {
      last_error = "status " + std::to_string(http.status);
      if (attempt < max_attempts)
        sleeper_(provider.retry.base_backoff_s * std::pow(2.0, attempt - 1));
      continue;
    }
    if (http.status < 200 || http.status >= 300)
      throw FmError(FmErrorKind::Transport, "provider " + provider.name + " returned status " +
                                                std::to_string(http.status) + ": " + http.body);

    const double latency =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - began).count();
    json parsed = json::parse(http.body, nullptr, false);
    if (parsed.is_discarded())
      throw FmError(FmErrorKind::Transport,
                    "provider " + provider.name + " returned a non-JSON body");

    FmResponse response;
    response.latency_s = latency;
    const json& tpl = provider.request_template;
    const json::json_pointer text_ptr(tpl.value("response_text_pointer", "/choices/0/message/content"));
    if (parsed.contains(text_ptr) && parsed[text_ptr].is_string())
      response.raw_text = parsed[text_ptr].get<std::string>();
    response.prompt_tokens = prompt.estimated_tokens;
    response.completion_tokens = estimate_text_tokens(response.raw_text);
    if (tpl.contains("prompt_tokens_pointer")) {
      const json::json_pointer p(tpl["prompt_tokens_pointer"].get<std::string>());
      if (parsed.contains(p) && parsed[p].is_number()) response.prompt_tokens = parsed[p].get<long>();
    }
    if (tpl.contains("completion_tokens_pointer")) {
      const json::json_pointer p(tpl["completion_tokens_pointer"].get<std::string>());
      if (parsed.contains(p) && parsed[p].is_number())
        response.completion_tokens = parsed[p].get<long>();
    }
    response.cost_estimate =
        prices_.cost(provider.model, response.prompt_tokens, response.completion_tokens);
    return response;
  }
  throw FmError(FmErrorKind::Transport, "provider " + provider.name + " failed after " +
                                            std::to_string(max_attempts) +
                                            " attempts; last error: " + last_error);
}

CassetteClient::CassetteClient(std::shared_ptr<FmClient> inner, CassetteMode mode,
                               std::filesystem::path cassette_path)
    : inner_(std::move(inner)), mode_(mode), path_(std::move(cassette_path)), entries_(json::object()) {
  if (std::filesystem::exists(path_)) {
    entries_ = json::parse(read_text_file(path_));
  } else if (mode_ == CassetteMode::Replay) {
    throw FmError(FmErrorKind::Config, "replay cassette not found: " + path_.string());
  }
}

std::string CassetteClient::prompt_key(const Prompt& prompt) {
  return sha256_hex(prompt_to_json(prompt).dump());
}

FmResponse CassetteClient::complete(const Prompt& prompt, const ProviderConfig& provider) {
  if (mode_ == CassetteMode::Passthrough) return inner_->complete(prompt, provider);

  const std::string key = prompt_key(prompt);
  if (mode_ == CassetteMode::Replay) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = entries_.find(key);
    if (it == entries_.end())
      throw FmError(FmErrorKind::CacheMiss, "cassette has no entry for prompt " + key);
    return fm_response_from_json(*it);
  }

  FmResponse response = inner_->complete(prompt, provider);
  {
    std::lock_guard<std::mutex> lock(mutex_);
    entries_[key] = fm_response_to_json(response);
    write_text_file_atomic(path_, entries_.dump(2));
  }
  return response;
}

}  // namespace taskdecomp
