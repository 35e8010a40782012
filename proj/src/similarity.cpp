#include "taskdecomp/similarity.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <unordered_map>

#include "taskdecomp/fmclient.hpp"
#include "taskdecomp/util.hpp"

namespace taskdecomp {

using nlohmann::json;

BagEncoder::BagEncoder(std::size_t dim) : dim_(dim) {
  if (dim_ == 0) throw std::invalid_argument("BagEncoder: dimension must be positive");
}

std::vector<double> BagEncoder::encode(const std::string& text) const {
  std::vector<double> v(dim_, 0.0);
  auto bucket = [&](std::string_view token) {
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
    for (char c : token) {
      h ^= std::uint8_t(c);
      h *= 1099511628211ULL;
    }
    return h % dim_;
  };
  std::string lowered = to_lower(text);
  std::size_t i = 0;
  bool any_token = false;
  while (i < lowered.size()) {
    while (i < lowered.size() && !std::isalnum(static_cast<unsigned char>(lowered[i]))) ++i;
    std::size_t begin = i;
    while (i < lowered.size() && std::isalnum(static_cast<unsigned char>(lowered[i]))) ++i;
    if (i > begin) {
      v[bucket(std::string_view(lowered).substr(begin, i - begin))] += 1.0;
      any_token = true;
    }
  }
  // Token-free but non-blank text (e.g. punctuation only) hashes as one raw
  // token so the vector is never zero for non-empty input.
  if (!any_token) {
    std::string raw = trim(lowered);
    if (!raw.empty()) v[bucket(raw)] += 1.0;
  }
  return v;
}

std::string BagEncoder::id() const { return "bag-" + std::to_string(dim_); }

RemoteEncoder::RemoteEncoder(EmbeddingEndpointConfig config, std::filesystem::path cache_path,
                             std::shared_ptr<HttpTransport> transport)
    : config_(std::move(config)),
      cache_path_(std::move(cache_path)),
      transport_(transport ? std::move(transport) : make_httplib_transport()),
      cache_(json::object()) {
  if (std::filesystem::exists(cache_path_)) cache_ = json::parse(read_text_file(cache_path_));
}

std::vector<double> RemoteEncoder::encode(const std::string& text) const {
  const std::string key = config_.model + "|" + sha256_hex(text);
  {
    std::lock_guard<std::mutex> lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->get<std::vector<double>>();
  }

  std::vector<std::pair<std::string, std::string>> headers{{"Content-Type", "application/json"}};
  if (!config_.auth_env_var.empty()) {
    const char* key_value = std::getenv(config_.auth_env_var.c_str());
    if (!key_value || !*key_value)
      throw FmError(FmErrorKind::AuthMissing,
                    "embedding auth env var not set: " + config_.auth_env_var);
    headers.emplace_back("Authorization", std::string("Bearer ") + key_value);
  }
  json body{{"model", config_.model}, {"input", text}};
  HttpResponse response = transport_->post(config_.endpoint, headers, body.dump());
  if (response.status < 200 || response.status >= 300)
    throw FmError(FmErrorKind::Transport,
                  "embedding endpoint returned status " + std::to_string(response.status));
  json parsed = json::parse(response.body, nullptr, false);
  if (parsed.is_discarded() || !parsed.contains("data") || parsed["data"].empty())
    throw FmError(FmErrorKind::Transport, "embedding endpoint returned an unexpected payload");
  auto vec = parsed["data"][0]["embedding"].get<std::vector<double>>();

  std::lock_guard<std::mutex> lock(mutex_);
  cache_[key] = vec;
  write_text_file_atomic(cache_path_, cache_.dump());
  return vec;
}

std::string RemoteEncoder::id() const { return "remote-" + config_.model; }

double iou(const SubTask& a, const SubTask& b) {
  if (a.start > a.end || b.start > b.end) throw std::invalid_argument("iou: malformed interval");
  const double intersection = std::max(0, std::min(a.end, b.end) - std::max(a.start, b.start));
  const double union_len = std::max(a.end, b.end) - std::min(a.start, b.start);
  if (union_len == 0.0) {
    // Both are the same single step (identical points): full overlap.
    return 1.0;
  }
  return intersection / union_len;
}

double cosine_similarity(const std::string& z1, const std::string& z2, const Encoder& encoder) {
  const std::vector<double> v1 = encoder.encode(z1);
  const std::vector<double> v2 = encoder.encode(z2);
  if (v1.size() != v2.size())
    throw std::invalid_argument("cosine_similarity: encoder returned mismatched dimensions");
  double dot = 0.0, n1 = 0.0, n2 = 0.0;
  for (std::size_t i = 0; i < v1.size(); ++i) {
    dot += v1[i] * v2[i];
    n1 += v1[i] * v1[i];
    n2 += v2[i] * v2[i];
  }
  if (n1 == 0.0 || n2 == 0.0)
    throw std::domain_error("cosine_similarity: zero-norm embedding");
  return std::clamp(dot / (std::sqrt(n1) * std::sqrt(n2)), -1.0, 1.0);
}

double interval_weight(const SubTask& a, const SubTask& b, int steps_a, int steps_b) {
  const int longest = std::max(steps_a, steps_b);
  if (longest <= 0) throw std::invalid_argument("interval_weight: zero trajectory length");
  const double window = std::min(a.end, b.end) - std::max(a.start, b.start) + 1;
  return window / longest;
}

namespace {

// Per-call embedding memo: descriptions repeat across pairs, so each distinct
// text is encoded once and its norm precomputed.
class EmbeddingMemo {
 public:
  explicit EmbeddingMemo(const Encoder& encoder) : encoder_(encoder) {}

  double cosine(const std::string& a, const std::string& b) {
    const Entry& ea = entry(a);
    const Entry& eb = entry(b);
    if (ea.vec.size() != eb.vec.size())
      throw std::invalid_argument("similarity: encoder returned mismatched dimensions");
    double dot = 0.0;
    for (std::size_t i = 0; i < ea.vec.size(); ++i) dot += ea.vec[i] * eb.vec[i];
    if (ea.norm == 0.0 || eb.norm == 0.0)
      throw std::domain_error("similarity: zero-norm embedding");
    return std::clamp(dot / (ea.norm * eb.norm), -1.0, 1.0);
  }

 private:
  struct Entry {
    std::vector<double> vec;
    double norm = 0.0;
  };

  const Entry& entry(const std::string& text) {
    auto it = memo_.find(text);
    if (it != memo_.end()) return it->second;
    Entry e;
    e.vec = encoder_.encode(text);
    double sq = 0.0;
    for (double x : e.vec) sq += x * x;
    e.norm = std::sqrt(sq);
    return memo_.emplace(text, std::move(e)).first->second;
  }

  const Encoder& encoder_;
  std::unordered_map<std::string, Entry> memo_;
};

}  // namespace

SimilarityReport similarity(const SubTaskDecomposition& gt, const SubTaskDecomposition& pred,
                            const Encoder& encoder) {
  if (auto check = validate_decomposition(gt); !check.ok())
    throw std::invalid_argument("similarity: first decomposition is invalid");
  if (auto check = validate_decomposition(pred); !check.ok())
    throw std::invalid_argument("similarity: second decomposition is invalid");

  // A decomposition that only covers step 0 has K = 0; the weight denominator
  // is floored at one step so self-comparison still scores.
  const int steps_gt = std::max(derive_extent(gt).steps, 1);
  const int steps_pred = std::max(derive_extent(pred).steps, 1);

  SimilarityReport report;
  report.encoder_id = encoder.id();
  EmbeddingMemo memo(encoder);

  double iou_acc = 0.0, cs_acc = 0.0, weight_acc = 0.0;
  for (std::size_t n = 0; n < gt.subtasks.size(); ++n) {
    for (std::size_t m = 0; m < pred.subtasks.size(); ++m) {
      const SubTask& s = gt.subtasks[n];
      const SubTask& p = pred.subtasks[m];
      const double overlap = iou(s, p);
      if (overlap <= 0.0) continue;
      PairScore pair;
      pair.gt_index = static_cast<int>(n);
      pair.pred_index = static_cast<int>(m);
      pair.iou = overlap;
      pair.cs = memo.cosine(s.description, p.description);
      pair.weight = interval_weight(s, p, steps_gt, steps_pred);
      iou_acc += pair.iou * pair.weight;
      cs_acc += pair.cs * pair.weight;
      weight_acc += pair.weight;
      report.pairs.push_back(pair);
    }
  }

  if (weight_acc > 0.0) {
    report.tau_k = std::clamp(iou_acc / weight_acc, 0.0, 1.0);
    report.tau_zeta = std::clamp(cs_acc / weight_acc, -1.0, 1.0);
  }
  return report;
}

json similarity_report_to_json(const SimilarityReport& report) {
  json pairs = json::array();
  for (const PairScore& p : report.pairs) {
    pairs.push_back(json{{"gt_index", p.gt_index},
                         {"pred_index", p.pred_index},
                         {"iou", p.iou},
                         {"cs", p.cs},
                         {"weight", p.weight}});
  }
  return json{{"tau_k", report.tau_k},
              {"tau_zeta", report.tau_zeta},
              {"encoder_id", report.encoder_id},
              {"pairs", pairs}};
}

SimilarityReport similarity_report_from_json(const json& j) {
  SimilarityReport report;
  report.tau_k = j.at("tau_k").get<double>();
  report.tau_zeta = j.at("tau_zeta").get<double>();
  report.encoder_id = j.at("encoder_id").get<std::string>();
  for (const json& item : j.at("pairs")) {
    PairScore p;
    p.gt_index = item.at("gt_index").get<int>();
    p.pred_index = item.at("pred_index").get<int>();
    p.iou = item.at("iou").get<double>();
    p.cs = item.at("cs").get<double>();
    p.weight = item.at("weight").get<double>();
    report.pairs.push_back(p);
  }
  return report;
}

}  // namespace taskdecomp
