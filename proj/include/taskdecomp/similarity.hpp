#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "taskdecomp/types.hpp"

namespace taskdecomp {

class HttpTransport;  // fmclient.hpp

// Text-embedding interface used for semantic scoring. Implementations must be
// deterministic (same text, same vector), must never return the zero vector
// for non-empty text, and must tolerate concurrent encode calls.
class Encoder {
 public:
  virtual ~Encoder() = default;
  virtual std::vector<double> encode(const std::string& text) const = 0;
  virtual std::string id() const = 0;
};

// Hashed bag-of-words encoder: lowercases, splits on non-alphanumeric runs and
// counts tokens into `dim` buckets. Token-disjoint texts embed orthogonally,
// which makes expected cosine values easy to reason about in tests.
class BagEncoder : public Encoder {
 public:
  explicit BagEncoder(std::size_t dim = 256);
  std::vector<double> encode(const std::string& text) const override;
  std::string id() const override;

 private:
  std::size_t dim_;
};

struct EmbeddingEndpointConfig {
  std::string endpoint;  // e.g. https://api.openai.com/v1/embeddings
  std::string model;
  std::string auth_env_var;
};

// Embedding-endpoint encoder with an on-disk cache keyed by (model, text), so
// repeated scoring runs are offline-stable. Cache writes are serialized.
class RemoteEncoder : public Encoder {
 public:
  RemoteEncoder(EmbeddingEndpointConfig config, std::filesystem::path cache_path,
                std::shared_ptr<HttpTransport> transport = nullptr);
  std::vector<double> encode(const std::string& text) const override;
  std::string id() const override;

 private:
  EmbeddingEndpointConfig config_;
  std::filesystem::path cache_path_;
  std::shared_ptr<HttpTransport> transport_;
  mutable std::mutex mutex_;
  mutable nlohmann::json cache_;
};

// Interval overlap score in [0, 1] over inclusive step ranges, computed as
// (min(end) - max(start)) / (max(end) - min(start)). Two identical single-step
// intervals score 1; a shared boundary step alone scores 0.
double iou(const SubTask& a, const SubTask& b);

// Cosine of the encoded descriptions, clamped to [-1, 1]. Throws on a
// zero-norm embedding.
double cosine_similarity(const std::string& z1, const std::string& z2, const Encoder& encoder);

// Contribution weight of an intersecting pair: the shorter combined window
// (min(end) - max(start) + 1) normalized by the longer trajectory's step
// count. May exceed 1 for near-full-span pairs; the final normalization
// absorbs that.
double interval_weight(const SubTask& a, const SubTask& b, int steps_a, int steps_b);

// Score ledger entry for one temporally intersecting sub-task pair.
struct PairScore {
  int gt_index = 0;
  int pred_index = 0;
  double iou = 0.0;
  double cs = 0.0;
  double weight = 0.0;
};

struct SimilarityReport {
  double tau_k = 0.0;     // temporal similarity in [0, 1]
  double tau_zeta = 0.0;  // semantic similarity in [-1, 1]
  std::vector<PairScore> pairs;
  std::string encoder_id;
};

// Compares every sub-task of `gt` against every sub-task of `pred`; pairs with
// positive interval overlap contribute weighted IOU and cosine terms. When no
// pair intersects both scores are 0 and the ledger is empty. Both inputs must
// validate; step counts and sub-task counts may differ freely.
SimilarityReport similarity(const SubTaskDecomposition& gt, const SubTaskDecomposition& pred,
                            const Encoder& encoder);

nlohmann::json similarity_report_to_json(const SimilarityReport& report);
SimilarityReport similarity_report_from_json(const nlohmann::json& j);

}  // namespace taskdecomp
