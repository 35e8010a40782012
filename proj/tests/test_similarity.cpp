#include <doctest.h>

#include <cmath>

#include "taskdecomp/fmclient.hpp"
#include "taskdecomp/similarity.hpp"
#include "taskdecomp/util.hpp"
#include "test_support.hpp"

using namespace taskdecomp;
using tdtest::make_decomposition;

TEST_CASE("iou follows the end-minus-start interval convention") {
  CHECK(iou({40, 48, ""}, {40, 54, ""}) == doctest::Approx(8.0 / 14.0).epsilon(1e-12));
  CHECK(iou({0, 10, "a"}, {0, 10, "b"}) == 1.0);
  CHECK(iou({0, 10, ""}, {10, 20, ""}) == 0.0);  // shared boundary step only
  CHECK(iou({0, 10, ""}, {5, 20, ""}) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(iou({5, 5, ""}, {5, 5, ""}) == 1.0);  // identical single-step intervals
  CHECK(iou({5, 5, ""}, {7, 7, ""}) == 0.0);
  CHECK_THROWS_AS(iou({6, 2, ""}, {0, 1, ""}), std::invalid_argument);
}

TEST_CASE("interval_weight normalizes the combined window by the longer trajectory") {
  CHECK(interval_weight({40, 48, ""}, {40, 54, ""}, 62, 62) ==
        doctest::Approx(9.0 / 62.0).epsilon(1e-12));
  CHECK(interval_weight({5, 5, ""}, {5, 5, ""}, 10, 10) == doctest::Approx(0.1).epsilon(1e-12));
  // Inclusive windows may exceed the step count; normalization absorbs it.
  CHECK(interval_weight({0, 62, ""}, {0, 62, ""}, 62, 62) ==
        doctest::Approx(63.0 / 62.0).epsilon(1e-12));
  CHECK_THROWS_AS(interval_weight({0, 1, ""}, {0, 1, ""}, 0, 0), std::invalid_argument);
}

TEST_CASE("bag encoder is case-folding, order-free and never zero for non-empty text") {
  const BagEncoder encoder;
  CHECK(encoder.encode("Grasp Cube") == encoder.encode("grasp cube"));
  CHECK(encoder.encode("a b") == encoder.encode("b a"));

  const double partial = cosine_similarity("Move to Cube A", "Move to Cube B", encoder);
  CHECK(partial > 0.0);
  CHECK(partial < 1.0);

  double norm = 0.0;
  for (double x : encoder.encode("!!!")) norm += x * x;
  CHECK(norm > 0.0);
}

TEST_CASE("cosine_similarity handles identity, orthogonality and zero-norm errors") {
  const BagEncoder encoder;
  CHECK(cosine_similarity("lift the cube", "lift the cube", encoder) ==
        doctest::Approx(1.0).epsilon(1e-9));
  CHECK(cosine_similarity("alpha beta", "gamma delta", encoder) == 0.0);

  struct ZeroEncoder : Encoder {
    std::vector<double> encode(const std::string&) const override { return {0.0, 0.0}; }
    std::string id() const override { return "zero"; }
  } zero;
  CHECK_THROWS_AS(cosine_similarity("a", "b", zero), std::domain_error);
}

TEST_CASE("similarity reproduces the hand-computed split fixture") {
  // S covers [0,20] in two halves, the prediction in one span. Both pairs
  // carry IOU 0.5 and weight 11/20; the descriptions agree on the first pair
  // only, so both scores land at exactly one half.
  const auto gt = make_decomposition({{0, 10, "a"}, {10, 20, "b"}});
  const auto pred = make_decomposition({{0, 20, "a"}});
  const BagEncoder encoder;
  const SimilarityReport report = similarity(gt, pred, encoder);

  CHECK(report.tau_k == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(report.tau_zeta == doctest::Approx(0.5).epsilon(1e-9));
  REQUIRE(report.pairs.size() == 2);
  CHECK(report.pairs[0].weight == doctest::Approx(0.55).epsilon(1e-12));
  CHECK(report.pairs[1].weight == doctest::Approx(0.55).epsilon(1e-12));
  CHECK(report.pairs[0].cs == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(report.pairs[1].cs == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("similarity of a decomposition with itself is (1, 1)") {
  const BagEncoder encoder;
  CounterRng rng(11);
  for (int trial = 0; trial < 25; ++trial) {
    const auto d = tdtest::random_partition(rng, tdtest::description_pool());
    const SimilarityReport report = similarity(d, d, encoder);
    CHECK(report.tau_k == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(report.tau_zeta == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("temporally disjoint decompositions score (0, 0) with an empty ledger") {
  const BagEncoder encoder;
  const auto gt = make_decomposition({{0, 5, "a"}});
  const auto pred = make_decomposition({{10, 20, "a"}});
  const SimilarityReport report = similarity(gt, pred, encoder);
  CHECK(report.tau_k == 0.0);
  CHECK(report.tau_zeta == 0.0);
  CHECK(report.pairs.empty());
}

TEST_CASE("similarity rejects invalid inputs and tolerates size mismatches") {
  const BagEncoder encoder;
  CHECK_THROWS_AS(similarity(make_decomposition({{5, 2, "a"}}),
                             make_decomposition({{0, 1, "b"}}), encoder),
                  std::invalid_argument);

  // N and K mismatches are fine.
  const auto small = make_decomposition({{0, 3, "a"}});
  const auto big = make_decomposition({{0, 40, "a"}, {41, 90, "b"}, {91, 200, "c"}});
  CHECK_NOTHROW(similarity(small, big, encoder));
}

TEST_CASE("similarity is symmetric and in range on randomized pairs") {
  const BagEncoder encoder;
  CounterRng rng(12345);
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = tdtest::random_wild(rng, tdtest::description_pool());
    const auto b = tdtest::random_wild(rng, tdtest::description_pool());
    const SimilarityReport ab = similarity(a, b, encoder);
    const SimilarityReport ba = similarity(b, a, encoder);
    CHECK(std::abs(ab.tau_k - ba.tau_k) < 1e-12);
    CHECK(std::abs(ab.tau_zeta - ba.tau_zeta) < 1e-12);
    CHECK(ab.tau_k >= 0.0);
    CHECK(ab.tau_k <= 1.0);
    CHECK(ab.tau_zeta >= -1.0);
    CHECK(ab.tau_zeta <= 1.0);
  }
}

TEST_CASE("similarity matches the independent naive oracle on random pairs") {
  const BagEncoder encoder;
  CounterRng rng(777);
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = tdtest::random_wild(rng, tdtest::description_pool());
    const auto b = tdtest::random_wild(rng, tdtest::description_pool());
    const SimilarityReport report = similarity(a, b, encoder);
    const auto [tau_k, tau_zeta] = tdtest::naive_similarity(a, b, encoder);
    CHECK(report.tau_k == doctest::Approx(tau_k).epsilon(1e-12));
    CHECK(report.tau_zeta == doctest::Approx(tau_zeta).epsilon(1e-12));
  }
}

TEST_CASE("pair ledger records only intersecting pairs with positive weights") {
  const BagEncoder encoder;
  const auto gt = tdtest::stack_reference_ground_truth();
  const auto pred = tdtest::stack_reference_prediction();
  const SimilarityReport report = similarity(gt, pred, encoder);
  CHECK(report.pairs.size() == 8);  // one per aligned phase, two against the merged span
  for (const PairScore& pair : report.pairs) {
    CHECK(pair.iou > 0.0);
    CHECK(pair.iou <= 1.0);
    CHECK(pair.weight > 0.0);
  }
  CHECK(report.encoder_id == encoder.id());
}

TEST_CASE("similarity reports round-trip through JSON") {
  const BagEncoder encoder;
  const SimilarityReport report = similarity(tdtest::stack_reference_ground_truth(),
                                             tdtest::stack_reference_prediction(), encoder);
  const SimilarityReport back = similarity_report_from_json(similarity_report_to_json(report));
  CHECK(back.tau_k == report.tau_k);
  CHECK(back.tau_zeta == report.tau_zeta);
  CHECK(back.encoder_id == report.encoder_id);
  CHECK(back.pairs.size() == report.pairs.size());
}

TEST_CASE("remote encoder serves from its cache without touching the network") {
  tdtest::TempDir dir("similarity_remote_encoder");
  const auto cache_path = dir.path() / "cache.json";

  struct CannedTransport : HttpTransport {
    int calls = 0;
    HttpResponse post(const std::string&, const std::vector<std::pair<std::string, std::string>>&,
                      const std::string& body) override {
      ++calls;
      // Vector derived from the input length so different texts differ.
      const auto parsed = nlohmann::json::parse(body);
      const double len = double(parsed.at("input").get<std::string>().size());
      nlohmann::json payload;
      payload["data"][0]["embedding"] = {len, 1.0, 2.0};
      return {200, payload.dump()};
    }
  };
  auto canned = std::make_shared<CannedTransport>();

  EmbeddingEndpointConfig config{"http://embeddings.test/v1/embeddings", "embed-1", ""};
  std::vector<double> first;
  {
    RemoteEncoder encoder(config, cache_path, canned);
    first = encoder.encode("lift the cube");
    CHECK(canned->calls == 1);
    CHECK(encoder.encode("lift the cube") == first);  // in-memory cache hit
    CHECK(canned->calls == 1);
    CHECK(encoder.encode("another text").size() == first.size());
    CHECK(canned->calls == 2);
  }

  // A fresh encoder over the same cache file must not need the network at all.
  RemoteEncoder offline(config, cache_path, make_failing_transport());
  CHECK(offline.encode("lift the cube") == first);
  CHECK_THROWS_AS(offline.encode("never seen before"), TransportError);
}
