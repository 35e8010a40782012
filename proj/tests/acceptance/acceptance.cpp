// Acceptance suite: runs every gate offline against the stub provider and the
// bag encoder, printing one PASS/FAIL line per criterion. Exits nonzero when
// any criterion fails.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "taskdecomp/fmclient.hpp"
#include "taskdecomp/json_io.hpp"
#include "taskdecomp/parser.hpp"
#include "taskdecomp/runner.hpp"
#include "taskdecomp/simgen.hpp"
#include "taskdecomp/similarity.hpp"
#include "taskdecomp/util.hpp"
#include "test_support.hpp"

using namespace taskdecomp;

namespace {

int g_failures = 0;

void report(int index, const std::string& name, bool pass, const std::string& detail = "") {
  std::printf("%s criterion %d: %s%s%s\n", pass ? "PASS" : "FAIL", index, name.c_str(),
              detail.empty() ? "" : " | ", detail.c_str());
  if (!pass) ++g_failures;
}

std::filesystem::path scratch_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "taskdecomp_acceptance";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// --- criterion 1 -----------------------------------------------------------

void criterion_worked_example() {
  const double overlap = iou({40, 48, ""}, {40, 54, ""});
  const double weight = interval_weight({40, 48, ""}, {40, 54, ""}, 62, 62);
  const bool pass = std::abs(overlap - 0.5714) <= 0.0005 && std::abs(weight - 0.1452) <= 0.0005;
  char detail[128];
  std::snprintf(detail, sizeof(detail), "iou=%.6f weight=%.6f", overlap, weight);
  report(1, "worked-example exactness (iou 8/14, weight 9/62)", pass, detail);
}

// --- criterion 2 -----------------------------------------------------------

void criterion_identity() {
  const BagEncoder encoder;
  CounterRng rng(0xACC2);
  bool pass = true;
  for (int trial = 0; trial < 100 && pass; ++trial) {
    const auto d = tdtest::random_partition(rng, tdtest::description_pool());
    const SimilarityReport r = similarity(d, d, encoder);
    pass = std::abs(r.tau_k - 1.0) <= 1e-9 && std::abs(r.tau_zeta - 1.0) <= 1e-9;
  }
  report(2, "identity: similarity(S, S) = (1, 1) on 100 randomized decompositions", pass);
}

// --- criteria 3 and 4 ------------------------------------------------------

void criterion_symmetry_and_ranges() {
  const BagEncoder encoder;
  CounterRng rng(0xACC34);
  bool symmetric = true;
  bool in_range = true;
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto a = tdtest::random_wild(rng, tdtest::description_pool());
    const auto b = tdtest::random_wild(rng, tdtest::description_pool());
    const SimilarityReport ab = similarity(a, b, encoder);
    const SimilarityReport ba = similarity(b, a, encoder);
    worst = std::max({worst, std::abs(ab.tau_k - ba.tau_k), std::abs(ab.tau_zeta - ba.tau_zeta)});
    if (std::abs(ab.tau_k - ba.tau_k) >= 1e-12 || std::abs(ab.tau_zeta - ba.tau_zeta) >= 1e-12)
      symmetric = false;
    if (ab.tau_k < 0.0 || ab.tau_k > 1.0 || ab.tau_zeta < -1.0 || ab.tau_zeta > 1.0)
      in_range = false;
  }
  char detail[96];
  std::snprintf(detail, sizeof(detail), "max componentwise asymmetry %.3e", worst);
  report(3, "symmetry over 1000 randomized pairs", symmetric, detail);
  report(4, "score ranges over the same 1000 pairs (incl. N and K mismatches)", in_range);
}

// --- criterion 5 -----------------------------------------------------------

// Exhaustive small-instance sweep: every decomposition with up to 3 arbitrary
// sub-task intervals over steps [0, 3], plus every contiguous partition of
// [0, 5] and [0, 12] into up to 3 parts, over a 2-token description alphabet.
std::vector<SubTaskDecomposition> sweep_decompositions() {
  const std::vector<std::string> words = {"grasp", "move"};
  std::vector<SubTaskDecomposition> out;

  std::vector<SubTask> intervals;
  for (int s = 0; s <= 3; ++s)
    for (int e = s; e <= 3; ++e) intervals.push_back({s, e, ""});

  for (std::size_t w0 = 0; w0 < words.size(); ++w0) {
    for (const SubTask& i0 : intervals) {
      SubTaskDecomposition one;
      one.subtasks = {{i0.start, i0.end, words[w0]}};
      out.push_back(one);
    }
  }
  for (const SubTask& i0 : intervals) {
    for (const SubTask& i1 : intervals) {
      if (i1.start < i0.start) continue;
      for (std::size_t w0 = 0; w0 < words.size(); ++w0)
        for (std::size_t w1 = 0; w1 < words.size(); ++w1) {
          SubTaskDecomposition two;
          two.subtasks = {{i0.start, i0.end, words[w0]}, {i1.start, i1.end, words[w1]}};
          out.push_back(two);
        }
    }
  }
  for (const SubTask& i0 : intervals) {
    for (const SubTask& i1 : intervals) {
      if (i1.start < i0.start) continue;
      for (const SubTask& i2 : intervals) {
        if (i2.start < i1.start) continue;
        for (std::size_t w0 = 0; w0 < words.size(); ++w0)
          for (std::size_t w1 = 0; w1 < words.size(); ++w1)
            for (std::size_t w2 = 0; w2 < words.size(); ++w2) {
              SubTaskDecomposition three;
              three.subtasks = {{i0.start, i0.end, words[w0]},
                                {i1.start, i1.end, words[w1]},
                                {i2.start, i2.end, words[w2]}};
              out.push_back(three);
            }
      }
    }
  }

  for (const int K : {5, 12}) {
    for (std::size_t w0 = 0; w0 < words.size(); ++w0) {
      SubTaskDecomposition one;
      one.subtasks = {{0, K, words[w0]}};
      out.push_back(one);
    }
    for (int split = 0; split < K; ++split)
      for (std::size_t w0 = 0; w0 < words.size(); ++w0)
        for (std::size_t w1 = 0; w1 < words.size(); ++w1) {
          SubTaskDecomposition two;
          two.subtasks = {{0, split, words[w0]}, {split + 1, K, words[w1]}};
          out.push_back(two);
        }
    for (int a = 0; a + 1 < K; ++a)
      for (int b = a + 1; b < K; ++b)
        for (std::size_t w0 = 0; w0 < words.size(); ++w0)
          for (std::size_t w1 = 0; w1 < words.size(); ++w1)
            for (std::size_t w2 = 0; w2 < words.size(); ++w2) {
              SubTaskDecomposition three;
              three.subtasks = {{0, a, words[w0]}, {a + 1, b, words[w1]}, {b + 1, K, words[w2]}};
              out.push_back(three);
            }
  }
  return out;
}

void criterion_oracle_equivalence() {
  const BagEncoder encoder;
  const std::vector<SubTaskDecomposition> sweep = sweep_decompositions();
  double worst = 0.0;
  std::size_t pairs = 0;
  for (const SubTaskDecomposition& a : sweep) {
    for (const SubTaskDecomposition& b : sweep) {
      const SimilarityReport r = similarity(a, b, encoder);
      const auto [tau_k, tau_zeta] = tdtest::naive_similarity(a, b, encoder);
      worst = std::max({worst, std::abs(r.tau_k - tau_k), std::abs(r.tau_zeta - tau_zeta)});
      ++pairs;
    }
    if (worst >= 1e-12) break;
  }
  char detail[128];
  std::snprintf(detail, sizeof(detail), "%zu decompositions, %zu pairs, max abs diff %.3e",
                sweep.size(), pairs, worst);
  report(5, "engine equals the naive re-implementation on the exhaustive sweep", worst < 1e-12,
         detail);
}

// --- criterion 6 -----------------------------------------------------------

void criterion_derived_fixture() {
  const BagEncoder encoder;
  const auto gt = tdtest::make_decomposition({{0, 10, "a"}, {10, 20, "b"}});
  const auto pred = tdtest::make_decomposition({{0, 20, "a"}});
  const SimilarityReport r = similarity(gt, pred, encoder);
  const bool pass = std::abs(r.tau_k - 0.5) <= 1e-9 && std::abs(r.tau_zeta - 0.5) <= 1e-9;
  char detail[96];
  std::snprintf(detail, sizeof(detail), "tau_k=%.12f tau_zeta=%.12f", r.tau_k, r.tau_zeta);
  report(6, "hand-computed split fixture scores (0.5, 0.5)", pass, detail);
}

// --- criterion 7 -----------------------------------------------------------

void criterion_generator_validity() {
  bool pass = true;
  std::string detail;
  for (const EnvSpec& env : builtin_envs()) {
    for (std::int64_t seed = 0; seed < 50 && pass; ++seed) {
      const auto [data, gt] = generate_trajectory(env, seed, false);
      if (!validate_decomposition(gt).ok()) {
        pass = false;
        detail = env.name + " seed " + std::to_string(seed) + " failed validation";
        break;
      }
      if (gt.subtasks.front().start != 0 ||
          gt.subtasks.back().end != int(data.steps.size()) - 1) {
        pass = false;
        detail = env.name + " seed " + std::to_string(seed) + " does not span [0, K]";
        break;
      }
      for (std::size_t n = 1; n < gt.subtasks.size(); ++n) {
        if (gt.subtasks[n].start != gt.subtasks[n - 1].end + 1) {
          pass = false;
          detail = env.name + " seed " + std::to_string(seed) + " has a gap or overlap";
          break;
        }
      }
      if (env.name == "Lift") {
        const std::vector<std::string> want = {"Move to cube", "Grasp Cube", "Lift Cube"};
        for (std::size_t n = 0; n < want.size(); ++n)
          if (gt.subtasks[n].description != want[n]) {
            pass = false;
            detail = "Lift descriptors do not match the script";
          }
      }
    }
    if (!pass) break;
  }
  report(7, "generated decompositions tile [0, K] for 4 environments x 50 seeds", pass, detail);
}

// --- criterion 8 -----------------------------------------------------------

void criterion_parser_rules() {
  const ParseOutcome start_after_end =
      extract_decomposition("[{\"start\": 9, \"end\": 4, \"description\": \"backwards\"}]");
  const ParseOutcome out_of_order = extract_decomposition(
      "[{\"start\": 10, \"end\": 20, \"description\": \"late\"},"
      " {\"start\": 0, \"end\": 5, \"description\": \"early\"}]");
  const ParseOutcome nothing = extract_decomposition("There is no decomposition to give.");

  bool pass = start_after_end.status == ParseOutcome::Status::Invalid &&
              !start_after_end.violations.empty() &&
              start_after_end.violations[0].kind == ViolationKind::StartAfterEnd &&
              out_of_order.status == ParseOutcome::Status::Invalid &&
              !out_of_order.violations.empty() &&
              out_of_order.violations[0].kind == ViolationKind::OutOfOrder &&
              nothing.status == ParseOutcome::Status::Unparseable;

  CounterRng rng(0xACC8);
  int fuzzed = 0;
  try {
    for (; fuzzed < 10000; ++fuzzed) {
      std::string bytes(std::size_t(rng.uniform_int(0, 256)), '\0');
      for (char& c : bytes) c = char(rng.next_u64() & 0xff);
      extract_decomposition(bytes);
    }
  } catch (...) {
    pass = false;
  }
  char detail[96];
  std::snprintf(detail, sizeof(detail), "3 invalidity fixtures classified, %d fuzz inputs survived",
                fuzzed);
  report(8, "response-validity rules and parser fuzzing", pass, detail);
}

// --- criterion 9 -----------------------------------------------------------

std::map<std::string, std::string> scripted_stub_payloads() {
  std::map<std::string, std::string> canned;
  for (const EnvSpec& env : builtin_envs()) {
    const auto [data, gt] = generate_trajectory(env, 997, false);
    canned[env.name] = decomposition_to_json(gt)["subtasks"].dump(2);
  }
  return canned;
}

RunConfig determinism_config(const std::filesystem::path& out,
                             const std::map<std::string, std::string>& canned,
                             StubScript::Noise noise, int period, int offset) {
  RunConfig config;
  config.environments = {"Door", "Lift", "PickPlace", "Stack"};
  config.trajectories_per_env = 5;
  config.providers = {stub_provider(canned, noise, period, offset)};
  config.contexts = {Shot::OneShot, Shot::ZeroShot};
  config.modalities = {Modality::TextOnly};
  config.seed_base = 0;
  config.output_dir = out;
  config.parallelism = 2;
  return config;
}

void criterion_end_to_end_determinism(const std::filesystem::path& scratch) {
  const auto canned = scripted_stub_payloads();

  const RunConfig run_a = determinism_config(scratch / "det_a", canned,
                                             StubScript::Noise::None, 0, 0);
  const RunConfig run_b = determinism_config(scratch / "det_b", canned,
                                             StubScript::Noise::None, 0, 0);
  run_batch(run_a, make_failing_transport());
  run_batch(run_b, make_failing_transport());
  emit_report(aggregate_stats(run_a.output_dir), ReportFormat::Csv, scratch / "det_a.csv");
  emit_report(aggregate_stats(run_b.output_dir), ReportFormat::Csv, scratch / "det_b.csv");
  const std::string csv_a = read_text_file(scratch / "det_a.csv");
  const std::string csv_b = read_text_file(scratch / "det_b.csv");
  const bool identical = !csv_a.empty() && csv_a == csv_b;

  // Injected malformed responses on the seed % 10 == 3 schedule.
  StubScript schedule_probe;
  schedule_probe.noise = StubScript::Noise::Malformed;
  schedule_probe.noise_period = 10;
  schedule_probe.noise_offset = 3;
  const RunConfig noisy = determinism_config(scratch / "det_noise", canned,
                                             StubScript::Noise::Malformed, 10, 3);
  run_batch(noisy, make_failing_transport());
  int expected_valid = 0;
  for (std::int64_t seed = 0; seed < noisy.trajectories_per_env; ++seed)
    if (!schedule_probe.applies(seed)) ++expected_valid;
  bool counts_match = true;
  for (const StatsRow& row : aggregate_stats(noisy.output_dir)) {
    if (row.valid_n != expected_valid || row.total_n != noisy.trajectories_per_env)
      counts_match = false;
  }

  char detail[128];
  std::snprintf(detail, sizeof(detail), "csv bytes %s; valid_n per cell = %d of %d",
                identical ? "identical" : "DIFFER", expected_valid, noisy.trajectories_per_env);
  report(9, "stub-provider batches are byte-deterministic and honor the noise schedule",
         identical && counts_match, detail);
}

// --- criterion 10 ----------------------------------------------------------

void criterion_reference_prediction_score(const std::filesystem::path& scratch) {
  // The stub returns the reference one-shot prediction; the pipeline parses it
  // and scores it against the reference ground truth. The temporal score is
  // encoder-independent and gated; the semantic score under the bag encoder is
  // recorded for documentation only.
  const SubTaskDecomposition gt = tdtest::stack_reference_ground_truth();
  const SubTaskDecomposition pred = tdtest::stack_reference_prediction();
  const std::string payload = decomposition_to_json(pred)["subtasks"].dump(2);
  const ProviderConfig provider = stub_provider({{"Stack", payload}});

  TrajectoryData vehicle;
  vehicle.env_name = "Stack";
  vehicle.seed = 0;
  vehicle.object_names = {"cubeA", "cubeB"};
  for (int k = 0; k <= 62; ++k) {
    StepRecord step;
    step.k = k;
    step.state = std::vector<double>(9, 0.0);
    vehicle.steps.push_back(step);
  }

  FmClient client(make_failing_transport());
  const Prompt prompt = build_prompt(default_prompt_context(), vehicle, Modality::TextOnly);
  const FmResponse response = client.complete(prompt, provider);
  const ParseOutcome outcome = extract_decomposition(response.raw_text);

  bool pass = outcome.valid();
  double tau_k = 0.0, tau_zeta = 0.0;
  if (pass) {
    const BagEncoder encoder;
    const SimilarityReport r = similarity(gt, outcome.decomposition, encoder);
    tau_k = r.tau_k;
    tau_zeta = r.tau_zeta;
    pass = std::abs(tau_k - 0.87) <= 0.01;
    write_text_file(scratch / "reference_prediction_report.json",
                    similarity_report_to_json(r).dump(2) + "\n");
  }
  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "tau_k=%.4f (gated at 0.87±0.01); tau_zeta=%.4f under bag encoder (recorded, "
                "not gated)",
                tau_k, tau_zeta);
  report(10, "scripted reference prediction reproduces the temporal score", pass, detail);

  // Optional live smoke run: enabled only when TASKDECOMP_LIVE_SMOKE=1 and a
  // provider config path is given; see the README.
  const char* live = std::getenv("TASKDECOMP_LIVE_SMOKE");
  const char* provider_path = std::getenv("TASKDECOMP_LIVE_PROVIDER");
  if (live && std::string(live) == "1" && provider_path) {
    try {
      const ProviderConfig live_provider = provider_config_from_json(
          nlohmann::json::parse(read_text_file(provider_path)));
      FmClient live_client;
      const EnvSpec env = builtin_env("Lift").value();
      int valid = 0;
      for (std::int64_t seed = 0; seed < 2; ++seed) {
        const auto [data, lift_gt] = generate_trajectory(env, seed, false);
        const Prompt p = build_prompt(default_prompt_context(), data, Modality::TextOnly);
        const FmResponse r = live_client.complete(p, live_provider);
        if (extract_decomposition(r.raw_text).valid()) ++valid;
      }
      std::printf("INFO live smoke: %d of 2 responses valid from %s\n", valid,
                  live_provider.name.c_str());
    } catch (const std::exception& error) {
      std::printf("INFO live smoke failed: %s\n", error.what());
    }
  } else {
    std::printf("INFO live smoke skipped (set TASKDECOMP_LIVE_SMOKE=1 and "
                "TASKDECOMP_LIVE_PROVIDER=<provider.json> to enable)\n");
  }
}

}  // namespace

int main() {
  const std::filesystem::path scratch = scratch_dir();

  criterion_worked_example();
  criterion_identity();
  criterion_symmetry_and_ranges();
  criterion_oracle_equivalence();
  criterion_derived_fixture();
  criterion_generator_validity();
  criterion_parser_rules();
  criterion_end_to_end_determinism(scratch);
  criterion_reference_prediction_score(scratch);

  if (g_failures > 0) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all acceptance criteria passed\n");
  return 0;
}
