#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "taskdecomp/json_io.hpp"
#include "taskdecomp/runner.hpp"
#include "taskdecomp/simgen.hpp"
#include "taskdecomp/util.hpp"

namespace td = taskdecomp;

namespace {

int cmd_generate(const std::vector<std::string>& env_names, int count, std::int64_t seed_base,
                 bool frames, const std::string& out_dir) {
  std::vector<td::EnvSpec> envs;
  if (env_names.empty() || (env_names.size() == 1 && env_names[0] == "all")) {
    envs = td::builtin_envs();
  } else {
    for (const std::string& name : env_names) {
      auto env = td::builtin_env(name);
      if (!env) {
        std::cerr << "unknown environment: " << name << "\n";
        return 1;
      }
      envs.push_back(std::move(*env));
    }
  }
  for (const td::EnvSpec& env : envs) {
    for (int i = 0; i < count; ++i) {
      const std::int64_t seed = seed_base + i;
      auto [data, gt] = td::generate_trajectory(env, seed, frames);
      const std::filesystem::path dir =
          std::filesystem::path(out_dir) / env.name / td::seed_dir_name(seed);
      td::save_trajectory(dir, data);
      td::save_decomposition(dir / "ground_truth.json", gt);
      std::cout << env.name << " seed " << seed << ": K=" << td::derive_extent(gt).steps
                << " N=" << td::derive_extent(gt).subtask_count << " -> " << dir.string() << "\n";
    }
  }
  return 0;
}

int cmd_annotate(const std::string& config_path) {
  td::RunConfig config = td::load_run_config(config_path);
  td::RunSummary summary = td::run_batch(config);
  std::cout << "run complete: " << summary.cells_total << " cells, "
            << summary.cells_failed_entirely << " failed entirely\n";
  std::cout << "artifacts in " << summary.output_dir.string() << "\n";
  return summary.cells_failed_entirely > 0 ? 1 : 0;
}

int cmd_evaluate(const std::string& gt, const std::string& pred, const std::string& encoder_name,
                 const std::string& endpoint, const std::string& model,
                 const std::string& auth_env, const std::string& cache) {
  std::unique_ptr<td::Encoder> encoder;
  if (encoder_name == "bag") {
    encoder = std::make_unique<td::BagEncoder>();
  } else if (encoder_name == "remote") {
    td::EmbeddingEndpointConfig config{endpoint, model, auth_env};
    encoder = std::make_unique<td::RemoteEncoder>(config, cache);
  } else {
    std::cerr << "unknown encoder: " << encoder_name << "\n";
    return 1;
  }
  td::SimilarityReport report = td::evaluate_external(gt, pred, *encoder);
  std::cout << td::similarity_report_to_json(report).dump(2) << "\n";
  return 0;
}

int cmd_report(const std::string& run_dir, const std::string& format_name,
               const std::string& out_file) {
  const td::ReportFormat format =
      format_name == "markdown" ? td::ReportFormat::Markdown : td::ReportFormat::Csv;
  std::vector<td::StatsRow> rows = td::aggregate_stats(run_dir);
  const std::string rendered = td::render_report(rows, format);
  if (out_file.empty()) {
    std::cout << rendered;
  } else {
    td::write_text_file(out_file, rendered);
    std::cout << "report written to " << out_file << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trajectory sub-task decomposition toolkit"};
  app.require_subcommand(1);

  auto* generate = app.add_subcommand(
      "generate", "Generate trajectories with ground-truth decompositions");
  std::vector<std::string> env_names;
  int count = 1;
  std::int64_t seed_base = 0;
  bool frames = false;
  std::string out_dir = "data";
  generate->add_option("--env", env_names, "Environment name(s), or \"all\"");
  generate->add_option("--count", count, "Trajectories per environment");
  generate->add_option("--seed-base", seed_base, "First seed; seeds are seed_base + index");
  generate->add_flag("--frames", frames, "Render per-step frames");
  generate->add_option("--out", out_dir, "Output directory");

  auto* annotate =
      app.add_subcommand("annotate", "Run the full annotation batch from a run config");
  std::string config_path;
  annotate->add_option("--config", config_path, "Run config JSON file")->required();

  auto* evaluate =
      app.add_subcommand("evaluate", "Score a decomposition file against a ground-truth file");
  std::string gt_file, pred_file;
  std::string encoder_name = "bag";
  std::string endpoint, model, auth_env;
  std::string cache = "embedding_cache.json";
  evaluate->add_option("--gt", gt_file, "Ground-truth decomposition JSON")->required();
  evaluate->add_option("--pred", pred_file, "Predicted/annotated decomposition JSON")->required();
  evaluate->add_option("--encoder", encoder_name, "bag or remote");
  evaluate->add_option("--endpoint", endpoint, "Embedding endpoint URL (remote encoder)");
  evaluate->add_option("--model", model, "Embedding model name (remote encoder)");
  evaluate->add_option("--auth-env", auth_env, "Env var holding the API key (remote encoder)");
  evaluate->add_option("--cache", cache, "Embedding cache file (remote encoder)");

  auto* report = app.add_subcommand("report", "Aggregate a run directory into a stats table");
  std::string run_dir, format_name = "csv", out_file;
  report->add_option("--run", run_dir, "Run directory (with manifest.json)")->required();
  report->add_option("--format", format_name, "csv or markdown");
  report->add_option("--out", out_file, "Output file (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) return cmd_generate(env_names, count, seed_base, frames, out_dir);
    if (annotate->parsed()) return cmd_annotate(config_path);
    if (evaluate->parsed())
      return cmd_evaluate(gt_file, pred_file, encoder_name, endpoint, model, auth_env, cache);
    if (report->parsed()) return cmd_report(run_dir, format_name, out_file);
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << "\n";
    return 1;
  }
  return 0;
}
