#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "taskdecomp/fmclient.hpp"
#include "taskdecomp/prompt.hpp"
#include "taskdecomp/similarity.hpp"
#include "taskdecomp/types.hpp"

namespace taskdecomp {

// Full ablation-grid description: environments x providers x contexts x
// modalities, with `trajectories_per_env` seeded trajectories per cell.
struct RunConfig {
  std::vector<std::string> environments;
  int trajectories_per_env = 50;
  std::vector<ProviderConfig> providers;
  std::vector<Shot> contexts = {Shot::OneShot, Shot::ZeroShot};
  std::vector<Modality> modalities = {Modality::TextOnly};
  std::string encoder = "bag";  // "bag" or "remote"
  std::optional<EmbeddingEndpointConfig> remote_encoder;
  std::int64_t seed_base = 0;
  std::filesystem::path output_dir;
  CassetteMode cassette_mode = CassetteMode::Passthrough;
  int parallelism = 4;
  std::optional<std::filesystem::path> context_template;
  std::optional<std::filesystem::path> price_table;
};

RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json run_config_to_json(const RunConfig& config);
RunConfig load_run_config(const std::filesystem::path& path);

struct RunSummary {
  int cells_total = 0;
  int cells_failed_entirely = 0;  // cells that completed zero trajectories
  std::filesystem::path output_dir;
};

// Drives generate -> prompt -> query -> parse -> score for every grid cell and
// persists all intermediates under output_dir:
//
//   manifest.json
//   trajectories/<env>/seed_<seed>/trajectory.json [+ frame PNGs]
//   cells/<env>__<provider>__<context>__<modality>/seed_<seed>/
//       prompt.json response.json parse.json report.json
//
// Interrupted runs resume from the manifest; completed seeds are never
// re-queried. A provider failure marks its cell incomplete and the remaining
// cells keep running.
RunSummary run_batch(const RunConfig& config,
                     std::shared_ptr<HttpTransport> transport = make_httplib_transport());

// One aggregated row per grid cell: sample mean and standard deviation (n-1)
// of the similarity scores over valid predictions only.
struct StatsRow {
  std::string env;
  std::string provider;
  std::string context;
  std::string modality;
  int valid_n = 0;
  int total_n = 0;
  std::optional<double> mean_tau_k;
  std::optional<double> std_tau_k;   // unset when valid_n < 2
  std::optional<double> mean_tau_zeta;
  std::optional<double> std_tau_zeta;
  double mean_cost = 0.0;
};

std::vector<StatsRow> aggregate_stats(const std::filesystem::path& run_dir);

enum class ReportFormat { Csv, Markdown };

std::string render_report(const std::vector<StatsRow>& rows, ReportFormat format);
void emit_report(const std::vector<StatsRow>& rows, ReportFormat format,
                 const std::filesystem::path& out_path);

// Scores an externally supplied decomposition file (e.g. a human annotation)
// against a ground-truth file; identical math to the pipeline scoring path.
SimilarityReport evaluate_external(const std::filesystem::path& gt_file,
                                   const std::filesystem::path& pred_file,
                                   const Encoder& encoder);

// Sample mean / sample standard deviation helpers used by the aggregator.
double mean_of(const std::vector<double>& xs);
std::optional<double> sample_std(const std::vector<double>& xs);

std::string cell_dir_name(const std::string& env, const std::string& provider, Shot shot,
                          Modality modality);
std::string seed_dir_name(std::int64_t seed);

}  // namespace taskdecomp
