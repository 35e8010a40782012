#include "taskdecomp/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <thread>

#include "taskdecomp/json_io.hpp"
#include "taskdecomp/parser.hpp"
#include "taskdecomp/simgen.hpp"
#include "taskdecomp/util.hpp"

namespace taskdecomp {

using nlohmann::json;

namespace {

std::vector<Shot> shots_from_json(const json& j) {
  std::vector<Shot> shots;
  for (const json& item : j) shots.push_back(shot_from_string(item.get<std::string>()));
  return shots;
}

std::vector<Modality> modalities_from_json(const json& j) {
  std::vector<Modality> modalities;
  for (const json& item : j) modalities.push_back(modality_from_string(item.get<std::string>()));
  return modalities;
}

// Hash of the experiment identity: excludes output_dir, parallelism and
// cassette mode so a moved or re-parallelized run still resumes.
std::string config_hash(const RunConfig& config) {
  json j = run_config_to_json(config);
  j.erase("output_dir");
  j.erase("parallelism");
  j.erase("cassette_mode");
  return sha256_hex(j.dump());
}

struct Cell {
  std::string env;
  std::string provider;
  Shot shot = Shot::ZeroShot;
  Modality modality = Modality::TextOnly;
  std::vector<std::int64_t> done_seeds;
  bool failed = false;
  std::string error;
};

json cell_to_json(const Cell& cell) {
  return json{{"env", cell.env},
              {"provider", cell.provider},
              {"context", to_string(cell.shot)},
              {"modality", to_string(cell.modality)},
              {"done_seeds", cell.done_seeds},
              {"failed", cell.failed},
              {"error", cell.error}};
}

Cell cell_from_json(const json& j) {
  Cell cell;
  cell.env = j.at("env").get<std::string>();
  cell.provider = j.at("provider").get<std::string>();
  cell.shot = shot_from_string(j.at("context").get<std::string>());
  cell.modality = modality_from_string(j.at("modality").get<std::string>());
  cell.done_seeds = j.value("done_seeds", std::vector<std::int64_t>{});
  cell.failed = j.value("failed", false);
  cell.error = j.value("error", "");
  return cell;
}

struct Manifest {
  std::string hash;
  int trajectories_per_env = 0;
  std::int64_t seed_base = 0;
  std::vector<Cell> cells;
};

json manifest_to_json(const Manifest& m) {
  json cells = json::array();
  for (const Cell& cell : m.cells) cells.push_back(cell_to_json(cell));
  return json{{"config_hash", m.hash},
              {"trajectories_per_env", m.trajectories_per_env},
              {"seed_base", m.seed_base},
              {"cells", cells}};
}

Manifest manifest_from_json(const json& j) {
  Manifest m;
  m.hash = j.at("config_hash").get<std::string>();
  m.trajectories_per_env = j.at("trajectories_per_env").get<int>();
  m.seed_base = j.at("seed_base").get<std::int64_t>();
  for (const json& item : j.at("cells")) m.cells.push_back(cell_from_json(item));
  return m;
}

std::unique_ptr<Encoder> make_encoder(const RunConfig& config,
                                      std::shared_ptr<HttpTransport> transport) {
  if (config.encoder == "bag") return std::make_unique<BagEncoder>();
  if (config.encoder == "remote") {
    if (!config.remote_encoder)
      throw std::invalid_argument("run config: encoder \"remote\" needs a remote_encoder block");
    return std::make_unique<RemoteEncoder>(*config.remote_encoder,
                                           config.output_dir / "embedding_cache.json",
                                           std::move(transport));
  }
  throw std::invalid_argument("run config: unknown encoder " + config.encoder);
}

}  // namespace

std::string cell_dir_name(const std::string& env, const std::string& provider, Shot shot,
                          Modality modality) {
  return env + "__" + provider + "__" + to_string(shot) + "__" + to_string(modality);
}

std::string seed_dir_name(std::int64_t seed) {
  return "seed_" + std::to_string(seed);
}

RunConfig run_config_from_json(const json& j) {
  RunConfig config;
  config.environments = j.at("environments").get<std::vector<std::string>>();
  config.trajectories_per_env = j.value("trajectories_per_env", 50);
  if (config.trajectories_per_env < 1)
    throw std::invalid_argument("run config: trajectories_per_env must be >= 1");
  for (const json& item : j.at("providers")) config.providers.push_back(provider_config_from_json(item));
  if (j.contains("contexts")) config.contexts = shots_from_json(j["contexts"]);
  if (j.contains("modalities")) config.modalities = modalities_from_json(j["modalities"]);
  config.encoder = j.value("encoder", "bag");
  if (j.contains("remote_encoder")) {
    EmbeddingEndpointConfig enc;
    enc.endpoint = j["remote_encoder"].value("endpoint", "");
    enc.model = j["remote_encoder"].value("model", "");
    enc.auth_env_var = j["remote_encoder"].value("auth_env_var", "");
    config.remote_encoder = enc;
  }
  config.seed_base = j.value("seed_base", std::int64_t{0});
  config.output_dir = j.at("output_dir").get<std::string>();
  config.cassette_mode = cassette_mode_from_string(j.value("cassette_mode", "passthrough"));
  config.parallelism = j.value("parallelism", 4);
  if (j.contains("context_template"))
    config.context_template = std::filesystem::path(j["context_template"].get<std::string>());
  if (j.contains("price_table"))
    config.price_table = std::filesystem::path(j["price_table"].get<std::string>());
  if (config.environments.empty() || config.providers.empty() || config.contexts.empty() ||
      config.modalities.empty())
    throw std::invalid_argument("run config: the grid has no cells");
  return config;
}

json run_config_to_json(const RunConfig& config) {
  json providers = json::array();
  for (const ProviderConfig& p : config.providers) providers.push_back(provider_config_to_json(p));
  json contexts = json::array();
  for (Shot s : config.contexts) contexts.push_back(to_string(s));
  json modalities = json::array();
  for (Modality m : config.modalities) modalities.push_back(to_string(m));
  json j{{"environments", config.environments},
         {"trajectories_per_env", config.trajectories_per_env},
         {"providers", providers},
         {"contexts", contexts},
         {"modalities", modalities},
         {"encoder", config.encoder},
         {"seed_base", config.seed_base},
         {"output_dir", config.output_dir.string()},
         {"cassette_mode", to_string(config.cassette_mode)},
         {"parallelism", config.parallelism}};
  if (config.remote_encoder) {
    j["remote_encoder"] = json{{"endpoint", config.remote_encoder->endpoint},
                               {"model", config.remote_encoder->model},
                               {"auth_env_var", config.remote_encoder->auth_env_var}};
  }
  if (config.context_template) j["context_template"] = config.context_template->string();
  if (config.price_table) j["price_table"] = config.price_table->string();
  return j;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return run_config_from_json(json::parse(read_text_file(path)));
}

RunSummary run_batch(const RunConfig& config, std::shared_ptr<HttpTransport> transport) {
  const std::filesystem::path out = config.output_dir;
  std::filesystem::create_directories(out);

  std::map<std::string, EnvSpec> envs;
  for (const std::string& name : config.environments) {
    auto env = builtin_env(name);
    if (!env) throw std::invalid_argument("run config: unknown environment " + name);
    envs.emplace(name, std::move(*env));
  }

  bool with_frames = false;
  for (Modality m : config.modalities)
    if (m != Modality::TextOnly) with_frames = true;

  PromptContext base_ctx =
      config.context_template ? load_prompt_context(*config.context_template)
                              : default_prompt_context();

  // Hold-out pair per environment for the one-shot snippet; its seed sits just
  // outside the evaluation range so it is never part of a batch.
  std::map<std::string, std::string> snippets;
  const bool wants_one_shot =
      std::find(config.contexts.begin(), config.contexts.end(), Shot::OneShot) !=
      config.contexts.end();
  if (wants_one_shot) {
    for (const auto& [name, env] : envs) {
      auto [holdout_data, holdout_gt] = generate_trajectory(env, config.seed_base - 1, false);
      snippets[name] = make_one_shot_snippet(holdout_data, holdout_gt);
    }
  }

  // Manifest: resume when present and the experiment identity matches.
  const std::string hash = config_hash(config);
  const std::filesystem::path manifest_path = out / "manifest.json";
  Manifest manifest;
  if (std::filesystem::exists(manifest_path)) {
    manifest = manifest_from_json(json::parse(read_text_file(manifest_path)));
    if (manifest.hash != hash)
      throw std::runtime_error("run directory holds a manifest for a different configuration: " +
                               manifest_path.string());
    // A fresh invocation retries cells that failed last time; completed seeds
    // stay untouched.
    for (Cell& cell : manifest.cells) {
      cell.failed = false;
      cell.error.clear();
    }
  } else {
    manifest.hash = hash;
    manifest.trajectories_per_env = config.trajectories_per_env;
    manifest.seed_base = config.seed_base;
    for (const std::string& env : config.environments)
      for (const ProviderConfig& provider : config.providers)
        for (Shot shot : config.contexts)
          for (Modality modality : config.modalities)
            manifest.cells.push_back(Cell{env, provider.name, shot, modality, {}, false, ""});
    write_text_file_atomic(manifest_path, manifest_to_json(manifest).dump(2) + "\n");
  }

  PriceTable prices;
  if (config.price_table) prices = PriceTable::load(*config.price_table);
  auto client = std::make_shared<FmClient>(transport, prices);

  std::map<std::string, std::unique_ptr<CassetteClient>> cassettes;
  if (config.cassette_mode != CassetteMode::Passthrough) {
    std::filesystem::create_directories(out / "cassettes");
    for (const ProviderConfig& provider : config.providers)
      cassettes.emplace(provider.name,
                        std::make_unique<CassetteClient>(client, config.cassette_mode,
                                                         out / "cassettes" / (provider.name + ".json")));
  }

  std::map<std::string, const ProviderConfig*> providers_by_name;
  for (const ProviderConfig& provider : config.providers)
    providers_by_name[provider.name] = &provider;
  if (providers_by_name.size() != config.providers.size())
    throw std::invalid_argument("run config: provider names must be unique");

  std::unique_ptr<Encoder> encoder = make_encoder(config, transport);

  std::mutex manifest_mutex;
  auto save_manifest = [&] {
    write_text_file_atomic(manifest_path, manifest_to_json(manifest).dump(2) + "\n");
  };

  std::mutex trajectory_mutex;
  auto ensure_trajectory = [&](const std::string& env_name, std::int64_t seed) {
    const std::filesystem::path dir = out / "trajectories" / env_name / seed_dir_name(seed);
    std::lock_guard<std::mutex> lock(trajectory_mutex);
    if (!std::filesystem::exists(dir / "trajectory.json")) {
      auto [data, gt] = generate_trajectory(envs.at(env_name), seed, with_frames);
      save_trajectory(dir, data);
      save_decomposition(dir / "ground_truth.json", gt);
    }
    return dir;
  };

  struct Task {
    std::size_t cell_index;
    std::int64_t seed;
  };
  std::vector<Task> tasks;
  for (std::size_t ci = 0; ci < manifest.cells.size(); ++ci) {
    const Cell& cell = manifest.cells[ci];
    for (int i = 0; i < config.trajectories_per_env; ++i) {
      const std::int64_t seed = config.seed_base + i;
      if (std::find(cell.done_seeds.begin(), cell.done_seeds.end(), seed) !=
          cell.done_seeds.end())
        continue;
      tasks.push_back({ci, seed});
    }
  }

  auto run_one = [&](const Task& task) {
    Cell snapshot;
    {
      std::lock_guard<std::mutex> lock(manifest_mutex);
      if (manifest.cells[task.cell_index].failed) return;
      snapshot = manifest.cells[task.cell_index];
    }
    try {
      const std::filesystem::path traj_dir = ensure_trajectory(snapshot.env, task.seed);
      TrajectoryData data = load_trajectory(traj_dir);
      SubTaskDecomposition gt =
          load_decomposition(traj_dir / "ground_truth.json", DecompositionSource::GroundTruth);

      PromptContext ctx = base_ctx;
      ctx.shot = snapshot.shot;
      if (snapshot.shot == Shot::OneShot) ctx.one_shot_snippet = snippets.at(snapshot.env);
      Prompt prompt = build_prompt(ctx, data, snapshot.modality);

      const std::filesystem::path seed_dir =
          out / "cells" /
          cell_dir_name(snapshot.env, snapshot.provider, snapshot.shot, snapshot.modality) /
          seed_dir_name(task.seed);
      std::filesystem::create_directories(seed_dir);
      write_text_file(seed_dir / "prompt.json", prompt_to_json(prompt).dump());

      const ProviderConfig& provider = *providers_by_name.at(snapshot.provider);
      FmResponse response;
      if (auto it = cassettes.find(snapshot.provider); it != cassettes.end())
        response = it->second->complete(prompt, provider);
      else
        response = client->complete(prompt, provider);
      write_text_file(seed_dir / "response.json", fm_response_to_json(response).dump(2) + "\n");

      ParseOutcome outcome = extract_decomposition(response.raw_text);
      write_text_file(seed_dir / "parse.json", parse_outcome_to_json(outcome).dump(2) + "\n");
      if (outcome.valid()) {
        SimilarityReport report = similarity(gt, outcome.decomposition, *encoder);
        write_text_file(seed_dir / "report.json",
                        similarity_report_to_json(report).dump(2) + "\n");
      }

      std::lock_guard<std::mutex> lock(manifest_mutex);
      Cell& cell = manifest.cells[task.cell_index];
      cell.done_seeds.push_back(task.seed);
      std::sort(cell.done_seeds.begin(), cell.done_seeds.end());
      save_manifest();
    } catch (const std::exception& error) {
      std::lock_guard<std::mutex> lock(manifest_mutex);
      Cell& cell = manifest.cells[task.cell_index];
      cell.failed = true;
      cell.error = error.what();
      save_manifest();
    }
  };

  const int workers = std::max(1, std::min<int>(config.parallelism, int(tasks.size())));
  if (workers <= 1) {
    for (const Task& task : tasks) run_one(task);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        while (true) {
          const std::size_t i = next.fetch_add(1);
          if (i >= tasks.size()) return;
          run_one(tasks[i]);
        }
      });
    }
    for (std::thread& t : pool) t.join();
  }

  RunSummary summary;
  summary.output_dir = out;
  summary.cells_total = static_cast<int>(manifest.cells.size());
  for (const Cell& cell : manifest.cells)
    if (cell.failed && cell.done_seeds.empty()) ++summary.cells_failed_entirely;
  return summary;
}

double mean_of(const std::vector<double>& xs) {
  double sum = 0.0;
  for (double x : xs) sum += x;
  return xs.empty() ? 0.0 : sum / double(xs.size());
}

std::optional<double> sample_std(const std::vector<double>& xs) {
  if (xs.size() < 2) return std::nullopt;
  const double mean = mean_of(xs);
  double acc = 0.0;
  for (double x : xs) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / double(xs.size() - 1));
}

std::vector<StatsRow> aggregate_stats(const std::filesystem::path& run_dir) {
  const Manifest manifest =
      manifest_from_json(json::parse(read_text_file(run_dir / "manifest.json")));

  std::vector<StatsRow> rows;
  for (const Cell& cell : manifest.cells) {
    StatsRow row;
    row.env = cell.env;
    row.provider = cell.provider;
    row.context = to_string(cell.shot);
    row.modality = to_string(cell.modality);
    row.total_n = manifest.trajectories_per_env;

    std::vector<double> tau_ks, tau_zetas, costs;
    for (int i = 0; i < manifest.trajectories_per_env; ++i) {
      const std::int64_t seed = manifest.seed_base + i;
      const std::filesystem::path seed_dir =
          run_dir / "cells" / cell_dir_name(cell.env, cell.provider, cell.shot, cell.modality) /
          seed_dir_name(seed);
      if (std::filesystem::exists(seed_dir / "response.json")) {
        FmResponse response =
            fm_response_from_json(json::parse(read_text_file(seed_dir / "response.json")));
        costs.push_back(response.cost_estimate);
      }
      if (std::filesystem::exists(seed_dir / "report.json")) {
        SimilarityReport report =
            similarity_report_from_json(json::parse(read_text_file(seed_dir / "report.json")));
        tau_ks.push_back(report.tau_k);
        tau_zetas.push_back(report.tau_zeta);
      }
    }

    row.valid_n = static_cast<int>(tau_ks.size());
    if (!tau_ks.empty()) {
      row.mean_tau_k = mean_of(tau_ks);
      row.mean_tau_zeta = mean_of(tau_zetas);
      row.std_tau_k = sample_std(tau_ks);
      row.std_tau_zeta = sample_std(tau_zetas);
    }
    row.mean_cost = mean_of(costs);
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

std::string csv_number(const std::optional<double>& value) {
  return value ? format_fixed(*value, 6) : "";
}

std::string markdown_stat(const std::optional<double>& mean, const std::optional<double>& std_dev) {
  if (!mean) return "n/a";
  if (!std_dev) return format_fixed(*mean, 2);
  return format_fixed(*mean, 2) + " ± " + format_fixed(*std_dev, 2);
}

}  // namespace

std::string render_report(const std::vector<StatsRow>& rows, ReportFormat format) {
  if (format == ReportFormat::Csv) {
    std::string csv =
        "env,provider,context,modality,valid_n,total_n,mean_tau_k,std_tau_k,mean_tau_zeta,"
        "std_tau_zeta,mean_cost\n";
    for (const StatsRow& row : rows) {
      csv += row.env + "," + row.provider + "," + row.context + "," + row.modality + "," +
             std::to_string(row.valid_n) + "," + std::to_string(row.total_n) + "," +
             csv_number(row.mean_tau_k) + "," + csv_number(row.std_tau_k) + "," +
             csv_number(row.mean_tau_zeta) + "," + csv_number(row.std_tau_zeta) + "," +
             format_fixed(row.mean_cost, 6) + "\n";
    }
    return csv;
  }

  std::string md = "# Similarity statistics\n";
  std::string current_env;
  for (const StatsRow& row : rows) {
    if (row.env != current_env) {
      current_env = row.env;
      md += "\n## " + row.env + "\n\n";
      md += "| Provider | Context | Modality | Valid/Total | tau_k (mean ± std) | tau_zeta "
            "(mean ± std) | Mean cost |\n";
      md += "|---|---|---|---|---|---|---|\n";
    }
    md += "| " + row.provider + " | " + row.context + " | " + row.modality + " | " +
          std::to_string(row.valid_n) + "/" + std::to_string(row.total_n) + " | " +
          markdown_stat(row.mean_tau_k, row.std_tau_k) + " | " +
          markdown_stat(row.mean_tau_zeta, row.std_tau_zeta) + " | $" +
          format_fixed(row.mean_cost, 4) + " |\n";
  }
  return md;
}

void emit_report(const std::vector<StatsRow>& rows, ReportFormat format,
                 const std::filesystem::path& out_path) {
  write_text_file(out_path, render_report(rows, format));
}

SimilarityReport evaluate_external(const std::filesystem::path& gt_file,
                                   const std::filesystem::path& pred_file,
                                   const Encoder& encoder) {
  const SubTaskDecomposition gt = load_decomposition(gt_file, DecompositionSource::GroundTruth);
  const SubTaskDecomposition pred =
      load_decomposition(pred_file, DecompositionSource::FmPrediction);

  auto describe = [](const ValidationResult& check) {
    std::string message;
    for (const Violation& v : check.violations) {
      if (!message.empty()) message += "; ";
      message += to_string(v.kind) + " at index " + std::to_string(v.index);
    }
    return message;
  };
  if (auto check = validate_decomposition(gt); !check.ok())
    throw std::invalid_argument("ground-truth file is invalid: " + describe(check));
  if (auto check = validate_decomposition(pred); !check.ok())
    throw std::invalid_argument("prediction file is invalid: " + describe(check));

  return similarity(gt, pred, encoder);
}

}  // namespace taskdecomp
