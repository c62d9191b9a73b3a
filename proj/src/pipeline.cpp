#include "accelpred/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "accelpred/common.hpp"
#include "accelpred/eval.hpp"
#include "accelpred/io.hpp"
#include "accelpred/parallel.hpp"
#include "accelpred/trainer.hpp"

namespace acp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kClassNames[4] = {"C", "M", "A", "U"};

std::string out_path(const RunConfig& cfg, const std::string& name) {
  return (fs::path(cfg.out_dir) / name).string();
}

void ensure_out_dir(const RunConfig& cfg) {
  fs::create_directories(cfg.out_dir);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
}

// The resolved configuration is echoed next to every stage's artifacts.
void echo_config(const RunConfig& cfg, const std::string& stage) {
  write_text(out_path(cfg, "config." + stage + ".ini"), to_ini(cfg));
}

void require_artifact(const std::string& path, const std::string& producer) {
  if (!fs::exists(path)) throw IoError(file_missing_hint(path, producer));
}

struct RegimeCell {
  int cls = -1;  // -1 = pooled
  bool env = false;
  int horizon = 0;
  ModelKind kind;
  std::string family;
};

std::vector<RegimeCell> enumerate_cells(const RunConfig& cfg) {
  std::vector<RegimeCell> cells;
  std::vector<int> cls_list;
  if (cfg.clustered) cls_list.insert(cls_list.end(), {0, 1, 2});
  if (cfg.unclustered) cls_list.push_back(-1);
  std::vector<bool> envs;
  if (cfg.env_on) envs.push_back(true);
  if (cfg.env_off) envs.push_back(false);
  for (const auto& family : cfg.families) {
    for (int cls : cls_list) {
      for (bool env : envs) {
        for (int h : cfg.horizons) {
          cells.push_back({cls, env, h, parse_model_kind(family), family});
        }
      }
    }
  }
  return cells;
}

std::string cell_name(const RegimeCell& c) {
  const std::string cls = kClassNames[c.cls < 0 ? 3 : c.cls];
  return c.family + "_" + cls + "_" + std::to_string(c.horizon) + "m_env" +
         (c.env ? "Y" : "N");
}

// Windows + splits for the file-driven stages, from profiles.csv and
// assignments.csv in the out dir.
struct LoadedCorpus {
  std::vector<SpatialProfile> profiles;
  std::vector<Sample> windows;
  std::map<std::string, Split> splits;
};

LoadedCorpus load_corpus(const RunConfig& cfg) {
  const std::string profiles_path = out_path(cfg, artifacts::kProfiles);
  require_artifact(profiles_path, "preprocess");
  const std::string assign_path = out_path(cfg, artifacts::kAssignments);
  require_artifact(assign_path, "cluster");

  LoadedCorpus corpus;
  corpus.profiles = read_profiles_csv(profiles_path);
  const auto assignment = read_assignments_csv(assign_path);

  std::vector<int> cls_of(corpus.profiles.size(), -1);
  for (std::size_t i = 0; i < corpus.profiles.size(); ++i) {
    const auto it = assignment.find(corpus.profiles[i].vehicle_id);
    if (it == assignment.end()) {
      throw ValidationError("vehicle " + corpus.profiles[i].vehicle_id +
                            " missing from " + assign_path);
    }
    cls_of[i] = it->second;
  }

  const auto envs = per_vehicle_envs(corpus.profiles, cfg);
  corpus.windows = corpus_windows(corpus.profiles, envs, cls_of, cfg);

  std::vector<std::pair<std::string, int>> vehicles;
  for (std::size_t i = 0; i < corpus.profiles.size(); ++i) {
    vehicles.emplace_back(corpus.profiles[i].vehicle_id, cls_of[i]);
  }
  corpus.splits = assign_splits(vehicles, cfg.split_train, cfg.split_test, cfg.split_val,
                                Rng(cfg.seed).fork("split"));
  return corpus;
}

}  // namespace

long section_grid_first(const ScenarioSpec& scenario) {
  return static_cast<long>(std::ceil(scenario.section_start));
}

long section_grid_last(const ScenarioSpec& scenario) {
  return static_cast<long>(std::floor(scenario.section_end));
}

std::vector<EnvSequence> per_vehicle_envs(const std::vector<SpatialProfile>& profiles,
                                          const RunConfig& config) {
  const long lo = section_grid_first(config.scenario);
  const long hi = section_grid_last(config.scenario);
  const double window_s = config.window_min * 60.0;
  std::vector<EnvSequence> envs(profiles.size());
  const long n = static_cast<long>(profiles.size());
  ExceptionCollector exc;
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    exc.run([&, i] {
      envs[static_cast<std::size_t>(i)] = serial::build_env_sequence(
          profiles, profiles[static_cast<std::size_t>(i)].entry_time, window_s, lo, hi,
          config.min_support);
    });
  }
  exc.rethrow();
  return envs;
}

std::vector<Sample> corpus_windows(const std::vector<SpatialProfile>& profiles,
                                   const std::vector<EnvSequence>& envs,
                                   const std::vector<int>& cls_of_profile,
                                   const RunConfig& config) {
  if (profiles.size() != envs.size() || profiles.size() != cls_of_profile.size()) {
    throw ValidationError("corpus_windows: profiles/envs/classes size mismatch");
  }
  WindowParams params;
  params.history_len = config.history_m;
  params.max_horizon = config.max_horizon();
  params.anchor_stride = config.anchor_stride_m;
  params.env_span = config.env_span;

  std::vector<std::vector<Sample>> per_vehicle(profiles.size());
  const long n = static_cast<long>(profiles.size());
  ExceptionCollector exc;
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    exc.run([&, i] {
      const auto idx = static_cast<std::size_t>(i);
      per_vehicle[idx] = build_windows(profiles[idx], envs[idx], params,
                                       cls_of_profile[idx]);
    });
  }
  exc.rethrow();

  std::vector<Sample> all;
  for (auto& v : per_vehicle) {
    for (auto& s : v) all.push_back(std::move(s));
  }
  return all;
}

Corpus build_corpus(const RunConfig& config, std::uint64_t corpus_seed) {
  ScenarioSpec sc = config.scenario;
  sc.seed = corpus_seed;
  const auto tracks = generate_population(sc, config.archetypes);
  Corpus corpus;
  corpus.profiles = resample_population(tracks);

  corpus.features.reserve(corpus.profiles.size());
  for (const auto& p : corpus.profiles) corpus.features.push_back(compute_features(p));

  corpus.clusters = kmeans(corpus.features, 3, Rng(corpus_seed).fork("kmeans"),
                           config.restarts, config.max_iters);
  label_clusters(corpus.clusters);

  const auto envs = per_vehicle_envs(corpus.profiles, config);
  corpus.windows =
      corpus_windows(corpus.profiles, envs, corpus.clusters.assignment, config);

  std::vector<std::pair<std::string, int>> vehicles;
  for (std::size_t i = 0; i < corpus.profiles.size(); ++i) {
    vehicles.emplace_back(corpus.profiles[i].vehicle_id, corpus.clusters.assignment[i]);
  }
  corpus.splits = assign_splits(vehicles, config.split_train, config.split_test,
                                config.split_val, Rng(corpus_seed).fork("split"));
  return corpus;
}

void run_generate(const RunConfig& cfg) {
  ensure_out_dir(cfg);
  ScenarioSpec sc = cfg.scenario;
  sc.seed = cfg.seed;
  auto tracks = generate_population(sc, cfg.archetypes);
  const long n = static_cast<long>(tracks.size());
  ExceptionCollector exc;
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) {
    exc.run([&, i] {
      tracks[static_cast<std::size_t>(i)] =
          differentiate_speed(std::move(tracks[static_cast<std::size_t>(i)]));
    });
  }
  exc.rethrow();
  write_tracks_csv(out_path(cfg, artifacts::kTrajectories), tracks);
  write_labels_csv(out_path(cfg, artifacts::kLabels), tracks);
  echo_config(cfg, "generate");
}

void run_preprocess(const RunConfig& cfg) {
  ensure_out_dir(cfg);
  const std::string in_path = out_path(cfg, artifacts::kTrajectories);
  require_artifact(in_path, "generate");
  const auto tracks = read_tracks_csv(in_path);
  const auto profiles = resample_population(tracks);
  write_profiles_csv(out_path(cfg, artifacts::kProfiles), profiles);
  echo_config(cfg, "preprocess");
}

void run_features(const RunConfig& cfg) {
  ensure_out_dir(cfg);
  const std::string in_path = out_path(cfg, artifacts::kProfiles);
  require_artifact(in_path, "preprocess");
  const auto profiles = read_profiles_csv(in_path);
  double window_end = 0.0;
  for (const auto& p : profiles) window_end = std::max(window_end, p.entry_time);
  window_end += 1.0;
  const EnvSequence env = build_env_sequence(
      profiles, window_end, cfg.window_min * 60.0, section_grid_first(cfg.scenario),
      section_grid_last(cfg.scenario), cfg.min_support);
  write_env_csv(out_path(cfg, artifacts::kEnv), env);
  echo_config(cfg, "features");
}

int run_cluster(const RunConfig& cfg) {
  ensure_out_dir(cfg);
  const std::string in_path = out_path(cfg, artifacts::kProfiles);
  require_artifact(in_path, "preprocess");
  const auto profiles = read_profiles_csv(in_path);

  std::vector<DriverFeatures> features;
  features.reserve(profiles.size());
  for (const auto& p : profiles) features.push_back(compute_features(p));

  SelectionResult sel = select_k(features, cfg.k_min, cfg.k_max,
                                 Rng(cfg.seed).fork("cluster"), cfg.restarts,
                                 cfg.literal_bic);
  label_clusters(sel.best);

  write_assignments_csv(out_path(cfg, artifacts::kAssignments), features, sel.best);
  write_k_diagnostics_csv(out_path(cfg, artifacts::kKDiagnostics), sel.per_k);
  echo_config(cfg, "cluster");
  std::cout << "selected k = " << sel.best_k << "\n";
  return sel.best_k;
}

void run_train(const RunConfig& cfg) {
  ensure_out_dir(cfg);
  const LoadedCorpus corpus = load_corpus(cfg);
  fs::create_directories(out_path(cfg, artifacts::kModelsDir));

  const auto cells = enumerate_cells(cfg);
  std::map<int, Dataset> datasets;
  for (const auto& cell : cells) {
    if (!datasets.count(cell.cls)) {
      datasets.emplace(cell.cls, make_dataset(corpus.windows, corpus.splits, cell.cls));
    }
  }

  json manifest = json::array();
  std::vector<json> entries(cells.size());
  const Rng root(cfg.seed);
  const long n = static_cast<long>(cells.size());
  ExceptionCollector exc;
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    exc.run([&, i] {
      const RegimeCell& cell = cells[static_cast<std::size_t>(i)];
      const std::string name = cell_name(cell);
      const Rng cell_rng = root.fork("train-cell").fork(name);
      const Dataset& data = datasets.at(cell.cls);
      Normalizer norm = fit_normalizer(data);
      ModelConfig mc = cfg.model_config(cell.kind, cell.horizon, cell.env, cell_rng.seed());
      auto model = build_model(mc, norm);
      const TrainOutcome outcome =
          train_model(*model, data, cfg.train_config(), cell_rng.fork("train"));
      const std::string file = artifacts::kModelsDir + std::string("/") + name + ".bin";
      model->save(out_path(cfg, file));
      json e;
      e["file"] = file;
      e["model"] = cell.family;
      e["class"] = kClassNames[cell.cls < 0 ? 3 : cell.cls];
      e["horizon_m"] = cell.horizon;
      e["env"] = cell.env;
      e["seed"] = cfg.seed;
      e["init_seed"] = mc.init_seed;
      e["val_mae"] = outcome.best_val_mae;
      e["steps"] = outcome.steps;
      entries[static_cast<std::size_t>(i)] = std::move(e);
    });
  }
  exc.rethrow();
  for (auto& e : entries) manifest.push_back(std::move(e));
  write_text(out_path(cfg, artifacts::kManifest), manifest.dump(2) + "\n");
  echo_config(cfg, "train");
}

void run_predict(const RunConfig& cfg) {
  ensure_out_dir(cfg);
  const std::string manifest_path = out_path(cfg, artifacts::kManifest);
  require_artifact(manifest_path, "train");
  const LoadedCorpus corpus = load_corpus(cfg);
  fs::create_directories(out_path(cfg, "traces"));

  std::ifstream in(manifest_path);
  json manifest = json::parse(in);

  std::map<std::string, Dataset> datasets;
  for (const auto& entry : manifest) {
    const std::string cls_name = entry.at("class").get<std::string>();
    if (!datasets.count(cls_name)) {
      int cls = -1;
      for (int c = 0; c < 3; ++c) {
        if (cls_name == kClassNames[c]) cls = c;
      }
      datasets.emplace(cls_name, make_dataset(corpus.windows, corpus.splits, cls));
    }
  }

  for (const auto& entry : manifest) {
    const std::string file = entry.at("file").get<std::string>();
    const auto model = Model::load(out_path(cfg, file));
    const Dataset& data = datasets.at(entry.at("class").get<std::string>());

    // first trace_vehicles distinct test vehicles, all their anchors
    std::vector<std::string> picked;
    std::vector<TraceRow> rows;
    for (std::size_t idx : data.test_idx) {
      const Sample& s = data.samples[idx];
      if (std::find(picked.begin(), picked.end(), s.vehicle_id) == picked.end()) {
        if (static_cast<int>(picked.size()) >= cfg.trace_vehicles) continue;
        picked.push_back(s.vehicle_id);
      }
      const auto pred = model->predict(task_for(s, model->config()));
      const auto target = target_for(s, model->config().horizon);
      for (std::size_t j = 0; j < pred.size(); ++j) {
        rows.push_back({s.vehicle_id, s.anchor, static_cast<int>(j + 1), target[j],
                        pred[j]});
      }
    }
    const std::string name = fs::path(file).stem().string();
    write_trace_csv(out_path(cfg, "traces/" + name + ".csv"), rows);
  }
  echo_config(cfg, "predict");
}

void run_evaluate(const RunConfig& cfg) {
  ensure_out_dir(cfg);
  const ExperimentGrid grid = run_comparison_grid(cfg);
  write_reports_csv(out_path(cfg, artifacts::kGridRaw), grid.reports);
  write_grid_csv(out_path(cfg, artifacts::kGrid), grid.aggregate());
  if (!cfg.sweep_windows.empty()) {
    const auto rows = run_window_sweep(cfg, cfg.sweep_windows, cfg.sweep_seeds);
    write_sweep_csv(out_path(cfg, artifacts::kSweep), rows);
  }
  echo_config(cfg, "evaluate");
}

void run_report(const RunConfig& cfg) {
  ensure_out_dir(cfg);
  const std::string grid_path = out_path(cfg, artifacts::kGrid);
  const auto cells = read_grid_csv(grid_path);
  write_text(out_path(cfg, artifacts::kReport), render_report_markdown(cells));
  echo_config(cfg, "report");
}

void run_pipeline(const RunConfig& cfg) {
  run_generate(cfg);
  run_preprocess(cfg);
  run_features(cfg);
  run_cluster(cfg);
  run_train(cfg);
  run_predict(cfg);
  run_evaluate(cfg);
  run_report(cfg);
  echo_config(cfg, "pipeline");
}

}  // namespace acp
