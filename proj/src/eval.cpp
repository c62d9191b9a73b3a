#include "accelpred/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "accelpred/common.hpp"
#include "accelpred/io.hpp"
#include "accelpred/parallel.hpp"
#include "accelpred/pipeline.hpp"
#include "accelpred/trainer.hpp"

namespace acp {
namespace {

constexpr const char* kClassNames[3] = {"C", "M", "A"};

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  return out;
}

struct CellKey {
  std::string model, cls;
  int horizon = 0;
  bool env = false;
  auto operator<=>(const CellKey&) const = default;
};

}  // namespace

double mae(std::span<const double> y, std::span<const double> y_hat) {
  if (y.size() != y_hat.size() || y.empty()) {
    throw ValidationError("mae: empty input or length mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += std::abs(y[i] - y_hat[i]);
  return s / static_cast<double>(y.size());
}

double rmse(std::span<const double> y, std::span<const double> y_hat) {
  if (y.size() != y_hat.size() || y.empty()) {
    throw ValidationError("rmse: empty input or length mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double e = y[i] - y_hat[i];
    s += e * e;
  }
  return std::sqrt(s / static_cast<double>(y.size()));
}

std::vector<GridCell> ExperimentGrid::aggregate() const {
  std::map<CellKey, std::vector<const MetricReport*>> groups;
  for (const auto& r : reports) {
    groups[{r.model, r.cls, r.horizon_m, r.env}].push_back(&r);
  }
  std::vector<GridCell> cells;
  for (const auto& [key, rs] : groups) {
    GridCell c;
    c.model = key.model;
    c.cls = key.cls;
    c.horizon_m = key.horizon;
    c.env = key.env;
    c.seed_count = static_cast<int>(rs.size());
    const double n = static_cast<double>(rs.size());
    for (const auto* r : rs) {
      c.mae_mean += r->mae;
      c.rmse_mean += r->rmse;
    }
    c.mae_mean /= n;
    c.rmse_mean /= n;
    for (const auto* r : rs) {
      c.mae_std += (r->mae - c.mae_mean) * (r->mae - c.mae_mean);
      c.rmse_std += (r->rmse - c.rmse_mean) * (r->rmse - c.rmse_mean);
    }
    c.mae_std = std::sqrt(c.mae_std / n);
    c.rmse_std = std::sqrt(c.rmse_std / n);
    cells.push_back(c);
  }
  return cells;
}

ExperimentGrid run_comparison_grid(const RunConfig& config) {
  config.validate();
  const Rng root(config.seed);
  ExperimentGrid grid;

  struct CellJob {
    ModelKind kind;
    std::string family;
    int cls = -1;  // -1 = pooled
    bool env = false;
    int horizon = 0;
  };

  for (int seed_i = 0; seed_i < config.grid_seeds; ++seed_i) {
    const std::uint64_t corpus_seed =
        root.fork("corpus").fork(static_cast<std::uint64_t>(seed_i)).seed();
    const Corpus corpus = build_corpus(config, corpus_seed);

    std::map<int, Dataset> datasets;
    std::vector<int> cls_list;
    if (config.clustered) cls_list.insert(cls_list.end(), {0, 1, 2});
    if (config.unclustered) cls_list.push_back(-1);
    for (int cls : cls_list) {
      datasets.emplace(cls, make_dataset(corpus.windows, corpus.splits, cls));
    }

    std::vector<CellJob> jobs;
    std::vector<bool> envs;
    if (config.env_on) envs.push_back(true);
    if (config.env_off) envs.push_back(false);
    for (const auto& family : config.families) {
      for (int cls : cls_list) {
        for (bool env : envs) {
          for (int h : config.horizons) {
            jobs.push_back({parse_model_kind(family), family, cls, env, h});
          }
        }
      }
    }

    std::vector<std::vector<MetricReport>> job_reports(jobs.size());
    ExceptionCollector exc;
    const long n_jobs = static_cast<long>(jobs.size());
#pragma omp parallel for schedule(dynamic)
    for (long ji = 0; ji < n_jobs; ++ji) {
      exc.run([&, ji] {
        const CellJob& job = jobs[static_cast<std::size_t>(ji)];
        const Dataset& data = datasets.at(job.cls);
        const std::string cell_label =
            job.family + "/" + std::to_string(job.cls) + "/" + (job.env ? "Y" : "N") +
            "/" + std::to_string(job.horizon) + "/s" + std::to_string(seed_i);
        const Rng cell_rng = root.fork("cell").fork(cell_label);
        try {
          Normalizer norm = fit_normalizer(data);
          ModelConfig mc =
              config.model_config(job.kind, job.horizon, job.env, cell_rng.seed());
          auto model = build_model(mc, norm);
          train_model(*model, data, config.train_config(), cell_rng.fork("train"));

          auto report_for = [&](const std::string& cls_name,
                                const std::vector<std::size_t>& idx) {
            const EvalResult r = evaluate_model(*model, data, idx);
            MetricReport rep;
            rep.model = job.family;
            rep.cls = cls_name;
            rep.horizon_m = job.horizon;
            rep.env = job.env;
            rep.seed = static_cast<std::uint64_t>(seed_i);
            rep.mae = r.mae;
            rep.rmse = r.rmse;
            rep.m = r.count;
            return rep;
          };

          auto& out = job_reports[static_cast<std::size_t>(ji)];
          if (job.cls >= 0) {
            out.push_back(report_for(kClassNames[job.cls], data.test_idx));
          } else {
            out.push_back(report_for("U", data.test_idx));
            for (int c = 0; c < 3; ++c) {
              std::vector<std::size_t> idx;
              for (std::size_t i : data.test_idx) {
                if (data.samples[i].cls == c) idx.push_back(i);
              }
              if (!idx.empty()) {
                out.push_back(report_for(std::string("U-") + kClassNames[c], idx));
              }
            }
          }
        } catch (const std::exception& e) {
          // absent cell: note it and keep going
#pragma omp critical(grid_log)
          std::cerr << "cell " << cell_label << " failed: " << e.what() << "\n";
        }
      });
    }
    exc.rethrow();
    for (auto& reps : job_reports) {
      for (auto& r : reps) grid.reports.push_back(std::move(r));
    }
  }
  return grid;
}

void write_grid_csv(const std::string& path, const std::vector<GridCell>& cells) {
  auto out = open_out(path);
  out << "model,class,horizon_m,env,seed_count,mae_mean,mae_std,rmse_mean,rmse_std\n";
  for (const auto& c : cells) {
    out << c.model << ',' << c.cls << ',' << c.horizon_m << ',' << (c.env ? 'Y' : 'N')
        << ',' << c.seed_count << ',' << format_double(c.mae_mean) << ','
        << format_double(c.mae_std) << ',' << format_double(c.rmse_mean) << ','
        << format_double(c.rmse_std) << '\n';
  }
}

std::vector<GridCell> read_grid_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(file_missing_hint(path, "evaluate"));
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": empty file");
  if (line != "model,class,horizon_m,env,seed_count,mae_mean,mae_std,rmse_mean,rmse_std") {
    throw IoError(path + ": unexpected header");
  }
  std::vector<GridCell> cells;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 9) throw IoError(path + ":" + std::to_string(row) + ": bad row");
    GridCell c;
    c.model = f[0];
    c.cls = f[1];
    c.horizon_m = std::stoi(f[2]);
    c.env = f[3] == "Y";
    c.seed_count = std::stoi(f[4]);
    c.mae_mean = std::stod(f[5]);
    c.mae_std = std::stod(f[6]);
    c.rmse_mean = std::stod(f[7]);
    c.rmse_std = std::stod(f[8]);
    cells.push_back(c);
  }
  return cells;
}

void write_reports_csv(const std::string& path, const std::vector<MetricReport>& reports) {
  auto out = open_out(path);
  out << "model,class,horizon_m,env,seed,mae,rmse,m\n";
  for (const auto& r : reports) {
    out << r.model << ',' << r.cls << ',' << r.horizon_m << ',' << (r.env ? 'Y' : 'N')
        << ',' << r.seed << ',' << format_double(r.mae) << ',' << format_double(r.rmse)
        << ',' << r.m << '\n';
  }
}

namespace {

std::string fmt4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

void render_table(std::ostringstream& out, const std::string& title,
                  const std::vector<std::string>& row_classes,
                  const std::vector<GridCell>& cells,
                  const std::string& cls_prefix) {
  std::vector<int> horizons;
  std::vector<std::string> models;
  for (const auto& c : cells) {
    if (std::find(horizons.begin(), horizons.end(), c.horizon_m) == horizons.end()) {
      horizons.push_back(c.horizon_m);
    }
    if (std::find(models.begin(), models.end(), c.model) == models.end()) {
      models.push_back(c.model);
    }
  }
  std::sort(horizons.begin(), horizons.end());
  std::sort(models.begin(), models.end());

  auto find_cell = [&](const std::string& cls, const std::string& model, int h,
                       bool env) -> const GridCell* {
    for (const auto& c : cells) {
      if (c.cls == cls && c.model == model && c.horizon_m == h && c.env == env) return &c;
    }
    return nullptr;
  };

  out << "## " << title << "\n\n";
  out << "| Class | Model |";
  for (int h : horizons) {
    for (const char* metric : {"MAE", "RMSE"}) {
      for (const char* env : {"Y", "N"}) {
        out << ' ' << h << "m " << metric << ' ' << env << " |";
      }
    }
  }
  out << "\n|---|---|";
  for (std::size_t i = 0; i < horizons.size() * 4; ++i) out << "---|";
  out << "\n";

  for (const auto& row_cls : row_classes) {
    for (const auto& model : models) {
      out << "| " << row_cls << " | " << model << " |";
      for (int h : horizons) {
        for (bool metric_is_mae : {true, false}) {
          for (bool env : {true, false}) {
            const GridCell* c = find_cell(cls_prefix + row_cls, model, h, env);
            if (c) {
              out << ' ' << fmt4(metric_is_mae ? c->mae_mean : c->rmse_mean) << " |";
            } else {
              out << " - |";
            }
          }
        }
      }
      out << "\n";
    }
  }
  out << "\n";
}

}  // namespace

std::string render_report_markdown(const std::vector<GridCell>& cells) {
  std::ostringstream out;
  out << "# Acceleration prediction error\n\n";
  out << "Seed-averaged test MAE / RMSE in m/s^2; Y/N marks whether the "
         "environmental percentile input was enabled.\n\n";

  bool have_clustered = false, have_pooled = false, have_breakdown = false;
  for (const auto& c : cells) {
    if (c.cls == "C" || c.cls == "M" || c.cls == "A") have_clustered = true;
    if (c.cls == "U") have_pooled = true;
    if (c.cls.rfind("U-", 0) == 0) have_breakdown = true;
  }

  if (have_clustered) {
    render_table(out, "Clustered models (one model per driver class)",
                 {"C", "M", "A"}, cells, "");
  }
  if (have_breakdown) {
    std::vector<GridCell> breakdown;
    for (const auto& c : cells) {
      if (c.cls.rfind("U-", 0) == 0) breakdown.push_back(c);
    }
    render_table(out, "Unclustered model, scored per driver class", {"C", "M", "A"},
                 breakdown, "U-");
  }
  if (have_pooled) {
    std::vector<GridCell> pooled;
    for (const auto& c : cells) {
      if (c.cls == "U") pooled.push_back(c);
    }
    render_table(out, "Unclustered model, pooled test set", {"U"}, pooled, "");
  }
  return out.str();
}

std::vector<SweepRow> run_window_sweep(const RunConfig& config,
                                       const std::vector<double>& window_mins,
                                       int seeds) {
  if (window_mins.empty()) throw ValidationError("run_window_sweep: no window lengths");
  if (seeds < 1) throw ValidationError("run_window_sweep: seeds must be >= 1");
  for (double wl : window_mins) {
    if (wl * 60.0 > config.scenario.duration) {
      throw ValidationError("run_window_sweep: window of " + std::to_string(wl) +
                            " min exceeds the scenario duration");
    }
  }
  const Rng root(config.seed);
  const int horizon = config.max_horizon();

  std::map<double, std::vector<double>> mae_by_wl, rmse_by_wl;
  for (int seed_i = 0; seed_i < seeds; ++seed_i) {
    ScenarioSpec sc = config.scenario;
    sc.seed = root.fork("sweep-corpus").fork(static_cast<std::uint64_t>(seed_i)).seed();
    const auto tracks = generate_population(sc, config.archetypes);
    const auto profiles = resample_population(tracks);

    for (double wl : window_mins) {
      RunConfig wcfg = config;
      wcfg.window_min = wl;
      const auto envs = per_vehicle_envs(profiles, wcfg);
      std::vector<int> cls_of(profiles.size(), -1);
      const auto windows = corpus_windows(profiles, envs, cls_of, wcfg);

      std::vector<std::pair<std::string, int>> vehicles;
      for (const auto& p : profiles) vehicles.emplace_back(p.vehicle_id, -1);
      const auto splits =
          assign_splits(vehicles, config.split_train, config.split_test, config.split_val,
                        root.fork("sweep-split").fork(static_cast<std::uint64_t>(seed_i)));
      const Dataset data = make_dataset(windows, splits, -1);

      const Rng cell_rng = root.fork("sweep-cell")
                               .fork(static_cast<std::uint64_t>(seed_i))
                               .fork(std::to_string(wl));
      Normalizer norm = fit_normalizer(data);
      ModelConfig mc =
          config.model_config(ModelKind::seq2seq, horizon, true, cell_rng.seed());
      auto model = build_model(mc, norm);
      train_model(*model, data, config.train_config(), cell_rng.fork("train"));
      const EvalResult r = evaluate_model(*model, data, data.test_idx);
      mae_by_wl[wl].push_back(r.mae);
      rmse_by_wl[wl].push_back(r.rmse);
    }
  }

  std::vector<SweepRow> rows;
  for (double wl : window_mins) {
    SweepRow row;
    row.window_min = wl;
    const auto& maes = mae_by_wl[wl];
    const auto& rmses = rmse_by_wl[wl];
    row.seed_count = static_cast<int>(maes.size());
    const double n = static_cast<double>(maes.size());
    for (double v : maes) row.mae_mean += v;
    for (double v : rmses) row.rmse_mean += v;
    row.mae_mean /= n;
    row.rmse_mean /= n;
    for (double v : maes) row.mae_std += (v - row.mae_mean) * (v - row.mae_mean);
    for (double v : rmses) row.rmse_std += (v - row.rmse_mean) * (v - row.rmse_mean);
    row.mae_std = std::sqrt(row.mae_std / n);
    row.rmse_std = std::sqrt(row.rmse_std / n);
    rows.push_back(row);
  }
  return rows;
}

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows) {
  auto out = open_out(path);
  out << "window_min,seed_count,mae_mean,mae_std,rmse_mean,rmse_std\n";
  for (const auto& r : rows) {
    out << format_double(r.window_min) << ',' << r.seed_count << ','
        << format_double(r.mae_mean) << ',' << format_double(r.mae_std) << ','
        << format_double(r.rmse_mean) << ',' << format_double(r.rmse_std) << '\n';
  }
}

void write_trace_csv(const std::string& path, const std::vector<TraceRow>& rows) {
  auto out = open_out(path);
  out << "vehicle_id,anchor_m,offset_m,y_true,y_pred\n";
  for (const auto& r : rows) {
    out << r.vehicle_id << ',' << r.anchor_m << ',' << r.offset_m << ','
        << format_double(r.y_true) << ',' << format_double(r.y_pred) << '\n';
  }
}

}  // namespace acp
