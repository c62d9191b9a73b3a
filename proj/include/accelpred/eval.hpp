#pragma once

#include <span>
#include <string>
#include <vector>

#include "accelpred/config.hpp"

namespace acp {

double mae(std::span<const double> y, std::span<const double> y_hat);
double rmse(std::span<const double> y, std::span<const double> y_hat);

// One trained cell evaluated on one corpus seed.
struct MetricReport {
  std::string model;
  std::string cls;  // C, M, A, U (pooled), or U-C/U-M/U-A breakdowns
  int horizon_m = 0;
  bool env = false;
  std::uint64_t seed = 0;
  double mae = 0;
  double rmse = 0;
  std::size_t m = 0;  // predicted value count
};

struct GridCell {
  std::string model;
  std::string cls;
  int horizon_m = 0;
  bool env = false;
  int seed_count = 0;
  double mae_mean = 0, mae_std = 0;
  double rmse_mean = 0, rmse_std = 0;
};

struct ExperimentGrid {
  std::vector<MetricReport> reports;
  std::vector<GridCell> aggregate() const;
};

// The three comparative experiments on freshly generated corpora, one per
// seed: family x {C,M,A,U} x horizon x env-toggle, each cell trained and
// scored on its test split. Pooled (U) cells also emit per-class breakdown
// rows (U-C/U-M/U-A) scored on the same vehicles as the clustered cells.
ExperimentGrid run_comparison_grid(const RunConfig& config);

void write_grid_csv(const std::string& path, const std::vector<GridCell>& cells);
std::vector<GridCell> read_grid_csv(const std::string& path);
void write_reports_csv(const std::string& path, const std::vector<MetricReport>& reports);

// Markdown tables in the published layout: one table per training regime,
// rows class x family, columns horizon x metric x env-toggle.
std::string render_report_markdown(const std::vector<GridCell>& cells);

struct SweepRow {
  double window_min = 0;
  int seed_count = 0;
  double mae_mean = 0, mae_std = 0;
  double rmse_mean = 0, rmse_std = 0;
};

// Env-window-length sweep: per window length, rebuild env sequences, retrain
// the pooled env-enabled model at the largest horizon, report test error.
std::vector<SweepRow> run_window_sweep(const RunConfig& config,
                                       const std::vector<double>& window_mins,
                                       int seeds);
void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows);

struct TraceRow {
  std::string vehicle_id;
  long anchor_m = 0;
  int offset_m = 0;
  double y_true = 0;
  double y_pred = 0;
};

void write_trace_csv(const std::string& path, const std::vector<TraceRow>& rows);

}  // namespace acp
