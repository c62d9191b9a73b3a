// Times the serial reference implementations against the OpenMP kernels and
// checks they produce identical results while at it.
#include <chrono>
#include <cstdio>
#include <functional>

#include "accelpred/clustering.hpp"
#include "accelpred/config.hpp"
#include "accelpred/env.hpp"
#include "accelpred/parallel.hpp"
#include "accelpred/pipeline.hpp"
#include "accelpred/synth.hpp"
#include "accelpred/trajectory.hpp"

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
  // warm-up once, then best-of-reps
  fn();
  double best = 1e30;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

void row(const char* name, double serial_ms, double parallel_ms, bool identical) {
  std::printf("%-28s %10.1f ms %10.1f ms %8.2fx   %s\n", name, serial_ms, parallel_ms,
              serial_ms / parallel_ms, identical ? "identical" : "MISMATCH");
}

bool profiles_equal(const std::vector<acp::SpatialProfile>& a,
                    const std::vector<acp::SpatialProfile>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].first_index != b[i].first_index || a[i].v_at != b[i].v_at ||
        a[i].a_at != b[i].a_at) {
      return false;
    }
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  int n_vehicles = 600;
  if (argc > 1) n_vehicles = std::atoi(argv[1]);
  const int reps = 3;

  acp::ScenarioSpec sc;
  sc.n_vehicles = n_vehicles;
  sc.duration = 3600.0;
  sc.seed = 7;
  const auto archetypes = acp::default_archetypes();

  std::printf("workers: %d, vehicles: %d\n\n", acp::worker_count(), n_vehicles);
  std::printf("%-28s %13s %13s %9s\n", "kernel", "serial", "openmp", "speedup");

  // population generation
  std::vector<acp::VehicleTrack> tracks_serial, tracks_parallel;
  const double gen_s =
      time_ms([&] { tracks_serial = acp::serial::generate_population(sc, archetypes); }, reps);
  const double gen_p =
      time_ms([&] { tracks_parallel = acp::generate_population(sc, archetypes); }, reps);
  bool same = tracks_serial.size() == tracks_parallel.size();
  for (std::size_t i = 0; same && i < tracks_serial.size(); ++i) {
    const auto& a = tracks_serial[i];
    const auto& b = tracks_parallel[i];
    same = a.vehicle_id == b.vehicle_id && a.samples.size() == b.samples.size();
    for (std::size_t j = 0; same && j < a.samples.size(); ++j) {
      same = a.samples[j].t == b.samples[j].t && a.samples[j].x == b.samples[j].x &&
             a.samples[j].v == b.samples[j].v;
    }
  }
  row("generate_population", gen_s, gen_p, same);

  // spatial resampling
  std::vector<acp::SpatialProfile> prof_serial, prof_parallel;
  const double res_s =
      time_ms([&] { prof_serial = acp::serial::resample_population(tracks_serial); }, reps);
  const double res_p =
      time_ms([&] { prof_parallel = acp::resample_population(tracks_serial); }, reps);
  row("resample_population", res_s, res_p, profiles_equal(prof_serial, prof_parallel));

  // env percentile construction over the whole recording
  double window_end = 0.0;
  for (const auto& p : prof_serial) window_end = std::max(window_end, p.entry_time);
  window_end += 1.0;
  acp::EnvSequence env_serial, env_parallel;
  const long lo = acp::section_grid_first(sc), hi = acp::section_grid_last(sc);
  const double env_s = time_ms(
      [&] {
        env_serial = acp::serial::build_env_sequence(prof_serial, window_end,
                                                     window_end, lo, hi, 5);
      },
      reps);
  const double env_p = time_ms(
      [&] {
        env_parallel =
            acp::build_env_sequence(prof_serial, window_end, window_end, lo, hi, 5);
      },
      reps);
  row("build_env_sequence", env_s, env_p,
      env_serial.rows == env_parallel.rows && env_serial.support == env_parallel.support);

  // k sweep (select_k parallelizes over k internally)
  std::vector<acp::DriverFeatures> features;
  for (const auto& p : prof_serial) features.push_back(acp::compute_features(p));
  acp::SelectionResult sel_serial, sel_parallel;
  const int default_workers = acp::worker_count();
  const double km_s = time_ms(
      [&] {
        acp::set_jobs(1);
        sel_serial = acp::select_k(features, 1, 10, acp::Rng(11), 10);
      },
      reps);
  acp::set_jobs(default_workers);
  const double km_p = time_ms(
      [&] { sel_parallel = acp::select_k(features, 1, 10, acp::Rng(11), 10); }, reps);
  bool sel_same = sel_serial.best_k == sel_parallel.best_k &&
                  sel_serial.per_k.size() == sel_parallel.per_k.size();
  for (std::size_t i = 0; sel_same && i < sel_serial.per_k.size(); ++i) {
    sel_same = sel_serial.per_k[i].mean_min_distance ==
               sel_parallel.per_k[i].mean_min_distance;
  }
  row("select_k sweep (k=1..10)", km_s, km_p, sel_same);

  return 0;
}
