#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "accelpred/common.hpp"
#include "accelpred/config.hpp"
#include "accelpred/parallel.hpp"
#include "accelpred/pipeline.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int jobs = -1;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "Configuration file (INI)");
  cmd->add_option("--out", opts.out_dir, "Output directory (default: out)");
  cmd->add_option("--seed", opts.seed, "Root seed override")
      ->each([&](const std::string&) { opts.seed_set = true; });
  cmd->add_option("--jobs", opts.jobs, "Worker thread count (0 = runtime default)");
}

acp::RunConfig resolve_config(const CommonOpts& opts) {
  acp::RunConfig cfg = opts.config_path.empty()
                           ? acp::RunConfig{}
                           : acp::load_config_file(opts.config_path);
  if (opts.seed_set) cfg.seed = opts.seed;
  if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
  if (opts.jobs >= 0) cfg.jobs = opts.jobs;
  cfg.validate();
  acp::set_jobs(cfg.jobs);
  std::cerr << "# resolved configuration (seed " << cfg.seed << ")\n"
            << acp::to_ini(cfg) << std::flush;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tunnel-exit vehicle acceleration prediction pipeline"};
  app.require_subcommand(1);

  struct Sub {
    const char* name;
    const char* help;
    void (*run)(const acp::RunConfig&);
  };
  const Sub subs[] = {
      {"generate", "Generate a synthetic vehicle population (trajectory CSV + labels)",
       &acp::run_generate},
      {"preprocess", "Differentiate speed and resample tracks to the 1 m grid",
       &acp::run_preprocess},
      {"features", "Export the environmental percentile sequence CSV",
       &acp::run_features},
      {"train", "Train the configured models and write them with a manifest",
       &acp::run_train},
      {"predict", "Write per-condition prediction trace CSVs from trained models",
       &acp::run_predict},
      {"evaluate", "Run the seed-averaged comparison grid (and optional window sweep)",
       &acp::run_evaluate},
      {"report", "Render Markdown error tables from the grid CSV", &acp::run_report},
      {"pipeline", "Run every stage in order", &acp::run_pipeline},
  };

  CommonOpts opts;
  for (const auto& sub : subs) {
    CLI::App* cmd = app.add_subcommand(sub.name, sub.help);
    add_common(cmd, opts);
    cmd->callback([&opts, run = sub.run]() { run(resolve_config(opts)); });
  }
  // cluster returns the selected k and prints it
  {
    CLI::App* cmd = app.add_subcommand(
        "cluster", "Cluster drivers by style and pick k via the information criteria");
    add_common(cmd, opts);
    cmd->callback([&opts]() { acp::run_cluster(resolve_config(opts)); });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const acp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const acp::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const acp::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 4;
  } catch (const acp::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 5;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
