#include "accelpred/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "accelpred/common.hpp"
#include "accelpred/io.hpp"

namespace acp {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Setter {
  std::function<void(const std::string&)> apply;
};

double to_double(const std::string& v, const std::string& where) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(where + ": expected a number, got '" + v + "'");
  }
}

long to_long(const std::string& v, const std::string& where) {
  long out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError(where + ": expected an integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& v, const std::string& where) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(where + ": expected a boolean, got '" + v + "'");
}

std::vector<std::string> to_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

ArchetypeSpec* archetype_by_label(RunConfig& cfg, const std::string& label) {
  for (auto& a : cfg.archetypes) {
    if (a.label == label) return &a;
  }
  cfg.archetypes.push_back(ArchetypeSpec{.label = label});
  return &cfg.archetypes.back();
}

}  // namespace

void RunConfig::validate() const {
  if (std::abs(split_train + split_test + split_val - 1.0) > 1e-9) {
    throw ConfigError("dataset: split ratios sum to " +
                      std::to_string(split_train + split_test + split_val) +
                      ", expected 1");
  }
  if (history_m < 1) throw ConfigError("dataset: history_m must be >= 1");
  if (anchor_stride_m < 1) throw ConfigError("dataset: anchor_stride_m must be >= 1");
  if (horizons.empty()) throw ConfigError("model: horizons must be non-empty");
  for (int h : horizons) {
    if (h < 1) throw ConfigError("model: horizons must be positive");
  }
  if (window_min <= 0.0) throw ConfigError("env: window_min must be positive");
  if (grid_seeds < 1) throw ConfigError("eval: grid_seeds must be >= 1");
  if (families.empty()) throw ConfigError("eval: families must be non-empty");
  for (const auto& f : families) parse_model_kind(f);
  if (!clustered && !unclustered) {
    throw ConfigError("eval: at least one of clustered/unclustered required");
  }
  if (!env_on && !env_off) {
    throw ConfigError("eval: at least one of env_on/env_off required");
  }
  validate_scenario(scenario, archetypes);
  // model-shape constraints surface early, on the largest horizon
  model_config(ModelKind::seq2seq, max_horizon(), env_on, 0).validate();
}

int RunConfig::max_horizon() const {
  int m = horizons.front();
  for (int h : horizons) m = std::max(m, h);
  return m;
}

ModelConfig RunConfig::model_config(ModelKind kind, int horizon, bool env,
                                    std::uint64_t init_seed) const {
  ModelConfig mc;
  mc.kind = kind;
  mc.history_len = history_m;
  mc.horizon = horizon;
  mc.env_input = env;
  mc.env_span = env_span;
  mc.hidden = hidden;
  mc.attn_width = attn_width;
  mc.align_width = align_width;
  mc.ann_hidden = ann_hidden;
  mc.conv_channels = conv_channels;
  mc.conv_kernel = conv_kernel;
  mc.dropout = dropout;
  mc.teacher_forcing = teacher_forcing;
  mc.init_seed = init_seed;
  return mc;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig tc;
  tc.max_steps = max_steps;
  tc.batch = batch;
  tc.eval_every = eval_every;
  tc.patience = patience;
  tc.lr = lr;
  return tc;
}

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  std::stringstream ss(text);
  std::string line;
  std::string section;
  std::size_t line_no = 0;

  while (std::getline(ss, line)) {
    ++line_no;
    const std::string where = origin + ":" + std::to_string(line_no);
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError(where + ": unterminated section header");
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(where + ": expected 'key = value'");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");

    auto unknown = [&]() -> Setter {
      throw ConfigError(where + ": unknown key '" + key + "' in section [" + section + "]");
    };

    Setter setter;
    if (section == "run") {
      if (key == "seed") setter.apply = [&](const std::string& v) {
        cfg.seed = static_cast<std::uint64_t>(to_long(v, where));
      };
      else if (key == "jobs") setter.apply = [&](const std::string& v) {
        cfg.jobs = static_cast<int>(to_long(v, where));
      };
      else if (key == "out") setter.apply = [&](const std::string& v) { cfg.out_dir = v; };
      else setter = unknown();
    } else if (section == "scenario") {
      auto& sc = cfg.scenario;
      if (key == "n_vehicles") setter.apply = [&](const std::string& v) {
        sc.n_vehicles = static_cast<int>(to_long(v, where));
      };
      else if (key == "duration_s") setter.apply = [&](const std::string& v) {
        sc.duration = to_double(v, where);
      };
      else if (key == "section_start_m") setter.apply = [&](const std::string& v) {
        sc.section_start = to_double(v, where);
      };
      else if (key == "section_end_m") setter.apply = [&](const std::string& v) {
        sc.section_end = to_double(v, where);
      };
      else if (key == "speed_limit_mps") setter.apply = [&](const std::string& v) {
        sc.speed_limit = to_double(v, where);
      };
      else if (key == "decel_onset_m") setter.apply = [&](const std::string& v) {
        sc.decel_onset = to_double(v, where);
      };
      else if (key == "accel_onset_m") setter.apply = [&](const std::string& v) {
        sc.accel_onset = to_double(v, where);
      };
      else if (key == "exit_accel_m") setter.apply = [&](const std::string& v) {
        sc.exit_accel_position = to_double(v, where);
      };
      else if (key == "sample_interval_s") setter.apply = [&](const std::string& v) {
        sc.sample_interval = to_double(v, where);
      };
      else setter = unknown();
    } else if (section.rfind("archetype.", 0) == 0) {
      ArchetypeSpec* a = archetype_by_label(cfg, section.substr(10));
      if (key == "mean_speed") setter.apply = [&, a](const std::string& v) {
        a->mean_speed = to_double(v, where);
      };
      else if (key == "mean_accel") setter.apply = [&, a](const std::string& v) {
        a->mean_accel = to_double(v, where);
      };
      else if (key == "accel_range") setter.apply = [&, a](const std::string& v) {
        a->accel_range = to_double(v, where);
      };
      else if (key == "weight") setter.apply = [&, a](const std::string& v) {
        a->mixture_weight = to_double(v, where);
      };
      else if (key == "noise_scale") setter.apply = [&, a](const std::string& v) {
        a->noise_scale = to_double(v, where);
      };
      else setter = unknown();
    } else if (section == "env") {
      if (key == "window_min") setter.apply = [&](const std::string& v) {
        cfg.window_min = to_double(v, where);
      };
      else if (key == "min_support") setter.apply = [&](const std::string& v) {
        cfg.min_support = static_cast<std::uint32_t>(to_long(v, where));
      };
      else if (key == "span") setter.apply = [&](const std::string& v) {
        if (v == "prediction") cfg.env_span = EnvSpan::prediction;
        else if (v == "history") cfg.env_span = EnvSpan::history;
        else throw ConfigError(where + ": span must be prediction|history");
      };
      else setter = unknown();
    } else if (section == "dataset") {
      if (key == "history_m") setter.apply = [&](const std::string& v) {
        cfg.history_m = static_cast<int>(to_long(v, where));
      };
      else if (key == "anchor_stride_m") setter.apply = [&](const std::string& v) {
        cfg.anchor_stride_m = static_cast<int>(to_long(v, where));
      };
      else if (key == "split") setter.apply = [&](const std::string& v) {
        const auto parts = to_list(v);
        if (parts.size() != 3) {
          throw ConfigError(where + ": split needs three comma-separated ratios");
        }
        cfg.split_train = to_double(parts[0], where);
        cfg.split_test = to_double(parts[1], where);
        cfg.split_val = to_double(parts[2], where);
      };
      else setter = unknown();
    } else if (section == "clustering") {
      if (key == "k_min") setter.apply = [&](const std::string& v) {
        cfg.k_min = static_cast<int>(to_long(v, where));
      };
      else if (key == "k_max") setter.apply = [&](const std::string& v) {
        cfg.k_max = static_cast<int>(to_long(v, where));
      };
      else if (key == "restarts") setter.apply = [&](const std::string& v) {
        cfg.restarts = static_cast<int>(to_long(v, where));
      };
      else if (key == "max_iters") setter.apply = [&](const std::string& v) {
        cfg.max_iters = static_cast<int>(to_long(v, where));
      };
      else if (key == "literal_bic") setter.apply = [&](const std::string& v) {
        cfg.literal_bic = to_bool(v, where);
      };
      else setter = unknown();
    } else if (section == "model") {
      if (key == "hidden") setter.apply = [&](const std::string& v) {
        cfg.hidden = static_cast<int>(to_long(v, where));
      };
      else if (key == "attn_width") setter.apply = [&](const std::string& v) {
        cfg.attn_width = static_cast<int>(to_long(v, where));
      };
      else if (key == "align_width") setter.apply = [&](const std::string& v) {
        cfg.align_width = static_cast<int>(to_long(v, where));
      };
      else if (key == "ann_hidden") setter.apply = [&](const std::string& v) {
        cfg.ann_hidden = static_cast<int>(to_long(v, where));
      };
      else if (key == "conv_channels") setter.apply = [&](const std::string& v) {
        cfg.conv_channels = static_cast<int>(to_long(v, where));
      };
      else if (key == "conv_kernel") setter.apply = [&](const std::string& v) {
        cfg.conv_kernel = static_cast<int>(to_long(v, where));
      };
      else if (key == "dropout") setter.apply = [&](const std::string& v) {
        cfg.dropout = to_double(v, where);
      };
      else if (key == "teacher_forcing") setter.apply = [&](const std::string& v) {
        cfg.teacher_forcing = to_double(v, where);
      };
      else if (key == "lr") setter.apply = [&](const std::string& v) {
        cfg.lr = to_double(v, where);
      };
      else if (key == "batch") setter.apply = [&](const std::string& v) {
        cfg.batch = static_cast<int>(to_long(v, where));
      };
      else if (key == "max_steps") setter.apply = [&](const std::string& v) {
        cfg.max_steps = static_cast<int>(to_long(v, where));
      };
      else if (key == "eval_every") setter.apply = [&](const std::string& v) {
        cfg.eval_every = static_cast<int>(to_long(v, where));
      };
      else if (key == "patience") setter.apply = [&](const std::string& v) {
        cfg.patience = static_cast<int>(to_long(v, where));
      };
      else if (key == "horizons") setter.apply = [&](const std::string& v) {
        cfg.horizons.clear();
        for (const auto& s : to_list(v)) {
          cfg.horizons.push_back(static_cast<int>(to_long(s, where)));
        }
      };
      else setter = unknown();
    } else if (section == "eval") {
      if (key == "families") setter.apply = [&](const std::string& v) {
        cfg.families = to_list(v);
      };
      else if (key == "grid_seeds") setter.apply = [&](const std::string& v) {
        cfg.grid_seeds = static_cast<int>(to_long(v, where));
      };
      else if (key == "clustered") setter.apply = [&](const std::string& v) {
        cfg.clustered = to_bool(v, where);
      };
      else if (key == "unclustered") setter.apply = [&](const std::string& v) {
        cfg.unclustered = to_bool(v, where);
      };
      else if (key == "env_on") setter.apply = [&](const std::string& v) {
        cfg.env_on = to_bool(v, where);
      };
      else if (key == "env_off") setter.apply = [&](const std::string& v) {
        cfg.env_off = to_bool(v, where);
      };
      else if (key == "trace_vehicles") setter.apply = [&](const std::string& v) {
        cfg.trace_vehicles = static_cast<int>(to_long(v, where));
      };
      else if (key == "sweep_windows") setter.apply = [&](const std::string& v) {
        cfg.sweep_windows.clear();
        for (const auto& s : to_list(v)) cfg.sweep_windows.push_back(to_double(s, where));
      };
      else if (key == "sweep_seeds") setter.apply = [&](const std::string& v) {
        cfg.sweep_seeds = static_cast<int>(to_long(v, where));
      };
      else setter = unknown();
    } else {
      throw ConfigError(where + ": unknown section [" + section + "]");
    }
    setter.apply(value);
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

std::string to_ini(const RunConfig& c) {
  std::ostringstream out;
  out << "[run]\n";
  out << "seed = " << c.seed << "\n";
  out << "jobs = " << c.jobs << "\n";
  out << "out = " << c.out_dir << "\n\n";

  out << "[scenario]\n";
  out << "n_vehicles = " << c.scenario.n_vehicles << "\n";
  out << "duration_s = " << format_double(c.scenario.duration) << "\n";
  out << "section_start_m = " << format_double(c.scenario.section_start) << "\n";
  out << "section_end_m = " << format_double(c.scenario.section_end) << "\n";
  out << "speed_limit_mps = " << format_double(c.scenario.speed_limit) << "\n";
  out << "decel_onset_m = " << format_double(c.scenario.decel_onset) << "\n";
  out << "accel_onset_m = " << format_double(c.scenario.accel_onset) << "\n";
  out << "exit_accel_m = " << format_double(c.scenario.exit_accel_position) << "\n";
  out << "sample_interval_s = " << format_double(c.scenario.sample_interval) << "\n\n";

  for (const auto& a : c.archetypes) {
    out << "[archetype." << a.label << "]\n";
    out << "mean_speed = " << format_double(a.mean_speed) << "\n";
    out << "mean_accel = " << format_double(a.mean_accel) << "\n";
    out << "accel_range = " << format_double(a.accel_range) << "\n";
    out << "weight = " << format_double(a.mixture_weight) << "\n";
    out << "noise_scale = " << format_double(a.noise_scale) << "\n\n";
  }

  out << "[env]\n";
  out << "window_min = " << format_double(c.window_min) << "\n";
  out << "min_support = " << c.min_support << "\n";
  out << "span = " << (c.env_span == EnvSpan::prediction ? "prediction" : "history")
      << "\n\n";

  out << "[dataset]\n";
  out << "history_m = " << c.history_m << "\n";
  out << "anchor_stride_m = " << c.anchor_stride_m << "\n";
  out << "split = " << format_double(c.split_train) << ", " << format_double(c.split_test)
      << ", " << format_double(c.split_val) << "\n\n";

  out << "[clustering]\n";
  out << "k_min = " << c.k_min << "\n";
  out << "k_max = " << c.k_max << "\n";
  out << "restarts = " << c.restarts << "\n";
  out << "max_iters = " << c.max_iters << "\n";
  out << "literal_bic = " << (c.literal_bic ? "true" : "false") << "\n\n";

  out << "[model]\n";
  out << "hidden = " << c.hidden << "\n";
  out << "attn_width = " << c.attn_width << "\n";
  out << "align_width = " << c.align_width << "\n";
  out << "ann_hidden = " << c.ann_hidden << "\n";
  out << "conv_channels = " << c.conv_channels << "\n";
  out << "conv_kernel = " << c.conv_kernel << "\n";
  out << "dropout = " << format_double(c.dropout) << "\n";
  out << "teacher_forcing = " << format_double(c.teacher_forcing) << "\n";
  out << "lr = " << format_double(c.lr) << "\n";
  out << "batch = " << c.batch << "\n";
  out << "max_steps = " << c.max_steps << "\n";
  out << "eval_every = " << c.eval_every << "\n";
  out << "patience = " << c.patience << "\n";
  out << "horizons = ";
  for (std::size_t i = 0; i < c.horizons.size(); ++i) {
    out << (i ? ", " : "") << c.horizons[i];
  }
  out << "\n\n";

  out << "[eval]\n";
  out << "families = ";
  for (std::size_t i = 0; i < c.families.size(); ++i) {
    out << (i ? ", " : "") << c.families[i];
  }
  out << "\n";
  out << "grid_seeds = " << c.grid_seeds << "\n";
  out << "clustered = " << (c.clustered ? "true" : "false") << "\n";
  out << "unclustered = " << (c.unclustered ? "true" : "false") << "\n";
  out << "env_on = " << (c.env_on ? "true" : "false") << "\n";
  out << "env_off = " << (c.env_off ? "true" : "false") << "\n";
  out << "trace_vehicles = " << c.trace_vehicles << "\n";
  if (!c.sweep_windows.empty()) {
    out << "sweep_windows = ";
    for (std::size_t i = 0; i < c.sweep_windows.size(); ++i) {
      out << (i ? ", " : "") << format_double(c.sweep_windows[i]);
    }
    out << "\n";
  }
  out << "sweep_seeds = " << c.sweep_seeds << "\n";
  return out.str();
}

}  // namespace acp
