// pepcmp sweep | best | validate
//
// Exit codes: 0 success, 1 configuration or output error, 2 solver failure
// in some sample when --strict is given.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "pepcmp/config.hpp"
#include "pepcmp/emit.hpp"
#include "pepcmp/sweep.hpp"

namespace fs = std::filesystem;
using namespace pepcmp;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kSolverFailure = 2;

int default_workers() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

std::string hex(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string config_stem(const std::string& path, const ExperimentConfig& cfg) {
  if (cfg.name != "sweep") return cfg.name;
  return fs::path(path).stem().string();
}

int run_validate(const std::string& path) {
  const ExperimentConfig cfg = load_config(path);
  std::cout << "config " << path << ": " << cfg.variants.size() << " problem(s), " << cfg.methods.size()
            << " method(s)\n";
  for (const auto& v : cfg.variants) {
    std::cout << "problem" << (v.label.empty() ? "" : " " + v.label) << " fingerprint " << hex(fingerprint(v.problem))
              << "\n";
    for (MethodKind m : cfg.methods) {
      const auto& grid = cfg.grid_for(m);
      int ok = 0;
      for (double tau : grid) {
        MethodSpec spec{m, tau, cfg.sigma_for(m).sigma(m, tau, v.problem), cfg.k_steps};
        if (validate(spec, v.problem).empty()) ++ok;
      }
      std::cout << "  " << to_string(m) << ": tau range " << admissible_step_range(m, v.problem).describe() << ", "
                << ok << "/" << grid.size() << " grid points admissible\n";
    }
  }
  std::cout << "ok\n";
  return kOk;
}

int run_sweep(const std::string& path, const std::string& out_dir, int workers, const std::string& formats,
              bool strict, const std::string& sdpa_dir) {
  const ExperimentConfig cfg = load_config(path);
  bool want_csv = false, want_svg = false;
  std::stringstream fs_list(formats);
  for (std::string f; std::getline(fs_list, f, ',');) {
    if (f == "csv") want_csv = true;
    else if (f == "svg") want_svg = true;
    else throw ConfigError("--format: unknown format '" + f + "'");
  }
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + out_dir + "': " + ec.message());
  if (!sdpa_dir.empty()) {
    fs::create_directories(sdpa_dir, ec);
    if (ec) throw std::runtime_error("cannot create dump directory '" + sdpa_dir + "': " + ec.message());
  }

  std::mutex log_mutex;
  SweepOptions opt;
  opt.workers = workers;
  opt.sdpa_dir = sdpa_dir;
  opt.log = [&](const std::string& s) {
    std::lock_guard<std::mutex> lock(log_mutex);
    std::cerr << s << "\n";
  };
  const auto curves = sweep(cfg, opt);
  const std::string stem = config_stem(path, cfg);
  if (want_csv) {
    const fs::path p = fs::path(out_dir) / (stem + ".csv");
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    write_csv(curves, os);
    std::cout << "wrote " << p.string() << "\n";
  }
  if (want_svg) {
    const fs::path p = fs::path(out_dir) / (stem + ".svg");
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    write_svg(curves, os, cfg.log_axis, stem);
    std::cout << "wrote " << p.string() << "\n";
  }
  if (any_failure(curves)) {
    std::cerr << "warning: some samples failed to solve\n";
    if (strict) return kSolverFailure;
  }
  return kOk;
}

int run_best(const std::string& path, int workers, bool strict) {
  const ExperimentConfig cfg = load_config(path);
  if (!cfg.best) throw ConfigError(path + ": no [best] section");
  bool failures = false;
  for (const auto& v : cfg.variants) {
    const BestResult r = find_best(cfg, v, *cfg.best, workers);
    std::cout << "# problem" << (v.label.empty() ? "" : " " + v.label) << " fingerprint "
              << hex(fingerprint(v.problem)) << "\n";
    for (const auto& c : r.per_method) {
      std::cout << to_string(c.method) << " tau=" << format_g12(c.tau) << " rate=" << format_g12(c.rate) << "\n";
      failures = failures || c.failures;
    }
    std::cout << "best " << to_string(r.best.method) << v.label << " tau=" << format_g12(r.best.tau)
              << " rate=" << format_g12(r.best.rate) << "\n";
  }
  if (failures) {
    std::cerr << "warning: some evaluations failed to solve\n";
    if (strict) return kSolverFailure;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Worst-case contraction factors of splitting methods"};
  app.require_subcommand(1);

  std::string config, out_dir, formats = "csv", sdpa_dir;
  int workers = default_workers();
  bool strict = false;

  auto* sweep_cmd = app.add_subcommand("sweep", "Compute rate curves and write CSV/SVG");
  sweep_cmd->add_option("--config", config, "Experiment configuration file")->required();
  sweep_cmd->add_option("--out", out_dir, "Output directory")->required();
  sweep_cmd->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--format", formats, "Comma-separated output formats: csv, svg");
  sweep_cmd->add_flag("--strict", strict, "Exit with status 2 if any solve fails");
  sweep_cmd->add_option("--dump-sdpa", sdpa_dir, "Write every lifted problem in SDPA sparse format to this directory");

  auto* best_cmd = app.add_subcommand("best", "Search the best (method, tau) by PEP");
  best_cmd->add_option("--config", config, "Experiment configuration file")->required();
  best_cmd->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  best_cmd->add_flag("--strict", strict, "Exit with status 2 if any solve fails");

  auto* validate_cmd = app.add_subcommand("validate", "Check a configuration file");
  validate_cmd->add_option("--config", config, "Experiment configuration file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*sweep_cmd) return run_sweep(config, out_dir, workers, formats, strict, sdpa_dir);
    if (*best_cmd) return run_best(config, workers, strict);
    return run_validate(config);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
}
