// sgv: synthetic data generation, retrieval + re-ranking runs, runtime
// benchmarks and report printing.
//
// Exit codes: 0 success, 1 usage/config error, 2 runtime failure.

#include "sgv/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace {

constexpr int kUsageError = 1;
constexpr int kRuntimeError = 2;

struct CommonFlags {
  std::string config;
  std::optional<std::string> strategy;
  std::vector<std::size_t> n_topk;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool multi_topk) {
  cmd->add_option("--config", f.config, "key = value configuration file");
  cmd->add_option("--strategy", f.strategy, "none | spectralgv | ransac_rir | average_qe | alpha_qe");
  if (multi_topk) {
    cmd->add_option("--n-topk", f.n_topk, "candidate depths to benchmark (repeatable)");
  } else {
    cmd->add_option("--n-topk", f.n_topk, "number of candidates to re-rank")->expected(1);
  }
  cmd->add_option("--seed", f.seed, "world seed (synth) or RANSAC seed (run/bench)");
  cmd->add_option("--threads", f.threads, "worker threads, 0 = all cores");
  cmd->add_option("--out", f.out, "output directory (synth) or results file (run/bench)");
}

sgv::RunConfig resolve(const CommonFlags& f, bool multi_topk) {
  sgv::RunConfig cfg = f.config.empty() ? sgv::RunConfig{} : sgv::load_config(f.config);
  if (f.strategy) {
    const auto s = sgv::parse_strategy(*f.strategy);
    if (!s) throw sgv::Error(sgv::ErrorCode::InvalidConfig, "unknown strategy '" + *f.strategy + "'");
    cfg.strategy = *s;
    cfg.bench_strategies = {*s};
  }
  if (!f.n_topk.empty()) {
    if (multi_topk) {
      cfg.bench_n_topk = f.n_topk;
    } else {
      cfg.rerank.n_topk = f.n_topk.front();
    }
  }
  if (f.seed) cfg.seed = cfg.world.seed = *f.seed;
  if (f.threads) cfg.threads = *f.threads;
  if (f.out) cfg.out = *f.out;
  return cfg;
}

void require_manifest(const sgv::RunConfig& cfg) {
  if (cfg.manifest.empty()) throw sgv::Error(sgv::ErrorCode::InvalidConfig, "no manifest given (config key 'manifest')");
  if (!std::filesystem::exists(cfg.manifest)) {
    throw sgv::Error(sgv::ErrorCode::InvalidConfig, "manifest '" + cfg.manifest.string() + "' does not exist");
  }
}

int report_error(const sgv::Error& e) {
  std::cerr << "error: " << e.what() << '\n';
  switch (e.code()) {
    case sgv::ErrorCode::InvalidConfig:
    case sgv::ErrorCode::InvalidArgument:
      return kUsageError;
    default:
      return kRuntimeError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral geometric verification for point-cloud retrieval re-ranking"};
  app.require_subcommand(1);

  CommonFlags synth_flags, run_flags, bench_flags;
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset (archives + manifest)");
  add_common(synth, synth_flags, false);
  auto* run = app.add_subcommand("run", "retrieve, re-rank, localize and evaluate every query");
  add_common(run, run_flags, false);
  auto* bench = app.add_subcommand("bench", "re-rank runtime versus n_topk per strategy");
  add_common(bench, bench_flags, true);
  auto* report = app.add_subcommand("report", "pretty-print a results file");
  std::string report_path;
  bool verify = false;
  report->add_option("file", report_path, "results file")->required();
  report->add_flag("--verify", verify, "recompute the summary from the per-query records");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (*synth) {
      const sgv::RunConfig cfg = resolve(synth_flags, false);
      if (cfg.out.empty()) throw sgv::Error(sgv::ErrorCode::InvalidConfig, "synth needs --out <dir>");
      cfg.world.validate();
      const auto world = sgv::generate_world(cfg.world);
      std::cout << sgv::export_world(world, cfg.out).string() << '\n';
      return 0;
    }
    if (*run) {
      const sgv::RunConfig cfg = resolve(run_flags, false);
      require_manifest(cfg);
      if (cfg.out.empty()) throw sgv::Error(sgv::ErrorCode::InvalidConfig, "run needs --out <file>");
      const auto data = sgv::load_dataset(cfg.manifest);
      const auto result = sgv::run_pipeline(data, cfg);
      sgv::write_results(cfg.out, result.results);
      std::cout << sgv::format_report(result.results);
      return 0;
    }
    if (*bench) {
      const sgv::RunConfig cfg = resolve(bench_flags, true);
      require_manifest(cfg);
      const auto data = sgv::load_dataset(cfg.manifest);
      const auto result = sgv::run_bench(data, cfg);
      if (!cfg.out.empty()) sgv::write_results(cfg.out, result.results);
      std::cout << sgv::format_bench_table(result.rows);
      std::cout << "time ratios: " << result.results.summary->at("time_ratio").dump() << '\n';
      return 0;
    }
    if (*report) {
      const auto file = sgv::read_results(report_path);
      std::cout << sgv::format_report(file);
      if (verify && file.summary && file.header.value("command", "") == "run") {
        if (sgv::recompute_summary(file) != *file.summary) {
          std::cerr << "summary does not match the per-query records\n";
          return kRuntimeError;
        }
        std::cout << "summary verified against " << file.records.size() << " query records\n";
      }
      return 0;
    }
  } catch (const sgv::Error& e) {
    return report_error(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kUsageError;
}
