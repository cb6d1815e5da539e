// Command-line driver for the synthesis / certification / Monte Carlo pipeline.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "twip/config.hpp"
#include "twip/errors.hpp"
#include "twip/pipeline.hpp"

namespace {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigError = 2,
  kDependencyError = 3,
  kCertificationFailure = 4,
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-wheeled inverted pendulum: controller synthesis, certified invariant set "
               "and Monte Carlo region-of-attraction estimation"};
  app.fallthrough();
  app.require_subcommand(1, 1);

  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> controller;
  std::optional<int> samples;
  std::optional<unsigned> threads;
  app.add_option("--config", config_path, "JSON configuration file (defaults when omitted)");
  app.add_option("--out", out_dir, "output directory for artifacts");
  app.add_option("--seed", seed, "Monte Carlo seed");
  app.add_option("--controller", controller, "controller for the Monte Carlo run")
      ->check(CLI::IsMember({"lqr", "mpc", "ctmpc", "all"}));
  app.add_option("--samples", samples, "number of Monte Carlo samples");
  app.add_option("--threads", threads, "worker threads (0 = all cores)");

  CLI::App* synth = app.add_subcommand("synth", "synthesize LQR, MPC and tube MPC");
  CLI::App* certify = app.add_subcommand("certify", "build and verify the certified invariant set");
  CLI::App* mc = app.add_subcommand("mc", "run the Monte Carlo campaign");
  CLI::App* report = app.add_subcommand("report", "write report.md and scatter CSVs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    twip::PipelineConfig cfg = config_path.empty() ? twip::PipelineConfig{} : twip::load_config(config_path);
    if (out_dir) cfg.output_dir = *out_dir;
    if (seed) cfg.mc.run.seed = *seed;
    if (controller) cfg.mc.controller = *controller;
    if (samples) cfg.mc.run.n_samples = *samples;
    if (threads) cfg.threads = *threads;
    cfg.validate();

    twip::StageResult res;
    if (synth->parsed()) {
      res = twip::cmd_synth(cfg, cfg.output_dir);
    } else if (certify->parsed()) {
      res = twip::cmd_certify(cfg, cfg.output_dir);
    } else if (mc->parsed()) {
      res = twip::cmd_mc(cfg, cfg.output_dir);
    } else if (report->parsed()) {
      res = twip::cmd_report(cfg, cfg.output_dir);
    }
    std::cout << res.artifact.string() << (res.cache_hit ? " (cached)" : "") << "\n";
    return kOk;
  } catch (const twip::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const twip::DependencyError& e) {
    std::cerr << "dependency error: " << e.what() << "\n";
    return kDependencyError;
  } catch (const twip::CertificationError& e) {
    std::cerr << "certification failure: " << e.what() << "\n";
    return kCertificationFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
}
