#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>

#include "json.hpp"

#include "twip/certification.hpp"
#include "twip/controllers.hpp"
#include "twip/mc_estimator.hpp"
#include "twip/model.hpp"

namespace twip {

struct LqrConfig {
  /// Bryson-style weights w / (scale)^2 with scales 0.1 m, 0.2 m/s, 10 deg
  /// and 90 deg/s.
  static Eigen::Vector4d default_q_diag() {
    const double deg = std::numbers::pi / 180.0;
    return {10.0 / (0.1 * 0.1), 5.0 / (0.2 * 0.2), 50.0 / std::pow(10.0 * deg, 2),
            0.1 / std::pow(90.0 * deg, 2)};
  }

  Eigen::Vector4d q_diag = default_q_diag();
  double r = 250.0 / (2.5 * 2.5);

  Matrix4 Q() const { return q_diag.asDiagonal(); }
};

struct MpcConfig {
  int horizon = 20;
  double u_max = 2.2;
  double max_velocity = 0.5;
  double max_pitch = 0.75;
  double max_pitch_rate = 5.5;
  double slack_weight = 1e5;
};

struct CtmpcConfig {
  double alpha = 0.815;
  double w_max = 0.075;
  double slack_weight = 1e4;
};

struct CertificationConfig {
  double gamma_margin = 0.99;
  double safety = 0.99;
  double r_max = 1.0;
  int bisection_steps = 20;
  int sphere_samples = 100000;
  int ball_samples = 10000;
  std::uint64_t seed = 7;
  std::uint64_t revalidation_samples = 1000000;
  std::uint64_t revalidation_seed = 8;
  std::uint64_t decrease_samples = 100000;
};

struct MonteCarloConfig {
  McConfig run;
  std::string controller = "lqr";  ///< lqr, mpc, ctmpc or all
  /// Samples (a prefix of the full list) used for the predictive controllers
  /// when controller == "all"; 0 runs them on every sample.
  int predictive_samples = 500;
};

struct PipelineConfig {
  TwipParams model;
  double Ts = 0.01;
  int substeps = 1;
  LqrConfig lqr;
  MpcConfig mpc;
  CtmpcConfig ctmpc;
  CertificationConfig certification;
  MonteCarloConfig mc;
  std::string output_dir = "out";
  unsigned threads = 0;  ///< 0 = all cores; never affects results

  /// Throws ConfigError describing the first invalid field.
  void validate() const;

  PredictiveSettings predictive_settings() const;
  CtmpcSettings ctmpc_settings() const;
  CertificationOptions certification_options() const;
  McConfig mc_config() const;
};

nlohmann::json to_json(const PipelineConfig& cfg);

/// Missing keys keep their defaults; unknown keys and wrong types raise
/// ConfigError. The result is validated.
PipelineConfig config_from_json(const nlohmann::json& j);
PipelineConfig load_config(const std::string& path);

/// Content hashes of the configuration subtrees each stage depends on.
std::string synthesis_hash(const PipelineConfig& cfg);
std::string certification_hash(const PipelineConfig& cfg);
std::string mc_hash(const PipelineConfig& cfg);

/// FNV-1a of the text, 16 hex digits.
std::string fnv1a_hex(const std::string& text);

}  // namespace twip
