#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"
#include "twip/certification.hpp"
#include "twip/config.hpp"
#include "twip/controllers.hpp"
#include "twip/mc_estimator.hpp"

namespace twip {

/// Everything the controllers need, built from one configuration.
struct SynthesisBundle {
  LinearDiscreteModel model;
  LqrDesign lqr;
  std::optional<MpcPolicy> mpc;
  std::optional<CtmpcPolicy> ctmpc;
  double gamma_bound = 0.0;  ///< of the LQR closed loop with Q = I
};

SynthesisBundle synthesize(const PipelineConfig& cfg);

nlohmann::json synthesis_report(const SynthesisBundle& bundle, const PipelineConfig& cfg);

nlohmann::json polytope_json(const Polytope& p);
Polytope polytope_from_json(const nlohmann::json& j);
nlohmann::json matrix_json(const Eigen::MatrixXd& M);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);

nlohmann::json certified_set_json(const CertifiedInvariantSet& set);
CertifiedInvariantSet certified_set_from_json(const nlohmann::json& j);

struct StageResult {
  std::filesystem::path artifact;
  bool cache_hit = false;
};

/// Artifact file names inside the output directory.
inline constexpr const char* kSynthesisFile = "synthesis.json";
inline constexpr const char* kCertificationFile = "certification.json";
inline constexpr const char* kMcSummaryFile = "mc_summary.json";
inline constexpr const char* kMcSamplesFile = "mc_samples.csv";
inline constexpr const char* kReportFile = "report.md";

/// Each stage skips its work when its artifact already carries the hash of
/// the configuration subtree it depends on. Missing or stale upstream
/// artifacts raise DependencyError naming the subcommand to run first.
StageResult cmd_synth(const PipelineConfig& cfg, const std::filesystem::path& out_dir);

/// Writes the report even when certification fails, then throws
/// CertificationError.
StageResult cmd_certify(const PipelineConfig& cfg, const std::filesystem::path& out_dir);
StageResult cmd_mc(const PipelineConfig& cfg, const std::filesystem::path& out_dir);
StageResult cmd_report(const PipelineConfig& cfg, const std::filesystem::path& out_dir);

/// Rebuilds the policies from the stored synthesis artifact.
SynthesisBundle load_synthesis(const PipelineConfig& cfg, const std::filesystem::path& out_dir);
CertifiedInvariantSet load_certified_set(const PipelineConfig& cfg,
                                         const std::filesystem::path& out_dir);

}  // namespace twip
