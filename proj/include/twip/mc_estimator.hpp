#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "twip/certification.hpp"
#include "twip/controllers.hpp"
#include "twip/geometry.hpp"
#include "twip/model.hpp"

namespace twip {

struct McConfig {
  Interval velocity{-1.0, 1.0};
  Interval pitch{-1.5, 1.5};
  Interval pitch_rate{-1.5, 1.5};
  int n_samples = 5000;
  double horizon = 20.0;  ///< [s]
  double Ts = 0.01;
  int substeps = 1;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  /// Adds a random +-w_max input disturbance at every step (exploration only).
  bool inject_disturbance = false;
  double w_max = 0.075;

  /// Throws DomainError on an invalid box, count or non-integral horizon.
  void validate() const;
  int steps() const;
};

enum class Verdict { kCertifiedStable, kNotCertified };
enum class Failure { kNone, kInfeasible, kDiverged, kHorizonExhausted };

const char* to_string(Verdict v);
const char* to_string(Failure f);

struct SampleResult {
  std::size_t index = 0;
  State x0 = State::Zero();
  Verdict verdict = Verdict::kNotCertified;
  std::optional<int> entry_step;
  Failure failure = Failure::kNone;
  double wall_time = 0.0;  ///< [s]
};

/// Uniform i.i.d. draws over the box with x_w = 0; sample i depends only on
/// (seed, i).
std::vector<State> sample_initial_conditions(const McConfig& cfg);

/// FNV-1a over the raw bytes of the sample list, as 16 hex digits.
std::string hash_samples(const std::vector<State>& samples);

/// Simulates the nonlinear closed loop until the state enters the certified
/// set (tested before every step, including the first).
SampleResult rollout(const State& x0, ControllerPolicy& policy, const CertifiedInvariantSet& set,
                     const TwipModel& plant, const McConfig& cfg, std::size_t index = 0);

struct CampaignResult {
  std::string controller;
  std::vector<SampleResult> samples;  ///< sorted by index
  std::size_t stable = 0;
  std::size_t infeasible = 0;
  std::size_t diverged = 0;
  std::size_t exhausted = 0;
  double wall_time = 0.0;

  double stable_fraction() const;
  /// Binomial standard error sqrt(p (1 - p) / n).
  double standard_error() const;
};

struct McSummary {
  std::vector<CampaignResult> campaigns;
  /// Fraction of samples on which two controllers reach the same verdict.
  Eigen::MatrixXd agreement;
  std::string sample_hash;
  std::size_t n_samples = 0;
};

/// Runs every policy on the same sample list. Each worker clones each policy.
McSummary run_campaign(const std::vector<State>& samples,
                       const std::vector<const ControllerPolicy*>& policies,
                       const CertifiedInvariantSet& set, const TwipParams& params,
                       const McConfig& cfg);

McSummary run_campaign(const std::vector<const ControllerPolicy*>& policies,
                       const CertifiedInvariantSet& set, const TwipParams& params,
                       const McConfig& cfg);

/// index, x0 components, controller, verdict, entry_step, failure, wall_time.
void write_samples_csv(const McSummary& summary, std::ostream& out);

/// Sample point and verdict only, for scatter plots.
void write_scatter_csv(const CampaignResult& campaign, std::ostream& out);

}  // namespace twip
