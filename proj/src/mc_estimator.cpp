#include "twip/mc_estimator.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>
#include <ostream>
#include <thread>

#include "twip/errors.hpp"
#include "twip/parallel.hpp"
#include "twip/random.hpp"

namespace twip {

void McConfig::validate() const {
  for (const Interval* iv : {&velocity, &pitch, &pitch_rate}) {
    if (!iv->bounded() || iv->empty()) {
      throw DomainError("McConfig: sampling ranges must be finite and nonempty");
    }
  }
  if (n_samples < 1) {
    throw DomainError("McConfig: n_samples must be at least 1");
  }
  if (!(Ts > 0.0) || !(horizon > 0.0) || substeps < 1) {
    throw DomainError("McConfig: Ts, horizon and substeps must be positive");
  }
  const double k = horizon / Ts;
  if (std::abs(k - std::round(k)) > 1e-9 * k) {
    throw DomainError("McConfig: horizon must be an integer number of sampling periods");
  }
  if (!(w_max >= 0.0)) {
    throw DomainError("McConfig: w_max must be nonnegative");
  }
}

int McConfig::steps() const { return static_cast<int>(std::lround(horizon / Ts)); }

const char* to_string(Verdict v) {
  return v == Verdict::kCertifiedStable ? "certified-stable" : "not-certified";
}

const char* to_string(Failure f) {
  switch (f) {
    case Failure::kNone:
      return "";
    case Failure::kInfeasible:
      return "infeasible";
    case Failure::kDiverged:
      return "diverged";
    case Failure::kHorizonExhausted:
      return "horizon-exhausted";
  }
  return "unknown";
}

std::vector<State> sample_initial_conditions(const McConfig& cfg) {
  cfg.validate();
  std::vector<State> out(static_cast<std::size_t>(cfg.n_samples));
  for (std::size_t i = 0; i < out.size(); ++i) {
    CounterRng rng(cfg.seed, i);
    out[i] << 0.0, rng.uniform(cfg.velocity.lo, cfg.velocity.hi),
        rng.uniform(cfg.pitch.lo, cfg.pitch.hi), rng.uniform(cfg.pitch_rate.lo, cfg.pitch_rate.hi);
  }
  return out;
}

std::string hash_samples(const std::vector<State>& samples) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const State& s : samples) {
    unsigned char bytes[sizeof(double) * 4];
    std::memcpy(bytes, s.data(), sizeof(bytes));
    for (unsigned char c : bytes) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

SampleResult rollout(const State& x0, ControllerPolicy& policy, const CertifiedInvariantSet& set,
                     const TwipModel& plant, const McConfig& cfg, std::size_t index) {
  const auto t0 = std::chrono::steady_clock::now();
  SampleResult res;
  res.index = index;
  res.x0 = x0;
  policy.reset();
  CounterRng disturbance(cfg.seed ^ 0x5bd1e995ULL, index);
  const int steps = cfg.steps();
  State x = x0;
  for (int k = 0;; ++k) {
    if (is_diverged(x)) {
      res.failure = Failure::kDiverged;
      break;
    }
    if (set.contains(x)) {
      res.verdict = Verdict::kCertifiedStable;
      res.entry_step = k;
      break;
    }
    if (k == steps) {
      res.failure = Failure::kHorizonExhausted;
      break;
    }
    const PolicyOutput out = policy.compute(x);
    if (out.status == PolicyStatus::kInfeasible) {
      res.failure = Failure::kInfeasible;
      break;
    }
    if (out.status == PolicyStatus::kDivergedGuard) {
      res.failure = Failure::kDiverged;
      break;
    }
    double u = out.u;
    if (cfg.inject_disturbance) {
      u += (disturbance.uniform() < 0.5 ? -cfg.w_max : cfg.w_max);
    }
    x = plant.step(x, u, cfg.Ts, cfg.substeps);
  }
  res.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

double CampaignResult::stable_fraction() const {
  return samples.empty() ? 0.0 : static_cast<double>(stable) / static_cast<double>(samples.size());
}

double CampaignResult::standard_error() const {
  if (samples.empty()) {
    return 0.0;
  }
  const double p = stable_fraction();
  return std::sqrt(p * (1.0 - p) / static_cast<double>(samples.size()));
}

McSummary run_campaign(const std::vector<State>& samples,
                       const std::vector<const ControllerPolicy*>& policies,
                       const CertifiedInvariantSet& set, const TwipParams& params,
                       const McConfig& cfg) {
  cfg.validate();
  const TwipModel plant(params);
  McSummary summary;
  summary.n_samples = samples.size();
  summary.sample_hash = hash_samples(samples);
  const unsigned threads =
      static_cast<unsigned>(std::min<std::size_t>(resolve_threads(cfg.threads), std::max<std::size_t>(samples.size(), 1)));

  for (const ControllerPolicy* proto : policies) {
    CampaignResult camp;
    camp.controller = proto->name();
    camp.samples.resize(samples.size());
    const auto t0 = std::chrono::steady_clock::now();
    std::atomic<std::size_t> next{0};
    // Dynamic scheduling: rollouts range from one step to the full horizon.
    parallel_chunks(threads, threads, [&](std::size_t, std::size_t, unsigned) {
      std::unique_ptr<ControllerPolicy> policy = proto->clone();
      for (std::size_t i = next++; i < samples.size(); i = next++) {
        camp.samples[i] = rollout(samples[i], *policy, set, plant, cfg, i);
      }
    });
    camp.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (const SampleResult& r : camp.samples) {
      if (r.verdict == Verdict::kCertifiedStable) {
        ++camp.stable;
      } else if (r.failure == Failure::kInfeasible) {
        ++camp.infeasible;
      } else if (r.failure == Failure::kDiverged) {
        ++camp.diverged;
      } else {
        ++camp.exhausted;
      }
    }
    summary.campaigns.push_back(std::move(camp));
  }

  const Eigen::Index c = static_cast<Eigen::Index>(summary.campaigns.size());
  summary.agreement = Eigen::MatrixXd::Identity(c, c);
  for (Eigen::Index a = 0; a < c; ++a) {
    for (Eigen::Index b = a + 1; b < c; ++b) {
      const auto& ra = summary.campaigns[static_cast<std::size_t>(a)].samples;
      const auto& rb = summary.campaigns[static_cast<std::size_t>(b)].samples;
      std::size_t same = 0;
      for (std::size_t i = 0; i < ra.size(); ++i) {
        same += ra[i].verdict == rb[i].verdict ? 1 : 0;
      }
      const double frac = ra.empty() ? 1.0 : static_cast<double>(same) / static_cast<double>(ra.size());
      summary.agreement(a, b) = summary.agreement(b, a) = frac;
    }
  }
  return summary;
}

McSummary run_campaign(const std::vector<const ControllerPolicy*>& policies,
                       const CertifiedInvariantSet& set, const TwipParams& params,
                       const McConfig& cfg) {
  return run_campaign(sample_initial_conditions(cfg), policies, set, params, cfg);
}

namespace {

void write_double(std::ostream& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out << buf;
}

}  // namespace

void write_samples_csv(const McSummary& summary, std::ostream& out) {
  out << "index,x_w,xdot_w,theta,thetadot,controller,verdict,entry_step,failure,wall_time\n";
  for (const CampaignResult& camp : summary.campaigns) {
    for (const SampleResult& r : camp.samples) {
      out << r.index;
      for (int j = 0; j < 4; ++j) {
        out << ',';
        write_double(out, r.x0(j));
      }
      out << ',' << camp.controller << ',' << to_string(r.verdict) << ',';
      if (r.entry_step) {
        out << *r.entry_step;
      }
      out << ',' << to_string(r.failure) << ',';
      write_double(out, r.wall_time);
      out << '\n';
    }
  }
}

void write_scatter_csv(const CampaignResult& campaign, std::ostream& out) {
  out << "xdot_w,theta,thetadot,stable\n";
  for (const SampleResult& r : campaign.samples) {
    write_double(out, r.x0(1));
    out << ',';
    write_double(out, r.x0(2));
    out << ',';
    write_double(out, r.x0(3));
    out << ',' << (r.verdict == Verdict::kCertifiedStable ? 1 : 0) << '\n';
  }
}

}  // namespace twip
