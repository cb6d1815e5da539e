#include <cmath>
#include <sstream>
#include <string>

#include "doctest.h"
#include "fixtures.hpp"
#include "twip/errors.hpp"
#include "twip/mc_estimator.hpp"

using namespace twip;

namespace {

McConfig small_config(int n, unsigned threads = 1) {
  McConfig c;
  c.n_samples = n;
  c.threads = threads;
  return c;
}

// CSV with the trailing wall_time column removed from every line.
std::string without_timing(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) {
    out += line.substr(0, line.rfind(',')) + "\n";
  }
  return out;
}

}  // namespace

TEST_SUITE("mc_estimator") {

TEST_CASE("samples lie in the box with zero wheel position") {
  const McConfig cfg = small_config(5000);
  const std::vector<State> s = sample_initial_conditions(cfg);
  REQUIRE(s.size() == 5000);
  for (const State& x : s) {
    CHECK(x(kPosition) == 0.0);
    CHECK(cfg.velocity.contains(x(kVelocity)));
    CHECK(cfg.pitch.contains(x(kPitch)));
    CHECK(cfg.pitch_rate.contains(x(kPitchRate)));
  }
}

TEST_CASE("per-axis means are within 3 sigma of the box centre") {
  const McConfig cfg = small_config(5000);
  const std::vector<State> s = sample_initial_conditions(cfg);
  const Interval axes[] = {cfg.velocity, cfg.pitch, cfg.pitch_rate};
  for (int a = 0; a < 3; ++a) {
    double mean = 0.0;
    for (const State& x : s) mean += x(a + 1);
    mean /= static_cast<double>(s.size());
    const double width = axes[a].hi - axes[a].lo;
    const double sigma = width / std::sqrt(12.0) / std::sqrt(static_cast<double>(s.size()));
    CHECK(std::abs(mean - 0.5 * (axes[a].lo + axes[a].hi)) <= 3.0 * sigma);
  }
}

TEST_CASE("sampling is deterministic and index-addressed") {
  McConfig a = small_config(200);
  McConfig b = small_config(400, 4);
  const std::vector<State> sa = sample_initial_conditions(a);
  const std::vector<State> sb = sample_initial_conditions(b);
  for (size_t i = 0; i < sa.size(); ++i) {
    CHECK(sa[i] == sb[i]);
  }
  CHECK(hash_samples(sa) == hash_samples(sample_initial_conditions(a)));
  CHECK(hash_samples(sa).size() == 16);
  b.seed = 2;
  CHECK(hash_samples(sample_initial_conditions(b)) != hash_samples(sb));
}

TEST_CASE("invalid configurations") {
  McConfig c;
  c.n_samples = 0;
  CHECK_THROWS_AS(c.validate(), DomainError);
  c = McConfig{};
  c.horizon = 20.005;
  CHECK_THROWS_AS(c.validate(), DomainError);
  c = McConfig{};
  c.pitch = Interval{1.0, -1.0};
  CHECK_THROWS_AS(c.validate(), DomainError);
  CHECK(McConfig{}.steps() == 2000);
}

TEST_CASE("rollout outcomes") {
  const CertifiedInvariantSet& set = test::twip_set();
  const TwipModel plant{TwipParams{}};
  const McConfig cfg;
  LqrPolicy lqr(test::twip_lqr().K, 2.2);

  const SampleResult origin = rollout(State::Zero(), lqr, set, plant, cfg);
  CHECK(origin.verdict == Verdict::kCertifiedStable);
  REQUIRE(origin.entry_step.has_value());
  CHECK(*origin.entry_step == 0);
  CHECK(origin.failure == Failure::kNone);

  // Pulled in by one part in 1e12 so round-off cannot push it outside.
  const State boundary =
      (1.0 - 1e-12) * ellipsoid_point(set, Eigen::Vector4d(0.2, -0.5, 0.7, 0.1).normalized());
  REQUIRE(set.contains(boundary));
  CHECK(boundary.dot(set.P.matrix() * boundary) >= set.level * (1.0 - 1e-11));
  const SampleResult b = rollout(boundary, lqr, set, plant, cfg);
  CHECK(b.verdict == Verdict::kCertifiedStable);
  CHECK(*b.entry_step == 0);

  const SampleResult corner = rollout(State(0, 0, 1.5, 1.5), lqr, set, plant, cfg);
  CHECK(corner.verdict == Verdict::kNotCertified);
  CHECK_FALSE(corner.entry_step.has_value());
  CHECK(corner.failure != Failure::kNone);

  McConfig one_step = cfg;
  one_step.horizon = 0.01;
  const State near(0, 0.1, 0.1, 0);
  REQUIRE_FALSE(set.contains(near));
  const SampleResult cut = rollout(near, lqr, set, plant, one_step);
  CHECK(cut.verdict == Verdict::kNotCertified);
  CHECK(cut.failure == Failure::kHorizonExhausted);
}

TEST_CASE("single sample at the origin gives fraction one") {
  LqrPolicy lqr(test::twip_lqr().K, 2.2);
  const McSummary s = run_campaign({State::Zero()}, {&lqr}, test::twip_set(), TwipParams{}, small_config(1));
  REQUIRE(s.campaigns.size() == 1);
  CHECK(s.campaigns[0].stable_fraction() == 1.0);
  CHECK(s.campaigns[0].standard_error() == 0.0);
  CHECK(s.agreement(0, 0) == 1.0);
}

TEST_CASE("campaign results do not depend on the thread count") {
  LqrPolicy lqr(test::twip_lqr().K, 2.2);
  const McSummary one = run_campaign({&lqr}, test::twip_set(), TwipParams{}, small_config(400, 1));
  const McSummary four = run_campaign({&lqr}, test::twip_set(), TwipParams{}, small_config(400, 4));
  CHECK(one.sample_hash == four.sample_hash);
  std::ostringstream a, b;
  write_samples_csv(one, a);
  write_samples_csv(four, b);
  CHECK(without_timing(a.str()) == without_timing(b.str()));
  CHECK(a.str().rfind("index,x_w,xdot_w,theta,thetadot,controller,verdict,entry_step,failure,wall_time\n", 0) == 0);

  const CampaignResult& c = one.campaigns[0];
  CHECK(c.stable + c.infeasible + c.diverged + c.exhausted == 400);
  CHECK(c.stable_fraction() >= 0.0);
  CHECK(c.stable_fraction() <= 1.0);
  for (size_t i = 0; i < c.samples.size(); ++i) {
    CHECK(c.samples[i].index == i);
    const bool stable = c.samples[i].verdict == Verdict::kCertifiedStable;
    CHECK(stable == c.samples[i].entry_step.has_value());
    CHECK(stable == (c.samples[i].failure == Failure::kNone));
  }
}

TEST_CASE("agreement matrix is symmetric with unit diagonal") {
  LqrPolicy lqr(test::twip_lqr().K, 2.2);
  const MpcPolicy& mpc = test::twip_mpc();
  const CtmpcPolicy& ct = test::twip_ctmpc();
  const McSummary s = run_campaign({&lqr, &mpc, &ct}, test::twip_set(), TwipParams{}, small_config(12));
  REQUIRE(s.agreement.rows() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(s.agreement(i, i) == 1.0);
    for (int j = 0; j < 3; ++j) {
      CHECK(s.agreement(i, j) == s.agreement(j, i));
      CHECK(s.agreement(i, j) >= 0.0);
      CHECK(s.agreement(i, j) <= 1.0);
    }
  }
  CHECK(s.campaigns[0].controller == "lqr");
  CHECK(s.campaigns[1].controller == "mpc");
  CHECK(s.campaigns[2].controller == "ctmpc");
}

TEST_CASE("a longer horizon never revokes a certified verdict") {
  LqrPolicy lqr(test::twip_lqr().K, 2.2);
  McConfig shortcfg = small_config(300);
  shortcfg.horizon = 2.0;
  const McSummary s = run_campaign({&lqr}, test::twip_set(), TwipParams{}, shortcfg);
  const McSummary l = run_campaign({&lqr}, test::twip_set(), TwipParams{}, small_config(300));
  for (size_t i = 0; i < 300; ++i) {
    if (s.campaigns[0].samples[i].verdict == Verdict::kCertifiedStable) {
      CHECK(l.campaigns[0].samples[i].verdict == Verdict::kCertifiedStable);
      CHECK(*l.campaigns[0].samples[i].entry_step == *s.campaigns[0].samples[i].entry_step);
    }
  }
  CHECK(l.campaigns[0].stable >= s.campaigns[0].stable);
}

TEST_CASE("certified samples converge after entry") {
  const CertifiedInvariantSet& set = test::twip_set();
  LqrPolicy lqr(test::twip_lqr().K, 2.2);
  const McSummary s = run_campaign({&lqr}, set, TwipParams{}, small_config(400));
  const ClosedLoopRemainder loop(TwipParams{}, test::twip_model(), test::twip_lqr().K, 2.2, 1);
  const TwipModel plant{TwipParams{}};
  int checked = 0;
  for (const SampleResult& r : s.campaigns[0].samples) {
    if (r.verdict != Verdict::kCertifiedStable || checked >= 100) continue;
    State x = r.x0;
    for (int k = 0; k < *r.entry_step; ++k) x = loop.next(x);
    CHECK(set.contains(x));
    for (int k = 0; k < 2000; ++k) x = loop.next(x);
    CHECK(x.norm() <= 1e-6);
    ++checked;
  }
  CHECK(checked == 100);
}

TEST_CASE("scatter export") {
  LqrPolicy lqr(test::twip_lqr().K, 2.2);
  const McSummary s = run_campaign({&lqr}, test::twip_set(), TwipParams{}, small_config(5));
  std::ostringstream out;
  write_scatter_csv(s.campaigns[0], out);
  std::istringstream in(out.str());
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 6);
}

}  // TEST_SUITE
