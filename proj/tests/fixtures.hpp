#pragma once

#include <cmath>
#include <numbers>

#include "twip/certification.hpp"
#include "twip/config.hpp"
#include "twip/controllers.hpp"
#include "twip/model.hpp"

namespace twip::test {

inline const LinearDiscreteModel& twip_model() {
  static const LinearDiscreteModel m = [] {
    const ContinuousLinearization lin = linearize(TwipParams{});
    return discretize_zoh(lin.A, lin.B, 0.01);
  }();
  return m;
}

inline Matrix4 lqr_weights() { return LqrConfig{}.Q(); }

inline const LqrDesign& twip_lqr() {
  static const LqrDesign d = synthesize_lqr(twip_model(), lqr_weights(), LqrConfig{}.r);
  return d;
}

inline const MpcPolicy& twip_mpc() {
  static const MpcPolicy p =
      MpcPolicy::synthesize(twip_model(), twip_lqr(), PipelineConfig{}.predictive_settings());
  return p;
}

inline const CtmpcPolicy& twip_ctmpc() {
  static const CtmpcPolicy p =
      CtmpcPolicy::synthesize(twip_model(), twip_lqr(), PipelineConfig{}.ctmpc_settings());
  return p;
}

inline const CertifiedInvariantSet& twip_set() {
  static const CertifiedInvariantSet s =
      build_invariant_set(TwipParams{}, twip_model(), twip_lqr(), 2.2, PipelineConfig{}.certification_options());
  return s;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace twip::test
