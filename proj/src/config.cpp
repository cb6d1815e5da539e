#include "twip/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "twip/errors.hpp"

namespace twip {

using nlohmann::json;

namespace {

json interval_json(const Interval& iv) { return json::array({iv.lo, iv.hi}); }

// Reads the keys of one JSON object into fields; unknown keys are errors.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) {
      throw ConfigError(path_ + ": expected an object");
    }
  }

  template <typename T>
  void read(const char* key, T& field) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) {
      return;
    }
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!it->is_number()) {
          throw ConfigError(where(key) + ": expected a number");
        }
      } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!it->is_number_integer()) {
          throw ConfigError(where(key) + ": expected an integer");
        }
        if constexpr (std::is_unsigned_v<T>) {
          if (!it->is_number_unsigned()) {
            throw ConfigError(where(key) + ": expected a nonnegative integer");
          }
        }
      }
      field = it->template get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where(key) + ": " + e.what());
    }
  }

  void read_interval(const char* key, Interval& iv) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) {
      return;
    }
    if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() || !(*it)[1].is_number()) {
      throw ConfigError(where(key) + ": expected [lo, hi]");
    }
    iv = {(*it)[0].get<double>(), (*it)[1].get<double>()};
  }

  void read_vector4(const char* key, Eigen::Vector4d& v) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) {
      return;
    }
    if (!it->is_array() || it->size() != 4) {
      throw ConfigError(where(key) + ": expected 4 numbers");
    }
    for (int i = 0; i < 4; ++i) {
      if (!(*it)[static_cast<size_t>(i)].is_number()) {
        throw ConfigError(where(key) + ": expected 4 numbers");
      }
      v(i) = (*it)[static_cast<size_t>(i)].get<double>();
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) {
        throw ConfigError(where(it.key().c_str()) + ": unknown key");
      }
    }
  }

  std::string where(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

json model_json(const TwipParams& p) {
  return {{"d", p.d},     {"l", p.l},     {"r", p.r},       {"m_B", p.m_B},
          {"m_W", p.m_W}, {"J", p.J},     {"g", p.g},       {"i_gb", p.i_gb},
          {"K_m", p.K_m}, {"R_M", p.R_M}, {"I_2", p.I_2}};
}

json synthesis_subtree(const json& j) {
  return {{"model", j["model"]}, {"Ts", j["Ts"]},   {"substeps", j["substeps"]},
          {"lqr", j["lqr"]},     {"mpc", j["mpc"]}, {"ctmpc", j["ctmpc"]}};
}

void require(bool ok, const std::string& what) {
  if (!ok) {
    throw ConfigError(what);
  }
}

bool in_open_unit(double v) { return v > 0.0 && v < 1.0; }

}  // namespace

void PipelineConfig::validate() const {
  try {
    model.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  require(Ts > 0.0 && std::isfinite(Ts), "Ts must be positive");
  require(substeps >= 1, "substeps must be at least 1");
  require(lqr.q_diag.allFinite() && (lqr.q_diag.array() >= 0.0).all(),
          "lqr.q_diag must be finite and nonnegative");
  require(lqr.r > 0.0 && std::isfinite(lqr.r), "lqr.r must be positive");
  require(mpc.horizon >= 1, "mpc.horizon must be at least 1");
  require(mpc.u_max > 0.0 && std::isfinite(mpc.u_max), "mpc.u_max must be positive");
  require(mpc.max_velocity > 0.0 && mpc.max_pitch > 0.0 && mpc.max_pitch_rate > 0.0,
          "mpc state bounds must be positive");
  require(mpc.slack_weight > 0.0, "mpc.slack_weight must be positive");
  require(in_open_unit(ctmpc.alpha), "ctmpc.alpha must lie in (0, 1)");
  require(ctmpc.w_max >= 0.0 && std::isfinite(ctmpc.w_max), "ctmpc.w_max must be nonnegative");
  require(ctmpc.slack_weight > 0.0, "ctmpc.slack_weight must be positive");
  require(in_open_unit(certification.gamma_margin), "certification.gamma_margin must lie in (0, 1)");
  require(in_open_unit(certification.safety), "certification.safety must lie in (0, 1)");
  require(certification.r_max > 0.0, "certification.r_max must be positive");
  require(certification.bisection_steps >= 1, "certification.bisection_steps must be at least 1");
  require(certification.sphere_samples >= 0 && certification.ball_samples >= 0 &&
              certification.sphere_samples + certification.ball_samples > 0,
          "certification sample counts must be nonnegative with a positive total");
  require(mc.controller == "lqr" || mc.controller == "mpc" || mc.controller == "ctmpc" ||
              mc.controller == "all",
          "mc.controller must be one of lqr, mpc, ctmpc, all");
  require(mc.predictive_samples >= 0, "mc.predictive_samples must be nonnegative");
  try {
    mc_config().validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("mc: ") + e.what());
  }
}

PredictiveSettings PipelineConfig::predictive_settings() const {
  PredictiveSettings s;
  s.horizon = mpc.horizon;
  s.Q = lqr.Q();
  s.R = lqr.r;
  s.u_max = mpc.u_max;
  s.X = state_constraint_box(mpc.max_velocity, mpc.max_pitch, mpc.max_pitch_rate);
  s.slack_weight = mpc.slack_weight;
  return s;
}

CtmpcSettings PipelineConfig::ctmpc_settings() const {
  CtmpcSettings s;
  s.base = predictive_settings();
  s.base.slack_weight = ctmpc.slack_weight;
  s.alpha = ctmpc.alpha;
  s.w_max = ctmpc.w_max;
  return s;
}

CertificationOptions PipelineConfig::certification_options() const {
  CertificationOptions o;
  o.gamma_margin = certification.gamma_margin;
  o.substeps = substeps;
  o.rho.safety = certification.safety;
  o.rho.r_max = certification.r_max;
  o.rho.bisection_steps = certification.bisection_steps;
  o.rho.sphere_samples = certification.sphere_samples;
  o.rho.ball_samples = certification.ball_samples;
  o.rho.seed = certification.seed;
  o.rho.threads = threads;
  return o;
}

McConfig PipelineConfig::mc_config() const {
  McConfig c = mc.run;
  c.Ts = Ts;
  c.substeps = substeps;
  c.threads = threads;
  return c;
}

json to_json(const PipelineConfig& cfg) {
  const McConfig& m = cfg.mc.run;
  const auto& c = cfg.certification;
  return {
      {"model", model_json(cfg.model)},
      {"Ts", cfg.Ts},
      {"substeps", cfg.substeps},
      {"lqr", {{"q_diag", {cfg.lqr.q_diag(0), cfg.lqr.q_diag(1), cfg.lqr.q_diag(2), cfg.lqr.q_diag(3)}},
               {"r", cfg.lqr.r}}},
      {"mpc", {{"horizon", cfg.mpc.horizon},
               {"u_max", cfg.mpc.u_max},
               {"max_velocity", cfg.mpc.max_velocity},
               {"max_pitch", cfg.mpc.max_pitch},
               {"max_pitch_rate", cfg.mpc.max_pitch_rate},
               {"slack_weight", cfg.mpc.slack_weight}}},
      {"ctmpc", {{"alpha", cfg.ctmpc.alpha},
                 {"w_max", cfg.ctmpc.w_max},
                 {"slack_weight", cfg.ctmpc.slack_weight}}},
      {"certification", {{"gamma_margin", c.gamma_margin},
                         {"safety", c.safety},
                         {"r_max", c.r_max},
                         {"bisection_steps", c.bisection_steps},
                         {"sphere_samples", c.sphere_samples},
                         {"ball_samples", c.ball_samples},
                         {"seed", c.seed},
                         {"revalidation_samples", c.revalidation_samples},
                         {"revalidation_seed", c.revalidation_seed},
                         {"decrease_samples", c.decrease_samples}}},
      {"mc", {{"velocity", interval_json(m.velocity)},
              {"pitch", interval_json(m.pitch)},
              {"pitch_rate", interval_json(m.pitch_rate)},
              {"n_samples", m.n_samples},
              {"horizon", m.horizon},
              {"seed", m.seed},
              {"inject_disturbance", m.inject_disturbance},
              {"w_max", m.w_max},
              {"controller", cfg.mc.controller},
              {"predictive_samples", cfg.mc.predictive_samples}}},
      {"output_dir", cfg.output_dir},
      {"threads", cfg.threads},
  };
}

PipelineConfig config_from_json(const json& j) {
  PipelineConfig cfg;
  ObjectReader top(j, "");
  if (const json* m = top.child("model")) {
    ObjectReader r(*m, "model");
    TwipParams& p = cfg.model;
    r.read("d", p.d);
    r.read("l", p.l);
    r.read("r", p.r);
    r.read("m_B", p.m_B);
    r.read("m_W", p.m_W);
    r.read("J", p.J);
    r.read("g", p.g);
    r.read("i_gb", p.i_gb);
    r.read("K_m", p.K_m);
    r.read("R_M", p.R_M);
    r.read("I_2", p.I_2);
    r.finish();
  }
  top.read("Ts", cfg.Ts);
  top.read("substeps", cfg.substeps);
  if (const json* l = top.child("lqr")) {
    ObjectReader r(*l, "lqr");
    r.read_vector4("q_diag", cfg.lqr.q_diag);
    r.read("r", cfg.lqr.r);
    r.finish();
  }
  if (const json* m = top.child("mpc")) {
    ObjectReader r(*m, "mpc");
    r.read("horizon", cfg.mpc.horizon);
    r.read("u_max", cfg.mpc.u_max);
    r.read("max_velocity", cfg.mpc.max_velocity);
    r.read("max_pitch", cfg.mpc.max_pitch);
    r.read("max_pitch_rate", cfg.mpc.max_pitch_rate);
    r.read("slack_weight", cfg.mpc.slack_weight);
    r.finish();
  }
  if (const json* c = top.child("ctmpc")) {
    ObjectReader r(*c, "ctmpc");
    r.read("alpha", cfg.ctmpc.alpha);
    r.read("w_max", cfg.ctmpc.w_max);
    r.read("slack_weight", cfg.ctmpc.slack_weight);
    r.finish();
  }
  if (const json* c = top.child("certification")) {
    ObjectReader r(*c, "certification");
    auto& o = cfg.certification;
    r.read("gamma_margin", o.gamma_margin);
    r.read("safety", o.safety);
    r.read("r_max", o.r_max);
    r.read("bisection_steps", o.bisection_steps);
    r.read("sphere_samples", o.sphere_samples);
    r.read("ball_samples", o.ball_samples);
    r.read("seed", o.seed);
    r.read("revalidation_samples", o.revalidation_samples);
    r.read("revalidation_seed", o.revalidation_seed);
    r.read("decrease_samples", o.decrease_samples);
    r.finish();
  }
  if (const json* m = top.child("mc")) {
    ObjectReader r(*m, "mc");
    McConfig& run = cfg.mc.run;
    r.read_interval("velocity", run.velocity);
    r.read_interval("pitch", run.pitch);
    r.read_interval("pitch_rate", run.pitch_rate);
    r.read("n_samples", run.n_samples);
    r.read("horizon", run.horizon);
    r.read("seed", run.seed);
    r.read("inject_disturbance", run.inject_disturbance);
    r.read("w_max", run.w_max);
    r.read("controller", cfg.mc.controller);
    r.read("predictive_samples", cfg.mc.predictive_samples);
    r.finish();
  }
  top.read("output_dir", cfg.output_dir);
  top.read("threads", cfg.threads);
  top.finish();
  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file " + path);
  }
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return config_from_json(j);
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string synthesis_hash(const PipelineConfig& cfg) {
  return fnv1a_hex(synthesis_subtree(to_json(cfg)).dump());
}

std::string certification_hash(const PipelineConfig& cfg) {
  const json j = to_json(cfg);
  json sub = synthesis_subtree(j);
  sub["certification"] = j["certification"];
  return fnv1a_hex(sub.dump());
}

std::string mc_hash(const PipelineConfig& cfg) {
  const json j = to_json(cfg);
  json sub = synthesis_subtree(j);
  sub["certification"] = j["certification"];
  sub["mc"] = j["mc"];
  return fnv1a_hex(sub.dump());
}

}  // namespace twip
