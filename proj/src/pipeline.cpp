#include "twip/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "twip/errors.hpp"

namespace twip {

namespace fs = std::filesystem;
using nlohmann::json;

json matrix_json(const Eigen::MatrixXd& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      row.push_back(M(i, j));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  if (!j.is_array()) {
    throw DomainError("matrix_from_json: expected an array of rows");
  }
  const Eigen::Index r = static_cast<Eigen::Index>(j.size());
  const Eigen::Index c = r > 0 ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Eigen::MatrixXd M(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    const json& row = j[static_cast<size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != c) {
      throw DomainError("matrix_from_json: ragged rows");
    }
    for (Eigen::Index k = 0; k < c; ++k) {
      M(i, k) = row[static_cast<size_t>(k)].get<double>();
    }
  }
  return M;
}

namespace {

json vector_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    a.push_back(v(i));
  }
  return a;
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v(i) = j[static_cast<size_t>(i)].get<double>();
  }
  return v;
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) {
      throw std::runtime_error("cannot write " + tmp.string());
    }
    out << text;
  }
  fs::rename(tmp, path);
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  json j;
  in >> j;
  return j;
}

// Loads an upstream artifact and checks that it was produced from the same
// configuration subtree.
json require_artifact(const fs::path& path, const std::string& hash, const char* producer) {
  if (!fs::exists(path)) {
    throw DependencyError(path.filename().string() + " not found in " +
                          path.parent_path().string() + "; run `" + producer + "` first");
  }
  json j;
  try {
    j = read_json(path);
  } catch (const json::exception&) {
    throw DependencyError(path.string() + " is unreadable; rerun `" + producer + "`");
  }
  if (j.value("config_hash", std::string()) != hash) {
    throw DependencyError(path.string() + " was produced from a different configuration; rerun `" +
                          producer + "`");
  }
  return j;
}

bool cached(const fs::path& path, const std::string& hash) {
  if (!fs::exists(path)) {
    return false;
  }
  try {
    return read_json(path).value("config_hash", std::string()) == hash;
  } catch (const json::exception&) {
    return false;
  }
}

std::string fmt(double v, const char* spec = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

}  // namespace

json polytope_json(const Polytope& p) {
  return {{"A", matrix_json(p.A())}, {"b", vector_json(p.b())}};
}

Polytope polytope_from_json(const json& j) {
  Eigen::MatrixXd A = matrix_from_json(j.at("A"));
  const Eigen::VectorXd b = vector_from_json(j.at("b"));
  if (A.rows() == 0) {
    return Polytope::universe(4);
  }
  return Polytope(A, b);
}

SynthesisBundle synthesize(const PipelineConfig& cfg) {
  cfg.validate();
  SynthesisBundle out;
  const ContinuousLinearization lin = linearize(cfg.model);
  out.model = discretize_zoh(lin.A, lin.B, cfg.Ts);
  out.lqr = synthesize_lqr(out.model, cfg.lqr.Q(), cfg.lqr.r);
  out.mpc.emplace(MpcPolicy::synthesize(out.model, out.lqr, cfg.predictive_settings()));
  out.ctmpc.emplace(CtmpcPolicy::synthesize(out.model, out.lqr, cfg.ctmpc_settings()));
  const SymmetricMatrix I4(Eigen::MatrixXd::Identity(4, 4));
  const SymmetricMatrix P = solve_discrete_lyapunov(out.lqr.A_cl, I4.matrix());
  out.gamma_bound = gamma_bound(P, out.lqr.A_cl, I4);
  return out;
}

json synthesis_report(const SynthesisBundle& b, const PipelineConfig& cfg) {
  const ContinuousLinearization lin = linearize(cfg.model);
  const CtmpcPolicy& ct = *b.ctmpc;
  json stages = json::array();
  for (int i = 0; i <= cfg.mpc.horizon; ++i) {
    const Interval& u = ct.tightened_input(i);
    stages.push_back({{"stage", i},
                      {"delta", ct.offsets()[static_cast<size_t>(i)]},
                      {"state_offsets", vector_json(ct.tightened_state_set(i).b())},
                      {"input", {u.lo, u.hi}}});
  }
  json delta = json::array();
  for (double d : ct.offsets()) {
    delta.push_back(d);
  }
  const TubeDesign& tube = ct.tube();
  return {
      {"config_hash", synthesis_hash(cfg)},
      {"config", to_json(cfg)},
      {"model",
       {{"A_c", matrix_json(lin.A)},
        {"B_c", matrix_json(lin.B)},
        {"A", matrix_json(b.model.A)},
        {"B", matrix_json(b.model.B)},
        {"Ts", b.model.Ts},
        {"open_loop_spectral_radius", spectral_radius(b.model.A)}}},
      {"lqr",
       {{"K", matrix_json(b.lqr.K)},
        {"P", matrix_json(b.lqr.P.matrix())},
        {"closed_loop_spectral_radius", spectral_radius(b.lqr.A_cl)},
        {"gamma_bound", b.gamma_bound},
        {"norm", "spectral"}}},
      {"mpc",
       {{"horizon", cfg.mpc.horizon},
        {"slack_weight", cfg.mpc.slack_weight},
        {"state_set", polytope_json(b.mpc->state_set())},
        {"terminal_set", polytope_json(b.mpc->terminal_set())}}},
      {"ctmpc",
       {{"tube",
         {{"K", matrix_json(tube.K)},
          {"P", matrix_json(tube.P.matrix())},
          {"alpha", tube.alpha},
          {"w_max", tube.w_max},
          {"delta1", tube.delta1},
          {"contraction", tube.contraction}}},
        {"slack_weight", cfg.ctmpc.slack_weight},
        {"delta", delta},
        {"stages", stages},
        {"rpi_set", polytope_json(ct.rpi_set())},
        {"terminal_set", polytope_json(ct.tightened_terminal_set())}}},
  };
}

json certified_set_json(const CertifiedInvariantSet& s) {
  return {{"P", matrix_json(s.P.matrix())},
          {"K", matrix_json(s.K)},
          {"A_cl", matrix_json(s.A_cl)},
          {"gamma", s.gamma},
          {"gamma_bound", s.gamma_bound},
          {"rho", s.rho},
          {"level", s.level},
          {"lambda_min", s.lambda_min},
          {"lambda_max", s.lambda_max},
          {"PA_norm", s.PA_norm},
          {"max_ratio", s.max_ratio},
          {"u_max", s.u_max},
          {"probe_samples", s.probe_samples}};
}

CertifiedInvariantSet certified_set_from_json(const json& j) {
  CertifiedInvariantSet s;
  s.P = SymmetricMatrix(matrix_from_json(j.at("P")));
  s.K = matrix_from_json(j.at("K")).row(0);
  s.A_cl = matrix_from_json(j.at("A_cl"));
  s.gamma = j.at("gamma").get<double>();
  s.gamma_bound = j.at("gamma_bound").get<double>();
  s.rho = j.at("rho").get<double>();
  s.level = j.at("level").get<double>();
  s.lambda_min = j.at("lambda_min").get<double>();
  s.lambda_max = j.at("lambda_max").get<double>();
  s.PA_norm = j.at("PA_norm").get<double>();
  s.max_ratio = j.at("max_ratio").get<double>();
  s.u_max = j.at("u_max").get<double>();
  s.probe_samples = j.at("probe_samples").get<std::uint64_t>();
  return s;
}

StageResult cmd_synth(const PipelineConfig& cfg, const fs::path& out_dir) {
  const fs::path path = out_dir / kSynthesisFile;
  if (cached(path, synthesis_hash(cfg))) {
    return {path, true};
  }
  const SynthesisBundle b = synthesize(cfg);
  write_text(path, synthesis_report(b, cfg).dump(2) + "\n");
  return {path, false};
}

SynthesisBundle load_synthesis(const PipelineConfig& cfg, const fs::path& out_dir) {
  const json j = require_artifact(out_dir / kSynthesisFile, synthesis_hash(cfg), "synth");
  SynthesisBundle out;
  const ContinuousLinearization lin = linearize(cfg.model);
  out.model = discretize_zoh(lin.A, lin.B, cfg.Ts);
  out.lqr = synthesize_lqr(out.model, cfg.lqr.Q(), cfg.lqr.r);
  out.gamma_bound = j.at("lqr").at("gamma_bound").get<double>();
  out.mpc.emplace(out.model, out.lqr, cfg.predictive_settings(),
                  polytope_from_json(j.at("mpc").at("terminal_set")));
  const CtmpcSettings cs = cfg.ctmpc_settings();
  const TubeDesign tube = synthesize_tube(out.model, cs.alpha, cs.w_max);
  out.ctmpc.emplace(out.model, out.lqr, tube, cs, polytope_from_json(j.at("ctmpc").at("rpi_set")));
  return out;
}

StageResult cmd_certify(const PipelineConfig& cfg, const fs::path& out_dir) {
  const fs::path path = out_dir / kCertificationFile;
  const std::string hash = certification_hash(cfg);
  if (cached(path, hash)) {
    if (!read_json(path).value("certified", false)) {
      throw CertificationError("cached certification report records a failure: " + path.string());
    }
    return {path, true};
  }
  const SynthesisBundle b = load_synthesis(cfg, out_dir);
  const CertificationConfig& cc = cfg.certification;
  const CertifiedInvariantSet set =
      build_invariant_set(cfg.model, b.model, b.lqr, cfg.mpc.u_max, cfg.certification_options());

  const ClosedLoopRemainder loop(cfg.model, b.model, b.lqr.K, cfg.mpc.u_max, cfg.substeps);
  const RemainderFn g = [&loop](const State& x) { return loop(x); };
  const RevalidationReport reval =
      revalidate_rho(g, set, cc.revalidation_samples, cc.revalidation_seed, cfg.threads);
  const DecreaseReport dec =
      verify_decrease(loop, set, cc.decrease_samples, cc.revalidation_seed + 1, cfg.threads);
  const AdmissibilityReport am = check_admissibility(set, *b.mpc);
  const AdmissibilityReport ac = check_admissibility(set, *b.ctmpc);
  const double max_fb = set.max_feedback();

  const bool ok = reval.violations == 0 && dec.violations == 0 && am.admissible && ac.admissible &&
                  max_fb <= cfg.mpc.u_max;
  json adm = json::array();
  for (const AdmissibilityReport* a : {&am, &ac}) {
    adm.push_back({{"controller", a->controller},
                   {"alpha_star", a->alpha_star},
                   {"level", a->level},
                   {"admissible", a->admissible},
                   {"constraint_rows", a->constraint_rows}});
  }
  const json report = {
      {"config_hash", hash},
      {"synthesis_hash", synthesis_hash(cfg)},
      {"certified", ok},
      {"norm", "spectral"},
      {"set", certified_set_json(set)},
      {"revalidation",
       {{"samples", reval.samples},
        {"seed", cc.revalidation_seed},
        {"violations", reval.violations},
        {"max_ratio", reval.max_ratio}}},
      {"decrease",
       {{"samples", dec.samples}, {"violations", dec.violations}, {"max_ratio", dec.max_ratio}}},
      {"saturation", {{"max_feedback", max_fb}, {"u_max", cfg.mpc.u_max}, {"inactive", max_fb <= cfg.mpc.u_max}}},
      {"admissibility", adm},
  };
  write_text(path, report.dump(2) + "\n");
  if (!ok) {
    throw CertificationError("certification failed; see " + path.string());
  }
  return {path, false};
}

CertifiedInvariantSet load_certified_set(const PipelineConfig& cfg, const fs::path& out_dir) {
  const json j = require_artifact(out_dir / kCertificationFile, certification_hash(cfg), "certify");
  if (!j.value("certified", false)) {
    throw CertificationError("the certification report records a failure; the Monte Carlo "
                             "stopping condition would be unsound");
  }
  return certified_set_from_json(j.at("set"));
}

namespace {

json campaign_json(const CampaignResult& c, const std::string& sample_hash) {
  return {{"controller", c.controller},
          {"n", c.samples.size()},
          {"stable", c.stable},
          {"fraction", c.stable_fraction()},
          {"std_error", c.standard_error()},
          {"infeasible", c.infeasible},
          {"diverged", c.diverged},
          {"horizon_exhausted", c.exhausted},
          {"wall_time", c.wall_time},
          {"sample_hash", sample_hash}};
}

}  // namespace

StageResult cmd_mc(const PipelineConfig& cfg, const fs::path& out_dir) {
  const fs::path path = out_dir / kMcSummaryFile;
  const std::string hash = mc_hash(cfg);
  if (cached(path, hash) && fs::exists(out_dir / kMcSamplesFile)) {
    return {path, true};
  }
  const CertifiedInvariantSet set = load_certified_set(cfg, out_dir);
  const SynthesisBundle b = load_synthesis(cfg, out_dir);
  const McConfig mc = cfg.mc_config();
  const LqrPolicy lqr(b.lqr.K, cfg.mpc.u_max);
  std::map<std::string, const ControllerPolicy*> by_name{
      {"lqr", &lqr}, {"mpc", &*b.mpc}, {"ctmpc", &*b.ctmpc}};

  const std::vector<State> samples = sample_initial_conditions(mc);
  const std::string full_hash = hash_samples(samples);
  json campaigns = json::array();
  json agreement;
  McSummary for_csv;
  if (cfg.mc.controller != "all") {
    McSummary s = run_campaign(samples, {by_name.at(cfg.mc.controller)}, set, cfg.model, mc);
    campaigns.push_back(campaign_json(s.campaigns[0], full_hash));
    agreement = {{"controllers", {cfg.mc.controller}},
                 {"n", samples.size()},
                 {"matrix", matrix_json(s.agreement)}};
    for_csv = std::move(s);
  } else {
    McSummary full = run_campaign(samples, {&lqr}, set, cfg.model, mc);
    const std::size_t n_sub =
        cfg.mc.predictive_samples == 0
            ? samples.size()
            : std::min(samples.size(), static_cast<std::size_t>(cfg.mc.predictive_samples));
    const std::vector<State> sub(samples.begin(), samples.begin() + static_cast<long>(n_sub));
    McSummary s = run_campaign(sub, {&lqr, &*b.mpc, &*b.ctmpc}, set, cfg.model, mc);
    campaigns.push_back(campaign_json(full.campaigns[0], full_hash));
    json fractions = json::object();
    for (const CampaignResult& c : s.campaigns) {
      fractions[c.controller] = c.stable_fraction();
      if (c.controller != "lqr") {
        campaigns.push_back(campaign_json(c, s.sample_hash));
      }
    }
    agreement = {{"controllers", {"lqr", "mpc", "ctmpc"}},
                 {"n", n_sub},
                 {"sample_hash", s.sample_hash},
                 {"fractions", fractions},
                 {"matrix", matrix_json(s.agreement)}};
    for_csv.campaigns.push_back(std::move(full.campaigns[0]));
    for (CampaignResult& c : s.campaigns) {
      if (c.controller != "lqr") {
        for_csv.campaigns.push_back(std::move(c));
      }
    }
  }
  std::ostringstream csv;
  write_samples_csv(for_csv, csv);
  write_text(out_dir / kMcSamplesFile, csv.str());
  const json summary = {
      {"config_hash", hash},
      {"certification_hash", certification_hash(cfg)},
      {"synthesis_hash", synthesis_hash(cfg)},
      {"sample_hash", full_hash},
      {"n_samples", samples.size()},
      {"controller", cfg.mc.controller},
      {"config", to_json(cfg).at("mc")},
      {"campaigns", campaigns},
      {"agreement", agreement},
  };
  write_text(path, summary.dump(2) + "\n");
  return {path, false};
}

namespace {

struct ProvenanceRow {
  const char* name;
  std::string value;
  const char* source;
};

std::vector<ProvenanceRow> provenance(const PipelineConfig& c) {
  const TwipParams& p = c.model;
  return {
      {"wheel radius r [m]", fmt(p.r), "published model parameter table"},
      {"body mass m_B [kg]", fmt(p.m_B), "published model parameter table"},
      {"wheel mass m_W [kg]", fmt(p.m_W), "published model parameter table"},
      {"wheel inertia J [kg m^2]", fmt(p.J), "published model parameter table"},
      {"gravity g [m/s^2]", fmt(p.g), "published model parameter table"},
      {"gear ratio i_gb", fmt(p.i_gb), "published model parameter table"},
      {"motor constant K_m [N m/A]", fmt(p.K_m), "published model parameter table"},
      {"coil resistance R_M [Ohm]", fmt(p.R_M), "published model parameter table"},
      {"wheel separation d [m]", fmt(p.d), "published model parameter table"},
      {"pitch inertia I_2 [kg m^2]", fmt(p.I_2),
       "published table value 2.17e-4 refined to match the published discrete model"},
      {"axle to COM distance l [m]", fmt(p.l),
       "fitted to the published discrete model (table lists 2.75e-2)"},
      {"sampling time Ts [s]", fmt(c.Ts), "published discretization"},
      {"RK4 substeps", std::to_string(c.substeps), "library default"},
      {"LQR state weights", fmt(c.lqr.q_diag(0)) + ", " + fmt(c.lqr.q_diag(1)) + ", " +
                                fmt(c.lqr.q_diag(2)) + ", " + fmt(c.lqr.q_diag(3)),
       "published LQR weights"},
      {"LQR input weight", fmt(c.lqr.r), "published LQR weights"},
      {"input bound [V]", fmt(c.mpc.u_max), "published actuator limit"},
      {"state bounds on xdot, theta, thetadot",
       fmt(c.mpc.max_velocity) + ", " + fmt(c.mpc.max_pitch) + ", " + fmt(c.mpc.max_pitch_rate),
       "published MPC state constraints"},
      {"prediction horizon N", std::to_string(c.mpc.horizon), "published MPC setup"},
      {"MPC slack weight", fmt(c.mpc.slack_weight), "published MPC setup"},
      {"tube contraction alpha", fmt(c.ctmpc.alpha), "published tube MPC design parameter"},
      {"disturbance bound w_max [V]", fmt(c.ctmpc.w_max), "published tube MPC disturbance set"},
      {"tube MPC slack weight", fmt(c.ctmpc.slack_weight), "published tube MPC setup"},
      {"Lyapunov weight Q", "I_4", "published certification setup"},
      {"gamma margin", fmt(c.certification.gamma_margin), "library default"},
      {"rho search safety", fmt(c.certification.safety), "library default"},
      {"MC samples", std::to_string(c.mc.run.n_samples), "published Monte Carlo setup"},
      {"MC horizon [s]", fmt(c.mc.run.horizon), "published Monte Carlo setup"},
      {"MC box xdot, theta, thetadot",
       "[" + fmt(c.mc.run.velocity.lo) + ", " + fmt(c.mc.run.velocity.hi) + "], [" +
           fmt(c.mc.run.pitch.lo) + ", " + fmt(c.mc.run.pitch.hi) + "], [" +
           fmt(c.mc.run.pitch_rate.lo) + ", " + fmt(c.mc.run.pitch_rate.hi) + "]",
       "published Monte Carlo setup"},
      {"MC seed", std::to_string(c.mc.run.seed), "library default"},
  };
}

struct CsvRow {
  std::string controller;
  std::string x1, x2, x3;
  bool stable = false;
};

std::vector<CsvRow> read_samples_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DependencyError(path.string() + " not found; run `mc` first");
  }
  std::vector<CsvRow> rows;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      f.push_back(cell);
    }
    if (f.size() < 7) {
      throw DependencyError(path.string() + " is malformed; rerun `mc`");
    }
    rows.push_back({f[5], f[2], f[3], f[4], f[6] == to_string(Verdict::kCertifiedStable)});
  }
  return rows;
}

}  // namespace

StageResult cmd_report(const PipelineConfig& cfg, const fs::path& out_dir) {
  const json synth = require_artifact(out_dir / kSynthesisFile, synthesis_hash(cfg), "synth");
  const json cert = require_artifact(out_dir / kCertificationFile, certification_hash(cfg), "certify");
  const json mc = require_artifact(out_dir / kMcSummaryFile, mc_hash(cfg), "mc");
  const std::vector<CsvRow> rows = read_samples_csv(out_dir / kMcSamplesFile);

  std::ostringstream md;
  md << "# TWIP region-of-attraction report\n\n";
  md << "## Controllers\n\n";
  const Eigen::MatrixXd K = matrix_from_json(synth["lqr"]["K"]);
  md << "- LQR gain K (u = -Kx): [" << fmt(K(0, 0), "%.4f") << ", " << fmt(K(0, 1), "%.4f") << ", "
     << fmt(K(0, 2), "%.4f") << ", " << fmt(K(0, 3), "%.4f") << "]\n";
  md << "- LQR closed-loop spectral radius: "
     << fmt(synth["lqr"]["closed_loop_spectral_radius"].get<double>()) << "\n";
  md << "- MPC terminal set: " << synth["mpc"]["terminal_set"]["b"].size() << " halfspaces\n";
  const json& tube = synth["ctmpc"]["tube"];
  md << "- Tube: alpha = " << fmt(tube["alpha"].get<double>())
     << ", contraction = " << fmt(tube["contraction"].get<double>(), "%.9f")
     << ", delta_1 = " << fmt(tube["delta1"].get<double>())
     << ", delta_N = " << fmt(synth["ctmpc"]["delta"].back().get<double>()) << "\n";
  md << "- Robust terminal set: " << synth["ctmpc"]["rpi_set"]["b"].size() << " halfspaces\n\n";

  const json& set = cert["set"];
  md << "## Certified invariant set\n\n";
  md << "| quantity | value |\n|---|---|\n";
  md << "| gamma bound | " << fmt(set["gamma_bound"].get<double>()) << " |\n";
  md << "| gamma | " << fmt(set["gamma"].get<double>()) << " |\n";
  md << "| rho | " << fmt(set["rho"].get<double>()) << " |\n";
  md << "| level c | " << fmt(set["level"].get<double>()) << " |\n";
  md << "| lambda_min(P), lambda_max(P) | " << fmt(set["lambda_min"].get<double>()) << ", "
     << fmt(set["lambda_max"].get<double>()) << " |\n";
  md << "| max sampled \\|g\\|/\\|x\\| | " << fmt(set["max_ratio"].get<double>()) << " |\n";
  md << "| revalidation violations | " << cert["revalidation"]["violations"] << " of "
     << cert["revalidation"]["samples"] << " |\n";
  md << "| decrease violations | " << cert["decrease"]["violations"] << " of "
     << cert["decrease"]["samples"] << " |\n";
  md << "| max \\|Kx\\| on the set [V] | " << fmt(cert["saturation"]["max_feedback"].get<double>())
     << " |\n\n";
  md << "| controller | alpha* | c | admissible |\n|---|---|---|---|\n";
  for (const json& a : cert["admissibility"]) {
    md << "| " << a["controller"].get<std::string>() << " | " << fmt(a["alpha_star"].get<double>())
       << " | " << fmt(a["level"].get<double>()) << " | "
       << (a["admissible"].get<bool>() ? "yes" : "no") << " |\n";
  }
  md << "\n## Monte Carlo estimate\n\n";
  md << "| controller | samples | stable fraction | std. error | infeasible | diverged | "
        "horizon exhausted |\n|---|---|---|---|---|---|---|\n";
  for (const json& c : mc["campaigns"]) {
    md << "| " << c["controller"].get<std::string>() << " | " << c["n"] << " | "
       << fmt(100.0 * c["fraction"].get<double>(), "%.2f") << "% | "
       << fmt(100.0 * c["std_error"].get<double>(), "%.2f") << " pp | " << c["infeasible"]
       << " | " << c["diverged"] << " | " << c["horizon_exhausted"] << " |\n";
  }
  const json& ag = mc["agreement"];
  md << "\nVerdict agreement on " << ag["n"] << " common samples:\n\n|";
  for (const json& name : ag["controllers"]) {
    md << " | " << name.get<std::string>();
  }
  md << " |\n|---";
  for (size_t i = 0; i < ag["controllers"].size(); ++i) {
    md << "|---";
  }
  md << "|\n";
  const Eigen::MatrixXd A = matrix_from_json(ag["matrix"]);
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    md << "| " << ag["controllers"][static_cast<size_t>(i)].get<std::string>();
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
      md << " | " << fmt(A(i, j), "%.4f");
    }
    md << " |\n";
  }
  md << "\n## Provenance of defaults\n\n| setting | value | source |\n|---|---|---|\n";
  for (const ProvenanceRow& r : provenance(cfg)) {
    md << "| " << r.name << " | " << r.value << " | " << r.source << " |\n";
  }
  write_text(out_dir / kReportFile, md.str());

  std::map<std::string, std::ostringstream> scatter;
  for (const CsvRow& r : rows) {
    auto& out = scatter[r.controller];
    if (out.tellp() == 0) {
      out << "xdot_w,theta,thetadot,stable\n";
    }
    out << r.x1 << ',' << r.x2 << ',' << r.x3 << ',' << (r.stable ? 1 : 0) << '\n';
  }
  for (auto& [name, text] : scatter) {
    write_text(out_dir / ("scatter_" + name + ".csv"), text.str());
  }
  return {out_dir / kReportFile, false};
}

}  // namespace twip
