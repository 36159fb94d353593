// SPDX-License-Identifier: Apache-2.0
//
// irsplan: environment-aware IRS deployment planning for joint sensing and communication coverage
// Copyright (C) 2026 The irsplan Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

// End-to-end planning: scenario -> CKM -> channels -> deployment plan -> coverage report.

#include "irsplan/heuristics.hpp"
#include "irsplan/sca.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace irsplan {

enum class Algorithm { sca, cbd, rrb };

inline const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::sca: return "sca";
    case Algorithm::cbd: return "cbd";
    case Algorithm::rrb: return "rrb";
  }
  return "?";
}

inline Algorithm parse_algorithm(const std::string& s) {
  if (s == "sca") return Algorithm::sca;
  if (s == "cbd") return Algorithm::cbd;
  if (s == "rrb") return Algorithm::rrb;
  throw Error("unknown algorithm '" + s + "' (expected sca, cbd or rrb)", "config");
}

struct RunConfig {
  std::string scenario_path;
  Algorithm algorithm = Algorithm::sca;
  CaseTag case_tag = CaseTag::I;
  double ps_dbm = -72.0;         // sensing illumination threshold
  double gc_db = 5.0;            // SNR threshold
  double sigma2_dbm = -80.0;
  double p0max_dbm = 30.0;
  double w1 = 1.0;
  double w2 = 2.0;               // per watt
  std::uint64_t seed = 1;
  int n_gr = 200;
  std::string out_dir;           // empty: no files written
  std::string ckm_cache;         // empty: <out_dir>/scene.ckm when out_dir is set
  bool force_zero_beta = false;  // evaluate the empty deployment instead of planning
  bool fit_sdr = true;           // shrink the IRS element count to fit the SDP size limit
  ScaOptions sca{};

  Requirements requirements() const {
    return {dbm_to_watt(ps_dbm), db_to_linear(gc_db), dbm_to_watt(sigma2_dbm), dbm_to_watt(p0max_dbm)};
  }
  CostWeights weights() const { return {w1, w2}; }

  void validate() const {
    if (algorithm == Algorithm::rrb && case_tag == CaseTag::II)
      throw Error("the rrb benchmark uses one phase vector and only supports case I", "config");
    if (n_gr < 0) throw Error("n_gr must be non-negative", "config");
    requirements().validate();
    weights().validate();
  }
};

struct CoverageRow {
  TargetId id;
  Vec3 position = Vec3::Zero();
  double value = 0.0;      // W for SPs, linear SNR for CPs
  double value_db = 0.0;   // dBm for SPs, dB for CPs (-inf for zero)
  bool met = false;
};

// Per-point coverage of a plan under the per-point MRT covariance at the plan's P0.
inline std::vector<CoverageRow> coverage_map(const DeploymentPlan& plan, const ChannelSet& ch,
                                             const Requirements& req, const PointSet* pts = nullptr) {
  std::vector<CoverageRow> rows;
  const RVec beta = plan.beta_vector();
  for (const TargetId& t : all_targets(ch)) {
    CoverageRow r;
    r.id = t;
    if (pts) r.position = t.kind == TargetId::Sensing ? pts->sensing[t.index] : pts->comm[t.index];
    const double n2 = effective_vector(ch, beta, plan.phases(t), t).squaredNorm();
    if (t.kind == TargetId::Sensing) {
      r.value = plan.P0 * n2;
      r.value_db = r.value > 0.0 ? watt_to_dbm(r.value) : -std::numeric_limits<double>::infinity();
      r.met = r.value >= req.P_s * (1.0 - 1e-6);
    } else {
      r.value = plan.P0 * n2 / req.sigma2;
      r.value_db = r.value > 0.0 ? linear_to_db(r.value) : -std::numeric_limits<double>::infinity();
      r.met = r.value >= req.Gamma_c * (1.0 - 1e-6);
    }
    rows.push_back(r);
  }
  return rows;
}

struct PlanOutcome {
  DeploymentPlan plan;
  bool feasible = false;
  std::string infeasible_reason;
  RVec beta_relaxed;               // weights fed to the rounding (empty for rrb)
  std::vector<double> sca_trace;
  std::map<std::string, double> timings;   // seconds per stage
};

namespace detail {

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - t_).count();
    t_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point t_ = std::chrono::steady_clock::now();
};

}  // namespace detail

// Runs one algorithm on assembled channels. Infeasibility is reported in the outcome; other
// failures propagate. Feasibility is always re-derived from the metrics.
inline PlanOutcome plan_on_channels(const ChannelSet& ch, const Requirements& req,
                                    const CostWeights& w, Algorithm algo, CaseTag c,
                                    std::uint64_t seed, int n_gr = 200, ScaOptions sca = {}) {
  PlanOutcome out;
  detail::Stopwatch sw;
  RoundingOptions ro;
  ro.n_gr = n_gr;
  ro.snap = sca.snap;
  try {
    switch (algo) {
      case Algorithm::sca: {
        sca.seed = seed;
        sca.init.n_gr = n_gr;
        const RelaxedSolution rel = solve_relaxed(ch, req, w, c, sca);
        out.timings["sca"] = sw.lap();
        out.sca_trace = rel.trace;
        out.beta_relaxed = rel.beta;
        out.plan = greedy_round(rel.beta, ch, req, w, c, seed, ro).plan;
        out.timings["rounding"] = sw.lap();
        break;
      }
      case Algorithm::cbd: {
        out.beta_relaxed = cbd_weights(ch, req).beta_cbd;
        out.plan = greedy_round(out.beta_relaxed, ch, req, w, c, seed, ro).plan;
        out.timings["rounding"] = sw.lap();
        break;
      }
      case Algorithm::rrb: {
        if (c != CaseTag::I) throw Error("the rrb benchmark only supports case I", "config");
        out.plan = rrb_plan(ch, req, w, seed).plan;
        out.timings["enumeration"] = sw.lap();
        break;
      }
    }
  } catch (const InfeasibleError& e) {
    out.feasible = false;
    out.infeasible_reason = std::string(e.stage()) + ": " + e.what();
    return out;
  }
  out.plan.cost = system_cost(out.plan.beta, out.plan.P0, w);
  const PlanCheck chk = verify_plan(out.plan, ch, req);
  out.feasible = chk.ok;
  if (!chk.ok) {
    std::string why = "plan failed the metrics re-check:";
    for (const auto& v : chk.violations) why += " " + v + ";";
    out.infeasible_reason = why;
  }
  return out;
}

struct Report {
  RunConfig config;
  PlanOutcome outcome;
  std::vector<CoverageRow> coverage;
  double capital_cost = 0.0;      // w1 * deployed IRSs
  double operational_cost = 0.0;  // w2 * P0
  std::map<std::string, double> timings;
  int irs_elements = 0;            // as planned
  int irs_elements_requested = 0;  // as written in the scenario
};

// Largest per-site element count M for which the full-deployment relaxation over K sites
// (dimension 2(KM+1)+1) fits the SDP size limit.
inline int sdr_element_limit(int K, int max_dim = SdpOptions{}.max_dim) {
  return std::max(1, ((max_dim - 1) / 2 - 1) / std::max(1, K));
}

// Returns true when the element count had to be reduced.
inline bool fit_to_sdr_limit(Scenario& sc, int max_dim = SdpOptions{}.max_dim) {
  const int cap = sdr_element_limit(sc.scene.num_sites(), max_dim);
  if (sc.scene.irs_elements <= cap) return false;
  sc.scene.irs_elements = cap;
  return true;
}

struct PreparedScene {
  Scenario scenario;
  CKM ckm;
  ChannelSet channels;
  bool ckm_from_cache = false;
};

inline std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path, "io");
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// A cached CKM is reused only when it was built for the same scene and the same point set.
inline bool ckm_matches(const CKM& ckm, const Scenario& sc) {
  if (ckm.scene_hash != scene_hash(sc.scene) || ckm.frequency_hz != sc.scene.frequency_hz) return false;
  auto at = [&](Role r, std::size_t i) -> const Vec3* {
    const auto it = ckm.endpoints.find({r, static_cast<std::uint32_t>(i)});
    return it == ckm.endpoints.end() ? nullptr : &it->second;
  };
  const std::size_t expected = 1 + sc.scene.sites.size() + sc.points.sensing.size() + sc.points.comm.size();
  if (ckm.endpoints.size() != expected) return false;
  for (std::size_t p = 0; p < sc.points.sensing.size(); ++p) {
    const Vec3* e = at(Role::SP, p);
    if (!e || *e != sc.points.sensing[p]) return false;
  }
  for (std::size_t q = 0; q < sc.points.comm.size(); ++q) {
    const Vec3* e = at(Role::CP, q);
    if (!e || *e != sc.points.comm[q]) return false;
  }
  return true;
}

inline PreparedScene prepare_scene(const Scenario& sc, const std::string& ckm_cache = {}) {
  PreparedScene ps;
  ps.scenario = sc;
  bool loaded = false;
  if (!ckm_cache.empty() && std::filesystem::exists(ckm_cache)) {
    try {
      CKM c = load_ckm(ckm_cache, scene_hash(sc.scene));
      if (ckm_matches(c, sc)) {
        ps.ckm = std::move(c);
        loaded = true;
      }
    } catch (const CkmError&) {
      loaded = false;   // stale or corrupt cache: rebuild
    }
  }
  if (!loaded) {
    ps.ckm = build_ckm(sc.scene, sc.points);
    if (!ckm_cache.empty()) save_ckm(ps.ckm, ckm_cache);
  }
  ps.ckm_from_cache = loaded;
  ps.channels = assemble_channel_set(ps.ckm, sc.scene, sc.points);
  return ps;
}

namespace detail {

inline std::string fmt(double x) {
  if (std::isinf(x)) return x < 0 ? "-inf" : "inf";
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

}  // namespace detail

inline nlohmann::json plan_json(const DeploymentPlan& plan, const ChannelSet& ch) {
  using detail::complex_json;
  nlohmann::json j;
  j["case"] = case_name(plan.case_tag);
  j["beta"] = plan.beta;
  j["deployed_sites"] = nlohmann::json::array();
  for (std::size_t k = 0; k < plan.beta.size(); ++k)
    if (plan.beta[k]) j["deployed_sites"].push_back(k);
  j["P0_w"] = plan.P0;
  j["P0_dbm"] = plan.P0 > 0 ? nlohmann::json(watt_to_dbm(plan.P0)) : nlohmann::json(nullptr);
  j["cost"] = plan.cost;
  // Phases in radians, one array per site.
  auto phases = [&](const CVec& v) {
    nlohmann::json sites = nlohmann::json::array();
    for (int k = 0; k < ch.K; ++k) {
      nlohmann::json row = nlohmann::json::array();
      for (int m = 0; m < ch.M; ++m) row.push_back(std::arg(v[k * ch.M + m]));
      sites.push_back(row);
    }
    return sites;
  };
  if (plan.case_tag == CaseTag::I) {
    j["phases_rad"] = phases(plan.v);
  } else {
    j["phases_rad_sensing"] = nlohmann::json::array();
    for (const CVec& v : plan.v_sensing) j["phases_rad_sensing"].push_back(phases(v));
    j["phases_rad_comm"] = nlohmann::json::array();
    for (const CVec& v : plan.v_comm) j["phases_rad_comm"].push_back(phases(v));
  }
  return j;
}

inline void write_coverage_csv(const std::vector<CoverageRow>& rows, std::ostream& os) {
  os << "point,x,y,z,metric,value_db,met\n";
  for (const CoverageRow& r : rows) {
    os << to_string(r.id) << ',' << detail::fmt(r.position.x()) << ',' << detail::fmt(r.position.y())
       << ',' << detail::fmt(r.position.z()) << ','
       << (r.id.kind == TargetId::Sensing ? "illumination_dbm" : "snr_db") << ','
       << detail::fmt(r.value_db) << ',' << (r.met ? 1 : 0) << '\n';
  }
}

inline void write_trace_csv(const std::vector<double>& trace, std::ostream& os) {
  os << "iteration,objective\n";
  os.precision(17);
  for (std::size_t i = 0; i < trace.size(); ++i) os << i << ',' << trace[i] << '\n';
}

inline nlohmann::json report_json(const Report& r, const ChannelSet& ch) {
  nlohmann::json j;
  j["algorithm"] = algorithm_name(r.config.algorithm);
  j["case"] = case_name(r.config.case_tag);
  j["seed"] = r.config.seed;
  j["feasible"] = r.outcome.feasible;
  if (!r.outcome.infeasible_reason.empty()) j["infeasible_reason"] = r.outcome.infeasible_reason;
  j["requirements"] = {{"ps_dbm", r.config.ps_dbm},
                       {"gc_db", r.config.gc_db},
                       {"sigma2_dbm", r.config.sigma2_dbm},
                       {"p0max_dbm", r.config.p0max_dbm}};
  j["weights"] = {{"w1", r.config.w1}, {"w2", r.config.w2}};
  j["cost"] = {{"capital", r.capital_cost},
               {"operational", r.operational_cost},
               {"total", r.capital_cost + r.operational_cost}};
  if (r.outcome.beta_relaxed.size())
    j["beta_relaxed"] = std::vector<double>(r.outcome.beta_relaxed.data(),
                                            r.outcome.beta_relaxed.data() + r.outcome.beta_relaxed.size());
  if (r.outcome.feasible || r.config.force_zero_beta) j["plan"] = plan_json(r.outcome.plan, ch);
  if (r.irs_elements) {
    j["irs_elements"] = r.irs_elements;
    j["irs_elements_requested"] = r.irs_elements_requested;
  }
  j["timings_s"] = r.timings;
  return j;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write " + p.string(), "io");
  f << text;
}

// Writes plan.json (plan only, no timings, so repeated runs are byte-identical), report.json,
// coverage.csv and, for sca, trace.csv.
inline void write_report(const Report& r, const ChannelSet& ch, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::json plan;
  plan["feasible"] = r.outcome.feasible;
  if (r.outcome.feasible || r.config.force_zero_beta) plan["plan"] = plan_json(r.outcome.plan, ch);
  else plan["infeasible_reason"] = r.outcome.infeasible_reason;
  write_text(fs::path(dir) / "plan.json", plan.dump(2) + "\n");
  write_text(fs::path(dir) / "report.json", report_json(r, ch).dump(2) + "\n");
  std::ostringstream cov;
  write_coverage_csv(r.coverage, cov);
  write_text(fs::path(dir) / "coverage.csv", cov.str());
  if (!r.outcome.sca_trace.empty()) {
    std::ostringstream tr;
    write_trace_csv(r.outcome.sca_trace, tr);
    write_text(fs::path(dir) / "trace.csv", tr.str());
  }
}

inline Report run_on_prepared(const RunConfig& cfg, const PreparedScene& ps) {
  cfg.validate();
  Report rep;
  rep.config = cfg;
  const Requirements req = cfg.requirements();
  const CostWeights w = cfg.weights();
  const ChannelSet& ch = ps.channels;
  detail::Stopwatch sw;
  if (cfg.force_zero_beta) {
    rep.outcome.plan.beta.assign(ch.K, 0);
    rep.outcome.plan.case_tag = CaseTag::I;
    rep.outcome.plan.v = CVec::Ones(static_cast<Eigen::Index>(ch.K) * ch.M);
    rep.outcome.plan.P0 = req.P0_max;
    rep.outcome.plan.cost = system_cost(rep.outcome.plan.beta, rep.outcome.plan.P0, w);
    const PlanCheck chk = verify_plan(rep.outcome.plan, ch, req);
    rep.outcome.feasible = chk.ok;
    if (!chk.ok) rep.outcome.infeasible_reason = "empty deployment leaves requirements unmet";
  } else {
    rep.outcome = plan_on_channels(ch, req, w, cfg.algorithm, cfg.case_tag, cfg.seed, cfg.n_gr, cfg.sca);
  }
  rep.timings = rep.outcome.timings;
  rep.timings["plan"] = sw.lap();
  rep.coverage = coverage_map(rep.outcome.plan, ch, req, &ps.scenario.points);
  if (rep.outcome.feasible || cfg.force_zero_beta) {
    rep.capital_cost = w.w1 * rep.outcome.plan.deployed();
    rep.operational_cost = w.w2 * rep.outcome.plan.P0;
  } else {
    rep.coverage.clear();
  }
  return rep;
}

// Scenario file -> report; writes the report files when cfg.out_dir is set.
inline Report run_pipeline(const RunConfig& cfg) {
  cfg.validate();
  detail::Stopwatch sw;
  Scenario sc = load_scenario(read_text_file(cfg.scenario_path));
  int requested_elements = sc.scene.irs_elements;
  if (cfg.fit_sdr) fit_to_sdr_limit(sc);
  const double t_load = sw.lap();
  std::string cache = cfg.ckm_cache;
  if (cache.empty() && !cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    cache = (std::filesystem::path(cfg.out_dir) / "scene.ckm").string();
  }
  const PreparedScene ps = prepare_scene(sc, cache);
  const double t_ckm = sw.lap();
  Report rep = run_on_prepared(cfg, ps);
  rep.timings["load"] = t_load;
  rep.timings["ckm_and_channels"] = t_ckm;
  rep.irs_elements = sc.scene.irs_elements;
  rep.irs_elements_requested = requested_elements;
  if (!cfg.out_dir.empty()) write_report(rep, ps.channels, cfg.out_dir);
  return rep;
}

enum class SweepAxis { Gamma_c, P_s, w2 };

inline SweepAxis parse_axis(const std::string& s) {
  if (s == "gc") return SweepAxis::Gamma_c;
  if (s == "ps") return SweepAxis::P_s;
  if (s == "w2") return SweepAxis::w2;
  throw Error("unknown sweep axis '" + s + "' (expected gc, ps or w2)", "config");
}

struct SweepRow {
  double value = 0.0;
  int irs_count = 0;
  double P0 = 0.0;
  double cost = 0.0;
  bool feasible = false;
  std::string error;
};

// One run per value over shared channels; values must be ascending. Failures are recorded per
// row and the sweep continues.
inline std::vector<SweepRow> sweep(const RunConfig& base, const PreparedScene& ps, SweepAxis axis,
                                   const std::vector<double>& values) {
  if (!std::is_sorted(values.begin(), values.end()))
    throw Error("sweep values must be sorted ascending", "config");
  std::vector<SweepRow> rows(values.size());
  parallel_for(values.size(), [&](std::size_t i) {
    RunConfig cfg = base;
    switch (axis) {
      case SweepAxis::Gamma_c: cfg.gc_db = values[i]; break;
      case SweepAxis::P_s: cfg.ps_dbm = values[i]; break;
      case SweepAxis::w2: cfg.w2 = values[i]; break;
    }
    SweepRow& r = rows[i];
    r.value = values[i];
    try {
      const Report rep = run_on_prepared(cfg, ps);
      r.feasible = rep.outcome.feasible;
      if (r.feasible) {
        r.irs_count = rep.outcome.plan.deployed();
        r.P0 = rep.outcome.plan.P0;
        r.cost = rep.outcome.plan.cost;
      } else {
        r.error = rep.outcome.infeasible_reason;
      }
    } catch (const std::exception& e) {
      r.error = e.what();
    }
  });
  return rows;
}

inline void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& os) {
  os << "value,irs_count,P0_w,total_cost,feasible\n";
  os.precision(12);
  for (const SweepRow& r : rows)
    os << r.value << ',' << r.irs_count << ',' << r.P0 << ',' << r.cost << ',' << (r.feasible ? 1 : 0)
       << '\n';
}

}  // namespace irsplan
