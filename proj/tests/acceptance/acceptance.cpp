// Acceptance run: one PASS/FAIL line per criterion, then a summary. Exit status is the number
// of failed criteria that were not listed with --expect-fail.

#include "irsplan/irsplan.hpp"
#include "support/oracles.hpp"

#include <chrono>
#include <cstdio>
#include <iostream>
#include <set>
#include <sstream>

using namespace irsplan;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string str(double x, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << x;
  return os.str();
}

double median(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();
  return n % 2 ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
}

Requirements unit_requirements(double budget) {
  return {1.0, 1.0, 1.0, budget};
}

void random_point(int K, int M, std::mt19937_64& rng, RVec& beta, CVec& v) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  beta.resize(K);
  for (int k = 0; k < K; ++k) beta[k] = u(rng);
  v = oracle::random_unit_modulus(K * M, rng);
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] *= std::sqrt(u(rng));
}

// ---------------------------------------------------------------------------------------------
// Shared desk matrix: demo scene with randomly drawn points, one draw per seed.

struct DeskRun {
  PlanOutcome outcome;
  double seconds = 0.0;
};

struct DeskSeed {
  std::uint64_t seed = 0;
  PreparedScene scene;
  DeskRun sca1, sca2, cbd1, cbd2, rrb;
};

double cost_of(const DeskRun& r) {
  return r.outcome.feasible ? r.outcome.plan.cost : std::numeric_limits<double>::infinity();
}

std::vector<DeskSeed> desk_matrix() {
  std::vector<DeskSeed> out;
  const RunConfig cfg;
  const Requirements req = cfg.requirements();
  const CostWeights w = cfg.weights();
  for (std::uint64_t s = 1; s <= 10; ++s) {
    Scenario sc = load_scenario(read_text_file(IRSPLAN_SCENARIO_DIR "/demo_desk.json"));
    sc.spec.mode = SamplingMode::random;
    sc.spec.seed = s;
    sc.points = generate_points(sc.scene, sc.spec);
    DeskSeed d;
    d.seed = s;
    d.scene = prepare_scene(sc);
    auto run = [&](Algorithm a, CaseTag c) {
      const auto t0 = Clock::now();
      DeskRun r;
      r.outcome = plan_on_channels(d.scene.channels, req, w, a, c, s, cfg.n_gr);
      r.seconds = seconds_since(t0);
      return r;
    };
    d.sca1 = run(Algorithm::sca, CaseTag::I);
    d.sca2 = run(Algorithm::sca, CaseTag::II);
    d.cbd1 = run(Algorithm::cbd, CaseTag::I);
    d.cbd2 = run(Algorithm::cbd, CaseTag::II);
    d.rrb = run(Algorithm::rrb, CaseTag::I);
    std::fprintf(stderr, "  seed %2llu: sca I %.3g (%.1fs), sca II %.3g, cbd I %.3g, cbd II %.3g, rrb %.3g\n",
                 static_cast<unsigned long long>(s), cost_of(d.sca1), d.sca1.seconds, cost_of(d.sca2),
                 cost_of(d.cbd1), cost_of(d.cbd2), cost_of(d.rrb));
    out.push_back(std::move(d));
  }
  return out;
}

// ---------------------------------------------------------------------------------------------

Outcome mrt_optimality() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> dim(1, 4);
  int violations = 0;
  for (int inst = 0; inst < 50; ++inst) {
    const int K = dim(rng), M = dim(rng), Nt = dim(rng) + 1;
    const ChannelSet ch = oracle::random_channels(K, M, Nt, 1, 1, rng);
    RVec beta;
    CVec v;
    random_point(K, M, rng, beta, v);
    const double P0 = 0.5 + 2.0 * std::uniform_real_distribution<double>(0, 1)(rng);
    for (const TargetId& t : all_targets(ch)) {
      const CovarianceResult best = optimal_covariance(beta, v, ch, P0, t);
      const double ref = oracle::explicit_metric(ch, beta, v, best.R, t);
      for (int j = 0; j < 1000; ++j) {
        const double val = oracle::explicit_metric(ch, beta, v, oracle::random_psd(Nt, P0, rng), t);
        if (val > ref * (1 + 1e-12)) ++violations;
      }
    }
  }
  const double secs = seconds_since(t0);
  return {violations == 0 && secs < 10.0,
          std::to_string(violations) + " violations over 100000 draws, " + str(secs, 3) + " s"};
}

Outcome surrogate_correctness() {
  std::mt19937_64 rng(202);
  double worst_tangency = 0.0, worst_grad = 0.0;
  long majorization_checks = 0, majorization_violations = 0;
  int iterates = 0;
  for (int inst = 0; inst < 50; ++inst) {
    const ChannelSet ch = oracle::random_channels(3, 2, 2, 2, 1, rng);
    RVec beta;
    CVec v;
    random_point(3, 2, rng, beta, v);
    for (const TargetId& t : all_targets(ch)) {
      auto f = [&](const RVec& b, const CVec& w) {
        return -oracle::explicit_effective(ch, b, w, t).squaredNorm();
      };
      const SiteCurvature lc = local_curvature(ch, beta, v, t);
      Surrogate s = make_surrogate(ch, beta, v, t, lc.mu, lc.site_scale);
      s.beta_weight = ch.M;
      worst_tangency = std::max(worst_tangency, std::abs(s(beta, v) - f(beta, v)));
      // gradient against central differences, all real coordinates at once
      const FValue fv = eval_f(ch, beta, v, t);
      RVec ana(3 * v.size() + 3), num(ana.size());
      Eigen::Index n = 0;
      for (Eigen::Index j = 0; j < v.size(); ++j)
        for (cd dir : {cd(1, 0), cd(0, 1)}) {
          ana[n] = dir == cd(1, 0) ? fv.grad_v[j].real() : fv.grad_v[j].imag();
          num[n++] = oracle::central_difference([&](double h) {
            CVec w = v;
            w[j] += h * dir;
            return f(beta, w);
          });
        }
      for (int k = 0; k < 3; ++k) {
        ana[n] = fv.grad_beta[k];
        num[n++] = oracle::central_difference([&](double h) {
          RVec b = beta;
          b[k] += h;
          return f(b, v);
        });
      }
      ana.conservativeResize(n);
      num.conservativeResize(n);
      worst_grad = std::max(worst_grad, (num - ana).norm() / std::max(ana.norm(), 1e-300));
    }
    // majorization of the surrogates the solver accepted
    ScaOptions opt;
    std::mt19937_64 probe(1000 + inst);
    opt.observer = [&](int, const std::vector<Surrogate>& used) {
      ++iterates;
      for (int p = 0; p < 100; ++p) {
        RVec b;
        CVec w;
        random_point(3, 2, probe, b, w);
        for (const Surrogate& s : used) {
          const double fx = -oracle::explicit_effective(ch, b, w, s.target).squaredNorm();
          ++majorization_checks;
          if (s(b, w) < fx - 1e-12 * std::abs(fx)) ++majorization_violations;
        }
      }
    };
    try {
      solve_relaxed(ch, unit_requirements(100.0), {1.0, 0.05}, inst % 2 ? CaseTag::II : CaseTag::I, opt);
    } catch (const InfeasibleError&) {
    }
  }
  const bool pass = worst_tangency < 1e-10 && worst_grad < 1e-5 && majorization_violations == 0 &&
                    iterates > 0;
  return {pass, "tangency " + str(worst_tangency, 3) + ", gradient rel " + str(worst_grad, 3) + ", " +
                    std::to_string(majorization_violations) + "/" + std::to_string(majorization_checks) +
                    " majorization violations over " + std::to_string(iterates) + " iterates"};
}

Outcome sca_descent(const std::vector<DeskSeed>& desk) {
  int bad = 0, runs = 0;
  double slowest = 0.0;
  std::size_t longest = 0;
  for (const DeskSeed& d : desk)
    for (const DeskRun* r : {&d.sca1, &d.sca2}) {
      ++runs;
      const auto& tr = r->outcome.sca_trace;
      bool ok = !tr.empty() && tr.size() <= 101 && r->seconds < 60.0;
      for (std::size_t i = 1; i < tr.size(); ++i) ok = ok && tr[i] <= tr[i - 1] + 1e-9;
      bad += !ok;
      slowest = std::max(slowest, r->seconds);
      longest = std::max(longest, tr.size() ? tr.size() - 1 : 0);
    }
  return {bad == 0, std::to_string(runs - bad) + "/" + std::to_string(runs) + " runs monotone, at most " +
                        std::to_string(longest) + " iterations, slowest " + str(slowest, 3) + " s"};
}

// Plans from the desk matrix plus the small brute-force instances.
std::vector<std::pair<DeploymentPlan, std::pair<const ChannelSet*, Requirements>>> g_extra_plans;

Outcome rounding_feasibility(const std::vector<DeskSeed>& desk) {
  const Requirements req = RunConfig{}.requirements();
  int checked = 0, violations = 0, infeasible = 0;
  for (const DeskSeed& d : desk)
    for (const DeskRun* r : {&d.sca1, &d.sca2, &d.cbd1, &d.cbd2, &d.rrb}) {
      if (!r->outcome.infeasible_reason.empty() && r->outcome.plan.beta.empty()) {
        ++infeasible;   // reported as infeasible, nothing returned
        continue;
      }
      ++checked;
      violations += !verify_plan(r->outcome.plan, d.scene.channels, req, 1e-6).ok;
    }
  for (const auto& [plan, ctx] : g_extra_plans) {
    ++checked;
    violations += !verify_plan(plan, *ctx.first, ctx.second, 1e-6).ok;
  }
  return {violations == 0 && checked > 0, std::to_string(checked) + " plans checked, " +
                                               std::to_string(violations) + " violations, " +
                                               "infeasible runs reported: " + std::to_string(infeasible)};
}

std::vector<ChannelSet> g_small_channels;

Outcome brute_force_near_optimality() {
  const Requirements req = unit_requirements(4.0);
  const CostWeights w{1.0, 0.25};
  std::mt19937_64 rng(505);
  g_small_channels.clear();
  g_small_channels.reserve(10);
  int below = 0, close = 0, compared = 0;
  std::string worst;
  double worst_gap = 0.0;
  for (int s = 0; s < 10; ++s) {
    g_small_channels.push_back(oracle::random_channels(2, 1, 2, 1, 1, rng));
    const ChannelSet& ch = g_small_channels.back();
    const double best = oracle::phase_grid_optimum(ch, req, w);
    const PlanOutcome o = plan_on_channels(ch, req, w, Algorithm::sca, CaseTag::I, 900 + s);
    if (!std::isfinite(best)) {
      // nothing feasible: the planner must agree
      close += !o.feasible;
      continue;
    }
    ++compared;
    if (!o.feasible) continue;
    g_extra_plans.push_back({o.plan, {&ch, req}});
    const double c = o.plan.cost;
    below += c < best - 1e-6;
    close += c <= best * 1.05;
    const double gap = c / best - 1.0;
    if (gap > worst_gap) worst_gap = gap, worst = "seed " + std::to_string(s);
  }
  return {below == 0 && close >= 8,
          std::to_string(close) + "/10 within 5%, " + std::to_string(below) +
              " below the oracle, worst gap " + str(100 * worst_gap, 3) + "%" +
              (worst.empty() ? "" : " (" + worst + ")")};
}

Outcome rrb_exactness() {
  std::mt19937_64 rng(606);
  int matches = 0;
  for (int s = 0; s < 20; ++s) {
    const ChannelSet ch = oracle::random_channels(3, 2, 2, 2, 1, rng, 0.3);
    const Requirements req = unit_requirements(5.0);
    const CostWeights w{1.0, s % 2 ? 0.0 : 0.3};
    const CVec v = random_phases(3, 2, 700 + s);
    const oracle::Enumerated want = oracle::enumerate_patterns(ch, req, w, v);
    bool ok;
    try {
      const RrbReport r = rrb_plan(ch, req, w, 700 + s);
      ok = want.feasible && r.plan.beta == want.beta &&
           std::abs(r.plan.cost - want.cost) <= 1e-12 * std::max(1.0, want.cost) && r.plan.v == v;
    } catch (const InfeasibleError&) {
      ok = !want.feasible;
    }
    matches += ok;
  }
  // a budget no pattern can meet
  std::mt19937_64 rng2(607);
  const ChannelSet ch = oracle::random_channels(3, 2, 2, 2, 1, rng2, 0.3);
  const Requirements tiny = unit_requirements(1e-6);
  const bool oracle_infeasible = !oracle::enumerate_patterns(ch, tiny, {1.0, 0.0}, random_phases(3, 2, 1)).feasible;
  bool reported = false;
  try {
    rrb_plan(ch, tiny, {1.0, 0.0}, 1);
  } catch (const InfeasibleError&) {
    reported = true;
  }
  return {matches == 20 && oracle_infeasible && reported,
          std::to_string(matches) + "/20 exact matches, infeasible budget " +
              (reported ? "reported" : "NOT reported")};
}

Outcome algorithm_ordering(const std::vector<DeskSeed>& desk) {
  std::vector<double> sca, cbd, rrb;
  for (const DeskSeed& d : desk) {
    sca.push_back(cost_of(d.sca1));
    cbd.push_back(cost_of(d.cbd1));
    rrb.push_back(cost_of(d.rrb));
  }
  const double a = median(sca), b = median(cbd), c = median(rrb);
  return {a <= b && b <= c, "median cost sca " + str(a) + ", cbd " + str(b) + ", rrb " + str(c)};
}

Outcome case_dominance(const std::vector<DeskSeed>& desk) {
  std::vector<double> s1, s2, c1, c2;
  for (const DeskSeed& d : desk) {
    s1.push_back(cost_of(d.sca1));
    s2.push_back(cost_of(d.sca2));
    c1.push_back(cost_of(d.cbd1));
    c2.push_back(cost_of(d.cbd2));
  }
  const double a = median(s1), b = median(s2);
  return {b <= a + 1e-6, "sca median case I " + str(a) + ", case II " + str(b) + "; cbd case I " +
                             str(median(c1)) + ", case II " + str(median(c2)) + " (not gated)"};
}

Outcome threshold_monotonicity() {
  const PreparedScene ps =
      prepare_scene(load_scenario(read_text_file(IRSPLAN_SCENARIO_DIR "/demo_desk.json")));
  const std::vector<double> gc{8, 11, 14, 17, 20};
  const auto rows = sweep(RunConfig{}, ps, SweepAxis::Gamma_c, gc);
  bool ok = true;
  std::string curve;
  double prev = -std::numeric_limits<double>::infinity();
  for (const SweepRow& r : rows) {
    const double c = r.feasible ? r.cost : std::numeric_limits<double>::infinity();
    ok = ok && c >= prev - 1e-6;
    prev = c;
    curve += (curve.empty() ? "" : " ") + str(r.value, 3) + "dB:" + str(c);
  }
  return {ok, "cost " + curve};
}

Outcome ray_tracer_geometry() {
  std::mt19937_64 rng(1010);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int reflected = 0, bad = 0, nonreciprocal = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Scene s;
    s.bs.position = Vec3(0, 0, 2);
    s.sites.push_back({Vec3(1, 0, 2), Vec3(0, 0, -1), Vec3(1, 0, 0)});
    s.sensing_region = s.comm_region = {Vec3(2, 0, 1), Vec3(2, 0, 1)};
    Obstacle o;
    const Vec3 c(5 * u(rng), 5 * u(rng), 5 * u(rng));
    const Vec3 h(0.05 + 2 * u(rng), 0.05 + 2 * u(rng), 0.05 + 2 * u(rng));
    o.box = {c - h, c + h};
    for (double& r : o.reflect) r = 0.2 + 0.7 * u(rng);
    s.obstacles.push_back(o);
    auto free_point = [&] {
      for (;;) {
        const Vec3 p(-3 + 11 * u(rng), -3 + 11 * u(rng), -3 + 11 * u(rng));
        if (!o.box.contains(p, 1e-3)) return p;
      }
    };
    const Vec3 tx = free_point(), rx = free_point();
    const auto recs = trace_paths(s, tx, rx);
    for (const PathRecord& r : recs) {
      if (r.kind != PathKind::Reflected) continue;
      ++reflected;
      const int axis = r.face / 2;
      const double plane = r.face % 2 ? o.box.max[axis] : o.box.min[axis];
      const Vec3 image = oracle::mirror(tx, axis, plane);
      const Vec3 n = Vec3::Unit(axis) * (r.face % 2 ? 1.0 : -1.0);
      const Vec3 in = (*r.bounce - tx).normalized(), out = (rx - *r.bounce).normalized();
      const Vec3 mirrored = in - 2.0 * in.dot(n) * n;
      const double e = std::max({std::abs((image - rx).norm() - r.length), (mirrored - out).norm(),
                                 std::abs((*r.bounce)[axis] - plane)});
      worst = std::max(worst, e);
      bad += e > 1e-9;
    }
    auto back = trace_paths(s, rx, tx);
    for (auto& r : back) r = reversed(r);
    nonreciprocal += !(back == recs);
  }
  return {bad == 0 && nonreciprocal == 0 && reflected > 0,
          std::to_string(reflected) + " reflected records, worst error " + str(worst, 3) + ", " +
              std::to_string(nonreciprocal) + " non-reciprocal pairs"};
}

Outcome blocked_scene_zero_coverage() {
  RunConfig cfg;
  cfg.force_zero_beta = true;
  const PreparedScene ps =
      prepare_scene(load_scenario(read_text_file(IRSPLAN_SCENARIO_DIR "/demo_desk.json")));
  const Report rep = run_on_prepared(cfg, ps);
  int sps = 0, nonzero = 0;
  for (const CoverageRow& r : rep.coverage)
    if (r.id.kind == TargetId::Sensing) {
      ++sps;
      nonzero += r.value != 0.0;
    }
  return {sps > 0 && nonzero == 0,
          std::to_string(sps) + " SPs, " + std::to_string(nonzero) + " with non-zero illumination"};
}

Outcome sdr_lower_bound() {
  std::mt19937_64 rng(1212);
  int violations = 0;
  double worst_ratio = 0.0;
  for (int inst = 0; inst < 30; ++inst) {
    const int K = 2 + inst % 3, M = 1 + inst % 4;
    const ChannelSet ch = oracle::random_channels(K, M, 3, 2, 1, rng);
    RVec beta = RVec::Ones(K);
    if (inst % 5 == 4) beta[0] = 0;
    const auto sol = solve_reflective_subproblem(beta, ch, unit_requirements(1e6), 50 + inst);
    violations += !(sol.sdr_P0 <= sol.P0 * (1 + 1e-9));
    worst_ratio = std::max(worst_ratio, sol.sdr_P0 / sol.P0);
  }
  double recovery = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    CVec v = oracle::random_unit_modulus(9, rng);
    v /= v[8];
    const CMat V = v * v.adjoint();
    for (const CVec& c : gaussian_candidates(V, 50, trial)) recovery = std::max(recovery, (c - v).norm());
    recovery = std::max(recovery, (principal_candidate(V) - v).norm());
  }
  return {violations == 0 && recovery < 1e-10,
          std::to_string(violations) + "/30 bound violations (largest sdr/best ratio " + str(worst_ratio, 6) +
              "), rank-one recovery error " + str(recovery, 3)};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> expect_fail;
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--expect-fail") {
      std::stringstream ss(argv[++i]);
      std::string tok;
      while (std::getline(ss, tok, ',')) expect_fail.insert(std::stoi(tok));
    }

  std::fprintf(stderr, "building the 10-seed desk matrix...\n");
  const auto t0 = Clock::now();
  const std::vector<DeskSeed> desk = desk_matrix();
  std::fprintf(stderr, "matrix done in %.1f s\n", seconds_since(t0));

  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  // Order matters: criterion 4 also re-checks the plans produced by criterion 5.
  const std::vector<Criterion> criteria{
      {1, "mrt-optimality", mrt_optimality},
      {2, "surrogate-correctness", surrogate_correctness},
      {3, "sca-descent", [&] { return sca_descent(desk); }},
      {5, "brute-force-near-optimality", brute_force_near_optimality},
      {4, "rounding-feasibility", [&] { return rounding_feasibility(desk); }},
      {6, "rrb-exactness", rrb_exactness},
      {7, "algorithm-ordering", [&] { return algorithm_ordering(desk); }},
      {8, "case-dominance", [&] { return case_dominance(desk); }},
      {9, "threshold-monotonicity", threshold_monotonicity},
      {10, "ray-tracer-geometry", ray_tracer_geometry},
      {11, "blocked-scene-zero-coverage", blocked_scene_zero_coverage},
      {12, "sdr-lower-bound", sdr_lower_bound},
  };
  std::map<int, std::string> lines;
  int failed = 0, unexpected = 0;
  for (const Criterion& c : criteria) {
    Outcome o;
    const auto tc = Clock::now();
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s C%02d %-28s ", o.pass ? "PASS" : "FAIL", c.id, c.name);
    lines[c.id] = buf + o.detail + " [" + str(seconds_since(tc), 3) + " s]";
    std::fprintf(stderr, "%s\n", lines[c.id].c_str());
    if (!o.pass) {
      ++failed;
      if (!expect_fail.count(c.id)) ++unexpected;
    }
  }
  for (const auto& [id, line] : lines) std::cout << line << '\n';
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed";
  if (!expect_fail.empty()) std::cout << ", " << unexpected << " unexpected failures";
  std::cout << '\n';
  return unexpected;
}
