// Command-line front end: plan, sweep, ckm build / inspect.
// Exit codes: 0 success, 2 infeasible, 1 error. IRSPLAN_WORKERS caps the thread count.

#include "irsplan/irsplan.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace irsplan;

namespace {

enum : int { kOk = 0, kError = 1, kInfeasible = 2 };

struct PlanArgs {
  std::string algo = "sca";
  int case_no = 1;
  bool zero_beta = false;
  bool keep_elements = false;
};

void add_run_options(CLI::App* cmd, RunConfig& cfg, PlanArgs& pa) {
  cmd->add_option("--scenario", cfg.scenario_path, "scenario JSON")->required()->check(CLI::ExistingFile);
  cmd->add_option("--algo", pa.algo, "sca, cbd or rrb")->check(CLI::IsMember({"sca", "cbd", "rrb"}));
  cmd->add_option("--case", pa.case_no, "1: shared phases, 2: per-point phases")->check(CLI::Range(1, 2));
  cmd->add_option("--ps-dbm", cfg.ps_dbm, "sensing illumination threshold (dBm)");
  cmd->add_option("--gc-db", cfg.gc_db, "SNR threshold (dB)");
  cmd->add_option("--sigma2-dbm", cfg.sigma2_dbm, "noise power (dBm)");
  cmd->add_option("--p0max-dbm", cfg.p0max_dbm, "transmit power budget (dBm)");
  cmd->add_option("--w1", cfg.w1, "cost per deployed IRS");
  cmd->add_option("--w2", cfg.w2, "cost per watt");
  cmd->add_option("--seed", cfg.seed, "random seed");
  cmd->add_option("--ngr", cfg.n_gr, "Gaussian randomization draws");
  cmd->add_option("--ckm", cfg.ckm_cache, "CKM cache file");
  cmd->add_flag("--keep-elements", pa.keep_elements,
                "do not shrink the IRS element count to the relaxation size limit");
}

void finish_config(RunConfig& cfg, const PlanArgs& pa) {
  cfg.algorithm = parse_algorithm(pa.algo);
  cfg.case_tag = pa.case_no == 2 ? CaseTag::II : CaseTag::I;
  cfg.force_zero_beta = pa.zero_beta;
  cfg.fit_sdr = !pa.keep_elements;
}

int cmd_plan(RunConfig cfg, const PlanArgs& pa) {
  finish_config(cfg, pa);
  const Report rep = run_pipeline(cfg);
  if (rep.irs_elements != rep.irs_elements_requested)
    std::cerr << "note: IRS elements reduced from " << rep.irs_elements_requested << " to "
              << rep.irs_elements << " to fit the relaxation size limit\n";
  const DeploymentPlan& p = rep.outcome.plan;
  if (!rep.outcome.feasible && !cfg.force_zero_beta) {
    std::cout << "infeasible: " << rep.outcome.infeasible_reason << '\n';
    return kInfeasible;
  }
  std::cout << "algorithm " << algorithm_name(cfg.algorithm) << ", case " << case_name(cfg.case_tag) << '\n'
            << "deployed sites:";
  for (std::size_t k = 0; k < p.beta.size(); ++k)
    if (p.beta[k]) std::cout << ' ' << k;
  std::cout << "\nP0 " << p.P0 << " W (" << watt_to_dbm(p.P0) << " dBm)\n"
            << "cost " << rep.capital_cost + rep.operational_cost << " (capital " << rep.capital_cost
            << ", operational " << rep.operational_cost << ")\n";
  int met = 0;
  for (const CoverageRow& r : rep.coverage) met += r.met;
  std::cout << "coverage " << met << '/' << rep.coverage.size() << " points\n";
  if (!cfg.out_dir.empty()) std::cout << "wrote " << cfg.out_dir << '\n';
  return rep.outcome.feasible ? kOk : kInfeasible;
}

int cmd_sweep(RunConfig cfg, const PlanArgs& pa, const std::string& axis,
              const std::vector<double>& values, const std::string& out) {
  finish_config(cfg, pa);
  cfg.validate();
  Scenario sc = load_scenario(read_text_file(cfg.scenario_path));
  if (cfg.fit_sdr) fit_to_sdr_limit(sc);
  const PreparedScene ps = prepare_scene(sc, cfg.ckm_cache);
  const auto rows = sweep(cfg, ps, parse_axis(axis), values);
  if (out.empty()) {
    write_sweep_csv(rows, std::cout);
  } else {
    std::ofstream f(out);
    if (!f) throw Error("cannot write " + out, "io");
    write_sweep_csv(rows, f);
  }
  for (const SweepRow& r : rows)
    if (!r.error.empty()) std::cerr << "value " << r.value << ": " << r.error << '\n';
  const bool any = std::any_of(rows.begin(), rows.end(), [](const SweepRow& r) { return r.feasible; });
  return any ? kOk : kInfeasible;
}

int cmd_ckm_build(const std::string& scenario, const std::string& out, bool keep_elements) {
  Scenario sc = load_scenario(read_text_file(scenario));
  if (!keep_elements) fit_to_sdr_limit(sc);
  const CKM ckm = build_ckm(sc.scene, sc.points);
  save_ckm(ckm, out);
  std::cout << "wrote " << out << ": " << ckm.table.size() << " pairs, " << ckm.record_count()
            << " records\n";
  return kOk;
}

int cmd_ckm_inspect(const std::string& file, const std::string& scenario) {
  const CKM ckm = load_ckm(file);
  std::size_t los = 0, refl = 0, empty = 0;
  for (const auto& [key, recs] : ckm.table) {
    if (recs.empty()) ++empty;
    for (const PathRecord& r : recs) (r.kind == PathKind::LoS ? los : refl)++;
  }
  std::map<Role, int> roles;
  for (const auto& [id, pos] : ckm.endpoints) roles[id.role]++;
  std::cout << "frequency_hz " << ckm.frequency_hz << "\nscene_hash " << std::hex << ckm.scene_hash
            << std::dec << "\nendpoints bs " << roles[Role::BS] << " sites " << roles[Role::Site]
            << " sp " << roles[Role::SP] << " cp " << roles[Role::CP] << "\npairs " << ckm.table.size()
            << " (" << empty << " without paths)\nrecords los " << los << " reflected " << refl << '\n';
  if (!scenario.empty()) {
    const Scenario sc = load_scenario(read_text_file(scenario));
    const bool ok = ckm_matches(ckm, sc);
    std::cout << "matches " << scenario << ": " << (ok ? "yes" : "no") << '\n';
    if (!ok) return kError;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IRS deployment planner for sensing and communication coverage"};
  app.require_subcommand(1);

  RunConfig plan_cfg, sweep_cfg;
  PlanArgs plan_args, sweep_args;
  auto* plan = app.add_subcommand("plan", "plan one deployment");
  add_run_options(plan, plan_cfg, plan_args);
  plan->add_option("--out", plan_cfg.out_dir, "output directory");
  plan->add_flag("--zero-beta", plan_args.zero_beta, "evaluate the empty deployment");

  std::string axis = "gc", sweep_out;
  std::vector<double> values;
  auto* sw = app.add_subcommand("sweep", "one run per threshold or weight value");
  add_run_options(sw, sweep_cfg, sweep_args);
  sw->add_option("--axis", axis, "gc, ps or w2")->check(CLI::IsMember({"gc", "ps", "w2"}));
  sw->add_option("--values", values, "ascending values, comma separated")->required()->delimiter(',');
  sw->add_option("--out", sweep_out, "CSV file (default stdout)");

  auto* ckm = app.add_subcommand("ckm", "channel knowledge map files");
  ckm->require_subcommand(1);
  std::string build_scenario, build_out, inspect_file, inspect_scenario;
  bool build_keep = false;
  auto* build = ckm->add_subcommand("build", "trace a scenario and save its map");
  build->add_option("--scenario", build_scenario)->required()->check(CLI::ExistingFile);
  build->add_option("--out", build_out)->required();
  build->add_flag("--keep-elements", build_keep);
  auto* inspect = ckm->add_subcommand("inspect", "summarize a map file");
  inspect->add_option("file", inspect_file)->required()->check(CLI::ExistingFile);
  inspect->add_option("--scenario", inspect_scenario, "check the map against this scenario");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kError;
  }

  try {
    if (*plan) return cmd_plan(plan_cfg, plan_args);
    if (*sw) return cmd_sweep(sweep_cfg, sweep_args, axis, values, sweep_out);
    if (*build) return cmd_ckm_build(build_scenario, build_out, build_keep);
    if (*inspect) return cmd_ckm_inspect(inspect_file, inspect_scenario);
  } catch (const Error& e) {
    std::cerr << "error [" << e.stage() << "]: " << e.what() << '\n';
    return kError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kError;
  }
  return kError;
}
