#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "kgen/cli.hpp"

namespace {

void add_common(CLI::App* app, kgen::CommonOptions& o) {
  app->add_option("--config", o.config, "configuration file (flat dotted keys)")->check(CLI::ExistingFile);
  app->add_option("--seed", o.seed, "master seed; overrides sim.seed");
  app->add_option("--out", o.out, "primary output path");
  app->add_option("--gamma", o.gamma, "disturbance level; overrides analysis.gamma")->check(CLI::NonNegativeNumber);
  app->add_option("--gamma-d", o.gamma_d, "discount factor in [0, 1); overrides analysis.gamma_d")
      ->check(CLI::Range(0.0, 1.0));
  app->add_option("--rank-tol", o.rank_tol, "relative SVD truncation; overrides analysis.rank_tol");
  app->add_option("--grid-points", o.grid_points, "H-infinity grid size; overrides analysis.grid_points");
}

void add_sim(CLI::App* app, kgen::SimulateOptions& o) {
  add_common(app, o);
  app->add_option("--env", o.env, "environment")->check(CLI::IsMember({"linear", "uav"}));
  app->add_option("--runs", o.runs, "number of rollouts R");
  app->add_option("--horizon", o.horizon, "steps per rollout K");
  app->add_option("--policy", o.policy, "uav policy")->check(CLI::IsMember({"centroid_greedy", "lagged_centroid"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Koopman-operator generalization analysis for closed-loop policies"};
  app.footer(kgen::config_help());
  app.require_subcommand(1);
  app.set_version_flag("--version", kgen::kToolVersion);

  kgen::SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "generate rollouts and write a trajectory file");
  add_sim(simulate, sim);

  kgen::FitOptions fit;
  auto* fit_cmd = app.add_subcommand("fit", "fit state and action operators to the ensemble mean");
  add_common(fit_cmd, fit);
  fit_cmd->add_option("--input,input", fit.input, "trajectory file")->required();

  kgen::AnalyzeOptions analyze;
  auto* analyze_cmd = app.add_subcommand("analyze", "H-infinity norms and bounds of a fitted model");
  add_common(analyze_cmd, analyze);
  analyze_cmd->add_option("--model,model", analyze.model, "model JSON")->required()->check(CLI::ExistingFile);
  analyze_cmd->add_option("--lipschitz", analyze.lipschitz, "analytic reward Lipschitz constant L");
  analyze_cmd->add_option("--label", analyze.label, "row label for reports");

  kgen::VerifyOptions verify;
  auto* verify_cmd = app.add_subcommand("verify", "check the bounds on nominal vs disturbed ensembles");
  add_sim(verify_cmd, verify);
  verify_cmd->add_option("--model,model", verify.model, "model JSON")->required()->check(CLI::ExistingFile);
  verify_cmd->add_option("--label", verify.label, "row label for reports");
  verify_cmd->add_option("--table", verify.table, "per-step deviation table path");

  kgen::ReportOptions report;
  auto* report_cmd = app.add_subcommand("report", "compare bound reports, sorted by T_hinf");
  report_cmd->add_option("inputs", report.inputs, "bound report JSON files")->required()->check(CLI::ExistingFile);
  report_cmd->add_option("--out", report.out, "comparison table path (JSON written alongside)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kgen::kExitUsage;
  }

  if (*simulate) return kgen::cmd_simulate(sim, std::cerr, std::cerr);
  if (*fit_cmd) return kgen::cmd_fit(fit, std::cerr, std::cerr);
  if (*analyze_cmd) return kgen::cmd_analyze(analyze, std::cerr, std::cerr);
  if (*verify_cmd) return kgen::cmd_verify(verify, std::cerr, std::cerr);
  if (*report_cmd) return kgen::cmd_report(report, std::cerr, std::cerr);
  return kgen::kExitUsage;
}
