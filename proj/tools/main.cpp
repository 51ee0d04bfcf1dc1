#include <cstdio>
#include <exception>
#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"

namespace {

using vbma::cli::Options;

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("-c,--config", o.config, "Ensemble declaration file")->envname("VBMA_CONFIG");
  cmd->add_option("-o,--out", o.out, "Output directory")->envname("VBMA_OUT")->capture_default_str();
  cmd->add_option("--seed", o.seed, "Master seed")->envname("VBMA_SEED");
  cmd->add_option("--threads", o.threads, "Worker threads (results do not depend on it)")
      ->envname("VBMA_THREADS")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--optimizer", o.optimizer, "adam, rmsprop or sga")->envname("VBMA_OPTIMIZER");
  cmd->add_option("--step-size", o.step_size, "Optimizer step size")->envname("VBMA_STEP_SIZE");
  cmd->add_option("--samples", o.samples, "Monte Carlo draws S per model and iteration")->envname("VBMA_SAMPLES");
  cmd->add_option("--pretrain-iters", o.pretrain_iters, "Iterations with q(M) fixed at 1/K")
      ->envname("VBMA_PRETRAIN_ITERS");
  cmd->add_option("--joint-iters", o.joint_iters, "Joint iterations")->envname("VBMA_JOINT_ITERS");
  cmd->add_option("--window", o.window, "Trailing window W for the reported q(M)")->envname("VBMA_WINDOW");
  cmd->add_flag("--svg", o.svg, "Also write SVG plots")->envname("VBMA_SVG");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variational Bayesian model averaging"};
  app.require_subcommand(1);
  app.set_version_flag("--version", VBMA_VERSION);
  Options o;

  auto* fit = app.add_subcommand("fit", "Run the joint optimization; writes weights, traces, checkpoint");
  add_common(fit, o);
  auto* evidence = app.add_subcommand("evidence", "Closed-form or Monte Carlo log evidences");
  add_common(evidence, o);
  evidence->add_option("--mc-samples", o.mc_samples, "Prior draws per model for Monte Carlo evidence (default 100000)");
  auto* bf = app.add_subcommand("bf", "Bayes factor between two fitted models");
  add_common(bf, o);
  bf->add_option("--model-i", o.model_i, "Numerator model name")->required();
  bf->add_option("--model-j", o.model_j, "Denominator model name")->required();
  bf->add_option("--mc-samples", o.mc_samples, "Monte Carlo oracle draws for proper-prior families (0 skips)");
  auto* predict = app.add_subcommand("predict", "Model-averaged predictive means and intervals");
  add_common(predict, o);
  auto* predict_levels = predict->add_option("--levels", o.levels, "Interval levels in (0, 1); pass none for means only")
      ->delimiter(',')
      ->expected(0, -1);
  predict->add_option("--draws", o.draws, "Predictive draws per point");
  auto* coverage = app.add_subcommand("coverage", "Empirical coverage of predictive intervals on held-out rows");
  add_common(coverage, o);
  coverage->add_option("--levels", o.levels, "Interval levels in (0, 1)")->delimiter(',');
  coverage->add_option("--draws", o.draws, "Predictive draws per point");
  auto* synth = app.add_subcommand("synth", "Generate the synthetic 2-D GP dataset");
  synth->add_option("-o,--out", o.out, "Output directory")->envname("VBMA_OUT")->capture_default_str();
  synth->add_option("--file", o.synth_file, "Output file name")->capture_default_str();
  synth->add_option("--seed", o.seed, "Seed")->envname("VBMA_SEED");
  synth->add_option("--width", o.synth.width, "Lattice size along x1")->capture_default_str();
  synth->add_option("--height", o.synth.height, "Lattice size along x2")->capture_default_str();
  synth->add_option("--test-columns", o.synth.test_columns, "Held-out rows at the x2 frontier")->capture_default_str();
  synth->add_option("--beta", o.synth.beta, "Constant mean")->capture_default_str();
  synth->add_option("--eta", o.synth.eta, "Kernel scale")->capture_default_str();
  synth->add_option("--nu1", o.synth.nu1, "Correlation range along x1")->capture_default_str();
  synth->add_option("--nu2", o.synth.nu2, "Correlation range along x2")->capture_default_str();
  synth->add_option("--sigma", o.synth.sigma, "Noise scale")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  if (predict_levels->count() > 0 && !o.levels) o.levels = std::vector<double>{};

  try {
    if (*fit) return vbma::cli::cmd_fit(o);
    if (*evidence) return vbma::cli::cmd_evidence(o);
    if (*bf) return vbma::cli::cmd_bf(o);
    if (*predict) return vbma::cli::cmd_predict(o);
    if (*coverage) return vbma::cli::cmd_coverage(o);
    if (*synth) return vbma::cli::cmd_synth(o);
  } catch (const std::exception& e) {
    std::cerr << "vbma: error: " << e.what() << '\n';
    return vbma::cli::exit_code_for(e);
  }
  return 1;
}
