#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vbma/data_io.hpp"

namespace vbma::cli {

struct Options {
  std::string config;
  std::string out = "out";
  bool svg = false;

  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> optimizer;
  std::optional<double> step_size;
  std::optional<int> samples;
  std::optional<int> pretrain_iters;
  std::optional<int> joint_iters;
  std::optional<int> window;

  std::string model_i, model_j;             // bf
  std::int64_t mc_samples = -1;             // evidence / bf; -1 picks the per-command default
  std::optional<std::vector<double>> levels;  // predict / coverage
  std::optional<int> draws;

  SynthGpOptions synth;                     // synth
  std::string synth_file = "gp_synth.csv";
};

int cmd_fit(const Options& o);
int cmd_evidence(const Options& o);
int cmd_bf(const Options& o);
int cmd_predict(const Options& o);
int cmd_coverage(const Options& o);
int cmd_synth(const Options& o);

/// Exit code for an exception: 2 for numerical failures, 1 otherwise.
int exit_code_for(const std::exception& e);

}  // namespace vbma::cli
