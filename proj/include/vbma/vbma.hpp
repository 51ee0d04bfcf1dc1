#pragma once

// Joint optimization of per-model mean-field posteriors q(theta | M, lambda_M)
// and a categorical q(M) over a finite model space.
//
// Each iteration draws S standard-normal vectors per model, estimates the
// reparametrization gradient G_M and the ELBO L_M from the same draws, steps
// lambda_M along q(M) G_M, and then sets q(M) ∝ exp(L_M + log p(M)). A
// pre-training phase holds q(M) at 1/K; the reported q is the mean over the
// last W iterations.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "vbma/families.hpp"
#include "vbma/model.hpp"
#include "vbma/optimizer.hpp"
#include "vbma/rng.hpp"

namespace vbma {

struct VbmaConfig {
  int samples = 10;               ///< S, Monte Carlo draws per model and iteration
  int pretrain_iters = 500;
  int joint_iters = 200;
  int window = 100;               ///< W, trailing average for the reported q
  std::uint64_t seed = 1;
  OptimizerSettings optimizer{};
  double initial_variance = 0.01;
  double tolerance = 1e-4;        ///< relative change of the moving-average objective
  int convergence_window = 50;    ///< 0 disables early stopping
  int threads = 1;
  int checkpoint_every = 0;       ///< 0 disables periodic checkpoints
  std::string checkpoint_path;

  void validate() const;
};

struct GradientEstimate {
  std::vector<double> gradient;  ///< d/d[mu, raw_scale], packed like VariationalState::packed
  double elbo = 0.0;
  int rejected = 0;              ///< draws discarded for non-finite values
};

/// G_M and L_M from caller-supplied draws; `z` holds S vectors of the
/// model's dimension. Any non-finite draw raises NonFiniteError.
GradientEstimate estimate_grad_and_elbo(const Model& model, const VariationalState& state,
                                        std::span<const std::vector<double>> z);

/// G_M and L_M from S fresh draws. Non-finite draws are redrawn; more
/// rejections than accepted draws raises IterationError.
GradientEstimate estimate_grad_and_elbo(const Model& model, const VariationalState& state,
                                        int samples, Rng& rng);

/// q(M) = softmax(L_M + log p(M)), computed with max subtraction.
std::vector<double> update_weights(std::span<const double> elbo,
                                   std::span<const double> log_prior_weights);

enum class Phase { PreTrain, Joint };
enum class RunStatus { Running, Converged, BudgetExhausted };

const char* status_name(RunStatus s);

struct EnsembleState {
  std::vector<ModelPtr> models;
  std::vector<VariationalState> variational;
  std::vector<Optimizer> optimizers;
  std::vector<double> weights;      ///< current q(M)
  std::vector<double> log_weights;  ///< L_M + log p(M) from the latest iteration
  std::vector<std::vector<double>> elbo_trace;  ///< [model][iteration]
  std::vector<std::vector<double>> weight_trace;  ///< [iteration][model]
  std::vector<double> objective_trace;  ///< sum_M q(M) L_M per iteration
  std::int64_t iteration = 0;
  std::int64_t joint_iterations = 0;
  Phase phase = Phase::PreTrain;
  RunStatus status = RunStatus::Running;
  std::int64_t rejected_draws = 0;

  /// Trailing-window results, filled when the run ends.
  std::vector<double> averaged_weights;
  std::vector<double> weight_se;
  std::vector<VariationalState> averaged_variational;

  std::size_t size() const noexcept { return models.size(); }
};

EnsembleState initialize(std::vector<ModelPtr> models, const VbmaConfig& config);

/// One iteration of the loop (pre-training or joint, by state.phase).
void iterate(EnsembleState& state, const VbmaConfig& config);

using IterationObserver = std::function<void(const EnsembleState&)>;

/// Runs pre-training then the joint phase until the budget is spent or the
/// moving-average objective stabilizes. The observer sees every iteration.
EnsembleState run(const VbmaConfig& config, std::vector<ModelPtr> models,
                  const IterationObserver& observer = {});

/// Fills averaged_weights, weight_se and averaged_variational from the traces.
void finalize(EnsembleState& state, const VbmaConfig& config);

/// Text serialization of everything except the models themselves.
std::string checkpoint_text(const EnsembleState& state);

struct Checkpoint {
  std::int64_t iteration = 0;
  Phase phase = Phase::PreTrain;
  RunStatus status = RunStatus::Running;
  std::vector<std::string> names;
  std::vector<double> weights, averaged_weights, weight_se, log_weights;
  std::vector<VariationalState> variational, averaged_variational;
  std::vector<std::int64_t> optimizer_steps;
  std::vector<std::vector<double>> first_moments, second_moments;
};

Checkpoint parse_checkpoint(const std::string& text);

/// Runs `body(i)` for i in [0, n) on up to `threads` threads. Exceptions are
/// rethrown in index order after all work finishes.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

}  // namespace vbma
