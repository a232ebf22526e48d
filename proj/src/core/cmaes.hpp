// Copyright (c) 2026 btlab developers. SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "core/rng.hpp"

namespace btlab {

// Box-bounded parameter space with one name per dimension.
struct ParamSpace {
  std::vector<std::string> names;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  int dims() const { return static_cast<int>(lower.size()); }
  void validate() const;
};

// Population size default for dimension n.
int default_lambda(int n);

// Reflects a value into [lo, hi]; identity inside the interval.
double mirror_into(double x, double lo, double hi);

struct CmaConfig {
  int lambda = 0;             // 0 picks the dimension default
  bool equal_weights = false; // plain averaging of the mu best
  double tol_fun = 1e-10;     // restart when per-generation best J stalls
  double tol_sigma = 1e-12;   // restart when the step size collapses
};

// One restart-free evolution strategy run. Maximizes J by rank-based
// selection; all randomness comes through the caller's Rng.
class CmaEs {
 public:
  // scale0 sets the initial coordinate scales, C0 = diag(scale0^2);
  // pass an empty vector for the identity.
  CmaEs(const ParamSpace& space, const CmaConfig& cfg,
        const Eigen::VectorXd& mean0, double sigma0,
        const Eigen::VectorXd& scale0 = Eigen::VectorXd());

  // Draws lambda candidates, mirrored into the bounds.
  std::vector<Eigen::VectorXd> sample(Rng& rng);

  // Consumes the fitness of the sampled population (same order) and applies
  // the mean, step-size, and covariance updates. A perfectly flat
  // generation only inflates sigma.
  void update(const std::vector<Eigen::VectorXd>& pop,
              const std::vector<double>& J);

  bool should_restart() const;

  int lambda() const { return lambda_; }
  int mu() const { return mu_; }
  long long generation() const { return generation_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  double sigma() const { return sigma_; }
  const Eigen::MatrixXd& covariance() const { return C_; }
  double best_J() const { return best_J_; }           // best this run
  double last_generation_best() const { return last_gen_best_; }
  double last_generation_mean() const { return last_gen_mean_; }
  int stagnation_window() const { return window_; }

 private:
  void decompose();

  ParamSpace space_;
  CmaConfig cfg_;
  int n_ = 0;
  int lambda_ = 0;
  int mu_ = 0;
  Eigen::VectorXd weights_;
  double mu_eff_ = 0.0;
  double c_sigma_ = 0.0, d_sigma_ = 0.0;
  double c_c_ = 0.0, c_1_ = 0.0, c_mu_ = 0.0;
  double chi_n_ = 0.0;
  int window_ = 0;

  Eigen::VectorXd mean_;
  double sigma_ = 0.0;
  Eigen::MatrixXd C_;
  Eigen::VectorXd p_sigma_;
  Eigen::VectorXd p_c_;
  Eigen::MatrixXd B_;          // eigenbasis of C
  Eigen::VectorXd D_;          // sqrt of eigenvalues
  long long generation_ = 0;
  double best_J_;
  double last_gen_best_;
  double last_gen_mean_;
  std::vector<double> gen_best_history_;
};

// One row per completed generation across all restarts.
struct OptTraceRow {
  long long generation = 0;    // global counter
  long long evaluations = 0;   // cumulative candidate evaluations
  int run_index = 0;
  int lambda = 0;
  double sigma = 0.0;          // after the update
  double best_J_gen = 0.0;
  double mean_J_gen = 0.0;
  double best_J_so_far = 0.0;
  Eigen::VectorXd mean;        // after the update
};

struct BipopConfig {
  CmaConfig base;
  Eigen::VectorXd mean0;   // empty picks the box center
  Eigen::VectorXd scale0;  // empty picks the identity
  double sigma0 = 0.3;
};

// Restart driver alternating large and small populations. The first restart
// doubles the population; afterwards the regime with less spent budget goes
// next. Restart means are drawn uniformly inside the bounds.
class BipopCmaEs {
 public:
  BipopCmaEs(const ParamSpace& space, const BipopConfig& cfg,
             std::uint64_t seed);

  std::vector<Eigen::VectorXd> ask();
  void tell(const std::vector<Eigen::VectorXd>& pop,
            const std::vector<double>& J);

  int current_lambda() const { return engine_->lambda(); }
  double current_sigma() const { return engine_->sigma(); }
  const Eigen::VectorXd& current_mean() const { return engine_->mean(); }
  long long generations() const { return global_generation_; }
  long long evaluations() const { return evaluations_; }
  int restart_count() const { return restart_count_; }
  int large_restart_count() const { return large_restarts_; }
  int small_restart_count() const { return small_restarts_; }
  bool restarted_on_last_tell() const { return restarted_on_last_tell_; }
  double best_J() const { return best_J_; }
  const Eigen::VectorXd& best_candidate() const { return best_candidate_; }
  const std::vector<OptTraceRow>& trace() const { return trace_; }

  // Post-update mean of the last completed generation of the run whose best
  // candidate fitness is highest. Falls back to the initial mean (with the
  // warning flag set) when no generation ever completed.
  Eigen::VectorXd final_parameters() const;
  bool final_is_fallback() const;

 private:
  struct RunRecord {
    double best_J;
    Eigen::VectorXd last_mean;
    long long completed_generations;
  };

  void start_next_run();

  ParamSpace space_;
  BipopConfig cfg_;
  Rng rng_;
  std::unique_ptr<CmaEs> engine_;
  Eigen::VectorXd initial_mean_;
  int lambda0_ = 0;
  int lambda_large_ = 0;
  long long evals_large_ = 0;
  long long evals_small_ = 0;
  bool current_is_large_ = true;
  int restart_count_ = 0;
  int large_restarts_ = 0;
  int small_restarts_ = 0;
  bool restarted_on_last_tell_ = false;
  long long global_generation_ = 0;
  long long evaluations_ = 0;
  double best_J_;
  Eigen::VectorXd best_candidate_;
  std::vector<RunRecord> finished_runs_;
  std::vector<OptTraceRow> trace_;
};

}  // namespace btlab
