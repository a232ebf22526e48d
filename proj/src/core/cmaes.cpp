// Copyright (c) 2026 btlab developers. SPDX-License-Identifier: Apache-2.0
#include "core/cmaes.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "core/errors.hpp"

namespace btlab {

void ParamSpace::validate() const {
  if (lower.size() != upper.size())
    throw_error(ErrorCode::Config, "bound vectors differ in length");
  if (lower.size() == 0)
    throw_error(ErrorCode::Config, "parameter space must have dimensions");
  if (names.size() != static_cast<size_t>(lower.size()))
    throw_error(ErrorCode::Config, "one name per dimension required");
  for (int i = 0; i < lower.size(); ++i)
    if (!(lower[i] < upper[i]))
      throw_error(ErrorCode::Config,
                  "dimension '" + names[static_cast<size_t>(i)] +
                      "' needs lower < upper");
}

int default_lambda(int n) {
  return 4 + static_cast<int>(std::floor(3.0 * std::log(n)));
}

double mirror_into(double x, double lo, double hi) {
  const double w = hi - lo;
  if (!(w > 0.0)) return lo;
  double t = std::fmod(x - lo, 2.0 * w);
  if (t < 0.0) t += 2.0 * w;
  return lo + (t <= w ? t : 2.0 * w - t);
}

CmaEs::CmaEs(const ParamSpace& space, const CmaConfig& cfg,
             const Eigen::VectorXd& mean0, double sigma0,
             const Eigen::VectorXd& scale0)
    : space_(space), cfg_(cfg) {
  space_.validate();
  n_ = space_.dims();
  if (mean0.size() != n_)
    throw_error(ErrorCode::Config, "initial mean has wrong dimension");
  if (!(sigma0 > 0.0))
    throw_error(ErrorCode::Config, "sigma0 must be positive");

  lambda_ = cfg_.lambda > 0 ? cfg_.lambda : default_lambda(n_);
  if (lambda_ < 2) throw_error(ErrorCode::Config, "lambda must be at least 2");
  mu_ = lambda_ / 2;

  weights_.resize(mu_);
  if (cfg_.equal_weights) {
    weights_.setConstant(1.0 / mu_);
  } else {
    for (int i = 0; i < mu_; ++i)
      weights_[i] = std::log((lambda_ + 1) / 2.0) - std::log(i + 1.0);
    weights_ /= weights_.sum();
  }
  mu_eff_ = 1.0 / weights_.squaredNorm();

  c_sigma_ = (mu_eff_ + 2.0) / (n_ + mu_eff_ + 5.0);
  d_sigma_ = 1.0 +
             2.0 * std::max(0.0, std::sqrt((mu_eff_ - 1.0) / (n_ + 1.0)) - 1.0) +
             c_sigma_;
  c_c_ = (4.0 + mu_eff_ / n_) / (n_ + 4.0 + 2.0 * mu_eff_ / n_);
  c_1_ = 2.0 / ((n_ + 1.3) * (n_ + 1.3) + mu_eff_);
  c_mu_ = std::min(1.0 - c_1_,
                   2.0 * (mu_eff_ - 2.0 + 1.0 / mu_eff_) /
                       ((n_ + 2.0) * (n_ + 2.0) + mu_eff_));
  chi_n_ = std::sqrt(static_cast<double>(n_)) *
           (1.0 - 1.0 / (4.0 * n_) + 1.0 / (21.0 * n_ * n_));
  window_ = static_cast<int>(
      std::ceil(10.0 + 30.0 * static_cast<double>(n_) / lambda_));

  mean_ = mean0;
  sigma_ = sigma0;
  if (scale0.size() == 0) {
    C_ = Eigen::MatrixXd::Identity(n_, n_);
  } else {
    if (scale0.size() != n_)
      throw_error(ErrorCode::Config, "scale vector has wrong dimension");
    C_ = scale0.array().square().matrix().asDiagonal();
  }
  p_sigma_ = Eigen::VectorXd::Zero(n_);
  p_c_ = Eigen::VectorXd::Zero(n_);
  best_J_ = -std::numeric_limits<double>::infinity();
  last_gen_best_ = -std::numeric_limits<double>::infinity();
  last_gen_mean_ = -std::numeric_limits<double>::infinity();
  decompose();
}

void CmaEs::decompose() {
  const Eigen::MatrixXd sym = 0.5 * (C_ + C_.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success)
    throw_error(ErrorCode::Fault, "covariance eigendecomposition failed");
  Eigen::VectorXd eigs = solver.eigenvalues();
  B_ = solver.eigenvectors();

  const double max_eig = eigs.maxCoeff();
  const double floor_eig = max_eig > 0.0 ? max_eig * 1e-14 : 1e-20;
  bool repaired = false;
  for (int i = 0; i < eigs.size(); ++i) {
    if (eigs[i] < floor_eig) {
      eigs[i] = floor_eig;
      repaired = true;
    }
  }
  if (repaired) C_ = B_ * eigs.asDiagonal() * B_.transpose();
  D_ = eigs.cwiseSqrt();
}

std::vector<Eigen::VectorXd> CmaEs::sample(Rng& rng) {
  std::vector<Eigen::VectorXd> pop;
  pop.reserve(static_cast<size_t>(lambda_));
  Eigen::VectorXd z(n_);
  for (int k = 0; k < lambda_; ++k) {
    for (int i = 0; i < n_; ++i) z[i] = rng.normal();
    Eigen::VectorXd x = mean_ + sigma_ * (B_ * D_.cwiseProduct(z));
    for (int i = 0; i < n_; ++i)
      x[i] = mirror_into(x[i], space_.lower[i], space_.upper[i]);
    pop.push_back(std::move(x));
  }
  return pop;
}

void CmaEs::update(const std::vector<Eigen::VectorXd>& pop,
                   const std::vector<double>& J) {
  if (pop.size() != static_cast<size_t>(lambda_) || J.size() != pop.size())
    throw_error(ErrorCode::Config, "population and fitness sizes must match");
  for (const Eigen::VectorXd& x : pop)
    if (x.size() != n_)
      throw_error(ErrorCode::Config, "candidate has wrong dimension");

  double gen_best = -std::numeric_limits<double>::infinity();
  double gen_worst = std::numeric_limits<double>::infinity();
  double gen_sum = 0.0;
  for (double j : J) {
    gen_best = std::max(gen_best, j);
    gen_worst = std::min(gen_worst, j);
    gen_sum += j;
  }
  last_gen_best_ = gen_best;
  last_gen_mean_ = gen_sum / static_cast<double>(J.size());
  best_J_ = std::max(best_J_, gen_best);

  ++generation_;
  gen_best_history_.push_back(gen_best);

  if (gen_best == gen_worst) {
    // Flat generation: selection carries no information; widen the search
    // and leave mean, paths, and covariance untouched.
    sigma_ *= std::exp(0.2 + c_sigma_ / d_sigma_);
    return;
  }

  // Rank by fitness, descending; stable so equal values keep sample order.
  std::vector<int> idx(static_cast<size_t>(lambda_));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return J[static_cast<size_t>(a)] >
                                              J[static_cast<size_t>(b)]; });

  const Eigen::VectorXd mean_old = mean_;
  const double sigma_old = sigma_;

  Eigen::VectorXd mean_new = Eigen::VectorXd::Zero(n_);
  for (int i = 0; i < mu_; ++i)
    mean_new += weights_[i] * pop[static_cast<size_t>(idx[static_cast<size_t>(i)])];
  mean_ = mean_new;

  const Eigen::VectorXd y_w = (mean_ - mean_old) / sigma_old;

  // C^{-1/2} y via the cached eigendecomposition.
  const Eigen::VectorXd c_inv_sqrt_y =
      B_ * (B_.transpose() * y_w).cwiseQuotient(D_);
  p_sigma_ = (1.0 - c_sigma_) * p_sigma_ +
             std::sqrt(c_sigma_ * (2.0 - c_sigma_) * mu_eff_) * c_inv_sqrt_y;

  const double ps_norm = p_sigma_.norm();
  const double expected =
      std::sqrt(1.0 - std::pow(1.0 - c_sigma_,
                               2.0 * static_cast<double>(generation_)));
  const bool h_sigma =
      ps_norm / expected < (1.4 + 2.0 / (n_ + 1.0)) * chi_n_;

  p_c_ = (1.0 - c_c_) * p_c_;
  if (h_sigma)
    p_c_ += std::sqrt(c_c_ * (2.0 - c_c_) * mu_eff_) * y_w;

  Eigen::MatrixXd rank_mu = Eigen::MatrixXd::Zero(n_, n_);
  for (int i = 0; i < mu_; ++i) {
    const Eigen::VectorXd y =
        (pop[static_cast<size_t>(idx[static_cast<size_t>(i)])] - mean_old) /
        sigma_old;
    rank_mu.noalias() += weights_[i] * y * y.transpose();
  }

  const double delta_h = h_sigma ? 0.0 : c_c_ * (2.0 - c_c_);
  C_ = (1.0 - c_1_ - c_mu_) * C_ +
       c_1_ * (p_c_ * p_c_.transpose() + delta_h * C_) + c_mu_ * rank_mu;

  const double arg = std::min(
      1.0, (c_sigma_ / d_sigma_) * (ps_norm / chi_n_ - 1.0));
  sigma_ = sigma_old * std::exp(arg);

  decompose();
}

bool CmaEs::should_restart() const {
  if (!mean_.allFinite() || !std::isfinite(sigma_)) return true;
  if (sigma_ < cfg_.tol_sigma) return true;
  if (D_.size() > 0) {
    const double dmax = D_.maxCoeff();
    const double dmin = D_.minCoeff();
    if (dmin <= 0.0 || dmax / dmin > 1e7) return true;  // condition blow-up
  }
  if (static_cast<int>(gen_best_history_.size()) >= window_) {
    const auto last = gen_best_history_.end();
    const auto first = last - window_;
    const double hi = *std::max_element(first, last);
    const double lo = *std::min_element(first, last);
    if (hi - lo < cfg_.tol_fun) return true;
  }
  return false;
}

BipopCmaEs::BipopCmaEs(const ParamSpace& space, const BipopConfig& cfg,
                       std::uint64_t seed)
    : space_(space), cfg_(cfg), rng_(derive_seed(seed, 0xC3AE5)) {
  space_.validate();
  if (cfg_.mean0.size() == 0)
    initial_mean_ = 0.5 * (space_.lower + space_.upper);
  else
    initial_mean_ = cfg_.mean0;

  CmaConfig first = cfg_.base;
  engine_ = std::make_unique<CmaEs>(space_, first, initial_mean_, cfg_.sigma0,
                                    cfg_.scale0);
  lambda0_ = engine_->lambda();
  lambda_large_ = lambda0_;
  best_J_ = -std::numeric_limits<double>::infinity();
  best_candidate_ = initial_mean_;
}

std::vector<Eigen::VectorXd> BipopCmaEs::ask() { return engine_->sample(rng_); }

void BipopCmaEs::tell(const std::vector<Eigen::VectorXd>& pop,
                      const std::vector<double>& J) {
  restarted_on_last_tell_ = false;
  engine_->update(pop, J);

  evaluations_ += static_cast<long long>(pop.size());
  if (current_is_large_)
    evals_large_ += static_cast<long long>(pop.size());
  else
    evals_small_ += static_cast<long long>(pop.size());
  ++global_generation_;

  for (size_t i = 0; i < pop.size(); ++i) {
    if (J[i] > best_J_) {
      best_J_ = J[i];
      best_candidate_ = pop[i];
    }
  }

  OptTraceRow row;
  row.generation = global_generation_;
  row.evaluations = evaluations_;
  row.run_index = restart_count_;
  row.lambda = engine_->lambda();
  row.sigma = engine_->sigma();
  row.best_J_gen = engine_->last_generation_best();
  row.mean_J_gen = engine_->last_generation_mean();
  row.best_J_so_far = best_J_;
  row.mean = engine_->mean();
  trace_.push_back(std::move(row));

  if (engine_->should_restart()) start_next_run();
}

void BipopCmaEs::start_next_run() {
  finished_runs_.push_back(RunRecord{engine_->best_J(), engine_->mean(),
                                     engine_->generation()});
  ++restart_count_;
  restarted_on_last_tell_ = true;

  // First restart enlarges the population; afterwards the regime with the
  // smaller spent budget runs next.
  bool go_large;
  if (large_restarts_ == 0 && small_restarts_ == 0)
    go_large = true;
  else
    go_large = evals_large_ <= evals_small_;

  int lambda_next;
  double sigma_next;
  if (go_large) {
    ++large_restarts_;
    lambda_large_ = lambda0_ * (1 << large_restarts_);
    lambda_next = lambda_large_;
    sigma_next = cfg_.sigma0;
  } else {
    ++small_restarts_;
    const double u1 = rng_.uniform01();
    const double u2 = rng_.uniform01();
    const double frac = 0.5 * static_cast<double>(lambda_large_) / lambda0_;
    lambda_next = static_cast<int>(
        std::floor(lambda0_ * std::pow(frac, u1 * u1)));
    lambda_next = std::max(lambda_next, 2);
    sigma_next = cfg_.sigma0 * std::pow(10.0, -2.0 * u2);
  }
  current_is_large_ = go_large;

  Eigen::VectorXd mean_next(space_.dims());
  for (int i = 0; i < space_.dims(); ++i)
    mean_next[i] = rng_.uniform(space_.lower[i], space_.upper[i]);

  CmaConfig cfg = cfg_.base;
  cfg.lambda = lambda_next;
  engine_ = std::make_unique<CmaEs>(space_, cfg, mean_next, sigma_next,
                                    cfg_.scale0);
}

Eigen::VectorXd BipopCmaEs::final_parameters() const {
  const RunRecord* best = nullptr;
  for (const RunRecord& r : finished_runs_) {
    if (r.completed_generations == 0) continue;
    if (!best || r.best_J > best->best_J) best = &r;
  }
  RunRecord current{engine_->best_J(), engine_->mean(),
                    engine_->generation()};
  if (current.completed_generations > 0 &&
      (!best || current.best_J > best->best_J))
    best = &current;
  if (!best) return initial_mean_;
  return best->last_mean;
}

bool BipopCmaEs::final_is_fallback() const {
  if (engine_->generation() > 0) return false;
  for (const RunRecord& r : finished_runs_)
    if (r.completed_generations > 0) return false;
  return true;
}

}  // namespace btlab
