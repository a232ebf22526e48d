// Copyright (c) 2026 btlab developers. SPDX-License-Identifier: Apache-2.0
#include "core/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "core/errors.hpp"

namespace btlab {

BtPolicy::BtPolicy(BtNodePtr tree, Eigen::VectorXd theta)
    : tree_(std::move(tree)), theta_(std::move(theta)) {
  if (!tree_) throw_error(ErrorCode::Config, "policy needs a tree");
  const int needed = max_bound_index(*tree_) + 1;
  if (theta_.size() < needed)
    throw_error(ErrorCode::Binding,
                "tree binds " + std::to_string(needed) +
                    " parameters but vector has " +
                    std::to_string(theta_.size()));
}

TickStatus BtPolicy::step(Blackboard& bb) {
  return tick(*tree_, bb, {theta_.data(), static_cast<size_t>(theta_.size())});
}

Eigen::Vector3d nn_forward(const NnSpec& spec, const Eigen::VectorXd& theta,
                           const Eigen::Vector3d& observation) {
  const int h = spec.hidden;
  if (theta.size() != spec.param_count())
    throw_error(ErrorCode::Binding,
                "network expects " + std::to_string(spec.param_count()) +
                    " parameters, got " + std::to_string(theta.size()));
  Eigen::VectorXd hidden(h);
  for (int i = 0; i < h; ++i) {
    double acc = theta[3 * h + i];  // hidden bias
    for (int j = 0; j < 3; ++j) acc += theta[3 * i + j] * observation[j];
    hidden[i] = std::tanh(acc);
  }
  const int w2 = 4 * h;
  Eigen::Vector3d out;
  for (int o = 0; o < 3; ++o) {
    double acc = theta[w2 + 3 * h + o];  // output bias
    for (int i = 0; i < h; ++i) acc += theta[w2 + o * h + i] * hidden[i];
    out[o] = std::tanh(acc);
  }
  return spec.box_center + spec.box_half.cwiseProduct(out);
}

NnPolicy::NnPolicy(NnSpec spec, Eigen::VectorXd theta)
    : spec_(spec), theta_(std::move(theta)) {
  if (theta_.size() != spec_.param_count())
    throw_error(ErrorCode::Binding,
                "network expects " + std::to_string(spec_.param_count()) +
                    " parameters, got " + std::to_string(theta_.size()));
}

Eigen::Vector3d NnPolicy::target_for(const Eigen::Vector3d& tip) const {
  const Eigen::Vector3d obs = (tip - spec_.obs_center) / spec_.obs_scale;
  return nn_forward(spec_, theta_, obs);
}

TickStatus NnPolicy::step(Blackboard& bb) {
  AttractorCommand cmd;
  cmd.goal = target_for(bb.peg_position);
  cmd.path_velocity = spec_.path_velocity;
  bb.skill_command = cmd;
  return TickStatus::Running;
}

void parallel_for_indexed(int n, int workers,
                          const std::function<void(int)>& fn) {
  if (n <= 0) return;
  if (workers <= 1 || n == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  const int threads = std::min(workers, n);
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto body = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(threads));
  for (int t = 0; t < threads; ++t) pool.emplace_back(body);
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

CandidateEval evaluate_candidate(const EpisodeFn& fn,
                                 const Eigen::VectorXd& theta,
                                 long long candidate_index, int episodes,
                                 double fault_floor) {
  if (episodes <= 0)
    throw_error(ErrorCode::Config, "episodes per candidate must be positive");
  CandidateEval ev;
  ev.episodes = episodes;
  double sum = 0.0;
  for (int e = 0; e < episodes; ++e) {
    const EpisodeOutcome out = fn(theta, candidate_index, e);
    sum += out.fault ? fault_floor : out.episode_return;
    if (out.success) ++ev.successes;
    if (out.fault) ++ev.faults;
  }
  ev.mean_return = sum / episodes;
  return ev;
}

std::string format_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

LearnResult learn(const ParamSpace& space, const EpisodeFn& episode,
                  const LearnOptions& opts) {
  space.validate();
  if (opts.budget < 0)
    throw_error(ErrorCode::Config, "budget must be non-negative");
  if (opts.episodes_per_candidate <= 0)
    throw_error(ErrorCode::Config, "episodes per candidate must be positive");

  BipopConfig bc;
  bc.base = opts.cma;
  bc.mean0 = opts.mean0;
  bc.scale0 = opts.scale0;
  bc.sigma0 = opts.sigma0;
  BipopCmaEs opt(space, bc, opts.seed);

  LearnResult res;
  const int episodes = opts.episodes_per_candidate;
  long long ordinal = 0;  // candidate evaluations consumed

  while (ordinal + opt.current_lambda() <= opts.budget) {
    const std::vector<Eigen::VectorXd> pop = opt.ask();
    const int lambda = static_cast<int>(pop.size());
    const int tasks = lambda * episodes;
    std::vector<EpisodeOutcome> slots(static_cast<size_t>(tasks));
    parallel_for_indexed(tasks, opts.workers, [&](int t) {
      const int c = t / episodes;
      const int e = t % episodes;
      slots[static_cast<size_t>(t)] =
          episode(pop[static_cast<size_t>(c)], ordinal + c, e);
    });

    std::vector<double> J(static_cast<size_t>(lambda));
    for (int c = 0; c < lambda; ++c) {
      CandidateEval ev;
      ev.episodes = episodes;
      double sum = 0.0;
      for (int e = 0; e < episodes; ++e) {
        const EpisodeOutcome& out =
            slots[static_cast<size_t>(c * episodes + e)];
        sum += out.fault ? opts.fault_floor : out.episode_return;
        if (out.success) ++ev.successes;
        if (out.fault) ++ev.faults;
      }
      ev.mean_return = sum / episodes;
      J[static_cast<size_t>(c)] = ev.mean_return;

      EvalRow row;
      row.eval_index = ordinal + c + 1;
      row.generation = opt.generations() + 1;
      row.candidate = c;
      row.mean_return = ev.mean_return;
      row.successes = ev.successes;
      row.episodes = ev.episodes;
      row.faults = ev.faults;
      res.evals.push_back(row);
      if (res.first_success_eval < 0 && ev.successes > 0)
        res.first_success_eval = ordinal + c + 1;
    }

    opt.tell(pop, J);
    ordinal += lambda;
  }

  res.theta_star = opt.final_parameters();
  res.theta_is_fallback = opt.final_is_fallback();
  res.best_J = opt.best_J();
  res.evaluations = opt.evaluations();
  res.generations = opt.generations();
  res.restarts = opt.restart_count();
  res.trace = opt.trace();

  if (!opts.out_dir.empty()) {
    std::filesystem::create_directories(opts.out_dir);
    const std::filesystem::path dir(opts.out_dir);
    write_text_file((dir / "trace.csv").string(),
                    trace_csv(res.trace, space.names));
    write_text_file((dir / "evals.csv").string(), evals_csv(res.evals));

    nlohmann::ordered_json m;
    m["format"] = "btlab-run/1";
    m["label"] = opts.run_label;
    m["seed"] = opts.seed;
    m["budget"] = opts.budget;
    m["episodes_per_candidate"] = opts.episodes_per_candidate;
    m["workers"] = opts.workers;
    m["sigma0"] = opts.sigma0;
    m["space"]["names"] = space.names;
    m["space"]["lower"] = std::vector<double>(
        space.lower.data(), space.lower.data() + space.lower.size());
    m["space"]["upper"] = std::vector<double>(
        space.upper.data(), space.upper.data() + space.upper.size());
    m["evaluations"] = res.evaluations;
    m["generations"] = res.generations;
    m["restarts"] = res.restarts;
    m["best_J"] = res.best_J;
    m["first_success_eval"] = res.first_success_eval;
    m["theta_star"] = std::vector<double>(
        res.theta_star.data(), res.theta_star.data() + res.theta_star.size());
    m["theta_is_fallback"] = res.theta_is_fallback;
    nlohmann::ordered_json outputs;
    outputs["trace"] = "trace.csv";
    outputs["evals"] = "evals.csv";
    for (const auto& [k, v] : opts.extra_outputs) outputs[k] = v;
    m["outputs"] = outputs;
    write_text_file((dir / "manifest.json").string(), m.dump(2) + "\n");
  }
  return res;
}

std::string trace_csv(const std::vector<OptTraceRow>& rows,
                      const std::vector<std::string>& dim_names) {
  std::string out = "generation,evaluations,run,lambda,sigma,best_J_gen,"
                    "mean_J_gen,best_J";
  for (const std::string& n : dim_names) {
    out += ",m_";
    out += n;
  }
  out += '\n';
  for (const OptTraceRow& r : rows) {
    out += std::to_string(r.generation);
    out += ',';
    out += std::to_string(r.evaluations);
    out += ',';
    out += std::to_string(r.run_index);
    out += ',';
    out += std::to_string(r.lambda);
    out += ',';
    out += format_g17(r.sigma);
    out += ',';
    out += format_g17(r.best_J_gen);
    out += ',';
    out += format_g17(r.mean_J_gen);
    out += ',';
    out += format_g17(r.best_J_so_far);
    for (int i = 0; i < r.mean.size(); ++i) {
      out += ',';
      out += format_g17(r.mean[i]);
    }
    out += '\n';
  }
  return out;
}

std::string evals_csv(const std::vector<EvalRow>& rows) {
  std::string out =
      "eval,generation,candidate,mean_return,successes,episodes,faults\n";
  for (const EvalRow& r : rows) {
    out += std::to_string(r.eval_index);
    out += ',';
    out += std::to_string(r.generation);
    out += ',';
    out += std::to_string(r.candidate);
    out += ',';
    out += format_g17(r.mean_return);
    out += ',';
    out += std::to_string(r.successes);
    out += ',';
    out += std::to_string(r.episodes);
    out += ',';
    out += std::to_string(r.faults);
    out += '\n';
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw_error(ErrorCode::Io, "cannot open '" + path + "' for writing");
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw_error(ErrorCode::Io, "failed writing '" + path + "'");
}

}  // namespace btlab
