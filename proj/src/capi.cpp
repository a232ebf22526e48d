// Copyright (c) 2026 btlab developers. SPDX-License-Identifier: Apache-2.0
#include "btlab/btlab.h"

#include <cstring>
#include <new>
#include <string>

#include "core/errors.hpp"
#include "core/scenario.hpp"

using namespace btlab;

struct btlab_policy {
  PolicyFile p;
};

struct btlab_report {
  EvaluationReport r;
  std::string json;
};

namespace {

thread_local std::string g_last_error;

btlab_status set_error(btlab_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

btlab_status status_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::Config:
    case ErrorCode::Structure:
    case ErrorCode::Binding:
    case ErrorCode::Splice:
      return BTLAB_ERR_CONFIG;
    case ErrorCode::Io:
      return BTLAB_ERR_IO;
    case ErrorCode::Fault:
      return BTLAB_ERR_FAULT;
    case ErrorCode::Internal:
      return BTLAB_ERR_INTERNAL;
  }
  return BTLAB_ERR_INTERNAL;
}

btlab_status bad_argument(const char* what) {
  return set_error(BTLAB_ERR_ARGUMENT, std::string("invalid argument: ") + what);
}

// Runs fn, translating exceptions into status codes.
template <typename Fn>
btlab_status guarded(Fn&& fn) {
  try {
    fn();
    return BTLAB_OK;
  } catch (const Error& e) {
    return set_error(status_for(e), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(BTLAB_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(BTLAB_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(BTLAB_ERR_INTERNAL, "unknown error");
  }
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* btlab_version(void) { return "1.0.0"; }

const char* btlab_last_error(void) { return g_last_error.c_str(); }

void btlab_string_free(char* s) { delete[] s; }

const char* btlab_scenario_ids(void) {
  static const std::string ids = [] {
    std::string out;
    for (const std::string& n : scenario_names()) {
      if (!out.empty()) out += ',';
      out += n;
    }
    return out;
  }();
  return ids.c_str();
}

btlab_status btlab_learn_options_init(btlab_learn_options* opts) {
  if (!opts) return bad_argument("opts is null");
  opts->budget = -1;
  opts->episodes_per_candidate = -1;
  opts->seed = 0;
  opts->workers = 1;
  opts->sigma0 = -1.0;
  opts->lambda = 0;
  opts->equal_weights = 0;
  opts->out_dir = nullptr;
  return BTLAB_OK;
}

btlab_status btlab_learn(const char* scenario_id,
                         const btlab_learn_options* opts,
                         btlab_policy** out_policy) {
  if (!scenario_id) return bad_argument("scenario_id is null");
  if (!out_policy) return bad_argument("out_policy is null");
  *out_policy = nullptr;
  return guarded([&] {
    const Scenario s = make_scenario(scenario_id);
    ScenarioLearnOptions o;
    if (opts) {
      o.budget = opts->budget;
      o.episodes_per_candidate = opts->episodes_per_candidate;
      o.seed = opts->seed;
      o.workers = opts->workers;
      o.sigma0 = opts->sigma0;
      o.lambda = opts->lambda;
      o.equal_weights = opts->equal_weights != 0;
      if (opts->out_dir) o.out_dir = opts->out_dir;
    }
    const LearnResult res = learn_scenario(s, o);
    auto* h = new btlab_policy{make_policy(s, res.theta_star)};
    *out_policy = h;
  });
}

btlab_status btlab_policy_load(const char* path, btlab_policy** out_policy) {
  if (!path) return bad_argument("path is null");
  if (!out_policy) return bad_argument("out_policy is null");
  *out_policy = nullptr;
  return guarded([&] { *out_policy = new btlab_policy{load_policy(path)}; });
}

btlab_status btlab_policy_save(const btlab_policy* policy, const char* path) {
  if (!policy) return bad_argument("policy is null");
  if (!path) return bad_argument("path is null");
  return guarded([&] { save_policy(policy->p, path); });
}

btlab_status btlab_policy_baseline(const char* kind, uint64_t seed,
                                   btlab_policy** out_policy) {
  if (!kind) return bad_argument("kind is null");
  if (!out_policy) return bad_argument("out_policy is null");
  *out_policy = nullptr;
  return guarded([&] {
    const std::string k = kind;
    if (k == "no-search")
      *out_policy = new btlab_policy{no_search_policy()};
    else if (k == "random")
      *out_policy = new btlab_policy{random_peg_policy(seed)};
    else
      throw_error(ErrorCode::Config, "unknown baseline '" + k + "'");
  });
}

btlab_status btlab_policy_combine(const btlab_policy* obstacle,
                                  const btlab_policy* peg,
                                  btlab_policy** out_policy) {
  if (!obstacle) return bad_argument("obstacle is null");
  if (!peg) return bad_argument("peg is null");
  if (!out_policy) return bad_argument("out_policy is null");
  *out_policy = nullptr;
  return guarded([&] {
    *out_policy = new btlab_policy{combine_policies(obstacle->p, peg->p)};
  });
}

btlab_status btlab_policy_scenario(const btlab_policy* policy,
                                   const char** out_id) {
  if (!policy) return bad_argument("policy is null");
  if (!out_id) return bad_argument("out_id is null");
  *out_id = policy->p.scenario_id.c_str();
  return BTLAB_OK;
}

btlab_status btlab_policy_dim(const btlab_policy* policy, int* out_dim) {
  if (!policy) return bad_argument("policy is null");
  if (!out_dim) return bad_argument("out_dim is null");
  *out_dim = static_cast<int>(policy->p.theta.size());
  return BTLAB_OK;
}

btlab_status btlab_policy_theta(const btlab_policy* policy, double* out,
                                size_t cap) {
  if (!policy) return bad_argument("policy is null");
  if (!out && policy->p.theta.size() > 0) return bad_argument("out is null");
  if (cap < static_cast<size_t>(policy->p.theta.size()))
    return bad_argument("out capacity too small");
  for (long i = 0; i < policy->p.theta.size(); ++i)
    out[i] = policy->p.theta[i];
  return BTLAB_OK;
}

btlab_status btlab_policy_describe(const btlab_policy* policy, char** out) {
  if (!policy) return bad_argument("policy is null");
  if (!out) return bad_argument("out is null");
  *out = nullptr;
  return guarded([&] { *out = dup_string(inspect_policy(policy->p)); });
}

void btlab_policy_free(btlab_policy* policy) { delete policy; }

btlab_status btlab_eval_options_init(btlab_eval_options* opts) {
  if (!opts) return bad_argument("opts is null");
  opts->trials = 20;
  opts->seed = 1;
  opts->workers = 1;
  opts->use_grid = 0;
  opts->has_fixed_shift = 0;
  opts->fixed_shift_x = 0.0;
  opts->fixed_shift_y = 0.0;
  return BTLAB_OK;
}

btlab_status btlab_evaluate(const btlab_policy* policy,
                            const btlab_eval_options* opts,
                            btlab_report** out_report) {
  if (!policy) return bad_argument("policy is null");
  if (!out_report) return bad_argument("out_report is null");
  *out_report = nullptr;
  return guarded([&] {
    EvalOptions o;
    if (opts) {
      o.trials = opts->trials;
      o.seed = opts->seed;
      o.workers = opts->workers;
      o.use_grid = opts->use_grid != 0;
      if (opts->has_fixed_shift)
        o.fixed_shift =
            Eigen::Vector2d(opts->fixed_shift_x, opts->fixed_shift_y);
    }
    const Scenario s = scenario_for_policy(policy->p);
    auto* h = new btlab_report;
    h->r = evaluate_policy(s, policy->p.theta, o);
    h->json = report_json(h->r);
    *out_report = h;
  });
}

btlab_status btlab_report_trials(const btlab_report* report, int* out) {
  if (!report) return bad_argument("report is null");
  if (!out) return bad_argument("out is null");
  *out = static_cast<int>(report->r.trials.size());
  return BTLAB_OK;
}

btlab_status btlab_report_successes(const btlab_report* report, int* out) {
  if (!report) return bad_argument("report is null");
  if (!out) return bad_argument("out is null");
  *out = report->r.successes;
  return BTLAB_OK;
}

btlab_status btlab_report_collisions(const btlab_report* report, int* out) {
  if (!report) return bad_argument("report is null");
  if (!out) return bad_argument("out is null");
  *out = report->r.collisions;
  return BTLAB_OK;
}

btlab_status btlab_report_success_rate(const btlab_report* report,
                                       double* out) {
  if (!report) return bad_argument("report is null");
  if (!out) return bad_argument("out is null");
  *out = report->r.success_rate;
  return BTLAB_OK;
}

btlab_status btlab_report_mean_return(const btlab_report* report,
                                      double* out) {
  if (!report) return bad_argument("report is null");
  if (!out) return bad_argument("out is null");
  *out = report->r.mean_return;
  return BTLAB_OK;
}

btlab_status btlab_report_json(const btlab_report* report, char** out) {
  if (!report) return bad_argument("report is null");
  if (!out) return bad_argument("out is null");
  *out = nullptr;
  return guarded([&] { *out = dup_string(report->json); });
}

void btlab_report_free(btlab_report* report) { delete report; }

btlab_status btlab_replay(const btlab_policy* policy, uint64_t seed, int trial,
                          const char* csv_path) {
  if (!policy) return bad_argument("policy is null");
  if (!csv_path) return bad_argument("csv_path is null");
  return guarded([&] { replay_trial(policy->p, seed, trial, csv_path); });
}

}  // extern "C"
