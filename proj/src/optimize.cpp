// Copyright 2026 The Starpulse Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "starpulse/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <sstream>

#include "starpulse/io.hpp"
#include "starpulse/rng.hpp"

namespace starpulse {

namespace {

struct ObjectiveEval {
  double f = 0.0;
  Eigen::VectorXd grad;
};
using Objective = std::function<ObjectiveEval(const Eigen::VectorXd&)>;

struct LbfgsOptions {
  int max_iters = 1000;
  double grad_tol = 1e-10;
  int history = 10;
  double f_target = -std::numeric_limits<double>::infinity();
};

struct LbfgsOutcome {
  Eigen::VectorXd x;
  double f = 0.0;
  int iterations = 0;
  std::string termination;
};

Eigen::VectorXd project_box(const Eigen::VectorXd& x, const Eigen::VectorXd& lb,
                            const Eigen::VectorXd& ub) {
  return x.cwiseMax(lb).cwiseMin(ub);
}

/// Projected L-BFGS descent on a box. The two-loop recursion supplies the
/// direction, Armijo backtracking along the projected path accepts steps,
/// and a steepest-descent restart covers the rare non-descent direction.
LbfgsOutcome lbfgs_box_minimize(const Objective& objective, Eigen::VectorXd x,
                                const Eigen::VectorXd& lb, const Eigen::VectorXd& ub,
                                const LbfgsOptions& opts,
                                const std::function<void(int, double, double)>& on_iterate = {}) {
  x = project_box(x, lb, ub);
  ObjectiveEval cur = objective(x);

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;

  LbfgsOutcome out;
  out.termination = "max_iterations";
  int iter = 0;
  for (; iter < opts.max_iters; ++iter) {
    if (cur.f <= opts.f_target) {
      out.termination = "target_reached";
      break;
    }
    const Eigen::VectorXd pg = x - project_box(x - cur.grad, lb, ub);
    if (pg.norm() <= opts.grad_tol) {
      out.termination = "gradient_tolerance";
      break;
    }

    // Two-loop recursion for d = -H grad.
    Eigen::VectorXd d = -cur.grad;
    if (!s_hist.empty()) {
      std::vector<double> alpha(s_hist.size());
      for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
        alpha[i] = rho_hist[i] * s_hist[i].dot(d);
        d -= alpha[i] * y_hist[i];
      }
      const double gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
      d *= gamma;
      for (std::size_t i = 0; i < s_hist.size(); ++i) {
        const double beta = rho_hist[i] * y_hist[i].dot(d);
        d += (alpha[i] - beta) * s_hist[i];
      }
    }
    if (cur.grad.dot(d) >= 0.0) d = -cur.grad;  // guard: must be a descent direction

    // Armijo backtracking along the projected path.
    constexpr double kArmijo = 1e-4;
    bool accepted = false;
    Eigen::VectorXd x_new;
    ObjectiveEval next;
    for (int fallback = 0; fallback < 2 && !accepted; ++fallback) {
      double step = 1.0;
      for (int bt = 0; bt < 40; ++bt, step *= 0.5) {
        x_new = project_box(x + step * d, lb, ub);
        const Eigen::VectorXd dx = x_new - x;
        if (dx.norm() == 0.0) break;
        next = objective(x_new);
        if (next.f <= cur.f + kArmijo * cur.grad.dot(dx)) {
          accepted = true;
          break;
        }
      }
      if (!accepted && fallback == 0) {
        // Retry once from steepest descent with cleared memory.
        s_hist.clear();
        y_hist.clear();
        rho_hist.clear();
        d = -cur.grad;
      }
    }
    if (!accepted) {
      out.termination = "line_search_failure";
      break;
    }

    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd yv = next.grad - cur.grad;
    const double sy = s.dot(yv);
    if (sy > 1e-10 * s.norm() * yv.norm()) {  // curvature condition, skip otherwise
      s_hist.push_back(s);
      y_hist.push_back(yv);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > opts.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    x = x_new;
    cur = next;
    if (on_iterate) on_iterate(iter + 1, cur.f, s.norm());
  }
  out.x = x;
  out.f = cur.f;
  out.iterations = iter;
  return out;
}

Eigen::VectorXd trust_base(const OptimizerConfig& cfg, Eigen::Index n, double bound) {
  Eigen::VectorXd u0(n);
  if (!cfg.trust_init_vector.empty()) {
    if (static_cast<Eigen::Index>(cfg.trust_init_vector.size()) != n) {
      throw Error("OptimizerConfig: trust_init_vector length does not match the pulse");
    }
    for (Eigen::Index i = 0; i < n; ++i) u0[i] = cfg.trust_init_vector[i] * bound;
  } else {
    u0.setConstant(cfg.trust_init * bound);
  }
  return u0;
}

struct GroupEvalContext {
  std::vector<ExtremePointGroup> groups;
  std::vector<DeviceModel> models;
  std::vector<double> weights;  // multiplicity / total corners
};

GroupEvalContext make_group_context(const UncertaintyBox& box, const ModelBuilder& builder) {
  GroupEvalContext ctx;
  ctx.groups = symmetry_groups_star(box);
  double total = 0.0;
  for (const ExtremePointGroup& g : ctx.groups) total += static_cast<double>(g.multiplicity);
  for (const ExtremePointGroup& g : ctx.groups) {
    ctx.models.push_back(builder(g.representative));
    ctx.weights.push_back(static_cast<double>(g.multiplicity) / total);
  }
  return ctx;
}

FidelityReport report_from_values(const GroupEvalContext& ctx, const std::vector<double>& f) {
  FidelityReport report;
  double weighted = 0.0;
  report.worst_case = f[0];
  for (std::size_t i = 0; i < ctx.groups.size(); ++i) {
    report.per_group.push_back(
        {static_cast<int>(i), ctx.groups[i].high_count, ctx.groups[i].multiplicity, f[i]});
    weighted += ctx.weights[i] * f[i];
    report.worst_case = std::min(report.worst_case, f[i]);
  }
  report.average = weighted;
  return report;
}

}  // namespace

void OptimizerConfig::validate() const {
  if (!(center_target > 0.0 && center_target < 1.0)) throw Error("OptimizerConfig: center_target must be in (0, 1)");
  if (!(trust_grow > 1.0)) throw Error("OptimizerConfig: trust_grow must exceed 1");
  if (!(trust_shrink > 1.0)) throw Error("OptimizerConfig: trust_shrink must exceed 1");
  if (max_iters < 1 || scp_max_iters < 1) throw Error("OptimizerConfig: iteration caps must be >= 1");
  if (!(trust_init > 0.0)) throw Error("OptimizerConfig: trust_init must be positive");
  if (seed_count < 1) throw Error("OptimizerConfig: seed_count must be >= 1");
}

std::string OptimizationTrace::to_csv() const {
  std::ostringstream out;
  out << "# iter: 1; worst_case, average: dimensionless; step_norm: rad/s; trust_scale: 1; accepted: bool\n";
  out << "iter,worst_case,average,step_norm,trust_scale,accepted\n";
  for (const TraceRow& r : rows) {
    out << r.iter << ',' << format_double(r.worst_case) << ',' << format_double(r.average) << ','
        << format_double(r.step_norm) << ',' << format_double(r.trust_scale) << ','
        << (r.accepted ? 1 : 0) << '\n';
  }
  return out.str();
}

CenterResult optimize_center(const PulseSet& initial, const DeviceModel& model,
                             const StateVector& target, const OptimizerConfig& cfg) {
  cfg.validate();
  initial.validate();
  const double bound = initial.amplitude_bound;
  const Eigen::Index n = initial.size();

  // Already-optimal input: return unchanged.
  const double f0 = fidelity(initial, model, target, cfg.krylov);
  if (f0 >= cfg.center_target) {
    return {initial, f0, 0, true, "target_reached"};
  }

  // Work on scaled variables x = amplitudes / bound in [-1, 1].
  const Objective objective = [&](const Eigen::VectorXd& x) {
    PulseSet p = initial;
    p.amplitudes = x * bound;
    const FidelityGradient fg =
        fidelity_and_gradient(p, model, target, cfg.gradient_method, cfg.krylov);
    return ObjectiveEval{-fg.fidelity, -fg.gradient * bound};
  };

  LbfgsOptions opts;
  opts.max_iters = cfg.max_iters;
  opts.grad_tol = cfg.grad_tolerance;
  opts.history = cfg.history;
  opts.f_target = -cfg.center_target;

  const Eigen::VectorXd lb = Eigen::VectorXd::Constant(n, -1.0);
  const Eigen::VectorXd ub = Eigen::VectorXd::Constant(n, 1.0);
  const LbfgsOutcome run = lbfgs_box_minimize(objective, initial.amplitudes / bound, lb, ub, opts);

  CenterResult result;
  result.pulse = initial;
  result.pulse.amplitudes = run.x * bound;
  result.fidelity = -run.f;
  result.iterations = run.iterations;
  result.termination = run.termination;
  result.converged = result.fidelity >= cfg.center_target;
  return result;
}

ScpStep scp_minimax_step(const PulseSet& pulse, const Eigen::MatrixXd& gradients,
                         const Eigen::VectorXd& trust) {
  pulse.validate();
  const Eigen::Index n = pulse.size();
  if (gradients.cols() != n || trust.size() != n) {
    throw Error("scp_minimax_step: gradient/trust sizes do not match the pulse");
  }
  if (!gradients.allFinite()) throw Error("scp_minimax_step: non-finite gradient");
  // Trust box intersected with the amplitude bounds around the current pulse.
  Eigen::VectorXd lower(n), upper(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    lower[k] = std::max(-trust[k], -pulse.amplitude_bound - pulse.amplitudes[k]);
    upper[k] = std::min(trust[k], pulse.amplitude_bound - pulse.amplitudes[k]);
  }
  const MinimaxStep step = minimax_ascent_step(gradients, lower, upper);
  return {step.delta, step.t};
}

RobustResult optimize_scp(const PulseSet& initial, const UncertaintyBox& box,
                          const ModelBuilder& builder, const StateVector& target,
                          const OptimizerConfig& cfg) {
  cfg.validate();
  initial.validate();
  const GroupEvalContext ctx = make_group_context(box, builder);
  const std::size_t n_groups = ctx.groups.size();
  const Eigen::Index n = initial.size();
  const Eigen::VectorXd u0 = trust_base(cfg, n, initial.amplitude_bound);

  PulseSet pulse = initial;
  std::vector<double> f(n_groups);
  Eigen::MatrixXd gradients(n_groups, n);
  const auto evaluate_all = [&](const PulseSet& p, bool with_gradients) {
    for (std::size_t i = 0; i < n_groups; ++i) {
      if (with_gradients) {
        const FidelityGradient fg =
            fidelity_and_gradient(p, ctx.models[i], target, cfg.gradient_method, cfg.krylov);
        f[i] = fg.fidelity;
        gradients.row(i) = fg.gradient.transpose();
      } else {
        f[i] = fidelity(p, ctx.models[i], target, cfg.krylov);
      }
    }
  };
  evaluate_all(pulse, true);
  double worst = *std::min_element(f.begin(), f.end());

  RobustResult result;
  result.trace.termination = "max_iterations";
  double scale = 1.0;
  for (int iter = 1; iter <= cfg.scp_max_iters; ++iter) {
    const ScpStep step = scp_minimax_step(pulse, gradients, scale * u0);
    bool accepted = false;
    if (step.predicted_increment > 0.0) {
      PulseSet trial = pulse;
      trial.amplitudes += step.delta;
      // The LP box already respects the amplitude bounds; clamp residual
      // floating-point excess so validate() stays exact.
      trial.amplitudes = trial.amplitudes.cwiseMax(-trial.amplitude_bound).cwiseMin(trial.amplitude_bound);
      std::vector<double> f_prev = f;
      evaluate_all(trial, false);
      const double trial_worst = *std::min_element(f.begin(), f.end());
      if (trial_worst > worst) {
        accepted = true;
        pulse = trial;
        worst = trial_worst;
      } else {
        f = std::move(f_prev);
      }
    }
    if (accepted) {
      scale *= cfg.trust_grow;
      evaluate_all(pulse, true);  // refresh gradients at the accepted point
      worst = *std::min_element(f.begin(), f.end());
    } else {
      scale /= cfg.trust_shrink;
    }
    double weighted = 0.0;
    for (std::size_t i = 0; i < n_groups; ++i) weighted += ctx.weights[i] * f[i];
    result.trace.rows.push_back(
        {iter, worst, weighted, step.delta.norm(), scale, accepted});
    if (scale < cfg.trust_floor) {
      result.trace.termination = "trust_floor";
      break;
    }
  }
  result.trace.converged = result.trace.termination == "trust_floor";
  result.pulse = pulse;
  result.report = report_from_values(ctx, f);
  return result;
}

RobustResult optimize_average(const PulseSet& initial, const UncertaintyBox& box,
                              const ModelBuilder& builder, const StateVector& target,
                              const OptimizerConfig& cfg) {
  cfg.validate();
  initial.validate();
  const GroupEvalContext ctx = make_group_context(box, builder);
  const std::size_t n_groups = ctx.groups.size();
  const double bound = initial.amplitude_bound;
  const Eigen::Index n = initial.size();

  std::vector<double> f(n_groups);
  RobustResult result;
  const Objective objective = [&](const Eigen::VectorXd& x) {
    PulseSet p = initial;
    p.amplitudes = x * bound;
    double avg = 0.0;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < n_groups; ++i) {
      const FidelityGradient fg =
          fidelity_and_gradient(p, ctx.models[i], target, cfg.gradient_method, cfg.krylov);
      f[i] = fg.fidelity;
      avg += ctx.weights[i] * fg.fidelity;
      grad += ctx.weights[i] * fg.gradient;
    }
    return ObjectiveEval{-avg, -grad * bound};
  };

  LbfgsOptions opts;
  opts.max_iters = cfg.max_iters;
  opts.grad_tol = cfg.grad_tolerance;
  opts.history = cfg.history;

  const Eigen::VectorXd lb = Eigen::VectorXd::Constant(n, -1.0);
  const Eigen::VectorXd ub = Eigen::VectorXd::Constant(n, 1.0);
  const auto on_iterate = [&](int iter, double fval, double step_norm) {
    const double worst = *std::min_element(f.begin(), f.end());
    result.trace.rows.push_back({iter, worst, -fval, step_norm * bound, 0.0, true});
  };
  const LbfgsOutcome run =
      lbfgs_box_minimize(objective, initial.amplitudes / bound, lb, ub, opts, on_iterate);

  result.pulse = initial;
  result.pulse.amplitudes = run.x * bound;
  result.trace.termination = run.termination;
  result.trace.converged = run.termination != "line_search_failure";
  // Group fidelities at the returned iterate.
  for (std::size_t i = 0; i < n_groups; ++i) {
    f[i] = fidelity(result.pulse, ctx.models[i], target, cfg.krylov);
  }
  result.report = report_from_values(ctx, f);
  return result;
}

PulseSet random_pulse(const PulseGrid& grid, int channels, double amplitude_bound,
                      std::uint64_t seed) {
  PulseSet p = zero_pulse(grid, channels, amplitude_bound);
  SeededRng rng(seed);
  for (Eigen::Index i = 0; i < p.amplitudes.size(); ++i) {
    p.amplitudes[i] = rng.uniform(-amplitude_bound / 10.0, amplitude_bound / 10.0);
  }
  return p;
}

MultiStartResult optimize_robust_multistart(RobustMethod method, const PulseGrid& grid,
                                            double amplitude_bound, const UncertaintyBox& box,
                                            const ModelBuilder& builder, const StateVector& target,
                                            const OptimizerConfig& cfg) {
  cfg.validate();
  const std::vector<double> center_couplings(box.n_v, box.mean);
  const DeviceModel center_model = builder(center_couplings);

  MultiStartResult out;
  bool have_best = false;
  for (int start = 0; start < cfg.seed_count; ++start) {
    const PulseSet init = random_pulse(grid, 1, amplitude_bound, cfg.seed + static_cast<std::uint64_t>(start));
    const CenterResult center = optimize_center(init, center_model, target, cfg);
    const RobustResult robust = method == RobustMethod::scp
                                    ? optimize_scp(center.pulse, box, builder, target, cfg)
                                    : optimize_average(center.pulse, box, builder, target, cfg);
    out.per_start_worst_case.push_back(robust.report.worst_case);
    if (!have_best || robust.report.worst_case > out.best.report.worst_case) {
      have_best = true;
      out.best = robust;
      out.best_center = center;
      out.best_start = start;
    }
  }
  return out;
}

}  // namespace starpulse
