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

#include "starpulse/propagate.hpp"

#include <cmath>
#include <complex>

#include "starpulse/sensing.hpp"

namespace starpulse {

namespace {

constexpr std::complex<double> kI(0.0, 1.0);

// tau * exp(i w tau / 2) * sinc(w tau / 2) = integral_0^tau exp(i w s) ds,
// with the small-argument branch keeping full relative accuracy.
std::complex<double> phase_integral(double w, double tau) {
  const double x = 0.5 * w * tau;
  double sinc;
  if (std::abs(x) < 1e-4) {
    sinc = 1.0 - x * x / 6.0 * (1.0 - x * x / 20.0);
  } else {
    sinc = std::sin(x) / x;
  }
  return tau * std::exp(kI * x) * sinc;
}

void check_shapes(const PulseSet& pulse, const DeviceModel& model, const StateVector& target) {
  pulse.validate();
  if (pulse.channels != 1) {
    throw Error("propagate: star devices have a single driven site, expected channels == 1");
  }
  if (model.dimension() != target.dimension()) {
    throw Error("propagate: model and target dimensions differ");
  }
}

// Exact within-bin derivative of the overlap for both quadratures:
//   dov_mu = -i * integral_0^dt < e^{-iHs} costate | S_mu | e^{-iHs} state > ds,
// evaluated in the eigenbases of the two Lanczos tridiagonals. Substeps are
// shared by the pair and halved until both residual estimates pass.
struct BinDerivative {
  std::complex<double> dov_x;
  std::complex<double> dov_y;
};

BinDerivative within_bin_derivative(const SparseOperator& h, const SparseOperator& sx,
                                    const SparseOperator& sy, const Eigen::VectorXcd& state,
                                    const Eigen::VectorXcd& costate, double dt,
                                    const KrylovConfig& cfg) {
  const double tol_total = cfg.tolerance * std::max(1.0, state.norm());
  double last_residual = 0.0;
  for (int nsub = 1; nsub <= cfg.max_substeps; nsub *= 2) {
    const double tau = dt / nsub;
    const double tol_sub = tol_total / nsub;
    Eigen::VectorXcd phi = state;
    Eigen::VectorXcd beta = costate;
    std::complex<double> acc_x(0.0, 0.0), acc_y(0.0, 0.0);
    bool ok = true;
    for (int i = 0; i < nsub; ++i) {
      const LanczosDecomposition df = lanczos_decompose(h, phi, cfg.max_subspace_dim);
      const LanczosDecomposition db = lanczos_decompose(h, beta, cfg.max_subspace_dim);
      const double err = std::max(df.exp_error_estimate(tau), db.exp_error_estimate(tau));
      if (err > tol_sub) {
        ok = false;
        last_residual = err;
        break;
      }
      // Cross matrices in the tridiagonal eigenbases. evecs are real.
      Eigen::MatrixXcd sxv(df.basis.rows(), df.k), syv(df.basis.rows(), df.k);
      for (int c = 0; c < df.k; ++c) {
        Eigen::VectorXcd col;
        sx.apply(df.basis.col(c), col);
        sxv.col(c) = col;
        sy.apply(df.basis.col(c), col);
        syv.col(c) = col;
      }
      const Eigen::MatrixXcd mx = db.evecs.transpose().cast<std::complex<double>>() *
                                  (db.basis.adjoint() * sxv) *
                                  df.evecs.cast<std::complex<double>>();
      const Eigen::MatrixXcd my = db.evecs.transpose().cast<std::complex<double>>() *
                                  (db.basis.adjoint() * syv) *
                                  df.evecs.cast<std::complex<double>>();
      const Eigen::VectorXd wb = db.evecs.row(0).transpose() * db.input_norm;
      const Eigen::VectorXd wf = df.evecs.row(0).transpose() * df.input_norm;
      for (int a = 0; a < db.k; ++a) {
        for (int c = 0; c < df.k; ++c) {
          const std::complex<double> ph =
              phase_integral(db.evals[a] - df.evals[c], tau) * (wb[a] * wf[c]);
          acc_x += ph * mx(a, c);
          acc_y += ph * my(a, c);
        }
      }
      if (i + 1 < nsub) {
        phi = df.apply_exp(tau);
        beta = db.apply_exp(tau);
      }
    }
    if (ok) return {-kI * acc_x, -kI * acc_y};
  }
  throw KrylovError("within_bin_derivative: residual estimate " + format_double(last_residual) +
                        " above tolerance after max_substeps",
                    last_residual);
}

}  // namespace

std::complex<double> PropagationRecord::final_overlap() const {
  const std::size_t m = forward.size() - 1;
  return backward[m].amplitudes.dot(forward[m].amplitudes);
}

PropagationRecord propagate(const PulseSet& pulse, const DeviceModel& model,
                            const StateVector& target, const KrylovConfig& cfg) {
  check_shapes(pulse, model, target);
  const int m = pulse.grid.bins;
  const double dt = pulse.grid.dt();

  PropagationRecord rec;
  rec.model = &model;
  rec.forward.reserve(m + 1);
  rec.backward.resize(m + 1);

  HamiltonianAssembler assembler(model.h0, model.sx, model.sy);
  rec.forward.push_back(ground_state(model.spec.levels, model.spec.site_count));
  for (int n = 0; n < m; ++n) {
    const SparseOperator& h = assembler.with_drive(pulse.ox(n), pulse.oy(n));
    rec.forward.push_back(krylov_expv(h, rec.forward.back(), dt, cfg));
  }
  rec.backward[m] = target;
  for (int n = m - 1; n >= 0; --n) {
    const SparseOperator& h = assembler.with_drive(pulse.ox(n), pulse.oy(n));
    rec.backward[n] = krylov_expv(h, rec.backward[n + 1], -dt, cfg);
  }
  return rec;
}

double fidelity(const PulseSet& pulse, const DeviceModel& model, const StateVector& target,
                const KrylovConfig& cfg) {
  check_shapes(pulse, model, target);
  const int m = pulse.grid.bins;
  const double dt = pulse.grid.dt();
  HamiltonianAssembler assembler(model.h0, model.sx, model.sy);
  StateVector psi = ground_state(model.spec.levels, model.spec.site_count);
  for (int n = 0; n < m; ++n) {
    const SparseOperator& h = assembler.with_drive(pulse.ox(n), pulse.oy(n));
    psi = krylov_expv(h, psi, dt, cfg);
  }
  const std::complex<double> ov = target.amplitudes.dot(psi.amplitudes);
  return std::norm(ov);
}

FidelityGradient fidelity_and_gradient(const PulseSet& pulse, const DeviceModel& model,
                                       const StateVector& target, GradientMethod method,
                                       const KrylovConfig& cfg) {
  const PropagationRecord rec = propagate(pulse, model, target, cfg);
  const int m = pulse.grid.bins;
  const double dt = pulse.grid.dt();
  const std::complex<double> overlap = rec.final_overlap();

  FidelityGradient out;
  out.fidelity = std::norm(overlap);
  out.gradient = Eigen::VectorXd::Zero(pulse.size());

  HamiltonianAssembler assembler(model.h0, model.sx, model.sy);
  for (int n = 0; n < m; ++n) {
    const SparseOperator& h = assembler.with_drive(pulse.ox(n), pulse.oy(n));
    std::complex<double> dov_x, dov_y;
    if (method == GradientMethod::within_bin_integral) {
      const BinDerivative d = within_bin_derivative(h, model.sx, model.sy,
                                                    rec.forward[n].amplitudes,
                                                    rec.backward[n].amplitudes, dt, cfg);
      dov_x = d.dov_x;
      dov_y = d.dov_y;
    } else {
      // d exp(-iH dt)/dO = {-i dt S + (dt^2/2)[H, S]} exp(-iH dt) + O(dt^3),
      // sandwiched between the stored costate and state of this bin.
      const Eigen::VectorXcd& f = rec.forward[n].amplitudes;
      const Eigen::VectorXcd& b = rec.backward[n].amplitudes;
      for (int mu = 0; mu < 2; ++mu) {
        const SparseOperator& s = (mu == 0) ? model.sx : model.sy;
        const Eigen::VectorXcd sf = s.apply(f);
        const Eigen::VectorXcd hsf = h.apply(sf);
        const Eigen::VectorXcd shf = s.apply(h.apply(f));
        const std::complex<double> dov =
            -kI * dt * b.dot(sf) + (0.5 * dt * dt) * b.dot(hsf - shf);
        if (mu == 0) dov_x = dov;
        else dov_y = dov;
      }
    }
    out.gradient[pulse.index(n, 0, 0)] = 2.0 * std::real(std::conj(overlap) * dov_x);
    out.gradient[pulse.index(n, 0, 1)] = 2.0 * std::real(std::conj(overlap) * dov_y);
  }
  return out;
}

std::vector<double> leakage_trajectory(const PulseSet& pulse, const DeviceModel& model,
                                       const KrylovConfig& cfg) {
  pulse.validate();
  if (model.spec.levels != 3) throw Error("leakage_trajectory: requires a three-level device");
  const int m = pulse.grid.bins;
  const double dt = pulse.grid.dt();
  HamiltonianAssembler assembler(model.h0, model.sx, model.sy);
  StateVector psi = ground_state(model.spec.levels, model.spec.site_count);
  std::vector<double> traj;
  traj.reserve(m + 1);
  traj.push_back(leakage(psi));
  for (int n = 0; n < m; ++n) {
    const SparseOperator& h = assembler.with_drive(pulse.ox(n), pulse.oy(n));
    psi = krylov_expv(h, psi, dt, cfg);
    traj.push_back(leakage(psi));
  }
  return traj;
}

}  // namespace starpulse
