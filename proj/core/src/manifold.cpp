// SPDX-License-Identifier: Apache-2.0

#include "dualrot/manifold.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace dualrot {

bool is_unit_modulus(const PhaseVector& v, double tol) {
  for (Eigen::Index n = 0; n < v.size(); ++n)
    if (std::abs(std::abs(v[n]) - 1.0) > tol) return false;
  return true;
}

void QuadraticObjective::check_structure() const {
  if ((Q - Q.adjoint()).norm() > 1e-9)
    throw std::invalid_argument("QuadraticObjective: Q is not Hermitian");
  Eigen::SelfAdjointEigenSolver<cmat> eig(Q, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().maxCoeff() > 1e-9)
    throw std::invalid_argument("QuadraticObjective: Q is not negative semidefinite");
}

cvec tangent_project(const PhaseVector& v, const cvec& g) {
  cvec t(g.size());
  for (Eigen::Index n = 0; n < g.size(); ++n)
    t[n] = g[n] - (g[n] * std::conj(v[n])).real() * v[n];
  return t;
}

std::optional<PhaseVector> retract(const PhaseVector& v, const cvec& t) {
  PhaseVector out(v.size());
  for (Eigen::Index n = 0; n < v.size(); ++n) {
    const cd sum = v[n] + t[n];
    const double mag = std::abs(sum);
    if (mag < 1e-14) return std::nullopt;
    out[n] = sum / mag;
  }
  return out;
}

RcgResult rcg_maximize(const QuadraticObjective& objective, const PhaseVector& v0,
                       int max_iters, double tol) {
#ifndef NDEBUG
  objective.check_structure();
#endif
  const double armijo = 1e-4;

  RcgResult result;
  result.v = v0;
  result.objective = objective.value(v0);
  result.trace.push_back(result.objective);

  cvec grad = tangent_project(result.v, objective.euclidean_gradient(result.v));
  cvec direction = grad;

  for (int iter = 0; iter < max_iters; ++iter) {
    const double grad_norm = grad.norm();
    if (grad_norm < tol) {
      result.converged = true;
      break;
    }

    double slope = (grad.dot(direction)).real();
    if (slope <= 0.0) { // conjugacy lost, fall back to steepest ascent
      direction = grad;
      slope = grad_norm * grad_norm;
    }

    // Backtracking Armijo line search along the retracted ray.
    double step = 1.0;
    std::optional<PhaseVector> candidate;
    double candidate_value = 0.0;
    bool accepted = false;
    while (step >= 1e-12) {
      candidate = retract(result.v, step * direction);
      if (candidate) {
        candidate_value = objective.value(*candidate);
        if (candidate_value >= result.objective + armijo * step * slope) {
          accepted = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!accepted) break; // no ascent step available at this point

    const PhaseVector v_next = *candidate;
    const cvec grad_next = tangent_project(v_next, objective.euclidean_gradient(v_next));

    // Polak-Ribiere+ with projection transport of the previous quantities.
    const cvec grad_transported = tangent_project(v_next, grad);
    const double denom = (grad.dot(grad)).real();
    double beta = denom > 0.0 ? (grad_next.dot(grad_next - grad_transported)).real() / denom : 0.0;
    if (beta < 0.0) beta = 0.0;
    direction = grad_next + beta * tangent_project(v_next, direction);

    result.v = v_next;
    result.objective = candidate_value;
    result.trace.push_back(candidate_value);
    grad = grad_next;
    result.iterations = iter + 1;
  }
  return result;
}

} // namespace dualrot
