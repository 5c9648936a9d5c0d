// SPDX-License-Identifier: Apache-2.0
//
// Optimization on the product of N complex circles: tangent projection,
// normalization retraction and conjugate-gradient ascent for concave
// quadratic-plus-linear objectives.

#pragma once

#include <optional>
#include <vector>

#include "dualrot/types.hpp"

namespace dualrot {

// Entrywise unit-modulus phase vector.
using PhaseVector = cvec;

bool is_unit_modulus(const PhaseVector& v, double tol = 1e-12);

// v^H Q v + 2 Re{q^H v} with Q Hermitian negative semidefinite.
struct QuadraticObjective {
  cmat Q;
  cvec q;

  double value(const cvec& v) const {
    return (v.dot(Q * v)).real() + 2.0 * (q.dot(v)).real();
  }
  cvec euclidean_gradient(const cvec& v) const { return 2.0 * (Q * v + q); }

  // Construction-time sanity bounds (Hermitian symmetry, top eigenvalue);
  // called from debug builds and tests.
  void check_structure() const;
};

// Removes the radial component: result t satisfies Re{t_n conj(v_n)} = 0.
cvec tangent_project(const PhaseVector& v, const cvec& g);

// Entrywise (v_n + t_n) / |v_n + t_n|; empty when some |v_n + t_n| falls
// below 1e-14 (step rejected).
std::optional<PhaseVector> retract(const PhaseVector& v, const cvec& t);

struct RcgResult {
  PhaseVector v;
  double objective = 0.0;
  std::vector<double> trace; // objective at v0 and after each accepted step
  int iterations = 0;
  bool converged = false; // gradient tolerance reached within the budget
};

// Riemannian conjugate gradient ascent (Polak-Ribiere+ with reset, projection
// transport, Armijo backtracking). The objective is non-decreasing across
// accepted iterates; budget exhaustion is a normal return.
RcgResult rcg_maximize(const QuadraticObjective& objective, const PhaseVector& v0,
                       int max_iters, double tol);

} // namespace dualrot
