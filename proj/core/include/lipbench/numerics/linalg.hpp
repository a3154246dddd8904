#pragma once

#include "lipbench/numerics/matrix.hpp"

namespace lipbench {

struct PowerIterationResult {
  double sigma_max = 0.0;
  Vector right_vector;  // unit vector v with ||M v|| = sigma_max, zero for M = 0
  int iterations = 0;
};

/// Largest singular value of m by power iteration on MᵀM.
///
/// The estimate ||M v_k|| is a Rayleigh-quotient bound: it never exceeds the
/// true sigma_max and is nondecreasing in the iteration count. Stops early
/// once the relative change falls below tol (tol = 0 runs all iterations).
/// A zero matrix yields sigma 0 with a zero vector.
PowerIterationResult power_iteration(const Matrix& m, int iters, double tol);

/// Same, warm-started from `start` (normalised internally; a zero or
/// wrongly sized start falls back to the default start vector).
PowerIterationResult power_iteration(const Matrix& m, int iters, double tol, const Vector& start);

struct SymmetricEigen {
  Vector eigenvalues;   // descending
  Matrix eigenvectors;  // orthonormal columns, column i pairs with eigenvalues[i]
  int sweeps = 0;
};

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Sweeps until the off-diagonal Frobenius norm drops below
/// 1e-12 * ||S||_F. Throws ShapeError for non-square input or asymmetry
/// beyond 1e-9 (relative to the largest entry, floored at 1).
SymmetricEigen sym_eig(const Matrix& s);

double max_abs_asymmetry(const Matrix& s);

}  // namespace lipbench
