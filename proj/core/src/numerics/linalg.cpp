#include "lipbench/numerics/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "lipbench/errors.hpp"
#include "lipbench/numerics/random.hpp"

namespace lipbench {
namespace {

Vector default_start(Eigen::Index n) {
  // Fixed pseudo-random start so no structured input is orthogonal to it.
  RandomSource rng(0x5EEDF00DULL);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.normal();
  return v.normalized();
}

constexpr int kMaxSweeps = 100;

struct Rotation {
  Eigen::Index p;
  Eigen::Index q;
  double c;
  double s;
  double app;  // diagonal entries after the rotation
  double aqq;
};

void rotate_rows(Matrix& m, const Rotation& r) {
  double* xp = m.row(r.p).data();
  double* xq = m.row(r.q).data();
  for (Eigen::Index k = 0; k < m.cols(); ++k) {
    const double x = xp[k];
    const double y = xq[k];
    xp[k] = r.c * x - r.s * y;
    xq[k] = r.s * x + r.c * y;
  }
}
constexpr double kOffDiagonalTol = 1e-12;
constexpr double kSymmetryTol = 1e-9;

}  // namespace

PowerIterationResult power_iteration(const Matrix& m, int iters, double tol) {
  return power_iteration(m, iters, tol, Vector());
}

PowerIterationResult power_iteration(const Matrix& m, int iters, double tol,
                                     const Vector& start) {
  if (m.size() == 0) throw ShapeError("power_iteration: empty matrix");
  if (iters < 1) throw DomainError("power_iteration: iters must be >= 1");

  PowerIterationResult out;
  const Eigen::Index n = m.cols();
  if (m.cwiseAbs().maxCoeff() == 0.0) {
    out.right_vector = Vector::Zero(n);
    return out;
  }

  Vector v;
  if (start.size() == n && start.norm() > 0.0) {
    v = start.normalized();
  } else {
    v = default_start(n);
  }

  double sigma = (m * v).norm();
  for (int it = 0; it < iters; ++it) {
    Vector w = m.transpose() * (m * v);
    const double norm = w.norm();
    out.iterations = it + 1;
    if (norm == 0.0) break;  // start vector in the null space
    v = w / norm;
    const double next = (m * v).norm();
    const double change = std::abs(next - sigma);
    sigma = std::max(sigma, next);
    if (change <= tol * sigma) break;
  }
  out.sigma_max = sigma;
  out.right_vector = std::move(v);
  return out;
}

double max_abs_asymmetry(const Matrix& s) {
  return (s - s.transpose()).cwiseAbs().maxCoeff();
}

SymmetricEigen sym_eig(const Matrix& s) {
  if (s.rows() != s.cols()) throw ShapeError("sym_eig: matrix is not square");
  const Eigen::Index n = s.rows();
  if (n == 0) throw ShapeError("sym_eig: empty matrix");
  if (!s.allFinite()) throw DomainError("sym_eig: non-finite entries");
  const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
  if (max_abs_asymmetry(s) > kSymmetryTol * scale) {
    throw ShapeError("sym_eig: matrix is not symmetric");
  }

  Matrix a = 0.5 * (s + s.transpose());
  // Rows of vt are the eigenvectors; row rotations stay contiguous.
  Matrix vt = Matrix::Identity(n, n);
  const double threshold = kOffDiagonalTol * a.norm();
  const double negligible = threshold / static_cast<double>(n);

  // Round-robin ordering: every pair once per sweep, n/2 disjoint pairs
  // per round.
  const Eigen::Index players = n + (n % 2);
  const auto seat = [players](Eigen::Index i, Eigen::Index round) {
    if (i == 0) return Eigen::Index{0};
    return 1 + (i - 1 + round) % (players - 1);
  };
  std::vector<Rotation> rotations;
  rotations.reserve(static_cast<std::size_t>(players / 2));

  SymmetricEigen out;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    // Summed directly; ||A||^2 - ||diag||^2 cancels long before the threshold.
    double off_sq = 0.0;
    for (Eigen::Index p = 0; p + 1 < n; ++p) {
      off_sq += a.row(p).tail(n - p - 1).squaredNorm();
    }
    const double off = std::sqrt(2.0 * off_sq);
    if (off <= threshold) break;
    out.sweeps = sweep + 1;

    for (Eigen::Index round = 0; round + 1 < players; ++round) {
      // Circle method: player 0 stays, the rest rotate one seat per round.
      rotations.clear();
      for (Eigen::Index i = 0; i < players / 2; ++i) {
        const Eigen::Index u = seat(i, round);
        const Eigen::Index v = seat(players - 1 - i, round);
        const Eigen::Index p = std::min(u, v);
        const Eigen::Index q = std::max(u, v);
        if (q >= n) continue;  // bye when n is odd
        const double apq = a(p, q);
        // n(n-1) entries this small cannot hold the off norm above threshold.
        if (std::abs(apq) <= negligible) continue;
        const double app = a(p, p);
        const double aqq = a(q, q);
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        rotations.push_back({p, q, c, t * c, app - t * apq, aqq + t * apq});
      }
      if (rotations.empty()) continue;

      // The pairs are disjoint, so J^T A J is a row pass, a transpose and
      // a second row pass; all of it walks memory in order.
      for (const Rotation& r : rotations) {
        rotate_rows(a, r);
        rotate_rows(vt, r);
      }
      a.transposeInPlace();
      for (const Rotation& r : rotations) rotate_rows(a, r);
      for (const Rotation& r : rotations) {
        a(r.p, r.p) = r.app;
        a(r.q, r.q) = r.aqq;
        a(r.p, r.q) = 0.0;
        a(r.q, r.p) = 0.0;
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return a(i, i) > a(j, j); });

  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.eigenvalues[k] = a(order[k], order[k]);
    out.eigenvectors.col(k) = vt.row(order[k]).transpose();
  }
  return out;
}

}  // namespace lipbench
