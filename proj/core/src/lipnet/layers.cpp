#include "lipbench/lipnet/layers.hpp"

#include <cmath>
#include <string>

#include "lipbench/errors.hpp"
#include "lipbench/numerics/linalg.hpp"

namespace lipbench::lipnet {

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::kAol: return "aol";
    case LayerKind::kCpl: return "cpl";
    case LayerKind::kStandard: return "standard";
  }
  return "?";
}

std::string_view to_string(Activation act) {
  switch (act) {
    case Activation::kNone: return "none";
    case Activation::kMaxMin: return "maxmin";
    case Activation::kRelu: return "relu";
  }
  return "?";
}

LayerKind parse_layer_kind(std::string_view name) {
  if (name == "aol") return LayerKind::kAol;
  if (name == "cpl") return LayerKind::kCpl;
  if (name == "standard") return LayerKind::kStandard;
  throw ConfigError("unknown layer kind '" + std::string(name) + "'");
}

Vector aol_scales(const Matrix& w) {
  const Eigen::Index n = w.cols();
  Matrix gram = Matrix::Zero(n, n);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(w.transpose());
  gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
  Vector d(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double r = gram.row(j).cwiseAbs().sum();
    d[j] = r > 0.0 ? 1.0 / std::sqrt(r) : 0.0;
  }
  return d;
}

Matrix aol_effective_weight(const Matrix& w) { return w * aol_scales(w).asDiagonal(); }

double cpl_scale_from_sigma(double sigma) { return sigma > 0.0 ? 2.0 / (sigma * sigma) : 0.0; }

double converged_sigma(const Matrix& w, const Vector& start) {
  if (w.size() == 0) return 0.0;
  return power_iteration(w, 5000, 1e-14, start).sigma_max;
}

Vector cpl_forward(std::span<const double> x, const Matrix& w, const Vector& b, double scale) {
  if (static_cast<Eigen::Index>(x.size()) != w.cols() || b.size() != w.rows()) {
    throw ShapeError("cpl_forward: dimension mismatch");
  }
  const Eigen::Map<const Vector> xv(x.data(), static_cast<Eigen::Index>(x.size()));
  const Vector pre = (w * xv + b).cwiseMax(0.0);
  return xv - scale * (w.transpose() * pre);
}

Vector cpl_forward(std::span<const double> x, const Matrix& w, const Vector& b,
                   const Vector& power_state) {
  return cpl_forward(x, w, b, cpl_scale_from_sigma(converged_sigma(w, power_state)));
}

std::vector<double> maxmin(std::span<const double> v) {
  if (v.size() % 2 != 0) throw ShapeError("maxmin: odd length");
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); i += 2) {
    out[i] = std::max(v[i], v[i + 1]);
    out[i + 1] = std::min(v[i], v[i + 1]);
  }
  return out;
}

void maxmin_rows(Matrix& z, std::vector<unsigned char>* swapped) {
  if (z.cols() % 2 != 0) throw ShapeError("maxmin: odd width");
  const Eigen::Index pairs = z.cols() / 2;
  if (swapped) swapped->assign(static_cast<std::size_t>(z.rows() * pairs), 0);
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    double* row = z.row(r).data();
    for (Eigen::Index p = 0; p < pairs; ++p) {
      double& a = row[2 * p];
      double& b = row[2 * p + 1];
      if (a < b) {
        std::swap(a, b);
        if (swapped) (*swapped)[static_cast<std::size_t>(r * pairs + p)] = 1;
      }
    }
  }
}

}  // namespace lipbench::lipnet
