#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "lipbench/numerics/matrix.hpp"

namespace lipbench::lipnet {

enum class LayerKind { kAol, kCpl, kStandard };
enum class Activation { kNone, kMaxMin, kRelu };

std::string_view to_string(LayerKind kind);
std::string_view to_string(Activation act);
LayerKind parse_layer_kind(std::string_view name);

/// One dense layer.
///
/// AOL and Standard: weight is (out x in). CPL: weight is (hidden x width)
/// and the layer maps width -> width as x - (2/sigma^2) Wᵀ relu(Wx + b), so
/// bias has `hidden` entries. power_vector is the persistent power-iteration
/// state for CPL layers and empty otherwise.
struct DenseLayer {
  LayerKind kind = LayerKind::kAol;
  Activation activation = Activation::kNone;
  Matrix weight;
  Vector bias;
  Vector power_vector;

  Eigen::Index in_dim() const { return weight.cols(); }
  Eigen::Index out_dim() const { return kind == LayerKind::kCpl ? weight.cols() : weight.rows(); }
};

/// AOL column scales d_j = (sum_i |WᵀW|_ji)^(-1/2), zero for zero columns.
Vector aol_scales(const Matrix& w);

/// W diag(aol_scales(W)); its spectral norm is at most 1.
Matrix aol_effective_weight(const Matrix& w);

/// 2 / sigma^2, or 0 when sigma is 0.
double cpl_scale_from_sigma(double sigma);

/// z = x - scale * Wᵀ relu(W x + b) for a single vector.
Vector cpl_forward(std::span<const double> x, const Matrix& w, const Vector& b, double scale);

/// Same, with the scale taken from a fully converged power iteration
/// warm-started at `power_state`.
Vector cpl_forward(std::span<const double> x, const Matrix& w, const Vector& b,
                   const Vector& power_state);

/// Pairwise (max, min). Throws ShapeError for odd length.
std::vector<double> maxmin(std::span<const double> v);

/// In-place MaxMin on every row; `swapped` (if given) records pairs whose
/// order was exchanged, one flag per pair.
void maxmin_rows(Matrix& z, std::vector<unsigned char>* swapped);

/// Sigma estimate for evaluation: power iteration run to convergence.
double converged_sigma(const Matrix& w, const Vector& start);

}  // namespace lipbench::lipnet
