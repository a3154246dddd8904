#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "lipbench/lipnet/layers.hpp"
#include "lipbench/lipnet/loss.hpp"
#include "lipbench/numerics/random.hpp"

namespace lipbench::lipnet {

/// Layer stack g with scores = g(pad(x)). Inputs of width input_dim are
/// zero-padded to pad_to before the first layer.
class Network {
 public:
  Network(int input_dim, int pad_to, std::vector<DenseLayer> layers);

  int input_dim() const { return input_dim_; }
  int pad_to() const { return pad_to_; }
  int output_dim() const { return static_cast<int>(layers_.back().out_dim()); }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }

  /// True when every layer is AOL or CPL and activations are MaxMin/None.
  bool is_lipschitz() const;
  std::size_t parameter_count() const;

 private:
  int input_dim_;
  int pad_to_;
  std::vector<DenseLayer> layers_;
};

enum class InitScheme { kIdentity, kOrthogonal, kUniform };

struct MlpSpec {
  int input_dim = 1024;
  int width = 256;
  int depth = 8;
  int classes = 10;
  LayerKind kind = LayerKind::kAol;
  Activation activation = Activation::kMaxMin;
  InitScheme init = InitScheme::kIdentity;
};

/// depth dense layers, activation after all but the last.
///
/// When width >= input_dim inputs are zero-padded to width and every hidden
/// layer is square; otherwise the first layer maps input_dim -> width. CPL
/// needs square layers, so non-square layers of a CPL net are AOL. Square
/// AOL layers start at the identity under kIdentity; non-square AOL and CPL
/// layers start (semi-)orthogonal. Standard layers use U(-1/sqrt(in), 1/sqrt(in)).
Network make_mlp(const MlpSpec& spec, RandomSource& rng);

/// Per-layer CPL factor 2 / sigma^2 (0 for other layers).
using SpectralScales = std::vector<double>;

/// Training: one power-iteration step per CPL layer, stored back into the
/// layer's power_vector.
SpectralScales refresh_spectral(Network& net);
/// Evaluation: converged power iteration, network unchanged.
SpectralScales converged_spectral(const Network& net);

struct LayerGradient {
  Matrix weight;
  Vector bias;
};

struct Gradients {
  double loss = 0.0;  // mean over the batch
  std::vector<LayerGradient> layers;
  Matrix scores;  // forward scores of the batch
};

/// Mean loss of a batch (rows of x) with CPL factors held at `scales`.
double batch_loss(const Network& net, const Matrix& x, std::span<const int> labels,
                  const LossSpec& loss, const SpectralScales& scales);

/// Exact gradient of batch_loss with respect to every weight and bias,
/// through the AOL rescaling and the SelfNormCE normalisation. CPL factors
/// are constants.
Gradients backward(const Network& net, const Matrix& x, std::span<const int> labels,
                   const LossSpec& loss, const SpectralScales& scales);

/// Forward pass with fixed CPL factors (batch rows).
Matrix forward_with(const Network& net, const Matrix& x, const SpectralScales& scales);

/// Effective affine maps frozen for evaluation: AOL weights rescaled, CPL
/// factors from converged power iteration.
class InferenceModel {
 public:
  explicit InferenceModel(const Network& net);

  int input_dim() const { return input_dim_; }
  int output_dim() const { return output_dim_; }

  Matrix forward(const Matrix& x) const;
  Vector forward(std::span<const double> x) const;

  /// Jᵀ cotangent for a single input, in unpadded input coordinates.
  Vector input_gradient(std::span<const double> x, std::span<const double> cotangent) const;

 private:
  struct Stage {
    LayerKind kind;
    Activation activation;
    Matrix weight;
    Vector bias;
    double cpl_scale;
  };
  Matrix pad(const Matrix& x) const;

  int input_dim_;
  int pad_to_;
  int output_dim_;
  std::vector<Stage> stages_;
};

/// Convenience: compiles then evaluates one input.
Vector forward(const Network& net, std::span<const double> x);

/// Checkpoint: "LNET1", i32 input_dim, i32 pad_to, u32 layer count, then per
/// layer u8 kind, u8 activation, i32 rows, i32 cols, i32 power length,
/// followed by little-endian f64 weight (row-major), bias and power vector.
void save_checkpoint(std::ostream& out, const Network& net);
Network load_checkpoint(std::istream& in);

}  // namespace lipbench::lipnet
