#include "lipbench/lipnet/network.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "lipbench/errors.hpp"
#include "lipbench/numerics/linalg.hpp"

namespace lipbench::lipnet {
namespace {

struct AolParts {
  Matrix gram;
  Vector row_sums;
  Vector scales;
};

AolParts aol_parts(const Matrix& w) {
  const Eigen::Index n = w.cols();
  AolParts p;
  p.gram = Matrix::Zero(n, n);
  p.gram.selfadjointView<Eigen::Lower>().rankUpdate(w.transpose());
  p.gram.triangularView<Eigen::StrictlyUpper>() = p.gram.transpose();
  p.row_sums = p.gram.cwiseAbs().rowwise().sum();
  p.scales.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    p.scales[j] = p.row_sums[j] > 0.0 ? 1.0 / std::sqrt(p.row_sums[j]) : 0.0;
  }
  return p;
}

struct LayerCache {
  Matrix input;
  Matrix effective;  // AOL effective weight
  AolParts aol;
  Matrix hidden_pre;  // CPL: XWᵀ + b
  Matrix hidden_act;  // CPL: relu of the above
  Matrix pre_activation;  // kept for ReLU masks
  std::vector<unsigned char> swapped;
};

Matrix pad_input(const Matrix& x, int input_dim, int pad_to) {
  if (x.cols() != input_dim) {
    throw ShapeError("network: input width " + std::to_string(x.cols()) + " != " +
                     std::to_string(input_dim));
  }
  if (pad_to == input_dim) return x;
  Matrix out = Matrix::Zero(x.rows(), pad_to);
  out.leftCols(input_dim) = x;
  return out;
}

void apply_activation(Activation act, Matrix& z, LayerCache* cache) {
  switch (act) {
    case Activation::kNone: break;
    case Activation::kMaxMin: maxmin_rows(z, cache ? &cache->swapped : nullptr); break;
    case Activation::kRelu:
      if (cache) cache->pre_activation = z;
      z = z.cwiseMax(0.0);
      break;
  }
}

// Gradient w.r.t. the pre-activation, in place.
void activation_backward(Activation act, Matrix& g, const LayerCache& cache) {
  switch (act) {
    case Activation::kNone: break;
    case Activation::kMaxMin: {
      const Eigen::Index pairs = g.cols() / 2;
      for (Eigen::Index r = 0; r < g.rows(); ++r) {
        double* row = g.row(r).data();
        for (Eigen::Index p = 0; p < pairs; ++p) {
          if (cache.swapped[static_cast<std::size_t>(r * pairs + p)]) std::swap(row[2 * p], row[2 * p + 1]);
        }
      }
      break;
    }
    case Activation::kRelu:
      g = (cache.pre_activation.array() > 0.0).select(g, 0.0);
      break;
  }
}

Matrix run_forward(const Network& net, const Matrix& x, const SpectralScales& scales,
                   std::vector<LayerCache>* caches) {
  if (scales.size() != net.layers().size()) throw ShapeError("network: spectral scale count");
  Matrix h = pad_input(x, net.input_dim(), net.pad_to());
  if (caches) caches->resize(net.layers().size());
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    const DenseLayer& layer = net.layers()[l];
    LayerCache* cache = caches ? &(*caches)[l] : nullptr;
    Matrix z;
    switch (layer.kind) {
      case LayerKind::kAol: {
        AolParts parts = aol_parts(layer.weight);
        Matrix eff = layer.weight * parts.scales.asDiagonal();
        z.noalias() = h * eff.transpose();
        z.rowwise() += layer.bias.transpose();
        if (cache) {
          cache->effective = std::move(eff);
          cache->aol = std::move(parts);
        }
        break;
      }
      case LayerKind::kStandard:
        z.noalias() = h * layer.weight.transpose();
        z.rowwise() += layer.bias.transpose();
        break;
      case LayerKind::kCpl: {
        Matrix u;
        u.noalias() = h * layer.weight.transpose();
        u.rowwise() += layer.bias.transpose();
        Matrix a = u.cwiseMax(0.0);
        z = h;
        z.noalias() -= scales[l] * (a * layer.weight);
        if (cache) {
          cache->hidden_pre = std::move(u);
          cache->hidden_act = std::move(a);
        }
        break;
      }
    }
    if (cache) cache->input = std::move(h);
    apply_activation(layer.activation, z, cache);
    h = std::move(z);
  }
  return h;
}

}  // namespace

Network::Network(int input_dim, int pad_to, std::vector<DenseLayer> layers)
    : input_dim_(input_dim), pad_to_(pad_to), layers_(std::move(layers)) {
  if (input_dim_ < 1 || pad_to_ < input_dim_) throw ShapeError("network: bad input padding");
  if (layers_.empty()) throw ShapeError("network: no layers");
  Eigen::Index width = pad_to_;
  for (const auto& layer : layers_) {
    if (layer.in_dim() != width) throw ShapeError("network: layer dimensions do not chain");
    const Eigen::Index bias_len = layer.weight.rows();
    if (layer.bias.size() != bias_len) throw ShapeError("network: bias length");
    if (layer.activation == Activation::kMaxMin && layer.out_dim() % 2 != 0) {
      throw ShapeError("network: MaxMin needs an even width");
    }
    width = layer.out_dim();
  }
}

bool Network::is_lipschitz() const {
  return std::all_of(layers_.begin(), layers_.end(), [](const DenseLayer& l) {
    return l.kind != LayerKind::kStandard && l.activation != Activation::kRelu;
  });
}

std::size_t Network::parameter_count() const {
  std::size_t total = 0;
  for (const auto& l : layers_) total += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return total;
}

Network make_mlp(const MlpSpec& spec, RandomSource& rng) {
  if (spec.depth < 1 || spec.width < 1 || spec.classes < 1 || spec.input_dim < 1) {
    throw ConfigError("make_mlp: dimensions must be positive");
  }
  const int pad_to = std::max(spec.input_dim, spec.width);
  RandomSource init_rng = rng.split("init");

  auto gaussian = [&](Eigen::Index r, Eigen::Index c) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = init_rng.normal();
    return m;
  };
  auto orthogonal = [&](Eigen::Index rows, Eigen::Index cols) {
    const Eigen::Index big = std::max(rows, cols);
    const Eigen::Index small = std::min(rows, cols);
    Eigen::MatrixXd g = gaussian(big, small);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(big, small);
    // Sign fix so the draw is Haar-distributed.
    for (Eigen::Index j = 0; j < small; ++j) {
      if (qr.matrixQR()(j, j) < 0.0) q.col(j) *= -1.0;
    }
    return rows >= cols ? Matrix(q) : Matrix(q.transpose());
  };

  std::vector<DenseLayer> layers;
  int in = pad_to;
  for (int l = 0; l < spec.depth; ++l) {
    const bool last = l + 1 == spec.depth;
    const int out = last ? spec.classes : spec.width;
    DenseLayer layer;
    layer.activation = last ? Activation::kNone : spec.activation;
    layer.kind = spec.kind;
    if (spec.kind == LayerKind::kCpl && in != out) layer.kind = LayerKind::kAol;

    switch (layer.kind) {
      case LayerKind::kAol:
        if (in == out && spec.init == InitScheme::kIdentity) {
          layer.weight = Matrix::Identity(out, in);
        } else {
          layer.weight = orthogonal(out, in);
        }
        break;
      case LayerKind::kCpl:
        layer.weight = orthogonal(out, in);
        {
          Vector v(in);
          for (Eigen::Index i = 0; i < in; ++i) v[i] = init_rng.normal();
          layer.power_vector = v.normalized();
        }
        break;
      case LayerKind::kStandard: {
        if (spec.init == InitScheme::kOrthogonal) {
          layer.weight = orthogonal(out, in);
        } else {
          const double bound = 1.0 / std::sqrt(static_cast<double>(in));
          layer.weight.resize(out, in);
          for (Eigen::Index i = 0; i < layer.weight.size(); ++i) {
            layer.weight.data()[i] = init_rng.uniform(-bound, bound);
          }
        }
        break;
      }
    }
    layer.bias = Vector::Zero(layer.weight.rows());
    layers.push_back(std::move(layer));
    in = out;
  }
  return Network(spec.input_dim, pad_to, std::move(layers));
}

SpectralScales refresh_spectral(Network& net) {
  SpectralScales scales(net.layers().size(), 0.0);
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    DenseLayer& layer = net.layers()[l];
    if (layer.kind != LayerKind::kCpl) continue;
    const auto step = power_iteration(layer.weight, 1, 0.0, layer.power_vector);
    if (step.right_vector.norm() > 0.0) layer.power_vector = step.right_vector;
    scales[l] = cpl_scale_from_sigma(step.sigma_max);
  }
  return scales;
}

SpectralScales converged_spectral(const Network& net) {
  SpectralScales scales(net.layers().size(), 0.0);
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    const DenseLayer& layer = net.layers()[l];
    if (layer.kind != LayerKind::kCpl) continue;
    scales[l] = cpl_scale_from_sigma(converged_sigma(layer.weight, layer.power_vector));
  }
  return scales;
}

Matrix forward_with(const Network& net, const Matrix& x, const SpectralScales& scales) {
  return run_forward(net, x, scales, nullptr);
}

double batch_loss(const Network& net, const Matrix& x, std::span<const int> labels,
                  const LossSpec& loss, const SpectralScales& scales) {
  if (static_cast<Eigen::Index>(labels.size()) != x.rows()) throw ShapeError("batch_loss: labels");
  const Matrix scores = run_forward(net, x, scales, nullptr);
  double total = 0.0;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    total += loss_value(loss, std::span<const double>(scores.row(i).data(), scores.cols()),
                        labels[static_cast<std::size_t>(i)]);
  }
  return total / static_cast<double>(scores.rows());
}

Gradients backward(const Network& net, const Matrix& x, std::span<const int> labels,
                   const LossSpec& loss, const SpectralScales& scales) {
  if (x.rows() < 1) throw ShapeError("backward: empty batch");
  if (static_cast<Eigen::Index>(labels.size()) != x.rows()) throw ShapeError("backward: labels");
  std::vector<LayerCache> caches;
  Gradients out;
  out.scores = run_forward(net, x, scales, &caches);

  const double inv_batch = 1.0 / static_cast<double>(x.rows());
  Matrix g(out.scores.rows(), out.scores.cols());
  double total = 0.0;
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    total += loss_and_gradient(loss, std::span<const double>(out.scores.row(i).data(), g.cols()),
                               labels[static_cast<std::size_t>(i)],
                               std::span<double>(g.row(i).data(), g.cols()));
  }
  out.loss = total * inv_batch;
  g *= inv_batch;

  out.layers.resize(net.layers().size());
  for (std::size_t li = net.layers().size(); li-- > 0;) {
    const DenseLayer& layer = net.layers()[li];
    const LayerCache& cache = caches[li];
    LayerGradient& lg = out.layers[li];
    activation_backward(layer.activation, g, cache);
    const bool need_input = li > 0;

    switch (layer.kind) {
      case LayerKind::kAol: {
        Matrix g_eff;
        g_eff.noalias() = g.transpose() * cache.input;
        lg.bias = g.colwise().sum().transpose();
        Matrix g_in;
        if (need_input) g_in.noalias() = g * cache.effective;

        const AolParts& parts = cache.aol;
        const Eigen::Index n = layer.weight.cols();
        // d_j = r_j^(-1/2)  ->  dL/dr_j = dL/dd_j * (-1/2) r_j^(-3/2)
        const Vector g_scale = (g_eff.cwiseProduct(layer.weight)).colwise().sum().transpose();
        Vector g_row(n);
        for (Eigen::Index j = 0; j < n; ++j) {
          const double r = parts.row_sums[j];
          g_row[j] = r > 0.0 ? -0.5 * g_scale[j] / (r * std::sqrt(r)) : 0.0;
        }
        // r_j = sum_i |G_ji|, G = WᵀW  ->  dL/dW = W (N + Nᵀ), N_ji = g_row_j sign(G_ji)
        Matrix sym = parts.gram.array().sign();
        sym.array() = sym.array().colwise() * g_row.array() +
                      sym.array().rowwise() * g_row.transpose().array();
        lg.weight = g_eff * parts.scales.asDiagonal();
        lg.weight.noalias() += layer.weight * sym;
        g = std::move(g_in);
        break;
      }
      case LayerKind::kStandard: {
        lg.weight.noalias() = g.transpose() * cache.input;
        lg.bias = g.colwise().sum().transpose();
        Matrix g_in;
        if (need_input) g_in.noalias() = g * layer.weight;
        g = std::move(g_in);
        break;
      }
      case LayerKind::kCpl: {
        const double c = scales[li];
        Matrix g_hidden;
        g_hidden.noalias() = -c * (g * layer.weight.transpose());
        g_hidden = (cache.hidden_pre.array() > 0.0).select(g_hidden, 0.0);
        lg.weight.noalias() = -c * (cache.hidden_act.transpose() * g);
        lg.weight.noalias() += g_hidden.transpose() * cache.input;
        lg.bias = g_hidden.colwise().sum().transpose();
        if (need_input) {
          g.noalias() += g_hidden * layer.weight;
        } else {
          g.resize(0, 0);
        }
        break;
      }
    }
  }
  return out;
}

InferenceModel::InferenceModel(const Network& net)
    : input_dim_(net.input_dim()), pad_to_(net.pad_to()), output_dim_(net.output_dim()) {
  const SpectralScales scales = converged_spectral(net);
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    const DenseLayer& layer = net.layers()[l];
    Stage s{layer.kind, layer.activation, layer.weight, layer.bias, scales[l]};
    if (layer.kind == LayerKind::kAol) s.weight = aol_effective_weight(layer.weight);
    stages_.push_back(std::move(s));
  }
}

Matrix InferenceModel::pad(const Matrix& x) const { return pad_input(x, input_dim_, pad_to_); }

Matrix InferenceModel::forward(const Matrix& x) const {
  Matrix h = pad(x);
  for (const Stage& s : stages_) {
    Matrix z;
    if (s.kind == LayerKind::kCpl) {
      Matrix u;
      u.noalias() = h * s.weight.transpose();
      u.rowwise() += s.bias.transpose();
      z = h;
      z.noalias() -= s.cpl_scale * (u.cwiseMax(0.0) * s.weight);
    } else {
      z.noalias() = h * s.weight.transpose();
      z.rowwise() += s.bias.transpose();
    }
    apply_activation(s.activation, z, nullptr);
    h = std::move(z);
  }
  return h;
}

Vector InferenceModel::forward(std::span<const double> x) const {
  Matrix row = Eigen::Map<const Matrix>(x.data(), 1, static_cast<Eigen::Index>(x.size()));
  return forward(row).row(0).transpose();
}

Vector InferenceModel::input_gradient(std::span<const double> x,
                                      std::span<const double> cotangent) const {
  if (static_cast<int>(cotangent.size()) != output_dim_) throw ShapeError("input_gradient: cotangent");
  Matrix h = pad(Eigen::Map<const Matrix>(x.data(), 1, static_cast<Eigen::Index>(x.size())));
  struct Tape {
    Matrix input;
    Matrix hidden_pre;
    Matrix pre_activation;
    std::vector<unsigned char> swapped;
  };
  std::vector<Tape> tape(stages_.size());
  for (std::size_t l = 0; l < stages_.size(); ++l) {
    const Stage& s = stages_[l];
    tape[l].input = h;
    Matrix z;
    if (s.kind == LayerKind::kCpl) {
      Matrix u = h * s.weight.transpose();
      u.rowwise() += s.bias.transpose();
      z = h - s.cpl_scale * (u.cwiseMax(0.0) * s.weight);
      tape[l].hidden_pre = std::move(u);
    } else {
      z = h * s.weight.transpose();
      z.rowwise() += s.bias.transpose();
    }
    if (s.activation == Activation::kRelu) tape[l].pre_activation = z;
    if (s.activation == Activation::kMaxMin) {
      maxmin_rows(z, &tape[l].swapped);
    } else if (s.activation == Activation::kRelu) {
      z = z.cwiseMax(0.0);
    }
    h = std::move(z);
  }

  Matrix g = Eigen::Map<const Matrix>(cotangent.data(), 1, output_dim_);
  for (std::size_t l = stages_.size(); l-- > 0;) {
    const Stage& s = stages_[l];
    if (s.activation == Activation::kMaxMin) {
      const Eigen::Index pairs = g.cols() / 2;
      for (Eigen::Index p = 0; p < pairs; ++p) {
        if (tape[l].swapped[static_cast<std::size_t>(p)]) std::swap(g(0, 2 * p), g(0, 2 * p + 1));
      }
    } else if (s.activation == Activation::kRelu) {
      g = (tape[l].pre_activation.array() > 0.0).select(g, 0.0);
    }
    if (s.kind == LayerKind::kCpl) {
      Matrix gh = -s.cpl_scale * (g * s.weight.transpose());
      gh = (tape[l].hidden_pre.array() > 0.0).select(gh, 0.0);
      g = g + gh * s.weight;
    } else {
      g = g * s.weight;
    }
  }
  return g.row(0).head(input_dim_).transpose();
}

Vector forward(const Network& net, std::span<const double> x) { return InferenceModel(net).forward(x); }

namespace {

constexpr std::array<char, 5> kCheckpointMagic = {'L', 'N', 'E', 'T', '1'};

template <typename T>
void put_le(std::ostream& out, T value) {
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(bytes.data(), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  std::array<char, sizeof(T)> bytes;
  if (!in.read(bytes.data(), sizeof(T))) {
    throw ParseError(ParseErrorKind::kTruncated, "checkpoint ended early");
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

}  // namespace

void save_checkpoint(std::ostream& out, const Network& net) {
  out.write(kCheckpointMagic.data(), kCheckpointMagic.size());
  put_le<std::int32_t>(out, net.input_dim());
  put_le<std::int32_t>(out, net.pad_to());
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(net.layers().size()));
  for (const auto& l : net.layers()) {
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(l.kind));
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(l.activation));
    put_le<std::int32_t>(out, static_cast<std::int32_t>(l.weight.rows()));
    put_le<std::int32_t>(out, static_cast<std::int32_t>(l.weight.cols()));
    put_le<std::int32_t>(out, static_cast<std::int32_t>(l.power_vector.size()));
  }
  for (const auto& l : net.layers()) {
    for (Eigen::Index i = 0; i < l.weight.size(); ++i) put_le<double>(out, l.weight.data()[i]);
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) put_le<double>(out, l.bias[i]);
    for (Eigen::Index i = 0; i < l.power_vector.size(); ++i) put_le<double>(out, l.power_vector[i]);
  }
}

Network load_checkpoint(std::istream& in) {
  std::array<char, 5> magic{};
  if (!in.read(magic.data(), magic.size())) {
    throw ParseError(ParseErrorKind::kTruncated, "checkpoint header missing");
  }
  if (magic != kCheckpointMagic) throw ParseError(ParseErrorKind::kBadMagic, "not an LNET1 checkpoint");
  const int input_dim = get_le<std::int32_t>(in);
  const int pad_to = get_le<std::int32_t>(in);
  const auto count = get_le<std::uint32_t>(in);
  if (count == 0 || count > 4096) throw ParseError(ParseErrorKind::kBadLength, "checkpoint layer count");
  std::vector<DenseLayer> layers(count);
  std::vector<std::int32_t> power_len(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto kind = get_le<std::uint8_t>(in);
    const auto act = get_le<std::uint8_t>(in);
    if (kind > 2 || act > 2) throw ParseError(ParseErrorKind::kBadMagic, "checkpoint layer tag");
    layers[i].kind = static_cast<LayerKind>(kind);
    layers[i].activation = static_cast<Activation>(act);
    const auto rows = get_le<std::int32_t>(in);
    const auto cols = get_le<std::int32_t>(in);
    power_len[i] = get_le<std::int32_t>(in);
    if (rows < 1 || cols < 1 || power_len[i] < 0) {
      throw ParseError(ParseErrorKind::kBadLength, "checkpoint layer shape");
    }
    layers[i].weight.resize(rows, cols);
    layers[i].bias.resize(rows);
    layers[i].power_vector.resize(power_len[i]);
  }
  for (auto& l : layers) {
    for (Eigen::Index i = 0; i < l.weight.size(); ++i) l.weight.data()[i] = get_le<double>(in);
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias[i] = get_le<double>(in);
    for (Eigen::Index i = 0; i < l.power_vector.size(); ++i) l.power_vector[i] = get_le<double>(in);
  }
  return Network(input_dim, pad_to, std::move(layers));
}

}  // namespace lipbench::lipnet
