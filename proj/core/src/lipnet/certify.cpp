#include "lipbench/lipnet/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "lipbench/errors.hpp"

namespace lipbench::lipnet {
namespace {

void check_rows(const Matrix& scores, std::span<const int> labels) {
  if (static_cast<Eigen::Index>(labels.size()) != scores.rows()) {
    throw ShapeError("score rows and label count differ");
  }
}

std::span<const double> row_span(const Matrix& m, Eigen::Index r) {
  return {m.row(r).data(), static_cast<std::size_t>(m.cols())};
}

int runner_up(std::span<const double> scores, int label) {
  int best = -1;
  for (int c = 0; c < static_cast<int>(scores.size()); ++c) {
    if (c == label) continue;
    if (best < 0 || scores[c] > scores[best]) best = c;
  }
  return best;
}

}  // namespace

double score_margin(std::span<const double> scores, int label) {
  if (label < 0 || label >= static_cast<int>(scores.size())) throw DomainError("label out of range");
  const int other = runner_up(scores, label);
  if (other < 0) return std::numeric_limits<double>::infinity();
  return scores[label] - scores[other];
}

int top_class(std::span<const double> scores) {
  if (scores.empty()) throw ShapeError("top_class: empty scores");
  return static_cast<int>(std::max_element(scores.begin(), scores.end()) - scores.begin());
}

double accuracy(const Matrix& scores, std::span<const int> labels) {
  check_rows(scores, labels);
  if (scores.rows() == 0) return 0.0;
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    hits += top_class(row_span(scores, i)) == labels[static_cast<std::size_t>(i)];
  }
  return static_cast<double>(hits) / static_cast<double>(scores.rows());
}

double cra(const Matrix& scores, std::span<const int> labels, double epsilon) {
  check_rows(scores, labels);
  if (epsilon < 0.0) throw DomainError("cra: epsilon must be >= 0");
  if (scores.rows() == 0) return 0.0;
  const double needed = std::sqrt(2.0) * epsilon;
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    hits += score_margin(row_span(scores, i), labels[static_cast<std::size_t>(i)]) > needed;
  }
  return static_cast<double>(hits) / static_cast<double>(scores.rows());
}

Evaluation evaluate(const InferenceModel& model, const LabeledDataset& data, double epsilon,
                    Eigen::Index chunk) {
  if (chunk < 1) throw ConfigError("evaluate: chunk must be >= 1");
  const Eigen::Index n = data.size();
  const auto& labels = data.labels();
  const double needed = std::sqrt(2.0) * epsilon;
  std::size_t correct = 0;
  std::size_t certified = 0;
  for (Eigen::Index start = 0; start < n; start += chunk) {
    const Eigen::Index rows = std::min(chunk, n - start);
    const Matrix scores = model.forward(data.features().middleRows(start, rows));
    for (Eigen::Index i = 0; i < rows; ++i) {
      const int y = labels[static_cast<std::size_t>(start + i)];
      correct += top_class(row_span(scores, i)) == y;
      certified += score_margin(row_span(scores, i), y) > needed;
    }
  }
  return {static_cast<double>(correct) / static_cast<double>(n),
          static_cast<double>(certified) / static_cast<double>(n)};
}

double random_ball_attack(const InferenceModel& model, std::span<const double> x, int label,
                          double epsilon, int tries, RandomSource& rng) {
  if (epsilon < 0.0) throw DomainError("random_ball_attack: epsilon must be >= 0");
  if (tries < 0) throw ConfigError("random_ball_attack: tries must be >= 0");
  const auto dim = static_cast<Eigen::Index>(x.size());
  const Eigen::Map<const Vector> center(x.data(), dim);

  const Vector clean = model.forward(x);
  double worst = score_margin({clean.data(), static_cast<std::size_t>(clean.size())}, label);
  if (epsilon == 0.0) return worst;

  Matrix batch(tries + 1, dim);
  for (int t = 0; t < tries; ++t) {
    Vector dir(dim);
    for (Eigen::Index j = 0; j < dim; ++j) dir[j] = rng.normal();
    const double norm = dir.norm();
    if (norm == 0.0) dir.setZero(); else dir /= norm;
    batch.row(t) = (center + epsilon * dir).transpose();
  }

  // Step against d(s_y - s_c)/dx with c the clean runner-up.
  Vector ascent = Vector::Zero(dim);
  const int other = runner_up({clean.data(), static_cast<std::size_t>(clean.size())}, label);
  if (other >= 0) {
    std::vector<double> cot(static_cast<std::size_t>(clean.size()), 0.0);
    cot[static_cast<std::size_t>(label)] = 1.0;
    cot[static_cast<std::size_t>(other)] = -1.0;
    const Vector grad = model.input_gradient(x, cot);
    const double norm = grad.norm();
    if (norm > 0.0) ascent = -grad / norm;
  }
  batch.row(tries) = (center + epsilon * ascent).transpose();

  const Matrix scores = model.forward(batch);
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    worst = std::min(worst, score_margin(row_span(scores, i), label));
  }
  return worst;
}

}  // namespace lipbench::lipnet
