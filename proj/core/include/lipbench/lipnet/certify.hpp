#pragma once

#include <span>

#include "lipbench/datasets/dataset.hpp"
#include "lipbench/lipnet/network.hpp"
#include "lipbench/numerics/random.hpp"

namespace lipbench::lipnet {

inline constexpr double kDefaultEpsilon = 36.0 / 255.0;

/// s_y - max_{c != y} s_c. +inf for a single-class score vector.
double score_margin(std::span<const double> scores, int label);

/// Index of the largest score, lowest index on ties.
int top_class(std::span<const double> scores);

/// Fraction of rows whose argmax is the label.
double accuracy(const Matrix& scores, std::span<const int> labels);

/// Fraction of rows with margin > sqrt(2) * epsilon (strict).
double cra(const Matrix& scores, std::span<const int> labels, double epsilon);

struct Evaluation {
  double accuracy = 0.0;
  double cra = 0.0;
};

/// Scores `data` in chunks and reports accuracy and CRA at `epsilon`.
Evaluation evaluate(const InferenceModel& model, const LabeledDataset& data, double epsilon,
                    Eigen::Index chunk = 1024);

/// Smallest margin seen over `tries` points on the L2 sphere of radius
/// epsilon around x (uniform directions) plus the point reached by stepping
/// epsilon against the margin gradient.
double random_ball_attack(const InferenceModel& model, std::span<const double> x, int label,
                          double epsilon, int tries, RandomSource& rng);

}  // namespace lipbench::lipnet
