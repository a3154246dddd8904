#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lipbench/datasets/dataset.hpp"
#include "lipbench/numerics/matrix.hpp"

namespace lipbench::pca {

/// Sorted, duplicate-free component numbers, 1-based (component 1 has the
/// largest eigenvalue).
using IndexSet = std::vector<int>;

inline constexpr Eigen::Index kMaxDimension = 4096;

/// Parses "1-16,513-3072", "7", or "all". Whitespace is ignored, an empty
/// string is the empty set. Throws DomainError for indices outside [1, dim].
IndexSet parse_index_set(std::string_view text, int dim);
std::string format_index_set(const IndexSet& set);
IndexSet normalize(IndexSet set);
IndexSet full_set(int dim);

struct PcaModel {
  Vector mean;
  Matrix components;  // d x d, column i is component i+1
  Vector eigenvalues;  // descending, >= 0

  int dim() const { return static_cast<int>(mean.size()); }
};

/// Covariance (divisor n-1) eigendecomposition of the rows of x. Each
/// component's largest-magnitude entry is made positive.
PcaModel fit_pca(const Matrix& x);

/// sum of selected eigenvalues / total; 0 for the empty set or zero variance.
double variance_fraction(const PcaModel& model, const IndexSet& set);

/// d x d orthogonal projector onto the selected components.
Matrix projector(const PcaModel& model, const IndexSet& set);

/// mean + (x - mean) P for every row of x.
Matrix project_reconstruct(const PcaModel& model, const Matrix& x, const IndexSet& set);

struct ProjectedPair {
  IndexSet set;
  double variance_fraction = 0.0;
  LabeledDataset train;
  LabeledDataset test;
};

/// Fits on `train` only, then projects both sets onto every index set.
std::vector<ProjectedPair> build_pca_datasets(const LabeledDataset& train,
                                              const LabeledDataset& test,
                                              std::span<const IndexSet> sets);
std::vector<ProjectedPair> build_pca_datasets(const PcaModel& model, const LabeledDataset& train,
                                              const LabeledDataset& test,
                                              std::span<const IndexSet> sets);

}  // namespace lipbench::pca
