#include "lipbench/pca/pca.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "lipbench/errors.hpp"
#include "lipbench/numerics/linalg.hpp"

namespace lipbench::pca {
namespace {

int parse_int(std::string_view s, std::string_view whole) {
  int value = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (s.empty() || ec != std::errc() || ptr != end) {
    throw ConfigError("bad component range '" + std::string(whole) + "'");
  }
  return value;
}

void check_range(const IndexSet& set, int dim) {
  for (int i : set) {
    if (i < 1 || i > dim) {
      throw DomainError("component " + std::to_string(i) + " outside [1, " + std::to_string(dim) + "]");
    }
  }
}

}  // namespace

IndexSet normalize(IndexSet set) {
  std::sort(set.begin(), set.end());
  set.erase(std::unique(set.begin(), set.end()), set.end());
  return set;
}

IndexSet full_set(int dim) {
  IndexSet set(static_cast<std::size_t>(std::max(dim, 0)));
  for (int i = 0; i < dim; ++i) set[static_cast<std::size_t>(i)] = i + 1;
  return set;
}

IndexSet parse_index_set(std::string_view text, int dim) {
  std::string compact;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) compact.push_back(c);
  }
  if (compact == "all") return full_set(dim);
  IndexSet set;
  std::string_view rest = compact;
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string_view part = rest.substr(0, comma);
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    const auto dash = part.find('-');
    const int lo = parse_int(part.substr(0, dash), text);
    const int hi = dash == std::string_view::npos ? lo : parse_int(part.substr(dash + 1), text);
    if (hi < lo) throw ConfigError("descending component range '" + std::string(part) + "'");
    if (lo < 1 || hi > dim) {
      throw DomainError("component range '" + std::string(part) + "' outside [1, " +
                        std::to_string(dim) + "]");
    }
    for (int i = lo; i <= hi; ++i) set.push_back(i);
  }
  return normalize(std::move(set));
}

std::string format_index_set(const IndexSet& set) {
  std::string out;
  for (std::size_t i = 0; i < set.size();) {
    std::size_t j = i;
    while (j + 1 < set.size() && set[j + 1] == set[j] + 1) ++j;
    if (!out.empty()) out += ',';
    out += std::to_string(set[i]);
    if (j > i) out += '-' + std::to_string(set[j]);
    i = j + 1;
  }
  return out;
}

PcaModel fit_pca(const Matrix& x) {
  if (x.rows() < 2) throw ShapeError("fit_pca: need at least 2 rows");
  if (x.cols() > kMaxDimension) {
    throw ShapeError("fit_pca: dimension " + std::to_string(x.cols()) + " exceeds " +
                     std::to_string(kMaxDimension));
  }
  if (!x.allFinite()) throw DomainError("fit_pca: non-finite input");
  PcaModel model;
  model.mean = x.colwise().mean().transpose();
  Matrix centered = x.rowwise() - model.mean.transpose();
  Matrix cov = Matrix::Zero(x.cols(), x.cols());
  cov.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose(),
                                                 1.0 / static_cast<double>(x.rows() - 1));
  cov.triangularView<Eigen::StrictlyUpper>() = cov.transpose();

  SymmetricEigen eig = sym_eig(cov);
  model.eigenvalues = eig.eigenvalues.cwiseMax(0.0);
  model.components = std::move(eig.eigenvectors);
  for (Eigen::Index j = 0; j < model.components.cols(); ++j) {
    Eigen::Index arg = 0;
    model.components.col(j).cwiseAbs().maxCoeff(&arg);
    if (model.components(arg, j) < 0.0) model.components.col(j) *= -1.0;
  }
  return model;
}

double variance_fraction(const PcaModel& model, const IndexSet& set) {
  check_range(set, model.dim());
  const double total = model.eigenvalues.sum();
  if (set.empty() || total <= 0.0) return 0.0;
  double part = 0.0;
  for (int i : normalize(set)) part += model.eigenvalues[i - 1];
  return part / total;
}

namespace {

Matrix selected_components(const PcaModel& model, const IndexSet& set) {
  check_range(set, model.dim());
  const IndexSet unique = normalize(set);
  Matrix basis(model.dim(), static_cast<Eigen::Index>(unique.size()));
  for (std::size_t k = 0; k < unique.size(); ++k) {
    basis.col(static_cast<Eigen::Index>(k)) = model.components.col(unique[k] - 1);
  }
  return basis;
}

}  // namespace

Matrix projector(const PcaModel& model, const IndexSet& set) {
  const Matrix basis = selected_components(model, set);
  return basis * basis.transpose();
}

Matrix project_reconstruct(const PcaModel& model, const Matrix& x, const IndexSet& set) {
  if (x.cols() != model.dim()) throw ShapeError("project_reconstruct: width mismatch");
  const Matrix basis = selected_components(model, set);
  const Matrix centered = x.rowwise() - model.mean.transpose();
  Matrix coords = centered * basis;
  Matrix out = coords * basis.transpose();
  out.rowwise() += model.mean.transpose();
  return out;
}

std::vector<ProjectedPair> build_pca_datasets(const PcaModel& model, const LabeledDataset& train,
                                              const LabeledDataset& test,
                                              std::span<const IndexSet> sets) {
  if (train.dim() != model.dim() || test.dim() != model.dim()) {
    throw ShapeError("build_pca_datasets: width mismatch");
  }
  std::vector<ProjectedPair> out;
  for (const IndexSet& raw : sets) {
    const IndexSet set = normalize(raw);
    out.push_back(ProjectedPair{
        set, variance_fraction(model, set),
        LabeledDataset(project_reconstruct(model, train.features(), set), train.labels(),
                       train.shape(), train.class_count()),
        LabeledDataset(project_reconstruct(model, test.features(), set), test.labels(),
                       test.shape(), test.class_count())});
  }
  return out;
}

std::vector<ProjectedPair> build_pca_datasets(const LabeledDataset& train,
                                              const LabeledDataset& test,
                                              std::span<const IndexSet> sets) {
  return build_pca_datasets(fit_pca(train.features()), train, test, sets);
}

}  // namespace lipbench::pca
