#pragma once

#include "baroid/io.hpp"
#include "baroid/rng.hpp"
#include "baroid/types.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <string>

namespace baroid {

struct PcaOptions {
  Index oversampling = 10;
  Index power_iters = 2;
  std::uint64_t seed = 0;
  /// When false the basis is fitted to the raw (uncentered) rows and the
  /// stored mean is zero, so transform reduces to plain inner products.
  bool centered = true;
};

/// Principal-component reduction of length-d series onto k coefficients.
struct PcaModel {
  Vec mean;              // length d
  Mat components;        // k x d, orthonormal rows
  Vec singular_values;   // length k, non-increasing
  bool centered = true;
  bool rank_deficient = false;  // trailing singular value is numerically zero

  Index d() const { return mean.size(); }
  Index k() const { return components.rows(); }
};

namespace detail {

inline Mat thin_q(const Mat& y) {
  Eigen::HouseholderQR<Mat> qr(y);
  return qr.householderQ() * Mat::Identity(y.rows(), std::min(y.rows(), y.cols()));
}

}  // namespace detail

/// Fits a rank-k basis with the randomized range-finder scheme of
/// Halko/Martinsson/Tropp (arXiv:0909.4061): sketch Y = A Omega, orthonormalize,
/// optionally power-iterate, then SVD the projected matrix.
inline PcaModel fit_pca(const Mat& series_matrix, Index k, const PcaOptions& opts = {}) {
  const Index n = series_matrix.rows();
  const Index d = series_matrix.cols();
  if (k < 1) throw InvalidParams("pca rank must be >= 1");
  if (k > std::min(n, d)) {
    throw DimensionMismatch("pca rank " + std::to_string(k) + " exceeds min(n,d) = " +
                            std::to_string(std::min(n, d)));
  }

  PcaModel model;
  model.centered = opts.centered;
  model.mean = opts.centered ? Vec(series_matrix.colwise().mean()) : Vec(Vec::Zero(d));

  const Mat a = series_matrix.rowwise() - model.mean.transpose();

  const Index sketch = std::min(k + opts.oversampling, std::min(n, d));
  SplitMix64 rng(derive_stream(opts.seed, 0x70636173ull));  // 'pcas'
  Mat omega(d, sketch);
  for (Index j = 0; j < sketch; ++j) {
    for (Index i = 0; i < d; ++i) omega(i, j) = rng.normal();
  }

  Mat q = detail::thin_q(a * omega);
  for (Index it = 0; it < opts.power_iters; ++it) {
    q = detail::thin_q(a.transpose() * q);
    q = detail::thin_q(a * q);
  }

  const Mat b = q.transpose() * a;  // sketch x d
  Eigen::JacobiSVD<Mat> svd(b, Eigen::ComputeThinV);
  model.components = svd.matrixV().leftCols(k).transpose();
  model.singular_values = svd.singularValues().head(k);
  model.rank_deficient =
      model.singular_values[0] > 0.0 &&
      model.singular_values[k - 1] / model.singular_values[0] < 1e-14;
  return model;
}

/// Coefficients of a series in the fitted basis.
inline Vec pca_transform(const PcaModel& model, const Vec& series) {
  if (series.size() != model.d()) {
    throw DimensionMismatch("series length " + std::to_string(series.size()) +
                            " does not match pca dimension " + std::to_string(model.d()));
  }
  return model.components * (series - model.mean);
}

/// Reconstruction mean + sum_k coeff_k a_k.
inline Vec pca_inverse_transform(const PcaModel& model, const Vec& coeffs) {
  if (coeffs.size() != model.k()) {
    throw DimensionMismatch("coefficient length " + std::to_string(coeffs.size()) +
                            " does not match pca rank " + std::to_string(model.k()));
  }
  return model.mean + model.components.transpose() * coeffs;
}

/// Batched transform: rows of `series_rows` are series, rows of the result
/// are coefficient vectors.
inline Mat pca_transform_rows(const PcaModel& model, const Mat& series_rows) {
  if (series_rows.cols() != model.d()) {
    throw DimensionMismatch("series length " + std::to_string(series_rows.cols()) +
                            " does not match pca dimension " + std::to_string(model.d()));
  }
  return (series_rows.rowwise() - model.mean.transpose()) * model.components.transpose();
}

namespace detail {

inline void pca_to_container(const PcaModel& model, Container& c, const std::string& prefix) {
  c.set_int(prefix + "d", model.d());
  c.set_int(prefix + "k", model.k());
  c.set_int(prefix + "centered", model.centered ? 1 : 0);
  c.set_int(prefix + "rank_deficient", model.rank_deficient ? 1 : 0);
  c.append(model.mean);
  c.append(model.singular_values);
  c.append_row_major(model.components);
}

inline PcaModel pca_from_container(const Container& c, const std::string& prefix,
                                   std::size_t& offset, const std::string& path) {
  PcaModel model;
  const Index d = c.get_int(prefix + "d");
  const Index k = c.get_int(prefix + "k");
  if (d < 1 || k < 1 || k > d) throw FormatError(path + ": invalid pca dimensions");
  model.centered = c.get_int(prefix + "centered") != 0;
  model.rank_deficient = c.get_int(prefix + "rank_deficient") != 0;

  const std::vector<Scalar>& data = c.payload();
  const std::size_t need = static_cast<std::size_t>(d + k + k * d);
  if (offset + need > data.size()) {
    throw FormatError(path + ": pca payload truncated at offset " + std::to_string(offset));
  }
  model.mean = Eigen::Map<const Vec>(data.data() + offset, d);
  offset += static_cast<std::size_t>(d);
  model.singular_values = Eigen::Map<const Vec>(data.data() + offset, k);
  offset += static_cast<std::size_t>(k);
  model.components = Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic,
                                                    Eigen::RowMajor>>(data.data() + offset, k, d);
  offset += static_cast<std::size_t>(k * d);
  return model;
}

}  // namespace detail

inline void save_pca(const PcaModel& model, const std::string& path) {
  Container c;
  c.set("kind", "pca");
  c.set_int("version", 1);
  detail::pca_to_container(model, c, "pca_");
  c.write(path);
}

inline PcaModel load_pca(const std::string& path) {
  const Container c = Container::read(path);
  if (c.get("kind") != "pca") {
    throw FormatError(path + ": kind is '" + c.get("kind") + "', expected 'pca'");
  }
  std::size_t offset = 0;
  PcaModel model = detail::pca_from_container(c, "pca_", offset, path);
  c.expect_payload(offset, path);
  return model;
}

}  // namespace baroid
