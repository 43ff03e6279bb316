#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "baroid/pca.hpp"
#include "baroid/rng.hpp"

#include <Eigen/Dense>

#include <filesystem>

using namespace baroid;

namespace {

Mat random_matrix(Index n, Index d, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Mat m(n, d);
  for (Index j = 0; j < d; ++j) {
    for (Index i = 0; i < n; ++i) m(i, j) = rng.normal();
  }
  return m;
}

// matrix with prescribed singular values, built from random orthogonal factors
Mat matrix_with_spectrum(Index n, Index d, const Vec& spectrum, std::uint64_t seed) {
  const Mat u = detail::thin_q(random_matrix(n, spectrum.size(), seed));
  const Mat v = detail::thin_q(random_matrix(d, spectrum.size(), seed + 1));
  return u * spectrum.asDiagonal() * v.transpose();
}

}  // namespace

TEST_CASE("exact recovery of low-rank data") {
  // rows lie in a 3-dimensional affine subspace
  SplitMix64 rng(5);
  const Index n = 40, d = 30;
  Mat basis = random_matrix(3, d, 123);
  Vec offset = random_matrix(1, d, 321).row(0);
  Mat x(n, d);
  for (Index i = 0; i < n; ++i) {
    Vec coeff(3);
    for (int j = 0; j < 3; ++j) coeff[j] = rng.uniform(-2, 2);
    x.row(i) = (basis.transpose() * coeff + offset).transpose();
  }

  const PcaModel model = fit_pca(x, 3);
  for (Index i = 0; i < n; ++i) {
    const Vec series = x.row(i).transpose();
    const Vec recon = pca_inverse_transform(model, pca_transform(model, series));
    CHECK((series - recon).norm() < 1e-10 * series.norm());
  }
}

TEST_CASE("component orthonormality") {
  const Mat x = random_matrix(60, 45, 9);
  const PcaModel model = fit_pca(x, 10);
  const Mat gram = model.components * model.components.transpose();
  CHECK((gram - Mat::Identity(10, 10)).cwiseAbs().maxCoeff() < 1e-10);
  // singular values sorted, non-negative
  for (Index i = 0; i + 1 < model.singular_values.size(); ++i) {
    CHECK(model.singular_values[i] >= model.singular_values[i + 1]);
  }
  CHECK(model.singular_values.minCoeff() >= 0.0);
}

TEST_CASE("transform basics") {
  const Mat x = random_matrix(50, 40, 17);
  const PcaModel model = fit_pca(x, 8);

  SUBCASE("the mean maps to zero coefficients") {
    CHECK(pca_transform(model, model.mean).norm() < 1e-10);
  }

  SUBCASE("mean plus a component maps to a unit coefficient") {
    const Vec series = model.mean + model.components.row(0).transpose();
    const Vec coeffs = pca_transform(model, series);
    CHECK(coeffs[0] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(coeffs.tail(coeffs.size() - 1).norm() < 1e-10);
  }

  SUBCASE("zero coefficients reconstruct the mean") {
    const Vec recon = pca_inverse_transform(model, Vec::Zero(8));
    CHECK((recon - model.mean).norm() == 0.0);
  }

  SUBCASE("round trip is idempotent on the projected subspace") {
    SplitMix64 rng(3);
    for (int rep = 0; rep < 10; ++rep) {
      Vec series(40);
      for (Index i = 0; i < 40; ++i) series[i] = rng.uniform(-5, 5);
      const Vec once = pca_transform(model, series);
      const Vec twice = pca_transform(model, pca_inverse_transform(model, once));
      CHECK((once - twice).cwiseAbs().maxCoeff() < 1e-10);
    }
  }

  SUBCASE("dimension mismatches are rejected") {
    CHECK_THROWS_AS(pca_transform(model, Vec::Zero(39)), DimensionMismatch);
    CHECK_THROWS_AS(pca_inverse_transform(model, Vec::Zero(9)), DimensionMismatch);
  }
}

TEST_CASE("projection never increases the distance to the mean") {
  const Mat x = random_matrix(80, 50, 31);
  const PcaModel model = fit_pca(x, 12);
  SplitMix64 rng(13);
  for (int rep = 0; rep < 30; ++rep) {
    Vec series(50);
    for (Index i = 0; i < 50; ++i) series[i] = rng.uniform(-10, 10);
    const Vec recon = pca_inverse_transform(model, pca_transform(model, series));
    CHECK((series - recon).norm() <= (series - model.mean).norm() + 1e-12);
  }
}

TEST_CASE("randomized singular values match a dense SVD oracle") {
  SUBCASE("sketch covering the full space is exact to roundoff") {
    // k + oversampling >= min(n, d): the range finder spans everything
    const Mat x = random_matrix(80, 60, 41);
    const Mat centered = x.rowwise() - x.colwise().mean();
    Eigen::JacobiSVD<Mat> dense(centered, Eigen::ComputeThinV);

    const PcaModel model = fit_pca(x, 50);  // 50 + 10 >= 60
    for (Index i = 0; i < 50; ++i) {
      CHECK(model.singular_values[i] ==
            doctest::Approx(dense.singularValues()[i]).epsilon(1e-10));
    }
  }

  SUBCASE("fast-decaying spectrum with power iterations") {
    Vec spectrum(20);
    for (Index i = 0; i < 20; ++i) spectrum[i] = std::pow(10.0, -static_cast<Scalar>(i) / 4.0);
    const Mat x = matrix_with_spectrum(100, 70, spectrum, 55);
    Eigen::JacobiSVD<Mat> dense(x, Eigen::ComputeThinV);

    PcaOptions opts;
    opts.centered = false;  // compare against the raw spectrum
    opts.power_iters = 2;
    const PcaModel model = fit_pca(x, 10, opts);
    for (Index i = 0; i < 10; ++i) {
      CHECK(std::abs(model.singular_values[i] - dense.singularValues()[i]) <
            1e-6 * dense.singularValues()[0]);
    }
  }
}

TEST_CASE("uncentered variant projects with raw inner products") {
  const Mat x = random_matrix(30, 25, 71);
  PcaOptions opts;
  opts.centered = false;
  const PcaModel model = fit_pca(x, 5, opts);
  CHECK(model.mean.norm() == 0.0);

  SplitMix64 rng(8);
  Vec series(25);
  for (Index i = 0; i < 25; ++i) series[i] = rng.uniform(-1, 1);
  const Vec coeffs = pca_transform(model, series);
  for (Index j = 0; j < 5; ++j) {
    CHECK(coeffs[j] == doctest::Approx(model.components.row(j).dot(series)).epsilon(1e-12));
  }
}

TEST_CASE("rank deficiency is flagged, not fatal") {
  // exactly rank 2, ask for 5 components
  Mat x = random_matrix(30, 2, 91) * random_matrix(2, 20, 92);
  PcaOptions opts;
  opts.centered = false;
  const PcaModel model = fit_pca(x, 5, opts);
  CHECK(model.rank_deficient);
}

TEST_CASE("invalid ranks are rejected") {
  const Mat x = random_matrix(10, 8, 101);
  CHECK_THROWS_AS(fit_pca(x, 0), InvalidParams);
  CHECK_THROWS_AS(fit_pca(x, 9), DimensionMismatch);
}

TEST_CASE("pca model serialization round trip") {
  const Mat x = random_matrix(40, 32, 111);
  const PcaModel model = fit_pca(x, 6);

  const auto dir = std::filesystem::temp_directory_path() / "baroid_pca_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "model.pca").string();
  save_pca(model, path);
  const PcaModel r = load_pca(path);

  CHECK(r.mean == model.mean);
  CHECK(r.components == model.components);
  CHECK(r.singular_values == model.singular_values);
  CHECK(r.centered == model.centered);
  std::filesystem::remove_all(dir);
}

TEST_CASE("fit is deterministic for a fixed seed") {
  const Mat x = random_matrix(50, 40, 121);
  const PcaModel a = fit_pca(x, 7);
  const PcaModel b = fit_pca(x, 7);
  CHECK(a.components == b.components);
  CHECK(a.singular_values == b.singular_values);
}
