#include "bsem/core/transforms.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <random>

namespace bsem {
namespace {

using testing::fd_gradient;
using testing::fd_jacobian;

Vector as_vec(std::span<const double> s) {
  return Eigen::Map<const Vector>(s.data(), static_cast<Eigen::Index>(s.size()));
}

// Strictly-lower entries of L L', row-wise.
Vector lower_offdiag(const Matrix& L) {
  const Matrix R = L * L.transpose();
  std::vector<double> v;
  for (Eigen::Index i = 1; i < R.rows(); ++i)
    for (Eigen::Index j = 0; j < i; ++j) v.push_back(R(i, j));
  return as_vec(v);
}

Vector lower_tri(const Matrix& L) {
  const Matrix R = L * L.transpose();
  std::vector<double> v;
  for (Eigen::Index i = 0; i < R.rows(); ++i)
    for (Eigen::Index j = 0; j <= i; ++j) v.push_back(R(i, j));
  return as_vec(v);
}

double fd_log_det(const std::function<Vector(const Vector&)>& f, const Vector& x) {
  const Matrix J = fd_jacobian(f, x, 1e-6);
  return std::log(std::abs(J.determinant()));
}

TEST(Transforms, UnitVarianceMapsToZero) {
  EXPECT_EQ(transform::positive_inverse(1.0), 0.0);
  EXPECT_EQ(transform::positive(0.0), 1.0);
  EXPECT_EQ(transform::positive_log_jac(0.0), 0.0);
}

TEST(Transforms, ZeroCorrelationMapsToZero) {
  Matrix I = Matrix::Identity(2, 2);
  double x = 1.0;
  transform::corr_inverse(I, std::span<double>(&x, 1));
  EXPECT_EQ(x, 0.0);
  const double x0 = 0.0;
  const auto f = transform::corr_cholesky(std::span<const double>(&x0, 1), 2);
  EXPECT_EQ((f.L * f.L.transpose())(1, 0), 0.0);
  // d rho / dx = 1 - tanh^2(0) = 1, so the log-Jacobian vanishes.
  EXPECT_NEAR(f.log_jac, 0.0, 1e-15);
  const double fd = fd_log_det(
      [](const Vector& v) {
        return lower_offdiag(transform::corr_cholesky(std::span<const double>(v.data(), 1), 2).L);
      },
      Vector::Zero(1));
  EXPECT_NEAR(fd, f.log_jac, 1e-6);
}

TEST(Transforms, CorrelationLogJacobianMatchesFiniteDifferences) {
  std::mt19937_64 rng(11);
  for (std::size_t k : {2u, 3u}) {
    const std::size_t d = transform::corr_dim(k);
    for (int rep = 0; rep < 50; ++rep) {
      const Vector x = testing::random_vector(d, rng, 0.8);
      const auto f = transform::corr_cholesky(std::span<const double>(x.data(), d), k);
      const double fd = fd_log_det(
          [k, d](const Vector& v) {
            return lower_offdiag(transform::corr_cholesky(std::span<const double>(v.data(), d), k).L);
          },
          x);
      EXPECT_NEAR(f.log_jac, fd, 1e-6) << "k=" << k;
      const Matrix R = f.L * f.L.transpose();
      for (Eigen::Index i = 0; i < R.rows(); ++i) EXPECT_NEAR(R(i, i), 1.0, 1e-14);
    }
  }
}

TEST(Transforms, SpdLogJacobianMatchesFiniteDifferences) {
  std::mt19937_64 rng(12);
  for (std::size_t k : {1u, 2u, 3u}) {
    const std::size_t d = transform::spd_dim(k);
    for (int rep = 0; rep < 50; ++rep) {
      const Vector x = testing::random_vector(d, rng, 0.6);
      const auto f = transform::spd_cholesky(std::span<const double>(x.data(), d), k);
      const double fd = fd_log_det(
          [k, d](const Vector& v) {
            return lower_tri(transform::spd_cholesky(std::span<const double>(v.data(), d), k).L);
          },
          x);
      EXPECT_NEAR(f.log_jac, fd, 1e-6) << "k=" << k;
    }
  }
}

TEST(Transforms, OrderedAndBoundedLogJacobians) {
  std::mt19937_64 rng(13);
  for (std::size_t d : {1u, 3u, 6u}) {
    const Vector x = testing::random_vector(d, rng, 0.7);
    const auto fd = fd_log_det(
        [d](const Vector& v) { return transform::ordered(std::span<const double>(v.data(), d)); }, x);
    EXPECT_NEAR(transform::ordered_log_jac(std::span<const double>(x.data(), d)), fd, 1e-6);
    const Vector v = transform::ordered(std::span<const double>(x.data(), d));
    for (Eigen::Index s = 1; s < v.size(); ++s) EXPECT_GT(v[s], v[s - 1]);
    Vector back(x.size());
    transform::ordered_inverse(v, std::span<double>(back.data(), d));
    EXPECT_LE((back - x).cwiseAbs().maxCoeff(), 1e-12);
  }
  for (double xv : {-3.0, -0.2, 0.0, 1.5}) {
    const double h = 1e-6;
    const double fd = (transform::bounded(xv + h, 10.0) - transform::bounded(xv - h, 10.0)) / (2 * h);
    EXPECT_NEAR(transform::bounded_log_jac(xv, 10.0), std::log(fd), 1e-6);
    EXPECT_NEAR(transform::bounded_inverse(transform::bounded(xv, 10.0), 10.0), xv, 1e-12);
  }
}

// Backprop check: for f(x) = <W, L(x)> + log_jac(x), compare with FD.
TEST(Transforms, CorrelationBackpropagation) {
  std::mt19937_64 rng(14);
  for (std::size_t k : {2u, 3u, 4u}) {
    const std::size_t d = transform::corr_dim(k);
    for (int rep = 0; rep < 20; ++rep) {
      const Vector x = testing::random_vector(d, rng, 0.8);
      Matrix W = Matrix::Random(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
      W = W.triangularView<Eigen::Lower>();
      auto f = [&](const Vector& v) {
        auto c = transform::corr_cholesky(std::span<const double>(v.data(), d), k);
        return (W.array() * c.L.array()).sum() + c.log_jac;
      };
      const auto c = transform::corr_cholesky(std::span<const double>(x.data(), d), k);
      Vector g = Vector::Zero(static_cast<Eigen::Index>(d));
      transform::corr_cholesky_backprop(std::span<const double>(x.data(), d), c.L, W, std::span<double>(g.data(), d));
      transform::corr_log_jac_grad(std::span<const double>(x.data(), d), k, std::span<double>(g.data(), d));
      EXPECT_LE(testing::scaled_error(g, fd_gradient(f, x)), 1e-7) << "k=" << k;
    }
  }
}

TEST(Transforms, SpdBackpropagation) {
  std::mt19937_64 rng(15);
  for (std::size_t k : {1u, 2u, 4u}) {
    const std::size_t d = transform::spd_dim(k);
    const Vector x = testing::random_vector(d, rng, 0.5);
    Matrix G = Matrix::Random(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    G = 0.5 * (G + G.transpose()).eval();
    auto f = [&](const Vector& v) {
      auto c = transform::spd_cholesky(std::span<const double>(v.data(), d), k);
      return (G.array() * (c.L * c.L.transpose()).array()).sum() + c.log_jac;
    };
    const auto c = transform::spd_cholesky(std::span<const double>(x.data(), d), k);
    Vector g = Vector::Zero(static_cast<Eigen::Index>(d));
    transform::spd_cholesky_backprop(c.L, transform::product_grad_to_factor(G, c.L), std::span<double>(g.data(), d));
    EXPECT_LE(testing::scaled_error(g, fd_gradient(f, x)), 1e-7) << "k=" << k;
  }
}

TEST(Transforms, RejectsNonPositiveDefiniteInputs) {
  Matrix bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;
  std::vector<double> x(3);
  EXPECT_THROW(transform::spd_inverse(bad, x), InputError);
  EXPECT_THROW(transform::corr_inverse(bad, std::span<double>(x.data(), 1)), InputError);
  Vector unordered(2);
  unordered << 1.0, 0.5;
  EXPECT_THROW(transform::ordered_inverse(unordered, std::span<double>(x.data(), 2)), InputError);
}

}  // namespace
}  // namespace bsem
