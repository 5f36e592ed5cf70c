#pragma once

#include "bsem/core/layout.hpp"
#include "bsem/core/types.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

namespace bsem::testing {

/// Central finite-difference gradient.
inline Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double h = 1e-5) {
  Vector g(x.size());
  Vector xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double orig = xp[i];
    xp[i] = orig + h;
    const double fp = f(xp);
    xp[i] = orig - h;
    const double fm = f(xp);
    xp[i] = orig;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// Central finite-difference Jacobian of a vector map.
inline Matrix fd_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& x, double h = 1e-6) {
  const Vector f0 = f(x);
  Matrix J(f0.size(), x.size());
  Vector xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double orig = xp[i];
    xp[i] = orig + h;
    const Vector fp = f(xp);
    xp[i] = orig - h;
    const Vector fm = f(xp);
    xp[i] = orig;
    J.col(i) = (fp - fm) / (2.0 * h);
  }
  return J;
}

/// max_i |a_i - b_i| / max(1, max_i |b_i|)
inline double scaled_error(const Vector& a, const Vector& b) {
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

inline Vector random_vector(std::size_t n, std::mt19937_64& rng, double sd = 0.5) {
  std::normal_distribution<double> nd(0.0, sd);
  Vector v(static_cast<Eigen::Index>(n));
  for (auto& e : v) e = nd(rng);
  return v;
}

/// Random dataset matching the item kinds of a spec.
inline Dataset random_dataset(const std::vector<ItemSpec>& items, std::size_t n, std::mt19937_64& rng) {
  Dataset d;
  d.items = items;
  d.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(items.size()));
  std::normal_distribution<double> nd(0.0, 1.0);
  for (std::size_t j = 0; j < items.size(); ++j) {
    const int m = items[j].category_count();
    std::uniform_int_distribution<int> cat(0, std::max(0, m - 1));
    for (std::size_t i = 0; i < n; ++i) {
      d.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          items[j].kind == ItemKind::continuous ? nd(rng) : static_cast<double>(cat(rng));
    }
  }
  // Give continuous columns some shared structure so S is well conditioned
  // and the data are not exactly independent.
  if (!items.empty() && items[0].kind == ItemKind::continuous) {
    for (std::size_t i = 0; i < n; ++i) {
      const double f = nd(rng);
      d.values.row(static_cast<Eigen::Index>(i)).array() += 0.7 * f;
    }
  }
  return d;
}

}  // namespace bsem::testing
