#include "ndfem/basis.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace ndfem {

LagrangeBasis::LagrangeBasis(int degree) : degree_(degree) {
  if (degree < 1 || degree > 8)
    throw std::invalid_argument("LagrangeBasis: degree must be in [1,8]");
  const int r = degree;

  int interior_count = 0;
  for (int j = 0; j <= r; ++j) {
    for (int i = 0; i + j <= r; ++i) {
      nodes_.emplace_back(double(i) / r, double(j) / r);
      NodeKey key{};
      if (i == 0 && j == 0) key = {0, 0, 0};
      else if (i == r && j == 0) key = {0, 1, 0};
      else if (i == 0 && j == r) key = {0, 2, 0};
      else if (j == 0) key = {1, 0, i};          // edge v0 -> v1, parameter i/r
      else if (i + j == r) key = {1, 1, j};      // edge v1 -> v2, parameter j/r
      else if (i == 0) key = {1, 2, r - j};      // edge v2 -> v0, parameter (r-j)/r
      else key = {2, 0, interior_count++};
      keys_.push_back(key);
    }
  }

  for (int d = 0; d <= r; ++d)
    for (int a = d; a >= 0; --a) mono_.push_back({a, d - a});

  const int n = size();
  Eigen::MatrixXd V(n, n);
  for (int p = 0; p < n; ++p)
    for (int k = 0; k < n; ++k)
      V(p, k) = std::pow(nodes_[p].x(), mono_[k][0]) * std::pow(nodes_[p].y(), mono_[k][1]);
  coeff_ = V.fullPivLu().solve(Eigen::MatrixXd::Identity(n, n));
}

namespace {
inline double ipow(double x, int e) {
  double out = 1.0;
  for (int i = 0; i < e; ++i) out *= x;
  return out;
}
}  // namespace

Eigen::VectorXd LagrangeBasis::values(const Eigen::Vector2d& p) const {
  const int n = size();
  Eigen::VectorXd m(n);
  for (int k = 0; k < n; ++k) m(k) = ipow(p.x(), mono_[k][0]) * ipow(p.y(), mono_[k][1]);
  return coeff_.transpose() * m;
}

Eigen::MatrixXd LagrangeBasis::gradients(const Eigen::Vector2d& p) const {
  const int n = size();
  Eigen::MatrixXd dm(n, 2);
  for (int k = 0; k < n; ++k) {
    const int a = mono_[k][0], b = mono_[k][1];
    dm(k, 0) = a == 0 ? 0.0 : a * ipow(p.x(), a - 1) * ipow(p.y(), b);
    dm(k, 1) = b == 0 ? 0.0 : b * ipow(p.x(), a) * ipow(p.y(), b - 1);
  }
  return coeff_.transpose() * dm;
}

Eigen::MatrixXd LagrangeBasis::hessians(const Eigen::Vector2d& p) const {
  const int n = size();
  Eigen::MatrixXd d2(n, 3);
  for (int k = 0; k < n; ++k) {
    const int a = mono_[k][0], b = mono_[k][1];
    d2(k, 0) = a < 2 ? 0.0 : a * (a - 1) * ipow(p.x(), a - 2) * ipow(p.y(), b);
    d2(k, 1) = (a < 1 || b < 1) ? 0.0 : a * b * ipow(p.x(), a - 1) * ipow(p.y(), b - 1);
    d2(k, 2) = b < 2 ? 0.0 : b * (b - 1) * ipow(p.x(), a) * ipow(p.y(), b - 2);
  }
  return coeff_.transpose() * d2;
}

}  // namespace ndfem
