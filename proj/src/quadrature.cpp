#include "ndfem/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace ndfem {

namespace {

// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration on P_m.
void gauss_legendre(int m, std::vector<double>& x, std::vector<double>& w) {
  x.assign(m, 0.0);
  w.assign(m, 0.0);
  for (int i = 0; i < m; ++i) {
    double t = std::cos(M_PI * (i + 0.75) / (m + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= m; ++k) {
        const double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = m * (t * p1 - p0) / (t * t - 1.0);
      const double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-16) break;
    }
    x[i] = t;
    w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
  }
}

}  // namespace

SegmentQuadrature segment_quadrature(int degree) {
  if (degree < 0) throw std::invalid_argument("segment_quadrature: negative degree");
  const int m = (degree + 2) / 2;  // 2m-1 >= degree
  std::vector<double> x, w;
  gauss_legendre(m, x, w);
  SegmentQuadrature q;
  q.degree = degree;
  q.points.resize(m);
  q.weights.resize(m);
  for (int i = 0; i < m; ++i) {
    q.points[i] = 0.5 * (x[i] + 1.0);
    q.weights[i] = 0.5 * w[i];
  }
  return q;
}

TriangleQuadrature triangle_quadrature(int degree) {
  if (degree < 0) throw std::invalid_argument("triangle_quadrature: negative degree");
  // Collapsed map (u,v) -> (u, v(1-u)) has Jacobian (1-u), which raises the
  // u-degree of a total-degree-`degree` polynomial by one.
  const int mu = (degree + 3) / 2;  // 2m-1 >= degree+1
  const int mv = (degree + 2) / 2;  // 2m-1 >= degree
  std::vector<double> xu, wu, xv, wv;
  gauss_legendre(mu, xu, wu);
  gauss_legendre(mv, xv, wv);
  TriangleQuadrature q;
  q.degree = degree;
  q.points.reserve(mu * mv);
  q.weights.reserve(mu * mv);
  for (int i = 0; i < mu; ++i) {
    const double u = 0.5 * (xu[i] + 1.0);
    const double cu = 0.5 * wu[i];
    for (int j = 0; j < mv; ++j) {
      const double v = 0.5 * (xv[j] + 1.0);
      const double cv = 0.5 * wv[j];
      q.points.emplace_back(u, v * (1.0 - u));
      q.weights.push_back(cu * cv * (1.0 - u));
    }
  }
  return q;
}

}  // namespace ndfem
