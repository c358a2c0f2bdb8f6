#pragma once

#include <Eigen/Dense>
#include <vector>

namespace ndfem {

/// Quadrature on the reference triangle {(0,0),(1,0),(0,1)}.
/// Built from a collapsed tensor-product Gauss rule, so all weights are
/// positive and polynomials of total degree <= `degree` integrate exactly.
struct TriangleQuadrature {
  int degree = 0;
  std::vector<Eigen::Vector2d> points;  // reference coordinates
  std::vector<double> weights;          // sum to 1/2

  int size() const { return static_cast<int>(points.size()); }
};

/// Gauss-Legendre rule on [0,1], exact for 1D polynomials of
/// degree <= `degree`. Weights sum to 1.
struct SegmentQuadrature {
  int degree = 0;
  std::vector<double> points;
  std::vector<double> weights;

  int size() const { return static_cast<int>(points.size()); }
};

TriangleQuadrature triangle_quadrature(int degree);
SegmentQuadrature segment_quadrature(int degree);

}  // namespace ndfem
