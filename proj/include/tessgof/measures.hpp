#ifndef TESSGOF_MEASURES_HPP
#define TESSGOF_MEASURES_HPP

// Geometric kernels on small point sets and convex polygons. Everything here
// is templated on the scalar type and works on column-major 3xN Eigen blocks.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "tessgof/errors.hpp"

namespace tessgof {

template <typename Scalar>
using Points3 = Eigen::Matrix<Scalar, 3, Eigen::Dynamic>;

template <typename Scalar>
struct Ball {
  Eigen::Matrix<Scalar, 3, 1> center = Eigen::Matrix<Scalar, 3, 1>::Zero();
  Scalar radius = Scalar(0);
};

namespace detail {

// Smallest ball having every support point on its boundary: the circumball
// inside the affine hull of the support.
template <typename Scalar>
Ball<Scalar> ball_through(const Points3<Scalar>& pts, std::span<const Eigen::Index> support) {
  using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
  Ball<Scalar> b;
  if (support.empty()) {
    b.radius = Scalar(-1);
    return b;
  }
  const Vec3 p0 = pts.col(support[0]);
  const auto k = static_cast<Eigen::Index>(support.size()) - 1;
  if (k == 0) {
    b.center = p0;
    return b;
  }
  Eigen::Matrix<Scalar, 3, Eigen::Dynamic> a(3, k);
  for (Eigen::Index j = 0; j < k; ++j) a.col(j) = pts.col(support[j + 1]) - p0;
  const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> gram = a.transpose() * a;
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> rhs = gram.diagonal() / Scalar(2);
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> lambda = gram.completeOrthogonalDecomposition().solve(rhs);
  const Vec3 offset = a * lambda;
  b.center = p0 + offset;
  b.radius = offset.norm();
  return b;
}

template <typename Scalar>
bool in_ball(const Ball<Scalar>& b, const Eigen::Matrix<Scalar, 3, 1>& p) {
  if (b.radius < Scalar(0)) return false;
  const Scalar slack = Scalar(64) * std::numeric_limits<Scalar>::epsilon() * (Scalar(1) + b.radius * b.radius);
  return (p - b.center).squaredNorm() <= b.radius * b.radius + slack;
}

template <typename Scalar>
Ball<Scalar> welzl(const Points3<Scalar>& pts, Eigen::Index count, std::vector<Eigen::Index>& support) {
  Ball<Scalar> b = ball_through<Scalar>(pts, support);
  if (support.size() == 4) return b;
  for (Eigen::Index i = 0; i < count; ++i) {
    if (in_ball(b, Eigen::Matrix<Scalar, 3, 1>(pts.col(i)))) continue;
    support.push_back(i);
    b = welzl<Scalar>(pts, i, support);
    support.pop_back();
  }
  return b;
}

}  // namespace detail

/// Minimum enclosing ball of the columns of `pts` (Welzl's recursion).
template <typename Scalar>
Ball<Scalar> min_enclosing_ball(const Points3<Scalar>& pts) {
  if (pts.cols() == 0) throw DomainError("min_enclosing_ball: empty point set");
  std::vector<Eigen::Index> support;
  support.reserve(4);
  return detail::welzl<Scalar>(pts, pts.cols(), support);
}

/// Radius of the minimum enclosing ball; the filtration value of a face.
template <typename Scalar>
Scalar circumradius(const Points3<Scalar>& pts) {
  return min_enclosing_ball(pts).radius;
}

/// Area of a planar polygon given by its vertices in cyclic order.
template <typename Scalar>
Scalar polygon_area(const Points3<Scalar>& poly) {
  Eigen::Matrix<Scalar, 3, 1> acc = Eigen::Matrix<Scalar, 3, 1>::Zero();
  const Eigen::Index k = poly.cols();
  for (Eigen::Index i = 0; i < k; ++i) {
    acc += poly.col(i).cross(poly.col((i + 1) % k));
  }
  return acc.norm() / Scalar(2);
}

/// Newell normal (unnormalized, length = twice the area) of a cyclic polygon.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> polygon_normal(const Points3<Scalar>& poly) {
  Eigen::Matrix<Scalar, 3, 1> acc = Eigen::Matrix<Scalar, 3, 1>::Zero();
  const Eigen::Index k = poly.cols();
  for (Eigen::Index i = 0; i < k; ++i) acc += poly.col(i).cross(poly.col((i + 1) % k));
  return acc;
}

/// Express a planar 3D polygon in an orthonormal in-plane frame, oriented
/// counter-clockwise.
template <typename Scalar>
Eigen::Matrix<Scalar, 2, Eigen::Dynamic> planar_coordinates(const Points3<Scalar>& poly) {
  using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
  const Vec3 n = polygon_normal(poly);
  if (poly.cols() < 3 || n.norm() == Scalar(0)) throw DomainError("planar_coordinates: degenerate polygon");
  const Vec3 nz = n.normalized();
  Vec3 e1 = (poly.col(1) - poly.col(0));
  e1 -= nz * nz.dot(e1);
  e1.normalize();
  const Vec3 e2 = nz.cross(e1);
  Eigen::Matrix<Scalar, 2, Eigen::Dynamic> out(2, poly.cols());
  for (Eigen::Index i = 0; i < poly.cols(); ++i) {
    const Vec3 d = poly.col(i) - poly.col(0);
    out(0, i) = d.dot(e1);
    out(1, i) = d.dot(e2);
  }
  return out;
}

/// Covering radius of a convex polygon by its (thickened) boundary edges:
///   max_x min_j (dist(x, line_j) - thickness_j), clamped at 0.
/// Edge j runs from vertex j to vertex j+1. Solved as the 3-variable LP
///   max t  s.t.  n_j . x + t <= n_j . v_j - thickness_j
/// whose optimum sits at a basic solution, so bases are enumerated exactly.
/// With uniform thickness the line distance equals the segment distance on
/// the polygon.
template <typename Scalar>
Scalar polygon_inradius(const Points3<Scalar>& poly, std::span<const Scalar> thickness = {}) {
  const Eigen::Index k = poly.cols();
  if (k < 3) throw DomainError("polygon_inradius: polygon needs at least 3 vertices");
  if (!thickness.empty() && static_cast<Eigen::Index>(thickness.size()) != k)
    throw DomainError("polygon_inradius: one thickness per edge required");
  const auto uv = planar_coordinates(poly);

  Eigen::Matrix<Scalar, 3, Eigen::Dynamic> rows(3, k);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> rhs(k);
  Scalar scale = Scalar(0);
  for (Eigen::Index j = 0; j < k; ++j) {
    const Eigen::Matrix<Scalar, 2, 1> a = uv.col(j);
    const Eigen::Matrix<Scalar, 2, 1> d = uv.col((j + 1) % k) - a;
    const Scalar len = d.norm();
    if (len == Scalar(0)) throw DomainError("polygon_inradius: zero-length edge");
    scale = std::max(scale, len);
    const Eigen::Matrix<Scalar, 2, 1> n(d.y() / len, -d.x() / len);
    rows.col(j) << n, Scalar(1);
    rhs(j) = n.dot(a) - (thickness.empty() ? Scalar(0) : thickness[j]);
  }
  // Convexity: every vertex lies inside all edge half-planes.
  const Scalar tol = Scalar(1e-9) * scale;
  for (Eigen::Index j = 0; j < k; ++j) {
    const Eigen::Matrix<Scalar, 2, 1> nrm = rows.col(j).template head<2>();
    const Scalar off = nrm.dot(uv.col(j));
    for (Eigen::Index i = 0; i < k; ++i) {
      if (nrm.dot(uv.col(i)) - off > tol) throw DomainError("polygon_inradius: polygon is not convex");
    }
  }

  Scalar best = -std::numeric_limits<Scalar>::infinity();
  const Scalar feas = Scalar(1e-12) * (Scalar(1) + scale);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = a + 1; b < k; ++b) {
      for (Eigen::Index c = b + 1; c < k; ++c) {
        Eigen::Matrix<Scalar, 3, 3> m;
        m.row(0) = rows.col(a).transpose();
        m.row(1) = rows.col(b).transpose();
        m.row(2) = rows.col(c).transpose();
        const Scalar det = m.determinant();
        if (std::abs(det) < Scalar(1e-14)) continue;
        const Eigen::Matrix<Scalar, 3, 1> sol = m.partialPivLu().solve(Eigen::Matrix<Scalar, 3, 1>(rhs(a), rhs(b), rhs(c)));
        if (sol.z() <= best) continue;
        bool ok = true;
        for (Eigen::Index j = 0; j < k && ok; ++j) ok = rows.col(j).dot(sol) <= rhs(j) + feas;
        if (ok) best = sol.z();
      }
    }
  }
  if (!std::isfinite(best)) throw DomainError("polygon_inradius: unbounded or empty program");
  return std::max(best, Scalar(0));
}

}  // namespace tessgof

#endif  // TESSGOF_MEASURES_HPP
