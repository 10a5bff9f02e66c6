#ifndef TESSGOF_TESTS_ORACLES_HPP
#define TESSGOF_TESTS_ORACLES_HPP

// Independent brute-force references used only by the test suites. None of
// these call into the code paths they check.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cstdint>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

using Vec3 = Eigen::Vector3d;

// Smallest ball over every support set of size <= 4: O(n^5).
inline double brute_force_circumradius(const std::vector<Vec3>& pts) {
  const std::size_t n = pts.size();
  double best = std::numeric_limits<double>::infinity();
  auto consider = [&](const std::vector<std::size_t>& sup) {
    const Vec3 p0 = pts[sup[0]];
    Vec3 c = p0;
    if (sup.size() > 1) {
      const int k = static_cast<int>(sup.size()) - 1;
      Eigen::MatrixXd a(3, k);
      for (int j = 0; j < k; ++j) a.col(j) = pts[sup[j + 1]] - p0;
      Eigen::MatrixXd g = a.transpose() * a;
      if (std::abs(g.determinant()) < 1e-18) return;
      Eigen::VectorXd lam = g.ldlt().solve(Eigen::VectorXd(g.diagonal() / 2.0));
      c = p0 + a * lam;
    }
    const double r = (c - p0).norm();
    for (const Vec3& p : pts)
      if ((p - c).norm() > r + 1e-12) return;
    best = std::min(best, r);
  };
  for (std::size_t a = 0; a < n; ++a) {
    consider({a});
    for (std::size_t b = a + 1; b < n; ++b) {
      consider({a, b});
      for (std::size_t c = b + 1; c < n; ++c) {
        consider({a, b, c});
        for (std::size_t d = c + 1; d < n; ++d) consider({a, b, c, d});
      }
    }
  }
  return best;
}

inline double segment_distance(const Eigen::Vector2d& x, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  const Eigen::Vector2d d = b - a;
  const double t = std::clamp((x - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
  return (x - (a + t * d)).norm();
}

inline bool inside_convex(const Eigen::Vector2d& x, const std::vector<Eigen::Vector2d>& poly) {
  const std::size_t k = poly.size();
  for (std::size_t j = 0; j < k; ++j) {
    const Eigen::Vector2d a = poly[j], b = poly[(j + 1) % k];
    const double cr = (b - a).x() * (x - a).y() - (b - a).y() * (x - a).x();
    if (cr < 0) return false;
  }
  return true;
}

// Dilation radius at which the thickened edges of a CCW convex polygon cover
// it: bisection on r, where the uncovered part is the polygon eroded by r
// (computed by clipping the polygon with every inward-shifted edge).
inline double dilation_inradius(const std::vector<Eigen::Vector2d>& poly) {
  const std::size_t k = poly.size();
  auto uncovered = [&](double r) {
    std::vector<Eigen::Vector2d> cur = poly;
    for (std::size_t j = 0; j < k && !cur.empty(); ++j) {
      const Eigen::Vector2d a = poly[j], d = poly[(j + 1) % k] - a;
      const Eigen::Vector2d inward = Eigen::Vector2d(-d.y(), d.x()).normalized();
      auto side = [&](const Eigen::Vector2d& x) { return (x - a).dot(inward) - r; };
      std::vector<Eigen::Vector2d> next;
      for (std::size_t i = 0; i < cur.size(); ++i) {
        const Eigen::Vector2d p = cur[i], q = cur[(i + 1) % cur.size()];
        const double sp = side(p), sq = side(q);
        if (sp >= 0) next.push_back(p);
        if ((sp >= 0) != (sq >= 0)) next.push_back(p + (sp / (sp - sq)) * (q - p));
      }
      cur = std::move(next);
    }
    return cur.size() >= 3;
  };
  double lo = 0.0, hi = 0.0;
  for (const auto& p : poly)
    for (const auto& q : poly) hi = std::max(hi, (p - q).norm());
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (uncovered(mid) ? lo : hi) = mid;
  }
  return lo;
}

// Pointwise covering distance of the edge set, sampled on a grid: a lower
// bound for the dilation radius, used as a coarse sanity check.
inline double grid_inradius(const std::vector<Eigen::Vector2d>& poly, double step) {
  Eigen::Vector2d lo = poly[0], hi = poly[0];
  for (const auto& p : poly) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  double best = 0.0;
  for (double x = lo.x(); x <= hi.x(); x += step)
    for (double y = lo.y(); y <= hi.y(); y += step) {
      const Eigen::Vector2d p(x, y);
      if (!inside_convex(p, poly)) continue;
      double m = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < poly.size(); ++j)
        m = std::min(m, segment_distance(p, poly[j], poly[(j + 1) % poly.size()]));
      best = std::max(best, m);
    }
  return best;
}

struct HalfSpace {
  Vec3 normal;
  double offset;  // normal . x <= offset
};

// Vertices of {x : normal_k . x <= offset_k for all k} within distance
// `reach` of the origin: half-spaces whose plane misses that ball are dropped,
// then every triple of the rest is solved and tested against all of them.
// Every reported vertex is feasible for the full system.
inline std::vector<Vec3> halfspace_vertices(const std::vector<HalfSpace>& all, double reach, double tol) {
  std::vector<HalfSpace> hs;
  for (const HalfSpace& h : all)
    if (h.offset / h.normal.norm() <= reach) hs.push_back(h);
  std::vector<Vec3> out;
  const std::size_t n = hs.size();
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      for (std::size_t c = b + 1; c < n; ++c) {
        Eigen::Matrix3d m;
        m.row(0) = hs[a].normal.transpose();
        m.row(1) = hs[b].normal.transpose();
        m.row(2) = hs[c].normal.transpose();
        if (std::abs(m.determinant()) < 1e-12 * hs[a].normal.norm() * hs[b].normal.norm() * hs[c].normal.norm())
          continue;
        const Vec3 x = m.fullPivLu().solve(Vec3(hs[a].offset, hs[b].offset, hs[c].offset));
        if (x.norm() > reach) continue;
        bool ok = true;
        for (std::size_t k = 0; k < all.size() && ok; ++k)
          ok = all[k].normal.dot(x) <= all[k].offset + tol * all[k].normal.norm();
        if (!ok) continue;
        bool dup = false;
        for (const Vec3& y : out) dup = dup || (y - x).norm() < 1e-9;
        if (!dup) out.push_back(x);
      }
  return out;
}

// Dense Z/2 bit vector.
struct Bits {
  std::vector<std::uint64_t> w;
  explicit Bits(std::size_t n = 0) : w((n + 63) / 64, 0) {}
  void flip(std::size_t i) { w[i / 64] ^= std::uint64_t(1) << (i % 64); }
  bool get(std::size_t i) const { return (w[i / 64] >> (i % 64)) & 1; }
  void add(const Bits& o) {
    for (std::size_t k = 0; k < w.size(); ++k) w[k] ^= o.w[k];
  }
  int highest() const {
    for (std::size_t k = w.size(); k-- > 0;)
      if (w[k]) return static_cast<int>(k * 64 + 63 - __builtin_clzll(w[k]));
    return -1;
  }
};

// Rank over Z/2; each row lists the columns holding a 1 (repeats cancel).
inline int rank_z2(const std::vector<std::vector<int>>& rows, std::size_t ncols) {
  std::vector<Bits> m;
  for (const auto& r : rows) {
    Bits b(ncols);
    for (int c : r) b.flip(static_cast<std::size_t>(c));
    m.push_back(std::move(b));
  }
  std::vector<Bits*> pivot(ncols, nullptr);
  int rank = 0;
  for (Bits& b : m) {
    for (int h = b.highest(); h >= 0; h = b.highest()) {
      if (!pivot[h]) {
        pivot[h] = &b;
        ++rank;
        break;
      }
      b.add(*pivot[h]);
    }
  }
  return rank;
}

// Textbook left-to-right column reduction on dense bit columns, no clearing.
// boundary[j] lists row indices of column j (all < j). Returns each index's partner or -1.
inline std::vector<int> dense_pairing(const std::vector<std::vector<int>>& boundary) {
  const std::size_t n = boundary.size();
  std::vector<Bits> col(n, Bits(n));
  for (std::size_t j = 0; j < n; ++j)
    for (int i : boundary[j]) col[j].flip(static_cast<std::size_t>(i));
  std::vector<int> partner(n, -1);
  for (std::size_t j = 0; j < n; ++j) {
    while (true) {
      const int low = col[j].highest();
      if (low < 0) break;
      std::size_t k = 0;
      while (k < j && col[k].highest() != low) ++k;
      if (k == j) {
        partner[low] = static_cast<int>(j);
        partner[j] = low;
        break;
      }
      col[j].add(col[k]);
    }
  }
  return partner;
}

// Persistent Betti number from ranks: classes of H_q(K_b) still nonzero in H_q(K_d),
// with K_s the faces of value <= s:
//   dim Z_q(K_b) - (rank d_{q+1}(K_d) - rank of d_{q+1}(K_d) on the q-faces outside K_b).
inline int rank_persistent_betti(const std::vector<int>& dims, const std::vector<double>& values,
                                 const std::vector<std::vector<int>>& boundary, int q, double b, double d) {
  const std::size_t n = dims.size();
  std::vector<std::vector<int>> dq, dq1, dq1_out;
  int nq_b = 0;
  for (std::size_t j = 0; j < n; ++j) {
    if (dims[j] == q && values[j] <= b) {
      ++nq_b;
      dq.push_back(boundary[j]);
    }
    if (dims[j] == q + 1 && values[j] <= d) {
      dq1.push_back(boundary[j]);
      std::vector<int> outside;
      for (int i : boundary[j])
        if (values[i] > b) outside.push_back(i);
      dq1_out.push_back(outside);
    }
  }
  const int z = nq_b - (q == 0 ? 0 : rank_z2(dq, n));
  return z - (rank_z2(dq1, n) - rank_z2(dq1_out, n));
}

}  // namespace oracle

#endif  // TESSGOF_TESTS_ORACLES_HPP
