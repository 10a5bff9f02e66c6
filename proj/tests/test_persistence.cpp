#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "tessgof/generators.hpp"
#include "tessgof/persistence.hpp"
#include "test_util.hpp"

using namespace tessgof;

namespace {

Tessellation random_tess(int n, std::uint64_t seed, bool periodic = true) {
  return build_laguerre(testutil::marked_points(n, 1.0, 0.0, 0.06, seed), Window{1.0, periodic});
}

std::vector<std::vector<int>> boundaries(const FilteredComplex& c) {
  std::vector<std::vector<int>> out;
  for (const auto& f : c.faces) out.push_back(f.boundary);
  return out;
}

FilteredComplex four_cycle() {
  std::vector<FaceSpec> s;
  for (int v = 0; v < 4; ++v) s.push_back({0, v, 0.0, Vec3(v, 0, 0), {v}, {}});
  for (int e = 0; e < 4; ++e) s.push_back({1, e, 1.0 + e, Vec3::Zero(), {e, (e + 1) % 4}, {e, (e + 1) % 4}});
  return assemble_complex(s);
}

}  // namespace

TEST_CASE("four-cycle") {
  const PersistenceDiagram d = reduce(four_cycle());
  const auto h0 = d.of_dim(0), h1 = d.of_dim(1);
  REQUIRE(h0.size() == 4);
  REQUIRE(h1.size() == 1);
  CHECK(h0[0].essential);
  CHECK(h0[0].birth == 0.0);
  std::vector<double> deaths;
  for (std::size_t i = 1; i < 4; ++i) {
    CHECK_FALSE(h0[i].essential);
    CHECK(h0[i].birth == 0.0);
    deaths.push_back(h0[i].death);
  }
  std::sort(deaths.begin(), deaths.end());
  CHECK(deaths == std::vector<double>{1.0, 2.0, 3.0});
  CHECK(h1[0].birth == 4.0);
  CHECK(h1[0].essential);
  CHECK(h1[0].birth_face == 3);
}

TEST_CASE("quadrilateral: the loop dies when the cell enters") {
  const Tessellation t = testutil::quadrilateral();
  const FilteredComplex c = build_filtration(t);
  const PersistenceDiagram d = reduce(c);
  const auto h1 = d.of_dim(1);
  REQUIRE(h1.size() == 1);
  CHECK(h1[0].birth == c.faces[7].value);
  CHECK(c.faces[7].dim == 1);
  CHECK(h1[0].death == c.faces[8].value);
  CHECK(h1[0].killing_face == 0);
  CHECK_FALSE(h1[0].essential);
  CHECK(d.of_dim(0, false).size() == 3);
  CHECK(d.of_dim(0).size() == 4);
}

TEST_CASE("reduction with clearing equals the dense oracle") {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const Tessellation t = random_tess(15 + static_cast<int>(seed % 4) * 10, 500 + seed, seed % 2 == 0);
    const FilteredComplex c = build_filtration(t);
    CHECK(persistence_pairing(c) == oracle::dense_pairing(boundaries(c)));
  }
}

TEST_CASE("order violations are rejected") {
  FilteredComplex c = four_cycle();
  std::swap(c.faces[0], c.faces[5]);
  CHECK_THROWS_AS(reduce(c), InvariantError);
}

TEST_CASE("persistent Betti numbers") {
  PersistenceDiagram d;
  d.features = {{1, 0.2, 1.0}, {1, 0.5, 2.0}};
  CHECK(persistent_betti(d, 1, 0.6, 0.9) == 2);
  CHECK(persistent_betti(d, 1, 0.3, 0.9) == 1);
  CHECK(persistent_betti(d, 0, 0.6, 0.9) == 0);
  CHECK_THROWS_AS(persistent_betti(d, 1, 1.0, 0.5), DomainError);

  const Tessellation t = random_tess(30, 77);
  const FilteredComplex c = build_filtration(t);
  const PersistenceDiagram dgm = reduce(c);
  std::vector<int> dims;
  std::vector<double> values;
  for (const auto& f : c.faces) {
    dims.push_back(f.dim);
    values.push_back(f.value);
  }
  const double top = c.faces.back().value;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, top);
  for (int k = 0; k < 20; ++k) {
    double b = u(rng), e = u(rng);
    if (b > e) std::swap(b, e);
    for (int q = 0; q <= 2; ++q)
      CHECK(persistent_betti(dgm, q, b, e) == oracle::rank_persistent_betti(dims, values, boundaries(c), q, b, e));
  }
}

TEST_CASE("persistent Betti numbers are monotone") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const PersistenceDiagram dgm = reduce(build_filtration(random_tess(20, 900 + seed)));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 0.3);
    for (int k = 0; k < 10; ++k) {
      const double b1 = u(rng), b2 = b1 + u(rng), d1 = b2 + u(rng), d2 = d1 + u(rng);
      for (int q = 0; q <= 2; ++q) {
        CHECK(persistent_betti(dgm, q, b1, d1) <= persistent_betti(dgm, q, b2, d1));
        CHECK(persistent_betti(dgm, q, b1, d2) <= persistent_betti(dgm, q, b1, d1));
      }
    }
  }
}

TEST_CASE("pairing soundness: essential classes are the torus Betti numbers") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const FilteredComplex c = build_filtration(random_tess(40, 40 + seed));
    const PersistenceDiagram d = reduce(c);
    const int expect[4] = {1, 3, 3, 1};
    for (int q = 0; q <= 3; ++q) {
      int ess = 0;
      for (const auto& f : d.of_dim(q)) ess += f.essential;
      CHECK(ess == expect[q]);
    }
    const auto partner = persistence_pairing(c);
    for (std::size_t i = 0; i < partner.size(); ++i)
      if (partner[i] >= 0) CHECK(partner[partner[i]] == static_cast<int>(i));
  }
  const PersistenceDiagram d = reduce(build_filtration(random_tess(40, 3, false)));
  int ess = 0;
  for (const auto& f : d.features) ess += f.essential;
  CHECK(ess == 1);
}

TEST_CASE("Euler characteristic curve") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const FilteredComplex c = build_filtration(random_tess(20, 300 + seed, seed % 2 == 0));
    const PersistenceDiagram d = reduce(c);
    std::vector<double> grid{-1.0};
    for (int k = 0; k <= 40; ++k) grid.push_back(c.faces.back().value * k / 40.0);
    grid.push_back(10.0);
    const auto chi = euler_curve(c, grid);
    CHECK(chi.front() == 0);
    CHECK(chi.back() == (seed % 2 == 0 ? 0 : 1));
    for (std::size_t g = 0; g < grid.size(); ++g) {
      long scan = 0, from_betti = 0;
      for (const auto& f : c.faces)
        if (f.value <= grid[g]) scan += f.dim % 2 == 0 ? 1 : -1;
      for (int q = 0; q <= 3; ++q) from_betti += (q % 2 == 0 ? 1 : -1) * betti_at(d, q, grid[g]);
      CHECK(chi[g] == scan);
      CHECK(chi[g] == from_betti);
    }
  }
  std::vector<double> unsorted{1.0, 0.0};
  CHECK_THROWS_AS(euler_curve(four_cycle(), unsorted), DomainError);
}

TEST_CASE("localized Betti numbers with a window-covering M are global") {
  const Tessellation t = random_tess(40, 12, false);
  const FilteredComplex c = build_filtration(t);
  const auto partner = persistence_pairing(c);
  const LocalizedResult local = m_localized_features(t, c, 3.0, 1, 0.0);
  CHECK(local.distinct_complexes == 1);
  REQUIRE(local.features.size() > 0);
  for (const LocalFeature& f : local.features) {
    const int pos = c.position(2, f.face);
    const bool negative = partner[pos] >= 0 && partner[pos] < pos;
    CHECK(f.negative == negative);
    if (negative) {
      CHECK(f.birth == c.faces[partner[pos]].value);
      CHECK(f.death == c.faces[pos].value);
    }
  }

  // q = 0: every edge that merges components kills a vertex born at 0.
  const LocalizedResult l0 = m_localized_features(t, c, 3.0, 0, 0.0);
  int negatives = 0;
  for (const auto& f : l0.features) negatives += f.negative;
  CHECK(m_localized_betti(l0, 0.0, 0.0) == negatives);
  CHECK(negatives > 0);
}

TEST_CASE("localized Betti numbers match per-face recomputation") {
  const Tessellation t = random_tess(60, 61);
  const FilteredComplex c = build_filtration(t);
  const double M = 0.4, L = 1.0, tol = 1e-12;
  const LocalizedResult local = m_localized_features(t, c, M, 1, 0.0, 1);
  REQUIRE(local.features.size() > 0);
  CHECK(local.distinct_complexes <= static_cast<int>(local.features.size()));
  int killers = 0;
  for (const auto& f : local.features) killers += f.negative;
  MESSAGE(local.features.size() << " selected faces, " << killers << " kill a loop locally, "
                                << local.distinct_complexes << " distinct local complexes");
  CHECK(killers > 0);
  CHECK(killers < static_cast<int>(local.features.size()));

  for (const LocalFeature& lf : local.features) {
    const Vec3 z = t.centroid(2, lf.face);
    std::vector<FaceSpec> specs;
    for (int q = 0; q <= 3; ++q)
      for (int id = 0; id < static_cast<int>(t.count(q)); ++id) {
        const Face& g = t.face(q, id);
        bool inside = false;
        for (int sx = -1; sx <= 1 && !inside; ++sx)
          for (int sy = -1; sy <= 1 && !inside; ++sy)
            for (int sz = -1; sz <= 1 && !inside; ++sz) {
              const Vec3 s = L * Vec3(sx, sy, sz);
              bool all = true;
              for (Eigen::Index k = 0; k < g.coords.cols() && all; ++k)
                all = ((Vec3(g.coords.col(k)) + s - z).cwiseAbs().array() <= M + tol).all();
              inside = all;
            }
        if (!inside) continue;
        const FilteredFace& ff = c.faces[c.position(q, id)];
        FaceSpec spec{q, id, ff.value, ff.center, ff.vertices, {}};
        for (const FaceRef& b : g.boundary) spec.boundary.push_back(b.id);
        specs.push_back(spec);
      }
    const FilteredComplex sub = assemble_complex(specs);
    const auto partner = oracle::dense_pairing(boundaries(sub));
    const int pos = sub.index[2].size() > static_cast<std::size_t>(lf.face) ? sub.index[2][lf.face] : -1;
    const bool negative = pos >= 0 && partner[pos] >= 0 && partner[pos] < pos;
    REQUIRE(lf.negative == negative);
    if (negative) {
      CHECK(lf.birth == sub.faces[partner[pos]].value);
      CHECK(lf.death == sub.faces[pos].value);
    }
  }

  const LocalizedResult threaded = m_localized_features(t, c, M, 1, 0.0, 4);
  for (std::size_t k = 0; k < local.features.size(); ++k) {
    CHECK(threaded.features[k].negative == local.features[k].negative);
    CHECK(threaded.features[k].birth == local.features[k].birth);
  }
  for (double b : {0.02, 0.05, 0.08})
    for (double d : {0.08, 0.1, 0.15}) {
      int brute = 0;
      for (const auto& f : local.features) brute += f.negative && f.birth <= b && f.death >= d;
      CHECK(m_localized_betti(local, b, d) == brute);
      CHECK(m_localized_betti(t, M, 1, b, d, {}, 0.0) == brute);
    }
  CHECK_THROWS_AS(m_localized_features(t, c, 0.6, 1), DomainError);
  CHECK_THROWS_AS(m_localized_betti(local, 0.2, 0.1), DomainError);
}

TEST_CASE("diagram CSV export") {
  std::ostringstream out;
  write_diagram_csv(out, reduce(four_cycle()));
  CHECK(out.str().rfind("dim,birth,death,birth_face,killing_face,essential\n", 0) == 0);
  CHECK(out.str().find("1,4,4,3,-1,1\n") != std::string::npos);
}
