#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "cli.hpp"

namespace curtain::cli {
namespace {

Vector uniform_vector(CounterRng& rng, Eigen::Index d, double lo, double hi) {
  Vector v(d);
  for (Eigen::Index k = 0; k < d; ++k) v(k) = rng.uniform(lo, hi);
  return v;
}

Vector point_in_simplex(CounterRng& rng, const Simplex<double>& s) {
  Vector w(s.size());
  for (Eigen::Index k = 0; k < w.size(); ++k) w(k) = -std::log(1.0 - rng.uniform());
  return s.vertices() * (w / w.sum());
}

Vector point_in_zonotope(CounterRng& rng, const DeltaZonotope<double>& z) {
  return z.simplex.vertices() * uniform_vector(rng, z.dim() + 1, 0, 1);
}

std::vector<int> random_colors(CounterRng& rng, std::size_t n, int q) {
  std::vector<int> f(n);
  for (auto& c : f) c = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(q));
  return f;
}

class Suite {
 public:
  Suite(std::string name, double tolerance) : r_{std::move(name), true, 0, tolerance, {}} {}

  void error(double e) {
    r_.worst = std::max(r_.worst, std::isnan(e) ? INFINITY : e);
    if (!(e <= r_.tolerance)) r_.passed = false;
  }
  void check(bool ok, const std::string& what) {
    if (!ok && r_.passed) r_.detail = what;
    if (!ok) r_.passed = false;
  }
  SuiteResult result() && { return std::move(r_); }

 private:
  SuiteResult r_;
};

SuiteResult guarded(const std::string& name, const std::function<SuiteResult()>& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    return {name, false, INFINITY, 0, e.what()};
  }
}

}  // namespace

std::vector<SuiteResult> run_suites(const Simplex<double>& s, std::uint64_t seed) {
  const auto d = s.dim();
  const double vol = s.volume();
  std::vector<SuiteResult> out;

  out.push_back(guarded("geometry.zonotope_volume", [&] {
    Suite t("geometry.zonotope_volume", 1e-9);
    const auto z = build_zonotope(s);
    const double det = std::abs(s.facet_matrix(0).determinant());
    t.error(std::abs(z.volume - (d + 1) * det) / z.volume);
    double cells = 0;
    for (const auto& c : z.cells) cells += c.volume();
    t.error(std::abs(cells - z.volume) / z.volume);
    t.error(vertex_set_distance(z.vertices(), Matrix(-z.vertices())) / z.diameter());
    return std::move(t).result();
  }));

  if (s.is_regular() && d >= 2) {
    out.push_back(guarded("geometry.dual_difference_body", [&] {
      Suite t("geometry.dual_difference_body", 1e-9);
      t.error(dual_difference_body(s).vertex_discrepancy);
      return std::move(t).result();
    }));
  }

  out.push_back(guarded("geometry.pyramid_volume", [&] {
    Suite t("geometry.pyramid_volume", 1e-12);
    CounterRng rng(seed ^ 0x01);
    for (int k = 0; k < 200; ++k) {
      const Vector x = point_in_simplex(rng, s);
      const Vector alpha = s.barycentric(x);
      for (Eigen::Index i = 0; i < s.size(); ++i) t.error(std::abs(pyramid_volume(s, x, i) - alpha(i) * vol) / vol);
    }
    return std::move(t).result();
  }));

  const auto z = build_zonotope(s);

  out.push_back(guarded("measures.alpha_partition", [&] {
    Suite t("measures.alpha_partition", 1e-9);
    CounterRng rng(seed ^ 0x02);
    for (int k = 0; k < 50; ++k) {
      const Vector alpha = alpha_vector(z, point_in_zonotope(rng, z));
      t.error(std::abs(alpha.sum() - z.volume) / z.volume);
      t.check(alpha.minCoeff() >= 0, "negative cone volume");
    }
    return std::move(t).result();
  }));

  out.push_back(guarded("measures.clip_additivity", [&] {
    Suite t("measures.clip_additivity", 1e-9);
    CounterRng rng(seed ^ 0x03);
    const Polytope p = z.polytope;
    for (int k = 0; k < 20; ++k) {
      Vector n = uniform_vector(rng, d, -1, 1);
      n.normalize();
      const HalfSpace<double> h{n, rng.uniform(-0.5, 0.5)};
      const double a = polytope_volume(clip_polytope(p, h)), b = polytope_volume(clip_polytope(p, h.complement()));
      t.error(std::abs(a + b - z.volume) / z.volume);
    }
    return std::move(t).result();
  }));

  out.push_back(guarded("complexes.psi_equivariance", [&] {
    Suite t("complexes.psi_equivariance", 0);
    CounterRng rng(seed ^ 0x04);
    const int q = 3;
    std::vector<int> perm(q);
    for (int k = 0; k < 10; ++k) {
      const auto p = make_config(z, ComplexKind::A, point_in_zonotope(rng, z),
                                 Allocation::create(random_colors(rng, static_cast<std::size_t>(d + 1), q), q));
      const auto base = big_psi(z, p);
      std::iota(perm.begin(), perm.end(), 0);
      do {
        const auto moved = big_psi(z, permute_colors(p, perm));
        t.check(moved.colors == permute_colors(base, perm).colors, "colors not permuted");
        t.error((moved.weights - base.weights).cwiseAbs().maxCoeff());
      } while (std::next_permutation(perm.begin(), perm.end()));
    }
    return std::move(t).result();
  }));

  out.push_back(guarded("complexes.antipodal", [&] {
    Suite t("complexes.antipodal", 1e-12);
    CounterRng rng(seed ^ 0x05);
    for (int k = 0; k < 50; ++k) {
      const auto p = make_config(z, ComplexKind::A, point_in_zonotope(rng, z),
                                 Allocation::create(random_colors(rng, static_cast<std::size_t>(d + 1), 2), 2));
      const Vector a = sphere_chart(big_psi(z, p));
      const Vector b = sphere_chart(big_psi(z, antipode(p)));
      t.error((a + b).cwiseAbs().maxCoeff());
    }
    return std::move(t).result();
  }));

  out.push_back(guarded("complexes.invert_psi", [&] {
    Suite t("complexes.invert_psi", 1e-6);
    CounterRng rng(seed ^ 0x06);
    for (int k = 0; k < 20; ++k) t.error(invert_psi(z, point_in_simplex(rng, s)).residual);
    return std::move(t).result();
  }));

  // d measures so that the curtain instance is square
  std::vector<MassDistribution> measures;
  {
    CounterRng rng(seed ^ 0x07);
    for (Eigen::Index i = 0; i < d; ++i) {
      if (i % 2 == 0) {
        Matrix pts(d, 40);
        for (Eigen::Index k = 0; k < pts.cols(); ++k) pts.col(k) = 0.5 * point_in_simplex(rng, s);
        measures.push_back(MassDistribution::points(pts));
      } else {
        measures.push_back(MassDistribution::body(Polytope::from_vertices(0.4 * s.vertices())));
      }
    }
  }

  out.push_back(guarded("solver.row_sums", [&] {
    Suite t("solver.row_sums", 1e-9);
    CounterRng rng(seed ^ 0x08);
    for (FanMode mode : {FanMode::A, FanMode::B}) {
      const auto inst = Instance::create(s, measures, 2, mode);
      for (int k = 0; k < 10; ++k) {
        const Vector x = mode == FanMode::A ? Vector(0.3 * point_in_zonotope(rng, z)) : point_in_simplex(rng, s);
        const auto m = color_masses(inst, x, Allocation::create(random_colors(rng, static_cast<std::size_t>(d + 1), 2), 2));
        for (Eigen::Index i = 0; i < m.entries.rows(); ++i)
          t.error(std::abs(m.entries.row(i).sum() - m.totals(i)) / m.totals(i));
      }
    }
    return std::move(t).result();
  }));

  out.push_back(guarded("solver.test_map_odd", [&] {
    Suite t("solver.test_map_odd", 0);
    CounterRng rng(seed ^ 0x09);
    for (FanMode mode : {FanMode::A, FanMode::B}) {
      const auto inst = Instance::create(s, measures, 2, mode);
      for (int k = 0; k < 20; ++k) {
        Vector v = uniform_vector(rng, d + 1, -1, 1);
        v /= v.lpNorm<1>();
        const Vector f = test_map(inst, SpherePoint::create(v));
        const Vector g = test_map(inst, SpherePoint::create(-v));
        t.error((f + g).cwiseAbs().maxCoeff());
      }
    }
    return std::move(t).result();
  }));

  out.push_back(guarded("applications.spline_sides", [&] {
    Suite t("applications.spline_sides", 1e-9);
    CounterRng rng(seed ^ 0x0a);
    const auto tet = Simplex<double>::regular(3);
    const auto parts = vertex_bipartitions(3);
    t.check(parts.size() == 7, "expected seven bipartitions");
    for (int k = 0; k < 14; ++k) {
      const auto& a = parts[static_cast<std::size_t>(k) % parts.size()];
      std::vector<int> part;
      for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] == 1) part.push_back(static_cast<int>(i));
      const auto c = curtain_from_partition(tet, uniform_vector(rng, 3, -1, 1), part);
      const auto sp = curtain_to_spline(c, tet);
      for (const auto& p : sp.pieces) {
        if (!p.bounded()) continue;
        for (int j = 0; j < 20; ++j) {
          const double u = p.t0 + (p.t1 - p.t0) * (j + 0.5) / 20;
          const Eigen::Vector3d x = lift_point(p.at(u));
          t.error(std::abs(p.plane.head<3>().dot(x) - p.plane(3)) / std::max(1.0, p.plane.head<3>().norm()));
        }
      }
      for (int j = 0; j < 100; ++j) {
        const Eigen::Vector2d q = uniform_vector(rng, 2, -2, 2);
        if (distance_to_spline(sp, q) < 1e-6) continue;
        t.check(planar_side_2d(sp, q) == planar_side_3d(c, tet, q), "planar and lifted sides disagree");
      }
    }
    return std::move(t).result();
  }));

  return out;
}

}  // namespace curtain::cli
