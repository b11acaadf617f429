#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

#include "cli.hpp"
#include "curtain/applications.hpp"
#include "curtain/complexes.hpp"
#include "curtain/solver.hpp"
#include "test_support.hpp"

namespace curtain {
namespace {

namespace fs = std::filesystem;
using testing::Polygon;
using testing::random_point_in_simplex;
using testing::random_simplex;
using testing::random_vector;

const fs::path kScenes = CURTAIN_SCENES_DIR;

struct Verdict {
  bool pass{true};
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail << "failed: " << what << "; ";
      pass = false;
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

double factorial(Eigen::Index n) { return n <= 1 ? 1.0 : static_cast<double>(n) * factorial(n - 1); }

// Each vertex paired with its nearest neighbour; optimal whenever that map is a bijection.
double optimal_pairing_distance(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) return INFINITY;
  std::set<Eigen::Index> used;
  double worst = 0;
  for (Eigen::Index i = 0; i < a.cols(); ++i) {
    Eigen::Index arg = 0;
    const double dist = (b.colwise() - a.col(i)).colwise().norm().minCoeff(&arg);
    if (!used.insert(arg).second) return INFINITY;
    worst = std::max(worst, dist);
  }
  return worst;
}

Matrix subset_sums(const Simplex<double>& s) {
  const auto m = s.size();
  Matrix out(s.dim(), (1 << m) - 2);
  for (int mask = 1, c = 0; mask + 1 < (1 << m); ++mask, ++c) {
    out.col(c).setZero();
    for (Eigen::Index i = 0; i < m; ++i)
      if (mask & (1 << i)) out.col(c) += s.vertex(i);
  }
  return out;
}

Vector zonotope_point(CounterRng& rng, const DeltaZonotope<double>& z) {
  return z.simplex.vertices() * random_vector(rng, z.dim() + 1, 0, 1);
}

MassDistribution polygon_body(const Polygon& poly) {
  return MassDistribution::body(Polytope::from_vertices(testing::polygon_matrix(poly)));
}

// Clipped polygon areas per cone of the planar fan, grouped by color.
double oracle_residual(const Matrix& verts, FanMode mode, const std::vector<Polygon>& polys, const Eigen::Vector2d& x,
                       const std::vector<int>& theta, int q) {
  double worst = 0;
  for (const auto& poly : polys) {
    std::vector<double> by_color(static_cast<std::size_t>(q), 0.0);
    for (int i = 0; i < 3; ++i) {
      std::vector<Eigen::Vector2d> g;
      for (int j = 0; j < 3; ++j)
        if (j != i) g.push_back(mode == FanMode::A ? Eigen::Vector2d(verts.col(j)) : Eigen::Vector2d(verts.col(j) - x));
      by_color[static_cast<std::size_t>(theta[static_cast<std::size_t>(i)])] += testing::cone_area(poly, x, g[0], g[1]);
    }
    const double total = testing::polygon_area(poly);
    for (double m : by_color) worst = std::max(worst, std::abs(m - total / q));
  }
  return worst;
}

int oracle_cone(const Matrix& verts, const Eigen::Vector2d& x, const Eigen::Vector2d& p) {
  for (int i = 0; i < 3; ++i) {
    Eigen::Matrix2d g;
    for (int j = 0, k = 0; j < 3; ++j)
      if (j != i) g.col(k++) = verts.col(j);
    if ((g.inverse() * (p - x)).minCoeff() >= 0) return i;
  }
  return -1;
}

Instance scene_instance(const std::string& name) {
  const auto scene = cli::load_scene(kScenes / name);
  return Instance::create(*scene.simplex, scene.measures, scene.q, scene.mode);
}

void zonotope_identities(Verdict& v) {
  CounterRng rng(101);
  std::vector<Simplex<double>> simplices{Simplex<double>::regular(2), Simplex<double>::regular(3)};
  for (int k = 0; k < 20; ++k) simplices.push_back(random_simplex(rng, 2 + k % 3));
  double worst = 0;
  for (const auto& s : simplices) {
    const auto z = build_zonotope(s);
    const auto d = s.dim();
    double dets = 0;
    for (Eigen::Index i = 0; i <= d; ++i) dets += std::abs(s.facet_matrix(i).determinant());
    const double expected = (d + 1) * std::abs(s.facet_matrix(0).determinant());
    double cells = 0;
    for (const auto& c : z.cells) cells += c.volume();
    worst = std::max({worst, std::abs(z.volume - expected) / expected, std::abs(dets - expected) / expected,
                      std::abs(cells - z.volume) / z.volume});
  }
  v.require(worst <= 1e-9, "volume identities");
  const auto hex = build_zonotope(Simplex<double>::regular(2));
  const double area = testing::shoelace_area(hex.vertices());
  const double err = std::abs(area - 3 * std::sqrt(3.0) / 2);
  v.require(err <= 1e-12, "hexagon area");
  v.detail << simplices.size() << " simplices, worst relative " << worst << ", hexagon error " << err;
}

void duality(Verdict& v) {
  double worst = 0;
  for (Eigen::Index d : {2, 3}) {
    const auto s = Simplex<double>::regular(d);
    const auto r = dual_difference_body(s);
    worst = std::max(worst, optimal_pairing_distance(r.body.vertices(), subset_sums(s)));
    worst = std::max(worst, optimal_pairing_distance(r.body.vertices(), build_zonotope(s).vertices()));
    if (d == 3) {
      v.require(r.body.num_vertices() == 14, "rhombic dodecahedron vertex count");
      v.detail << "rhombic dodecahedron " << r.body.num_vertices() << " vertices, ";
    }
  }
  v.require(worst <= 1e-9, "vertex pairing");
  v.detail << "pairing distance " << worst;
}

void pyramid_lemma(Verdict& v) {
  CounterRng rng(103);
  double worst = 0;
  for (int k = 0; k < 1000; ++k) {
    const auto d = static_cast<Eigen::Index>(2 + k % 3);
    const auto s = random_simplex(rng, d);
    const Vector x = random_point_in_simplex(rng, s);
    const auto i = static_cast<Eigen::Index>(rng.next_u64() % static_cast<std::uint64_t>(d + 1));
    Matrix a(d + 1, d + 1);
    a.topRows(d) = s.vertices();
    a.row(d).setOnes();
    Vector rhs(d + 1);
    rhs << x, 1.0;
    const Vector alpha = a.fullPivLu().solve(rhs);
    Matrix edges(d, d);
    for (Eigen::Index j = 1; j <= d; ++j) edges.col(j - 1) = s.vertex(j) - s.vertex(0);
    const double vol = std::abs(edges.determinant()) / factorial(d);
    worst = std::max(worst, std::abs(pyramid_volume(s, x, i) - alpha(i) * vol) / vol);
  }
  v.require(worst <= 1e-12, "pyramid volumes");
  v.detail << "1000 pairs, worst relative " << worst;
}

void psi_properties(Verdict& v) {
  CounterRng rng(104);
  for (Eigen::Index d : {2, 3}) {
    const auto z = build_zonotope(random_simplex(rng, d));
    const Vector lo = z.polytope.lower(), hi = z.polytope.upper();
    std::vector<Vector> grid;
    for (int n = 8; grid.size() < 10000; n = n * 5 / 4 + 1) {
      grid.clear();
      std::vector<int> idx(static_cast<std::size_t>(d), 0);
      for (;;) {
        Vector x(d);
        for (Eigen::Index k = 0; k < d; ++k) x(k) = lo(k) + (hi(k) - lo(k)) * (idx[static_cast<std::size_t>(k)] + 0.5) / n;
        if (z.contains(x, 0.0)) grid.push_back(x);
        Eigen::Index k = 0;
        while (k < d && ++idx[static_cast<std::size_t>(k)] == n) idx[static_cast<std::size_t>(k++)] = 0;
        if (k == d) break;
      }
    }
    std::vector<Vector> images;
    for (const auto& x : grid) images.push_back(psi(z, x));
    double closest = INFINITY;
    for (std::size_t a = 0; a < images.size(); ++a)
      for (std::size_t b = a + 1; b < images.size(); ++b) closest = std::min(closest, (images[a] - images[b]).norm());
    v.require(closest > 0, "psi injective on the grid");

    double inv = 0;
    for (int k = 0; k < 100; ++k) inv = std::max(inv, invert_psi(z, random_point_in_simplex(rng, z.simplex)).residual);
    v.require(inv <= 1e-6, "invert_psi residual");

    std::vector<int> perm(3);
    bool equivariant = true;
    for (int k = 0; k < 20; ++k) {
      std::vector<int> f(static_cast<std::size_t>(d + 1));
      for (auto& c : f) c = static_cast<int>(rng.next_u64() % 3);
      const auto p = make_config(z, ComplexKind::A, zonotope_point(rng, z), Allocation::create(f, 3));
      const auto base = big_psi(z, p);
      std::iota(perm.begin(), perm.end(), 0);
      do {
        const auto moved = big_psi(z, permute_colors(p, perm));
        equivariant = equivariant && moved.colors == permute_colors(base, perm).colors &&
                      (moved.weights.array() == base.weights.array()).all();
      } while (std::next_permutation(perm.begin(), perm.end()));
    }
    v.require(equivariant, "equivariance");

    double antipodal = 0;
    for (int k = 0; k < 100; ++k) {
      std::vector<int> f(static_cast<std::size_t>(d + 1));
      for (auto& c : f) c = static_cast<int>(rng.next_u64() % 2);
      const auto p = make_config(z, ComplexKind::A, zonotope_point(rng, z), Allocation::create(f, 2));
      antipodal = std::max(antipodal,
                           (sphere_chart(big_psi(z, antipode(p))) + sphere_chart(big_psi(z, p))).cwiseAbs().maxCoeff());
    }
    v.require(antipodal <= 1e-12, "antipodal identity");

    // front face of C_i: t_i = 0 and some other t_j = 1 in x = sum t_j a_j
    const double threshold = 1e-10 * z.volume;
    int on_face = 0, off_face = 0;
    for (int k = 0; k < 200; ++k) {
      const auto i = static_cast<Eigen::Index>(k % (d + 1));
      const auto j = (i + 1 + static_cast<Eigen::Index>(rng.next_u64() % static_cast<std::uint64_t>(d))) % (d + 1);
      Vector t = random_vector(rng, d + 1, 0.2, 0.8);
      t(j) = 1;
      Vector on = t;
      on(i) = 0;
      const Vector a_on = alpha_vector(z, z.simplex.vertices() * on);
      const Vector a_off = alpha_vector(z, z.simplex.vertices() * t);
      const Vector a_in = alpha_vector(z, zonotope_point(rng, z) * 0.999);
      on_face += a_on(i) <= threshold;
      off_face += a_off.minCoeff() > threshold && a_in.minCoeff() > threshold;
    }
    v.require(on_face == 200 && off_face == 200, "alpha vanishes exactly on front faces");
    v.detail << "d=" << d << ": grid " << grid.size() << " min gap " << closest << ", inversion " << inv << ", antipodal "
             << antipodal << "; ";
  }
}

void oddness_and_conservation(Verdict& v) {
  CounterRng rng(105);
  const auto s2 = Simplex<double>::regular(2);
  const auto s3 = Simplex<double>::regular(3);
  const std::vector<MassDistribution> m2{polygon_body(testing::square(-0.4, 0.1, 0.3)),
                                         polygon_body(testing::square(0.5, -0.2, 0.25))};
  const auto m3 = scene_instance("three_bodies.json").measures;
  int odd = 0, samples = 0;
  for (int k = 0; k < 1000; ++k) {
    const bool planar = k % 2 == 0;
    const auto inst = Instance::create(planar ? s2 : s3, planar ? m2 : m3, 2, k % 4 < 2 ? FanMode::A : FanMode::B);
    Vector z = random_vector(rng, inst.dim() + 1);
    z /= z.lpNorm<1>();
    const Vector f = test_map(inst, SpherePoint::create(z));
    const Vector g = test_map(inst, SpherePoint::create(-z));
    odd += (g.array() == -f.array()).all();
    ++samples;
  }
  v.require(odd == samples, "oddness");

  double rows = 0;
  for (int k = 0; k < 200; ++k) {
    const auto s = random_simplex(rng, 2 + k % 2);
    const auto d = s.dim();
    std::vector<MassDistribution> ms;
    for (Eigen::Index i = 0; i < d; ++i) {
      Matrix pts(d, 25);
      for (Eigen::Index c = 0; c < pts.cols(); ++c) pts.col(c) = random_vector(rng, d);
      ms.push_back(i % 2 ? MassDistribution::body(Polytope::from_vertices(pts)) : MassDistribution::points(pts, random_vector(rng, 25, 0.5, 2)));
    }
    const auto mode = k % 3 ? FanMode::A : FanMode::B;
    const auto inst = Instance::create(s, ms, 2, mode);
    const Vector x = mode == FanMode::A ? Vector(0.2 * random_vector(rng, d)) : random_point_in_simplex(rng, s);
    std::vector<int> f(static_cast<std::size_t>(d + 1));
    for (auto& c : f) c = static_cast<int>(rng.next_u64() % 2);
    const auto m = color_masses(inst, x, Allocation::create(f, 2));
    for (Eigen::Index i = 0; i < m.entries.rows(); ++i)
      rows = std::max(rows, std::abs(m.entries.row(i).sum() - m.totals(i)) / m.totals(i));
  }
  v.require(rows <= 1e-9, "row sums");
  v.detail << odd << "/" << samples << " odd samples exact, worst row sum " << rows;
}

void curtain_solver(Verdict& v) {
  SolverConfig defaults;
  for (const char* name : {"two_squares.json", "three_bodies.json"}) {
    const auto inst = scene_instance(name);
    const auto t = std::chrono::steady_clock::now();
    const auto sol = solve_curtain(inst, defaults);
    const double secs = seconds_since(t);
    const double rel = sol.residual / inst.totals().sum();
    v.require(rel <= 1e-6 && sol.status == SolveStatus::Converged, std::string(name) + " residual");
    v.require(secs <= 60, std::string(name) + " runtime");
    v.detail << "d=" << inst.dim() << " residual/mass " << rel << " in " << secs << "s; ";
  }
  CounterRng rng(72);
  for (int trial = 0; trial < 4; ++trial) {
    const auto s = Simplex<double>::regular(2);
    const Eigen::Index n0 = trial == 3 ? 20 : 7 + trial, n1 = trial == 3 ? 20 : 10;
    Matrix p0(2, n0), p1(2, n1);
    for (Eigen::Index k = 0; k < n0; ++k) p0.col(k) = random_vector(rng, 2);
    for (Eigen::Index k = 0; k < n1; ++k) p1.col(k) = random_vector(rng, 2, -0.5, 1);
    const Vector w0 = random_vector(rng, n0, 0.5, 1.5);
    const auto inst = Instance::create(s, {MassDistribution::points(p0, w0), MassDistribution::points(p1)}, 2, FanMode::A);
    const auto t = std::chrono::steady_clock::now();
    const auto sol = solve_curtain(inst);
    v.require(seconds_since(t) <= 60, "cloud runtime");
    const Matrix& verts = sol.simplex.vertices();
    const auto z = build_zonotope(sol.simplex);
    // every cell of the arrangement touches a vertex; probe around each one
    std::vector<std::pair<Eigen::Vector2d, Eigen::Vector2d>> lines;
    for (const Matrix* pts : {&p0, &p1})
      for (Eigen::Index k = 0; k < pts->cols(); ++k)
        for (int j = 0; j < 3; ++j) lines.push_back({pts->col(k), verts.col(j)});
    const Matrix zv = z.vertices();
    for (Eigen::Index a = 0; a < zv.cols(); ++a)
      for (Eigen::Index b = a + 1; b < zv.cols(); ++b) lines.push_back({zv.col(a), zv.col(b) - zv.col(a)});
    const std::vector<std::vector<int>> thetas{{0, 0, 1}, {0, 1, 0}, {0, 1, 1}};
    auto eval = [&](const Eigen::Vector2d& x) {
      int cone0[64], cone1[64];
      for (Eigen::Index k = 0; k < n0; ++k) cone0[k] = oracle_cone(verts, x, p0.col(k));
      for (Eigen::Index k = 0; k < n1; ++k) cone1[k] = oracle_cone(verts, x, p1.col(k));
      double worst = INFINITY;
      for (const auto& theta : thetas) {
        double m0 = 0, m1 = 0;
        for (Eigen::Index k = 0; k < n0; ++k) m0 += theta[static_cast<std::size_t>(cone0[k])] == 1 ? w0(k) : 0.0;
        for (Eigen::Index k = 0; k < n1; ++k) m1 += theta[static_cast<std::size_t>(cone1[k])] == 1 ? 1.0 : 0.0;
        worst = std::min(worst, std::max(std::abs(m0 - w0.sum() / 2), std::abs(m1 - n1 / 2.0)));
      }
      return worst;
    };
    double best = INFINITY;
    for (std::size_t a = 0; a < lines.size(); ++a)
      for (std::size_t b = a + 1; b < lines.size(); ++b) {
        Eigen::Matrix2d m;
        m << lines[a].second, -lines[b].second;
        if (std::abs(m.determinant()) < 1e-12) continue;
        const Eigen::Vector2d x = lines[a].first + (m.inverse() * (lines[b].first - lines[a].first))(0) * lines[a].second;
        if (!z.contains(x, 1e-9)) continue;
        for (int k = 0; k < 360; ++k) {
          const double ang = 2 * std::numbers::pi * (k + 0.5) / 360;
          const Eigen::Vector2d y = x + 1e-7 * Eigen::Vector2d(std::cos(ang), std::sin(ang));
          if (z.contains(y, 0.0)) best = std::min(best, eval(y));
        }
      }
    v.require(std::abs(sol.residual - best) <= 1e-12, "cloud minimum trial " + std::to_string(trial));
    v.detail << n0 + n1 << " atoms: solver " << sol.residual << " oracle " << best << "; ";
  }
}

void fan_solver(Verdict& v) {
  {
    const auto inst = scene_instance("hexagon_thirds.json");
    SolverConfig cfg;
    cfg.epsilon = 1e-9 / inst.totals()(0);
    const auto sol = solve_fan(inst, cfg);
    v.require(sol.residual <= 1e-9, "hexagon residual");
    v.require(sol.x.norm() <= 1e-9, "hexagon apex at the origin");
    v.detail << "hexagon residual " << sol.residual << " apex " << sol.x.norm() << "; ";
  }
  CounterRng rng(107);
  const auto s = Simplex<double>::regular(2);
  const auto z0 = build_zonotope(s);
  Matrix pts(2, 8);
  for (Eigen::Index k = 0; k < pts.cols();) {
    const Eigen::Vector2d p = random_vector(rng, 2);
    if (z0.contains(p, 0.0)) pts.col(k++) = p;
  }
  const auto hull = Polytope::from_vertices(pts);
  Polygon poly;
  {
    const Matrix hv = hull.vertices();
    const Eigen::Vector2d c = hv.rowwise().mean();
    std::vector<std::pair<double, Eigen::Index>> order;
    for (Eigen::Index k = 0; k < hv.cols(); ++k) order.emplace_back(std::atan2(hv(1, k) - c.y(), hv(0, k) - c.x()), k);
    std::sort(order.begin(), order.end());
    for (const auto& [a, k] : order) poly.push_back(hv.col(k));
  }
  const auto mu = polygon_body(poly);
  const auto inst = Instance::create(s, {mu}, 3, FanMode::A);
  const auto sol = solve_fan(inst);
  const double mass = testing::polygon_area(poly);
  v.require(sol.residual <= 1e-4 * mass, "polygon residual");
  const double at_solution = oracle_residual(sol.simplex.vertices(), FanMode::A, {poly}, sol.x, sol.theta.values, 3);
  v.require(std::abs(at_solution - sol.residual) <= 1e-6, "oracle agrees at the solution");
  const auto z = build_zonotope(sol.simplex);
  const Vector lo = z.polytope.lower(), hi = z.polytope.upper();
  double grid_min = INFINITY;
  const auto allocs = all_allocations(2, 3);
  for (int i = 0; i < 200; ++i)
    for (int j = 0; j < 200; ++j) {
      const Eigen::Vector2d x(lo(0) + (hi(0) - lo(0)) * (i + 0.5) / 200, lo(1) + (hi(1) - lo(1)) * (j + 0.5) / 200);
      if (!z.contains(x, 0.0)) continue;
      for (const auto& a : allocs)
        grid_min = std::min(grid_min, oracle_residual(sol.simplex.vertices(), FanMode::A, {poly}, x, a.values, 3));
    }
  v.require(sol.residual <= grid_min + 1e-6, "no grid point beats the solver");
  v.detail << poly.size() << "-gon residual/mass " << sol.residual / mass << ", oracle at solution " << at_solution
           << ", grid minimum over " << allocs.size() << " allocations " << grid_min;
}

void limit_consistency_ladder(Verdict& v) {
  const auto s = Simplex<double>::regular(2);
  const Instance inst{s, {polygon_body(testing::square(0.1, -0.2, 0.5))}, 3, FanMode::A};
  double prev = INFINITY;
  for (double ratio : {10.0, 20.0, 40.0, 80.0}) {
    const auto rep = limit_consistency(inst, ratio, 100);
    v.require(rep.max_discrepancy <= prev, "non-increasing at ratio " + std::to_string(ratio));
    v.detail << "R/r=" << ratio << ": " << rep.max_discrepancy / rep.total << " ";
    prev = rep.max_discrepancy;
  }
  v.require(prev <= 0.01 * inst.totals()(0), "one percent at ratio 80");
}

void counterexample(Verdict& v) {
  const auto scene = cli::load_scene(kScenes / "counterexample.json");
  const auto rep = counterexample_report(scene.demo_radius, scene.demo_grid);
  const int segments = 64;
  const double disc = 0.5 * segments * scene.demo_radius * scene.demo_radius * std::sin(2 * std::numbers::pi / segments);
  const double floor = 0.5 * disc;
  v.require(std::abs(rep.disc_mass - disc) <= 1e-15, "disc mass");
  v.require(rep.min_residual >= floor - 1e-12, "grid minimum above the floor");
  v.require(rep.two_measure.residual <= 1e-6 * disc, "two-measure restriction");
  v.detail << "grid " << rep.grid << " minimum " << rep.min_residual << " floor " << floor << ", two measures "
           << rep.two_measure.residual;
}

void check_spline(Verdict& v, const std::vector<MassDistribution>& clouds, const std::string& label) {
  const auto tet = Simplex<double>::regular(3);
  const auto res = solve_circular_spline(clouds, tet);
  const auto& sp = res.spline;
  double eq = 0;
  for (const auto& p : sp.pieces) {
    const double t0 = std::isfinite(p.t0) ? p.t0 : p.t1 - 10, t1 = std::isfinite(p.t1) ? p.t1 : t0 + 10;
    for (int k = 0; k < 100; ++k) {
      const Eigen::Vector2d q = p.at(t0 + (t1 - t0) * (k + 0.5) / 100);
      if (p.kind == PieceKind::Arc) {
        eq = std::max(eq, std::abs((q - p.center).norm() - p.radius));
      } else {
        const Eigen::Vector2d n = p.plane.head<2>();
        eq = std::max(eq, std::abs(n.dot(q) - p.plane(3)) / n.norm());
      }
    }
  }
  v.require(eq <= 1e-9, label + " piece equations");
  double floor = 0;
  for (const auto& c : clouds) floor = std::max(floor, c.max_atom() / 2);
  v.require(res.residuals.maxCoeff() <= floor + 1e-9, label + " bisection");
  int agree = 0, checked = 0;
  CounterRng rng(110);
  std::vector<Eigen::Vector2d> queries;
  for (const auto& c : clouds)
    for (Eigen::Index k = 0; k < c.cloud().points.cols(); ++k) queries.push_back(c.cloud().points.col(k));
  for (int k = 0; k < 5000; ++k) queries.push_back(random_vector(rng, 2, -2.5, 2.5));
  for (const auto& q : queries) {
    if (distance_to_spline(sp, q) < 1e-6) continue;
    ++checked;
    agree += planar_side_2d(sp, q) == planar_side_3d(*res.solution.curtain, res.solution.simplex, q);
  }
  v.require(agree == checked, label + " side tests");
  v.detail << label << ": " << sp.pieces.size() << " pieces, equation error " << eq << ", residuals "
           << res.residuals.maxCoeff() << " (floor " << floor << "), sides " << agree << "/" << checked << "; ";
}

void circular_spline(Verdict& v) {
  check_spline(v, cli::load_scene(kScenes / "spline_clouds.json").measures, "fixture");
  CounterRng rng(85);
  std::vector<MassDistribution> clouds;
  for (int i = 0; i < 3; ++i) {
    Matrix pts(2, 2000);
    const Eigen::Vector2d c = random_vector(rng, 2, -1, 1);
    for (Eigen::Index k = 0; k < pts.cols(); ++k) pts.col(k) = c + Eigen::Vector2d(random_vector(rng, 2, -0.6, 0.6));
    clouds.push_back(MassDistribution::points(pts));
  }
  check_spline(v, clouds, "2000-point clouds");
}

}  // namespace
}  // namespace curtain

int main() {
  using namespace curtain;
  const std::vector<std::pair<const char*, std::function<void(Verdict&)>>> criteria{
      {"zonotope identities", zonotope_identities},
      {"dual difference body", duality},
      {"pyramid volumes", pyramid_lemma},
      {"psi properties", psi_properties},
      {"oddness and conservation", oddness_and_conservation},
      {"curtain solver", curtain_solver},
      {"fan solver", fan_solver},
      {"limit consistency", limit_consistency_ladder},
      {"counterexample demo", counterexample},
      {"circular spline", circular_spline},
  };
  int failed = 0;
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Verdict v;
    const auto t = std::chrono::steady_clock::now();
    try {
      criteria[k].second(v);
    } catch (const std::exception& e) {
      v.require(false, e.what());
    }
    std::printf("%s %2zu %-26s %.1fs  %s\n", v.pass ? "PASS" : "FAIL", k + 1, criteria[k].first, seconds_since(t),
                v.detail.str().c_str());
    std::fflush(stdout);
    failed += v.pass ? 0 : 1;
  }
  std::printf("%zu/%zu criteria passed in %.1fs\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size(),
              seconds_since(start));
  return failed == 0 ? 0 : 1;
}
