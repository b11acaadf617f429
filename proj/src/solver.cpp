#include "curtain/solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

namespace curtain {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool lex_less(const Vector& a, const Vector& b) {
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

Polytope carrier_polytope(const Simplex<double>& s, FanMode mode) {
  if (mode == FanMode::A) return build_zonotope(s).polytope;
  return Polytope::from_vertices(s.vertices());
}

// Minkowski gauge of a body containing the origin in its interior.
double gauge(const Polytope& body, const Vector& p) {
  double g = 0;
  for (const auto& h : body.halfspaces()) g = std::max(g, h.normal.dot(p) / h.offset);
  return g;
}

struct Plane {
  Vector n;
  double c{0};
};

struct Atom {
  Vector p;
  double w{0};
  std::size_t measure{0};
};

struct Candidate {
  double res{kInf};
  std::size_t alloc{0};
  Vector x;
};

bool better(const Candidate& a, const Candidate& b) {
  if (a.res != b.res) return a.res < b.res;
  if (a.alloc != b.alloc) return a.alloc < b.alloc;
  return lex_less(a.x, b.x);
}

struct Search {
  Instance inst;
  double scale{1};
  Polytope carrier;
  Fan<double> base;
  Vector totals;
  std::vector<Allocation> allocs;
  double tight{0};
  double target{0};
  double diam{1};
  double margin{0};
  long evals{0};
  long budget{0};
  bool discrete{false};

  bool exhausted() const { return evals >= budget; }

  bool inside(const Vector& x) const {
    for (const auto& h : carrier.halfspaces())
      if (h.normal.dot(x) < (1 - margin) * h.offset - 1e-14 * diam) return false;
    return true;
  }

  Vector retract(const Vector& x) const {
    double t = 1;
    for (const auto& h : carrier.halfspaces()) {
      const double nx = h.normal.dot(x);
      const double bound = (1 - margin) * h.offset;
      if (nx < bound) t = std::min(t, bound / nx);
    }
    return t < 1 ? Vector(x * (t * (1 - 1e-12))) : x;
  }

  Fan<double> fan_at(const Vector& x) const {
    return inst.mode == FanMode::A ? base.translated_to(x) : apex_fan(inst.simplex, x);
  }

  Matrix masses(const Vector& x) {
    ++evals;
    return cone_masses(inst, x);
  }
};

Vector equations(const DiscrepancyMatrix& m) {
  const auto n = m.entries.rows();
  const int q = m.q();
  Vector g(n * (q - 1));
  for (Eigen::Index i = 0; i < n; ++i)
    for (int j = 0; j + 1 < q; ++j) g(i * (q - 1) + j) = m.entries(i, j) - m.totals(i) / q;
  return g;
}

std::vector<MassDistribution> as_clouds(const std::vector<MassDistribution>& ms, const SolverConfig& cfg) {
  std::vector<MassDistribution> out;
  std::uint64_t stream = cfg.seed;
  for (const auto& m : ms) {
    if (m.is_cloud()) {
      out.push_back(m);
    } else {
      const auto c = sample_distribution(m, cfg.body_samples, stream);
      out.push_back(MassDistribution::points(c.points, c.weights));
    }
    stream += 1000;
  }
  return out;
}

Search make_search(const Instance& inst, const SolverConfig& cfg) {
  if (!(cfg.epsilon > 0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
  if (cfg.max_evaluations <= 0 || cfg.candidates <= 0) throw Error(ErrorCode::InvalidArgument, "budgets must be positive");
  Search s;
  const bool any_cloud = std::any_of(inst.measures.begin(), inst.measures.end(), [](const auto& m) { return m.is_cloud(); });
  s.discrete = any_cloud;
  Instance prepared = inst;
  if (any_cloud) prepared.measures = as_clouds(inst.measures, cfg);
  s.inst = with_homothety(prepared, &s.scale);
  s.carrier = carrier_polytope(s.inst.simplex, s.inst.mode);
  s.base = face_fan(s.inst.simplex);
  s.totals = s.inst.totals();
  s.allocs = allocations(s.inst.dim(), s.inst.q);
  s.tight = cfg.epsilon * s.totals.maxCoeff();
  s.target = acceptance_target(s.inst, cfg);
  s.diam = (s.carrier.upper() - s.carrier.lower()).norm();
  s.margin = s.inst.mode == FanMode::B ? 1e-9 : 0.0;
  s.budget = cfg.max_evaluations;
  return s;
}

std::vector<Vector> grid_points(const Search& s, int per_axis) {
  const auto d = s.inst.dim();
  Vector lo = s.carrier.lower(), hi = s.carrier.upper();
  if (s.discrete) {
    // apexes away from every atom leave too few walls engaged
    Vector alo = Vector::Constant(d, kInf), ahi = Vector::Constant(d, -kInf);
    for (const auto& m : s.inst.measures) {
      alo = alo.cwiseMin(m.cloud().points.rowwise().minCoeff());
      ahi = ahi.cwiseMax(m.cloud().points.rowwise().maxCoeff());
    }
    lo = lo.cwiseMax(alo);
    hi = hi.cwiseMin(ahi);
  }
  std::vector<Vector> pts{Vector::Zero(d)};
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  for (;;) {
    Vector x(d);
    for (Eigen::Index k = 0; k < d; ++k)
      x(k) = lo(k) + (hi(k) - lo(k)) * (idx[static_cast<std::size_t>(k)] + 0.5) / per_axis;
    if (s.inside(x)) pts.push_back(x);
    Eigen::Index k = 0;
    while (k < d && ++idx[static_cast<std::size_t>(k)] == per_axis) idx[static_cast<std::size_t>(k++)] = 0;
    if (k == d) break;
  }
  return pts;
}

int default_grid(Eigen::Index d) {
  switch (d) {
    case 1: return 101;
    case 2: return 25;
    case 3: return 11;
    case 4: return 7;
    default: return 5;
  }
}

// Stage 1: best grid point per allocation, then the overall best, up to `count`.
std::vector<Candidate> coarse_candidates(Search& s, const SolverConfig& cfg) {
  const auto pts = grid_points(s, cfg.grid > 0 ? cfg.grid : default_grid(s.inst.dim()));
  std::vector<Candidate> all;
  std::vector<Candidate> per_alloc(s.allocs.size());
  for (const auto& x : pts) {
    const Matrix m = s.masses(x);
    for (std::size_t a = 0; a < s.allocs.size(); ++a) {
      Candidate c{residual(group_by_color(m, s.totals, s.allocs[a])), a, x};
      if (better(c, per_alloc[a])) per_alloc[a] = c;
      all.push_back(std::move(c));
    }
  }
  std::sort(per_alloc.begin(), per_alloc.end(), better);
  std::sort(all.begin(), all.end(), better);
  std::vector<Candidate> out;
  auto add = [&](const Candidate& c) {
    if (static_cast<int>(out.size()) >= cfg.candidates) return;
    for (const auto& o : out)
      if (o.alloc == c.alloc && o.x == c.x) return;
    out.push_back(c);
  };
  for (const auto& c : per_alloc)
    if (c.res < kInf) add(c);
  for (const auto& c : all) add(c);
  return out;
}

using Objective = std::function<double(const Vector&, Vector&)>;

// Damped Gauss-Newton on the fairness equations with a finite-difference Jacobian.
double levenberg_marquardt(Search& s, const Objective& f, Vector& x, int iterations, double stop) {
  const auto d = x.size();
  Vector g;
  double res = f(x, g);
  double merit = g.norm();
  double lambda = 1e-9;
  const double h = 1e-7 * s.diam;
  for (int it = 0; it < iterations && res > stop && !s.exhausted(); ++it) {
    Matrix jac(g.size(), d);
    Vector gp, gm;
    for (Eigen::Index k = 0; k < d; ++k) {
      Vector hi = x, lo = x;
      hi(k) += h;
      lo(k) -= h;
      const bool hi_ok = s.inside(hi), lo_ok = s.inside(lo);
      if (hi_ok && lo_ok) {
        f(hi, gp);
        f(lo, gm);
        jac.col(k) = (gp - gm) / (2 * h);
      } else if (hi_ok) {
        f(hi, gp);
        jac.col(k) = (gp - g) / h;
      } else {
        f(lo, gm);
        jac.col(k) = (g - gm) / h;
      }
    }
    const Matrix jtj = jac.transpose() * jac;
    const Vector jtg = jac.transpose() * g;
    const double floor = 1e-12 * std::max(jtj.trace(), 1e-300);
    bool accepted = false;
    for (int attempt = 0; attempt < 14 && !accepted; ++attempt) {
      Matrix a = jtj;
      a.diagonal().array() += lambda * jtj.diagonal().array() + floor;
      const Vector step = -a.ldlt().solve(jtg);
      if (!step.allFinite()) {
        lambda *= 10;
        continue;
      }
      const Vector y = s.retract(x + step);
      Vector gy;
      const double ry = f(y, gy);
      if (gy.norm() < merit) {
        x = y;
        g = gy;
        res = ry;
        merit = gy.norm();
        lambda = std::max(lambda / 10, 1e-12);
        accepted = true;
      } else {
        lambda *= 10;
      }
    }
    if (!accepted) break;
  }
  return res;
}

double nelder_mead(Search& s, const std::function<double(const Vector&)>& f, Vector& x, double size, int iterations) {
  const auto d = x.size();
  std::vector<Vector> v{x};
  for (Eigen::Index k = 0; k < d; ++k) {
    Vector y = x;
    y(k) += size;
    v.push_back(s.retract(y));
  }
  std::vector<double> fv;
  for (const auto& y : v) fv.push_back(f(y));
  std::vector<std::size_t> order(v.size());
  for (int it = 0; it < iterations && !s.exhausted(); ++it) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[order.size() - 2];
    Vector centroid = Vector::Zero(d);
    for (std::size_t i = 0; i < v.size(); ++i)
      if (i != worst) centroid += v[i];
    centroid /= static_cast<double>(d);
    const Vector xr = s.retract(centroid + (centroid - v[worst]));
    const double fr = f(xr);
    if (fr < fv[best]) {
      const Vector xe = s.retract(centroid + 2 * (centroid - v[worst]));
      const double fe = f(xe);
      if (fe < fr) {
        v[worst] = xe;
        fv[worst] = fe;
      } else {
        v[worst] = xr;
        fv[worst] = fr;
      }
    } else if (fr < fv[second]) {
      v[worst] = xr;
      fv[worst] = fr;
    } else {
      const Vector xc = s.retract(centroid + 0.5 * (v[worst] - centroid));
      const double fc = f(xc);
      if (fc < fv[worst]) {
        v[worst] = xc;
        fv[worst] = fc;
      } else {
        for (std::size_t i = 0; i < v.size(); ++i) {
          if (i == best) continue;
          v[i] = v[best] + 0.5 * (v[i] - v[best]);
          fv[i] = f(v[i]);
        }
      }
    }
  }
  const auto it = std::min_element(fv.begin(), fv.end());
  x = v[static_cast<std::size_t>(it - fv.begin())];
  return *it;
}

Candidate refine_continuous(Search& s, const Candidate& start, double spacing) {
  const Allocation& theta = s.allocs[start.alloc];
  Objective eq = [&](const Vector& y, Vector& g) {
    const auto m = group_by_color(s.masses(y), s.totals, theta);
    g = equations(m);
    return residual(m);
  };
  auto res_only = [&](const Vector& y) { return residual(group_by_color(s.masses(y), s.totals, theta)); };
  Vector x = start.x;
  double r = levenberg_marquardt(s, eq, x, 60, s.tight);
  if (r > s.tight) {
    Vector y = x;
    const double rn = nelder_mead(s, res_only, y, 0.5 * spacing, 80 * static_cast<int>(x.size()));
    if (rn < r) {
      x = y;
      r = rn;
    }
    r = levenberg_marquardt(s, eq, x, 60, s.tight);
  }
  return Candidate{r, start.alloc, x};
}

Solution solve(const Instance& inst, const SolverConfig& cfg);

// Start point from a sampled copy of the bodies solved as a point cloud problem.
// Fan cones are invariant under scaling the simplex, so the apex carries over.
Candidate sampled_seed(Search& s, const SolverConfig& cfg, std::size_t samples) {
  Instance sampled = s.inst;
  for (std::size_t i = 0; i < sampled.size(); ++i) {
    const auto c = sample_distribution(sampled.measures[i], samples, cfg.seed + 7919 * (i + 1));
    sampled.measures[i] = MassDistribution::points(c.points, c.weights);
  }
  SolverConfig sub = cfg;
  sub.max_evaluations = std::max(1L, s.budget - s.evals);
  const Solution sol = solve(sampled, sub);
  s.evals += sol.evaluations;
  const auto it = std::find(s.allocs.begin(), s.allocs.end(), sol.theta);
  if (it == s.allocs.end() || sol.x.size() == 0) return Candidate{};
  return Candidate{kInf, static_cast<std::size_t>(it - s.allocs.begin()), s.retract(sol.x)};
}

Candidate search_continuous(Search& s, const SolverConfig& cfg, std::string& method) {
  const auto cands = coarse_candidates(s, cfg);
  const int per_axis = cfg.grid > 0 ? cfg.grid : default_grid(s.inst.dim());
  const double spacing = s.diam / per_axis;
  Candidate best;
  method = "grid+newton";
  for (const auto& c : cands) {
    if (better(c, best)) best = c;
    if (best.res <= s.tight) break;
    const Candidate r = refine_continuous(s, c, spacing);
    if (better(r, best)) best = r;
    if (best.res <= s.tight || s.exhausted()) break;
  }
  for (std::size_t samples : {400, 1600}) {
    if (best.res <= s.tight || s.exhausted()) break;
    method = "grid+newton+sampled";
    const Candidate c = sampled_seed(s, cfg, samples);
    if (c.x.size() == 0) continue;
    const Candidate r = refine_continuous(s, c, spacing);
    if (better(r, best)) best = r;
  }
  return best;
}

// ---- point clouds ----

std::vector<Atom> atoms_of(const Instance& inst) {
  std::vector<Atom> out;
  for (std::size_t i = 0; i < inst.measures.size(); ++i) {
    const auto& c = inst.measures[i].cloud();
    for (Eigen::Index k = 0; k < c.points.cols(); ++k) out.push_back({c.points.col(k), c.weights(k), i});
  }
  return out;
}

// Apexes on this hyperplane put p on the wall between cones nu and mu.
std::optional<Plane> wall_plane(const Search& s, const Vector& p, Eigen::Index nu, Eigen::Index mu) {
  const auto d = s.inst.dim();
  if (d == 1) return Plane{Vector::Ones(1), p(0)};
  Matrix rows(d - 1, d);
  for (Eigen::Index k = 0, r = 0; k <= d; ++k) {
    if (k == nu || k == mu) continue;
    const Vector dir = s.inst.mode == FanMode::A ? Vector(s.inst.simplex.vertex(k)) : Vector(s.inst.simplex.vertex(k) - p);
    rows.row(r++) = dir.transpose();
  }
  Eigen::FullPivLU<Matrix> lu(rows);
  if (lu.rank() != d - 1) return std::nullopt;
  Vector n = lu.kernel().col(0).normalized();
  return Plane{n, n.dot(p)};
}

struct Merit {
  double res{kInf};
  double l1{kInf};
  bool operator<(const Merit& o) const { return res != o.res ? res < o.res : l1 < o.l1 - 1e-15 * std::abs(o.l1); }
};

Merit merit_of(const DiscrepancyMatrix& m) {
  const Vector g = (m.entries - m.totals.replicate(1, m.q()) / m.q()).reshaped();
  return {g.cwiseAbs().maxCoeff(), g.cwiseAbs().sum()};
}

Candidate search_exact(Search& s) {
  const auto d = s.inst.dim();
  const auto atoms = atoms_of(s.inst);
  std::vector<Plane> planes;
  for (const auto& a : atoms)
    for (Eigen::Index nu = 0; nu <= d; ++nu)
      for (Eigen::Index mu = nu + 1; mu <= d; ++mu)
        if (auto p = wall_plane(s, a.p, nu, mu)) planes.push_back(*p);
  for (const auto& h : s.carrier.halfspaces()) planes.push_back({h.normal, h.offset});

  Candidate best;
  auto consider = [&](const Vector& x) {
    if (!s.inside(x)) return;
    const Matrix m = s.masses(x);
    for (std::size_t a = 0; a < s.allocs.size(); ++a) {
      const Candidate c{residual(group_by_color(m, s.totals, s.allocs[a])), a, x};
      if (better(c, best)) best = c;
    }
  };

  const double tol = 1e-9 * s.diam;
  if (d == 1) {
    std::vector<double> cuts;
    for (const auto& p : planes) cuts.push_back(p.c / p.n(0));
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
      if (cuts[k + 1] - cuts[k] > tol) consider(Vector::Constant(1, 0.5 * (cuts[k] + cuts[k + 1])));
    return best;
  }
  if (d != 2) throw Error(ErrorCode::DimensionTooLarge, "full arrangement enumeration is planar only");

  for (std::size_t i = 0; i < planes.size(); ++i) {
    for (std::size_t j = i + 1; j < planes.size(); ++j) {
      Eigen::Matrix2d nm;
      nm << planes[i].n(0), planes[i].n(1), planes[j].n(0), planes[j].n(1);
      const double det = nm.determinant();
      if (std::abs(det) < 1e-12) continue;
      const Vector v = nm.inverse() * Eigen::Vector2d(planes[i].c, planes[j].c);
      if (!s.carrier.contains(v, tol)) continue;
      std::vector<double> angles;
      double gap = kInf;
      bool duplicate = false;
      for (std::size_t k = 0; k < planes.size(); ++k) {
        const double dist = std::abs(planes[k].n.dot(v) - planes[k].c);
        if (dist <= tol) {
          // each vertex is visited once, from its two lowest-indexed lines
          if (k < j && k != i) duplicate = true;
          const double a = std::atan2(planes[k].n(0), -planes[k].n(1));
          angles.push_back(a);
          angles.push_back(a > 0 ? a - std::numbers::pi : a + std::numbers::pi);
        } else {
          gap = std::min(gap, dist);
        }
      }
      if (duplicate) continue;
      std::sort(angles.begin(), angles.end());
      std::vector<double> uniq;
      for (double a : angles)
        if (uniq.empty() || a - uniq.back() > 1e-12) uniq.push_back(a);
      const double eps = std::min(0.5 * gap, 1e-3 * s.diam);
      for (std::size_t k = 0; k < uniq.size(); ++k) {
        const double a0 = uniq[k];
        const double a1 = k + 1 < uniq.size() ? uniq[k + 1] : uniq.front() + 2 * std::numbers::pi;
        const double mid = 0.5 * (a0 + a1);
        consider(v + eps * Vector{{std::cos(mid), std::sin(mid)}});
      }
    }
  }
  return best;
}

int polish_width(Eigen::Index d) { return d <= 1 ? 32 : d == 2 ? 24 : 28; }

// Exact local search over the arrangement cells near x. Atoms whose walls are
// all farther than the radius keep their cone, so only near atoms are reclassified.
Candidate polish(Search& s, const std::vector<Atom>& atoms, std::size_t alloc, Vector x) {
  const auto d = s.inst.dim();
  const auto n = static_cast<Eigen::Index>(s.inst.size());
  const Allocation& theta = s.allocs[alloc];
  const double eps = 1e-7 * s.diam;
  auto matrix_of = [&](const Matrix& masses) { return group_by_color(masses, s.totals, theta); };

  Merit current = merit_of(matrix_of(s.masses(x)));
  for (int round = 0; round < 80; ++round) {
    const Fan<double> fan = s.fan_at(x);
    struct Entry {
      double dist;
      std::size_t atom;
      Plane plane;
    };
    std::vector<Entry> entries, same;
    std::vector<int> owner(atoms.size());
    for (std::size_t k = 0; k < atoms.size(); ++k) {
      owner[k] = fan.owner(atoms[k].p - x);
      for (Eigen::Index mu = 0; mu <= d; ++mu) {
        if (mu == owner[k]) continue;
        auto p = wall_plane(s, atoms[k].p, owner[k], mu);
        if (!p) continue;
        // walls between cones of one color move no mass
        auto& list = theta[static_cast<std::size_t>(mu)] == theta[static_cast<std::size_t>(owner[k])] ? same : entries;
        list.push_back({std::abs(p->n.dot(x) - p->c), k, *p});
      }
    }
    const std::size_t width = std::min<std::size_t>(static_cast<std::size_t>(polish_width(d)), entries.size());
    std::partial_sort(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(std::min(width + 1, entries.size())),
                      entries.end(), [](const Entry& a, const Entry& b) { return a.dist < b.dist; });
    const double radius = width < entries.size() ? entries[width].dist : kInf;
    std::vector<char> near(atoms.size(), 0);
    for (std::size_t k = 0; k < width; ++k) near[entries[k].atom] = 1;
    for (const auto& e : same)
      if (e.dist < radius) near[e.atom] = 1;
    Matrix fixed = Matrix::Zero(n, d + 1);
    std::vector<std::size_t> near_atoms;
    for (std::size_t k = 0; k < atoms.size(); ++k) {
      if (near[k]) {
        near_atoms.push_back(k);
      } else {
        fixed(static_cast<Eigen::Index>(atoms[k].measure), owner[k]) += atoms[k].w;
      }
    }

    Merit best_m = current;
    Vector best_x = x;
    auto consider = [&](const Vector& y) {
      if ((y - x).norm() >= radius || !s.inside(y)) return;
      const Fan<double> fy = s.fan_at(y);
      Matrix m = fixed;
      for (std::size_t k : near_atoms) m(static_cast<Eigen::Index>(atoms[k].measure), fy.owner(atoms[k].p - y)) += atoms[k].w;
      const Merit mm = merit_of(matrix_of(m));
      if (mm < best_m || (!(best_m < mm) && lex_less(y, best_x) && best_x != x)) {
        best_m = mm;
        best_x = y;
      }
    };
    for (std::size_t k = 0; k < width; ++k) {
      const Plane& p = entries[k].plane;
      const double off = p.c - p.n.dot(x);
      consider(x + (off + (off >= 0 ? eps : -eps)) * p.n);
    }
    if (d >= 2 && width >= static_cast<std::size_t>(d)) {
      std::vector<int> pick(static_cast<std::size_t>(d));
      for (Eigen::Index k = 0; k < d; ++k) pick[static_cast<std::size_t>(k)] = static_cast<int>(k);
      do {
        Matrix nm(d, d);
        Vector c(d);
        for (Eigen::Index k = 0; k < d; ++k) {
          const Plane& p = entries[static_cast<std::size_t>(pick[static_cast<std::size_t>(k)])].plane;
          nm.row(k) = p.n.transpose();
          c(k) = p.c;
        }
        Eigen::FullPivLU<Matrix> lu(nm);
        if (lu.rank() < d) continue;
        const Vector v = lu.solve(c);
        if ((v - x).norm() >= radius) continue;
        const Matrix inv = lu.inverse();
        for (int mask = 0; mask < (1 << d); ++mask) {
          Vector sgn(d);
          for (Eigen::Index k = 0; k < d; ++k) sgn(k) = ((mask >> k) & 1) ? eps : -eps;
          consider(v + inv * sgn);
        }
      } while (detail::next_combination(pick, static_cast<int>(width)));
    }
    if (!(best_m < current)) break;
    current = best_m;
    x = best_x;
  }
  return Candidate{current.res, alloc, x};
}

// Defect correction: solve soft(y) = soft(x) - hard(x) and keep y when the exact counts improve.
Vector defect_correction(Search& s, const Objective& soft, const Allocation& theta, Vector x) {
  auto hard = [&](const Vector& y) { return group_by_color(s.masses(y), s.totals, theta); };
  DiscrepancyMatrix m = hard(x);
  Merit current = merit_of(m);
  for (int it = 0; it < 30 && current.res > s.target && !s.exhausted(); ++it) {
    Vector gs;
    soft(x, gs);
    const Vector shift = gs - equations(m);
    Objective shifted = [&](const Vector& y, Vector& g) {
      const double r = soft(y, g);
      g -= shift;
      (void)r;
      return g.cwiseAbs().maxCoeff();
    };
    Vector y = x;
    levenberg_marquardt(s, shifted, y, 40, 0.0);
    const DiscrepancyMatrix my = hard(y);
    const Merit mm = merit_of(my);
    if (!(mm < current)) break;
    x = y;
    m = my;
    current = mm;
  }
  return x;
}

// Exact sweep of the color masses along x + t * dir for |t| <= reach. Ownership
// only changes where an atom meets one of its wall planes, so only those events
// are visited.
std::pair<Merit, Vector> line_search(Search& s, const std::vector<Atom>& atoms, std::size_t alloc, const Vector& x,
                                     const Vector& dir, double reach) {
  const auto d = s.inst.dim();
  const int q = s.inst.q;
  const Allocation& theta = s.allocs[alloc];
  auto color_at = [&](const Fan<double>& fan, std::size_t k, const Vector& y) {
    return theta[static_cast<std::size_t>(fan.owner(atoms[k].p - y))];
  };
  const Fan<double> fx = s.fan_at(x);
  std::vector<int> color0(atoms.size());
  Matrix cm0 = Matrix::Zero(static_cast<Eigen::Index>(s.inst.size()), q);
  for (std::size_t k = 0; k < atoms.size(); ++k) {
    color0[k] = color_at(fx, k, x);
    cm0(static_cast<Eigen::Index>(atoms[k].measure), color0[k]) += atoms[k].w;
  }
  auto merit = [&](const Matrix& cm) {
    const Matrix g = cm - s.totals.replicate(1, q) / q;
    return Merit{g.cwiseAbs().maxCoeff(), g.cwiseAbs().sum()};
  };

  struct Event {
    double t;
    std::size_t atom;
  };
  std::vector<Event> ahead, behind;
  for (Eigen::Index nu = 0; nu <= d; ++nu) {
    for (Eigen::Index mu = nu + 1; mu <= d; ++mu) {
      if (theta[static_cast<std::size_t>(nu)] == theta[static_cast<std::size_t>(mu)]) continue;
      std::optional<Plane> shared;
      if (s.inst.mode == FanMode::A && !atoms.empty()) shared = wall_plane(s, atoms.front().p, nu, mu);
      for (std::size_t k = 0; k < atoms.size(); ++k) {
        const auto p = s.inst.mode == FanMode::A ? shared : wall_plane(s, atoms[k].p, nu, mu);
        if (!p) continue;
        const double denom = p->n.dot(dir);
        if (denom == 0) continue;
        const double t = (p->n.dot(atoms[k].p) - p->n.dot(x)) / denom;
        if (t > 0 && t <= reach) ahead.push_back({t, k});
        if (t < 0 && t >= -reach) behind.push_back({-t, k});
      }
    }
  }

  Merit best = merit(cm0);
  double best_t = 0;
  for (int side : {1, -1}) {
    auto& ev = side > 0 ? ahead : behind;
    std::sort(ev.begin(), ev.end(), [](const Event& a, const Event& b) { return a.t < b.t; });
    Matrix cm = cm0;
    std::vector<int> color = color0;
    for (std::size_t i = 0; i < ev.size();) {
      std::size_t j = i;
      while (j < ev.size() && ev[j].t == ev[i].t) ++j;
      const double next = j < ev.size() ? ev[j].t : reach;
      const double mid = side * 0.5 * (ev[i].t + next);
      const Vector y = x + mid * dir;
      if (!s.inside(y)) break;
      const Fan<double> fy = s.fan_at(y);
      for (std::size_t k = i; k < j; ++k) {
        const std::size_t a = ev[k].atom;
        const int c = color_at(fy, a, y);
        if (c == color[a]) continue;
        cm(static_cast<Eigen::Index>(atoms[a].measure), color[a]) -= atoms[a].w;
        cm(static_cast<Eigen::Index>(atoms[a].measure), c) += atoms[a].w;
        color[a] = c;
      }
      const Merit m = merit(cm);
      if (m < best) {
        best = m;
        best_t = mid;
      }
      i = j;
    }
  }
  return {best, x + best_t * dir};
}

// Descent by exact line searches along the axes and random directions.
Candidate line_polish(Search& s, const std::vector<Atom>& atoms, Candidate p, CounterRng& rng) {
  const auto d = s.inst.dim();
  const double reach = 0.02 * s.diam;
  Merit current = merit_of(group_by_color(s.masses(p.x), s.totals, s.allocs[p.alloc]));
  for (int round = 0; round < 60 && current.res > s.target && !s.exhausted(); ++round) {
    Merit best = current;
    Vector best_x = p.x;
    for (Eigen::Index k = 0; k < 16 * d; ++k) {
      Vector dir = Vector::Zero(d);
      if (k < d) {
        dir(k) = 1;
      } else {
        for (Eigen::Index i = 0; i < d; ++i) dir(i) = rng.uniform(-1, 1);
        dir.normalize();
      }
      ++s.evals;
      const auto [m, y] = line_search(s, atoms, p.alloc, p.x, dir, reach);
      if (m < best) {
        best = m;
        best_x = y;
      }
    }
    if (!(best < current)) break;
    current = best;
    p.x = best_x;
  }
  p.res = current.res;
  return p;
}

// Iterated local search: random hops a few cells wide, each polished.
Candidate hop_and_polish(Search& s, const std::vector<Atom>& atoms, Candidate p) {
  CounterRng rng(0x5eed + p.alloc);
  const auto d = s.inst.dim();
  if (d >= 2) {
    const Candidate l = line_polish(s, atoms, p, rng);
    if (better(l, p)) p = polish(s, atoms, l.alloc, l.x);
    if (better(l, p)) p = l;
  }
  for (int hop = 0; hop < 60 && p.res > s.target && !s.exhausted(); ++hop) {
    Vector dir(d);
    for (Eigen::Index k = 0; k < d; ++k) dir(k) = rng.uniform(-1, 1);
    const double size = 1e-4 * s.diam * std::pow(2.0, hop % 6);
    const Candidate r = polish(s, atoms, p.alloc, s.retract(p.x + size * dir.normalized()));
    if (better(r, p)) p = r;
  }
  return p;
}

// Pseudo-arclength continuation of the smoothed zero in (x, log temperature),
// which passes folds where plain continuation in the temperature stalls.
// Returns the coldest point reached and its temperature.
std::pair<Vector, double> track_zero(Search& s, const std::function<Objective(double)>& soft_at, const Vector& x0,
                                     double t0, double t_min) {
  const auto d = x0.size();
  const double scale = s.diam;
  const double tol = 0.01 * s.target;
  auto eval = [&](const Vector& u, Vector& g) {
    const Vector y = u.head(d) * scale;
    if (!s.inside(y)) return false;
    soft_at(std::exp(u(d)))(y, g);
    return true;
  };
  auto jacobian = [&](const Vector& u, Matrix& jac) {
    const double h = 1e-7;
    jac.resize(d, d + 1);
    Vector gp, gm;
    for (Eigen::Index k = 0; k <= d; ++k) {
      Vector hi = u, lo = u;
      hi(k) += h;
      lo(k) -= h;
      if (!eval(hi, gp) || !eval(lo, gm)) return false;
      jac.col(k) = (gp - gm) / (2 * h);
    }
    return true;
  };
  auto tangent = [&](const Matrix& jac) -> Vector {
    Eigen::FullPivLU<Matrix> lu(jac);
    if (lu.rank() < d) return Vector();
    return lu.kernel().col(0).normalized();
  };

  Vector u(d + 1);
  u << x0 / scale, std::log(t0);
  Matrix jac;
  if (!jacobian(u, jac)) return {x0, t0};
  Vector tan = tangent(jac);
  if (tan.size() == 0) return {x0, t0};
  if (tan(d) > 0) tan = -tan;
  Vector coldest = u;
  double h = 0.05;
  for (int step = 0; step < 400 && !s.exhausted(); ++step) {
    const Vector predicted = u + h * tan;
    Vector v = predicted;
    Vector g;
    bool converged = false;
    for (int it = 0; it < 8; ++it) {
      if (!eval(v, g)) break;
      if (g.cwiseAbs().maxCoeff() <= tol) {
        converged = true;
        break;
      }
      Matrix jv;
      if (!jacobian(v, jv)) break;
      Matrix a(d + 1, d + 1);
      a.topRows(d) = jv;
      a.row(d) = tan.transpose();
      Vector rhs(d + 1);
      rhs.head(d) = -g;
      rhs(d) = -tan.dot(v - predicted);
      const Vector dv = a.fullPivLu().solve(rhs);
      if (!dv.allFinite()) break;
      v += dv;
    }
    if (!converged) {
      h /= 2;
      if (h < 1e-7) break;
      continue;
    }
    if (!jacobian(v, jac)) break;
    Vector next = tangent(jac);
    if (next.size() == 0) break;
    if (next.dot(tan) < 0) next = -next;
    u = v;
    tan = next;
    h = std::min(2 * h, 0.5);
    if (u(d) < coldest(d)) coldest = u;
    if (u(d) <= std::log(t_min) || u(d) > std::log(t0) + 2) break;
  }
  return {coldest.head(d) * scale, std::exp(coldest(d))};
}

Candidate smooth_then_polish(Search& s, const std::vector<Atom>& atoms, const Candidate& start, double spread) {
  const Allocation& theta = s.allocs[start.alloc];
  const double tau = spread / s.inst.simplex.circumradius();
  const std::function<Objective(double)> soft_at = [&s, &theta](double t) -> Objective {
    return [&s, &theta, t](const Vector& y, Vector& g) {
      ++s.evals;
      const Fan<double> fan = s.fan_at(y);
      Matrix m(static_cast<Eigen::Index>(s.inst.size()), s.inst.dim() + 1);
      for (std::size_t i = 0; i < s.inst.size(); ++i)
        m.row(static_cast<Eigen::Index>(i)) = soft_fan_masses(s.inst.measures[i].cloud(), fan, t).transpose();
      const auto dm = group_by_color(m, s.totals, theta);
      g = equations(dm);
      return residual(dm);
    };
  };
  auto finish = [&](const Vector& x) {
    Candidate p = polish(s, atoms, start.alloc, start.x);
    if (x != start.x) {
      const Candidate q = polish(s, atoms, start.alloc, x);
      if (better(q, p)) p = q;
    }
    return hop_and_polish(s, atoms, p);
  };
  // follow the smoothed zero as the temperature falls
  Vector x = start.x;
  const double warm_res = levenberg_marquardt(s, soft_at(0.1 * tau), x, 40, 0.0);
  if (warm_res > s.target) return finish(start.x);
  const Vector warm = x;
  double temperature = 0.1 * tau;
  Candidate best;
  if (warm_res <= 0.01 * s.target) {
    std::tie(x, temperature) = track_zero(s, soft_at, x, temperature, 1e-4 * tau);
    best = finish(defect_correction(s, soft_at(temperature), theta, x));
    if (best.res <= s.target || s.exhausted()) return best;
  }
  // fall back to stepping the temperature down
  x = warm;
  temperature = 0.1 * tau;
  for (double t : {0.05, 0.025, 0.0125, 0.006, 0.003, 0.0015, 0.001}) {
    Vector y = x;
    if (levenberg_marquardt(s, soft_at(t * tau), y, 40, 0.0) > s.target) break;
    x = y;
    temperature = t * tau;
  }
  const Candidate q = finish(defect_correction(s, soft_at(temperature), theta, x));
  return better(q, best) ? q : best;
}

Candidate search_discrete(Search& s, const SolverConfig& cfg, std::string& method) {
  const auto atoms = atoms_of(s.inst);
  const auto d = s.inst.dim();
  if ((d == 2 && static_cast<int>(atoms.size()) <= cfg.exact_points) || (d == 1 && atoms.size() <= 2000)) {
    method = "arrangement";
    return search_exact(s);
  }
  method = "smoothing+arrangement";
  Matrix pts(d, static_cast<Eigen::Index>(atoms.size()));
  for (std::size_t k = 0; k < atoms.size(); ++k) pts.col(static_cast<Eigen::Index>(k)) = atoms[k].p;
  const double spread = (pts.rowwise().maxCoeff() - pts.rowwise().minCoeff()).norm();
  Candidate best;
  for (const auto& c : coarse_candidates(s, cfg)) {
    if (better(c, best)) best = c;
    if (best.res <= s.target || s.exhausted()) break;
    const Candidate r = smooth_then_polish(s, atoms, c, std::max(spread, 1e-12));
    if (better(r, best)) best = r;
    if (best.res <= s.target || s.exhausted()) break;
  }
  return best;
}

Solution finish(Search& s, const Candidate& best, const std::string& method) {
  Solution sol;
  sol.x = best.x;
  sol.theta = s.allocs.at(best.alloc);
  sol.matrix = color_masses(s.inst, sol.x, sol.theta);
  sol.residual = residual(sol.matrix);
  sol.simplex = s.inst.simplex;
  sol.scale = s.scale;
  sol.target = s.discrete ? s.target : s.tight;
  sol.evaluations = s.evals;
  sol.method = method;
  if (sol.residual <= s.tight) {
    sol.status = SolveStatus::Converged;
  } else if (s.discrete && sol.residual <= s.target) {
    sol.status = SolveStatus::DiscretizationFloor;
  } else {
    sol.status = SolveStatus::BudgetExceeded;
  }
  return sol;
}

Solution solve(const Instance& inst, const SolverConfig& cfg) {
  Search s = make_search(inst, cfg);
  std::string method;
  const Candidate best = s.discrete ? search_discrete(s, cfg, method) : search_continuous(s, cfg, method);
  if (best.res == kInf) throw Error(ErrorCode::InvalidArgument, "no admissible apex found in the carrier");
  return finish(s, best, method);
}

}  // namespace

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::DiscretizationFloor: return "discretization_floor";
    case SolveStatus::BudgetExceeded: return "budget_exceeded";
  }
  return "unknown";
}

Instance Instance::create(Simplex<double> simplex, std::vector<MassDistribution> measures, int q, FanMode mode) {
  if (q < 2) throw Error(ErrorCode::InvalidArgument, "palette needs at least two colors");
  if (measures.empty()) throw Error(ErrorCode::InvalidArgument, "at least one measure is required");
  const auto d = simplex.dim();
  for (const auto& m : measures)
    if (m.dim() != d) throw Error(ErrorCode::InvalidArgument, "measure dimension differs from the simplex");
  if (d != static_cast<Eigen::Index>(measures.size()) * (q - 1))
    throw Error(ErrorCode::InvalidArgument, "dimension must equal n(q-1)");
  return Instance{std::move(simplex), std::move(measures), q, mode};
}

Vector Instance::totals() const {
  Vector t(static_cast<Eigen::Index>(measures.size()));
  for (std::size_t i = 0; i < measures.size(); ++i) t(static_cast<Eigen::Index>(i)) = measures[i].total();
  return t;
}

std::pair<int, int> verify_prime_power(int q) {
  if (q < 2) throw Error(ErrorCode::NotPrimePower, "palette size must be at least 2");
  int p = 2;
  while (p * p <= q && q % p != 0) ++p;
  if (q % p != 0) p = q;
  int k = 0, rest = q;
  while (rest % p == 0) {
    rest /= p;
    ++k;
  }
  if (rest != 1) throw Error(ErrorCode::NotPrimePower, std::to_string(q) + " is not a prime power");
  return {p, k};
}

std::vector<Allocation> allocations(Eigen::Index d, int q, bool surjective_only) {
  std::vector<Allocation> out;
  std::vector<int> v(static_cast<std::size_t>(d + 1), 0);
  std::function<void(std::size_t, int)> rec = [&](std::size_t i, int top) {
    if (i == v.size()) {
      if (!surjective_only || top == q - 1) out.push_back(Allocation{v, q});
      return;
    }
    for (int c = 0; c <= std::min(top + 1, q - 1); ++c) {
      v[i] = c;
      rec(i + 1, std::max(top, c));
    }
  };
  rec(1, 0);
  return out;
}

std::vector<Allocation> all_allocations(Eigen::Index d, int q) {
  std::vector<Allocation> out;
  std::vector<int> v(static_cast<std::size_t>(d + 1), 0);
  for (;;) {
    out.push_back(Allocation{v, q});
    std::size_t k = v.size();
    while (k > 0 && ++v[k - 1] == q) v[--k] = 0;
    if (k == 0) break;
  }
  return out;
}

Instance with_homothety(const Instance& inst, double* scale) {
  const Polytope carrier = carrier_polytope(inst.simplex, inst.mode);
  double g = 0;
  for (const auto& m : inst.measures) {
    const Matrix pts = m.support_points();
    for (Eigen::Index k = 0; k < pts.cols(); ++k) g = std::max(g, gauge(carrier, pts.col(k)));
  }
  const double factor = g > 0 ? 2 * g : 1.0;
  if (scale) *scale = factor;
  Instance out = inst;
  out.simplex = inst.simplex.scaled(factor);
  return out;
}

Fan<double> instance_fan(const Instance& inst, const Vector& x) {
  return inst.mode == FanMode::A ? face_fan(inst.simplex).translated_to(x) : apex_fan(inst.simplex, x);
}

Matrix cone_masses(const Instance& inst, const Vector& x) {
  const Fan<double> fan = instance_fan(inst, x);
  Matrix m(static_cast<Eigen::Index>(inst.size()), inst.dim() + 1);
  for (std::size_t i = 0; i < inst.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = fan_masses(inst.measures[i], fan).transpose();
  return m;
}

DiscrepancyMatrix group_by_color(const Matrix& masses, const Vector& totals, const Allocation& theta) {
  if (static_cast<Eigen::Index>(theta.size()) != masses.cols())
    throw Error(ErrorCode::InvalidArgument, "allocation length must match the number of cones");
  DiscrepancyMatrix out{Matrix::Zero(masses.rows(), theta.q), totals};
  for (Eigen::Index nu = 0; nu < masses.cols(); ++nu) {
    const int c = theta[static_cast<std::size_t>(nu)];
    if (c == kMasked) continue;
    out.entries.col(c) += masses.col(nu);
  }
  return out;
}

DiscrepancyMatrix color_masses(const Instance& inst, const Vector& x, const Allocation& theta) {
  return group_by_color(cone_masses(inst, x), inst.totals(), theta);
}

double residual(const DiscrepancyMatrix& m) {
  double r = 0;
  for (Eigen::Index i = 0; i < m.entries.rows(); ++i)
    for (Eigen::Index j = 0; j < m.entries.cols(); ++j) r = std::max(r, std::abs(m.entries(i, j) - m.totals(i) / m.q()));
  return r;
}

double acceptance_target(const Instance& inst, const SolverConfig& cfg) {
  double tmax = 0, floor = 0;
  for (const auto& m : inst.measures) {
    tmax = std::max(tmax, m.total());
    const double atom = m.is_cloud() ? m.max_atom() : m.total() / static_cast<double>(cfg.body_samples);
    floor = std::max(floor, atom / 2 + 1e-9 * m.total());
  }
  const bool any_cloud = std::any_of(inst.measures.begin(), inst.measures.end(), [](const auto& m) { return m.is_cloud(); });
  return any_cloud ? std::max(floor, cfg.epsilon * tmax) : cfg.epsilon * tmax;
}

Solution solve_fan(const Instance& inst, const SolverConfig& cfg) {
  verify_prime_power(inst.q);
  const double count = std::pow(static_cast<double>(inst.q), static_cast<double>(inst.dim() + 1));
  if (count > 1e5) throw Error(ErrorCode::DimensionTooLarge, "too many allocations for exhaustive search");
  return solve(inst, cfg);
}

Solution solve_curtain(const Instance& inst, const SolverConfig& cfg) {
  if (inst.q != 2) throw Error(ErrorCode::InvalidArgument, "curtains split into two colors");
  Solution sol = solve(inst, cfg);
  if (inst.mode == FanMode::A) {
    std::vector<int> part;
    for (std::size_t i = 0; i < sol.theta.size(); ++i)
      if (sol.theta[i] == 1) part.push_back(static_cast<int>(i));
    sol.curtain = curtain_from_partition(sol.simplex, sol.x, part);
  }
  return sol;
}

Vector test_map(const Instance& inst0, const SpherePoint& z, const InversionOptions& options) {
  if (inst0.q != 2) throw Error(ErrorCode::InvalidArgument, "test map needs two colors");
  const Instance inst = with_homothety(inst0);
  const auto zon = build_zonotope(inst.simplex);
  const ComplexKind kind = inst.mode == FanMode::A ? ComplexKind::A : ComplexKind::B;
  const ConfigPoint p = decode_sphere(z, kind, zon, options);
  Vector x = p.x;
  if (inst.mode == FanMode::B && inst.simplex.barycentric(x).minCoeff() <= 0) x *= 1 - 1e-9;
  const Matrix m = cone_masses(inst, x);
  Vector f = Vector::Zero(m.rows());
  for (Eigen::Index nu = 0; nu < m.cols(); ++nu) {
    const int c = p.f[static_cast<std::size_t>(nu)];
    if (c == 1) f += m.col(nu);
    if (c == 0) f -= m.col(nu);
  }
  return f;
}

LimitReport limit_consistency(const Instance& inst, double ratio, int samples, double apex_factor, std::uint64_t seed) {
  const auto d = inst.dim();
  double r = 0;
  for (const auto& m : inst.measures) r = std::max(r, m.support_points().colwise().norm().maxCoeff());
  if (!(r > 0)) r = 1;
  const auto big = inst.simplex.scaled(ratio * r / inst.simplex.circumradius());
  LimitReport rep{ratio, r, 0.0, inst.totals().maxCoeff()};
  CounterRng rng(seed);
  Instance a = inst, b = inst;
  a.simplex = b.simplex = big;
  a.mode = FanMode::A;
  b.mode = FanMode::B;
  for (int k = 0; k < samples; ++k) {
    Vector x(d);
    do {
      for (Eigen::Index j = 0; j < d; ++j) x(j) = rng.uniform(-1, 1);
    } while (x.norm() > 1);
    x *= apex_factor * r;
    rep.max_discrepancy = std::max(rep.max_discrepancy, (cone_masses(a, x) - cone_masses(b, x)).cwiseAbs().maxCoeff());
  }
  return rep;
}

Instance counterexample_instance(double radius, int segments) {
  auto s = Simplex<double>::regular(2);
  std::vector<MassDistribution> discs;
  for (Eigen::Index i = 0; i < 3; ++i) discs.push_back(MassDistribution::body(disc_polygon(s.vertex(i), radius, segments)));
  // three measures in the plane: deliberately outside the n(q-1) = d regime
  return Instance{std::move(s), std::move(discs), 2, FanMode::A};
}

CounterexampleReport counterexample_report(double radius, int grid, const SolverConfig& cfg) {
  const Instance inst = counterexample_instance(radius);
  const Vector totals = inst.totals();
  const auto allocs = allocations(2, 2);
  CounterexampleReport rep;
  rep.radius = radius;
  rep.grid = grid;
  rep.disc_mass = totals(0);
  rep.min_residual = kInf;
  for (int i = 0; i < grid; ++i) {
    for (int j = 0; j < grid; ++j) {
      const Vector x{{-1.5 + 3.0 * (i + 0.5) / grid, -1.5 + 3.0 * (j + 0.5) / grid}};
      const Matrix m = cone_masses(inst, x);
      for (const auto& a : allocs) {
        const double r = residual(group_by_color(m, totals, a));
        if (r < rep.min_residual) {
          rep.min_residual = r;
          rep.best_x = x;
          rep.best_theta = a;
        }
      }
    }
  }
  const Instance two = Instance::create(inst.simplex, {inst.measures[0], inst.measures[1]}, 2, FanMode::A);
  rep.two_measure = solve_curtain(two, cfg);
  return rep;
}

}  // namespace curtain
