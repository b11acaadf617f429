#include "curtain/applications.hpp"

#include <algorithm>
#include <limits>
#include <numbers>

namespace curtain {

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();
// parity ray direction, chosen to avoid the axes
const Eigen::Vector2d kRay(std::cos(0.3141), std::sin(0.3141));

// Cone coordinates (lambda_1, lambda_2) of points on the wall plane.
Eigen::Matrix<double, 2, 3> wall_solver(const Matrix& g) {
  const Eigen::Matrix<double, 3, 2> gm = g;
  return (gm.transpose() * gm).inverse() * gm.transpose();
}

// Sorted angles in [0, 2pi) where A + B cos t + C sin t vanishes.
void trig_roots(double a, double b, double c, std::vector<double>& out) {
  const double r = std::hypot(b, c);
  if (r == 0 || std::abs(a) > r) return;
  const double phase = std::atan2(c, b);
  const double delta = std::acos(std::clamp(-a / r, -1.0, 1.0));
  for (double t : {phase - delta, phase + delta}) {
    t = std::fmod(t, kTwoPi);
    if (t < 0) t += kTwoPi;
    out.push_back(t);
  }
}

void quadratic_roots(double p, double q, double r, std::vector<double>& out) {
  if (std::abs(r) < 1e-300) {
    if (q != 0) out.push_back(-p / q);
    return;
  }
  const double disc = q * q - 4 * r * p;
  if (disc < 0) return;
  const double sq = std::sqrt(disc);
  const double k = -0.5 * (q + std::copysign(sq, q));
  if (k != 0) out.push_back(k / r);
  if (k != 0) out.push_back(p / k);
  if (k == 0) out.push_back(0.0);
}

// Maximal parameter intervals on which `inside` holds, split at `roots`.
template <typename F>
std::vector<std::pair<double, double>> intervals(std::vector<double> roots, double lo, double hi, bool periodic, F inside) {
  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
  std::vector<std::pair<double, double>> raw;
  if (periodic) {
    if (roots.empty()) {
      if (inside(0.0)) raw.push_back({0.0, kTwoPi});
      return raw;
    }
    for (std::size_t k = 0; k < roots.size(); ++k) {
      const double a = roots[k];
      const double b = k + 1 < roots.size() ? roots[k + 1] : roots.front() + kTwoPi;
      if (b - a > 1e-15 && inside(0.5 * (a + b))) raw.push_back({a, b});
    }
  } else {
    std::vector<double> cuts{lo};
    for (double r : roots) cuts.push_back(r);
    cuts.push_back(hi);
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      const double a = cuts[k], b = cuts[k + 1];
      double mid = 0.5 * (a + b);
      if (!std::isfinite(a) && !std::isfinite(b)) mid = 0;
      else if (!std::isfinite(a)) mid = b - 1 - std::abs(b);
      else if (!std::isfinite(b)) mid = a + 1 + std::abs(a);
      if (b - a > 1e-15 && inside(mid)) raw.push_back({a, b});
    }
  }
  // merge neighbours separated by a tangential root
  std::vector<std::pair<double, double>> out;
  for (const auto& iv : raw) {
    if (!out.empty() && out.back().second == iv.first) {
      out.back().second = iv.second;
    } else {
      out.push_back(iv);
    }
  }
  if (periodic && out.size() > 1 && out.back().second - kTwoPi == out.front().first) {
    out.front().first = out.back().first - kTwoPi;
    out.pop_back();
  }
  return out;
}

void wall_pieces(const WallCell<double>& w, std::vector<SplinePiece>& out) {
  const Eigen::Vector3d x = w.cone.apex;
  const Matrix& g = w.cone.generators;
  const Eigen::Vector3d n = Eigen::Vector3d(g.col(0)).cross(Eigen::Vector3d(g.col(1))).normalized();
  const double a = n.x(), b = n.y(), c = n.z(), e = n.dot(x);
  const auto solve = wall_solver(g);
  const double tol = 1e-12;
  SplinePiece base;
  base.plane = Eigen::Vector4d(a, b, c, e);
  base.nu = w.nu;
  base.mu = w.mu;

  if (std::abs(c) > 1e-12) {
    const Eigen::Vector2d center(-a / (2 * c), -b / (2 * c));
    const double r2 = e / c + center.squaredNorm();
    const double scale = 1 + center.squaredNorm();
    if (r2 < -1e-14 * scale) return;
    if (r2 <= 1e-14 * scale) {
      // tangent plane: the wall touches the paraboloid in one point at most
      const Eigen::Vector2d lam = solve * (lift_point(center) - x);
      if (lam.minCoeff() >= -tol) {
        SplinePiece p = base;
        p.kind = PieceKind::Point;
        p.center = center;
        out.push_back(p);
      }
      return;
    }
    const double r = std::sqrt(r2);
    const Eigen::Vector3d w0(center.x(), center.y(), center.squaredNorm() + r2);
    const Eigen::Vector3d wc(r, 0, 2 * r * center.x());
    const Eigen::Vector3d ws(0, r, 2 * r * center.y());
    const Eigen::Vector2d ca = solve * (w0 - x), cb = solve * wc, cs = solve * ws;
    std::vector<double> roots;
    for (int k = 0; k < 2; ++k) trig_roots(ca(k), cb(k), cs(k), roots);
    auto inside = [&](double t) { return (ca + cb * std::cos(t) + cs * std::sin(t)).minCoeff() >= -tol; };
    for (const auto& [t0, t1] : intervals(roots, 0, kTwoPi, true, inside)) {
      SplinePiece p = base;
      p.kind = PieceKind::Arc;
      p.center = center;
      p.radius = r;
      p.t0 = t0;
      p.t1 = t1;
      out.push_back(p);
    }
    return;
  }
  const double ab2 = a * a + b * b;
  const Eigen::Vector2d origin = e * Eigen::Vector2d(a, b) / ab2;
  const Eigen::Vector2d dir = Eigen::Vector2d(-b, a) / std::sqrt(ab2);
  const Eigen::Vector2d cp = solve * (lift_point(origin) - x);
  const Eigen::Vector2d cq = solve * Eigen::Vector3d(dir.x(), dir.y(), 0);
  const Eigen::Vector2d cr = solve * Eigen::Vector3d(0, 0, 1);
  std::vector<double> roots;
  for (int k = 0; k < 2; ++k) quadratic_roots(cp(k), cq(k), cr(k), roots);
  auto inside = [&](double t) { return (cp + cq * t + cr * t * t).minCoeff() >= -tol; };
  for (const auto& [t0, t1] : intervals(roots, -kInf, kInf, false, inside)) {
    SplinePiece p = base;
    p.kind = PieceKind::Segment;
    p.origin = origin;
    p.direction = dir;
    p.t0 = t0;
    p.t1 = t1;
    out.push_back(p);
  }
}

bool angle_in(double phi, double t0, double t1) {
  double rel = std::fmod(phi - t0, kTwoPi);
  if (rel < 0) rel += kTwoPi;
  return rel <= t1 - t0;
}

}  // namespace

Eigen::Vector2d SplinePiece::at(double t) const {
  switch (kind) {
    case PieceKind::Arc: return center + radius * Eigen::Vector2d(std::cos(t), std::sin(t));
    case PieceKind::Segment: return origin + t * direction;
    case PieceKind::Point: return center;
  }
  return center;
}

std::vector<MassDistribution> lift_measures(const std::vector<MassDistribution>& planar) {
  std::vector<MassDistribution> out;
  for (const auto& m : planar) {
    if (m.dim() != 2) throw Error(ErrorCode::InvalidArgument, "lifting needs planar measures");
    if (!m.is_cloud()) throw Error(ErrorCode::UnsupportedVariant, "only point clouds can be lifted; sample bodies first");
    const auto& c = m.cloud();
    Matrix pts(3, c.points.cols());
    for (Eigen::Index k = 0; k < c.points.cols(); ++k) pts.col(k) = lift_point(c.points.col(k));
    out.push_back(MassDistribution::points(pts, c.weights));
  }
  return out;
}

CircularSpline curtain_to_spline(const Curtain<double>& c, const Simplex<double>& s) {
  if (c.apex.size() != 3) throw Error(ErrorCode::InvalidArgument, "spline projection needs a curtain in space");
  std::vector<SplinePiece> raw;
  for (const auto& w : c.walls) wall_pieces(w, raw);

  CircularSpline out;
  out.part = c.part;
  const Fan<double> fan = face_fan(s).translated_to(c.apex);
  // far along the ray, lifted points approach e_z from the ray direction
  const int up = fan.owner(Vector(Eigen::Vector3d(1e-6 * kRay.x(), 1e-6 * kRay.y(), 1)));
  out.outer_color = std::binary_search(c.part.begin(), c.part.end(), up) ? 1 : 0;

  double scale = 1;
  for (const auto& p : raw)
    if (p.bounded()) scale = std::max({scale, p.start().norm(), p.end().norm()});
  const double tol = 1e-7 * scale;
  std::vector<char> used(raw.size(), 0);
  auto has_predecessor = [&](std::size_t k) {
    if (!std::isfinite(raw[k].t0)) return false;
    for (std::size_t j = 0; j < raw.size(); ++j) {
      if (j == k || used[j] || raw[j].kind == PieceKind::Point) continue;
      if ((std::isfinite(raw[j].t1) && (raw[j].at(raw[j].t1) - raw[k].start()).norm() < tol) ||
          (std::isfinite(raw[j].t0) && (raw[j].at(raw[j].t0) - raw[k].start()).norm() < tol))
        return true;
    }
    return false;
  };
  for (;;) {
    std::size_t first = raw.size();
    for (std::size_t k = 0; k < raw.size() && first == raw.size(); ++k)
      if (!used[k] && !has_predecessor(k)) first = k;
    for (std::size_t k = 0; k < raw.size() && first == raw.size(); ++k)
      if (!used[k]) first = k;
    if (first == raw.size()) break;
    out.chain_starts.push_back(out.pieces.size());
    used[first] = 1;
    out.pieces.push_back(raw[first]);
    while (out.pieces.back().kind != PieceKind::Point) {
      const auto& last = out.pieces.back();
      if (last.reversed ? !std::isfinite(last.t0) : !std::isfinite(last.t1)) break;
      const Eigen::Vector2d tail = last.end();
      std::size_t next = raw.size();
      bool flip = false;
      for (std::size_t k = 0; k < raw.size() && next == raw.size(); ++k) {
        if (used[k] || raw[k].kind == PieceKind::Point) continue;
        if (std::isfinite(raw[k].t0) && (raw[k].at(raw[k].t0) - tail).norm() < tol) {
          next = k;
        } else if (std::isfinite(raw[k].t1) && (raw[k].at(raw[k].t1) - tail).norm() < tol) {
          next = k;
          flip = true;
        }
      }
      if (next == raw.size()) break;
      used[next] = 1;
      SplinePiece p = raw[next];
      p.reversed = flip;
      out.pieces.push_back(p);
    }
  }
  return out;
}

int planar_side_3d(const Curtain<double>& c, const Simplex<double>& s, const Eigen::Vector2d& p) {
  const Fan<double> fan = face_fan(s).translated_to(c.apex);
  const int cone = fan.owner(Vector(lift_point(p)) - c.apex);
  return std::binary_search(c.part.begin(), c.part.end(), cone) ? 1 : 0;
}

int planar_side_2d(const CircularSpline& spline, const Eigen::Vector2d& p) {
  const Eigen::Vector2d& u = kRay;
  int crossings = 0;
  for (const auto& piece : spline.pieces) {
    if (piece.kind == PieceKind::Arc) {
      const Eigen::Vector2d w = p - piece.center;
      const double bq = u.dot(w), cq = w.squaredNorm() - piece.radius * piece.radius;
      const double disc = bq * bq - cq;
      if (disc <= 0) continue;
      for (double sgn : {-1.0, 1.0}) {
        const double s = -bq + sgn * std::sqrt(disc);
        if (s <= 0) continue;
        const Eigen::Vector2d q = w + s * u;
        if (angle_in(std::atan2(q.y(), q.x()), piece.t0, piece.t1)) ++crossings;
      }
    } else if (piece.kind == PieceKind::Segment) {
      Eigen::Matrix2d m;
      m << u, -piece.direction;
      if (std::abs(m.determinant()) < 1e-300) continue;
      const Eigen::Vector2d st = m.inverse() * (piece.origin - p);
      if (st(0) > 0 && st(1) >= piece.t0 && st(1) <= piece.t1) ++crossings;
    }
  }
  return crossings % 2 ? 1 - spline.outer_color : spline.outer_color;
}

double distance_to_spline(const CircularSpline& spline, const Eigen::Vector2d& p) {
  double best = kInf;
  for (const auto& piece : spline.pieces) {
    switch (piece.kind) {
      case PieceKind::Arc: {
        const Eigen::Vector2d w = p - piece.center;
        if (angle_in(std::atan2(w.y(), w.x()), piece.t0, piece.t1)) {
          best = std::min(best, std::abs(w.norm() - piece.radius));
        } else {
          best = std::min({best, (p - piece.at(piece.t0)).norm(), (p - piece.at(piece.t1)).norm()});
        }
        break;
      }
      case PieceKind::Segment: {
        const double t = std::clamp(piece.direction.dot(p - piece.origin), piece.t0, piece.t1);
        best = std::min(best, (p - piece.at(t)).norm());
        break;
      }
      case PieceKind::Point: best = std::min(best, (p - piece.center).norm()); break;
    }
  }
  return best;
}

SplineResult solve_circular_spline(const std::vector<MassDistribution>& planar, const Simplex<double>& tet,
                                   const SolverConfig& cfg) {
  if (planar.size() != 3) throw Error(ErrorCode::InvalidArgument, "circular splines bisect exactly three measures");
  if (tet.dim() != 3) throw Error(ErrorCode::InvalidArgument, "circular splines need a tetrahedron");
  std::vector<MassDistribution> clouds;
  for (std::size_t i = 0; i < planar.size(); ++i) {
    if (planar[i].is_cloud()) {
      clouds.push_back(planar[i]);
    } else {
      const auto c = sample_distribution(planar[i], cfg.body_samples, cfg.seed + 7919 * i);
      clouds.push_back(MassDistribution::points(c.points, c.weights));
    }
  }
  const auto inst = Instance::create(tet, lift_measures(clouds), 2, FanMode::A);
  SplineResult out;
  out.solution = solve_curtain(inst, cfg);
  out.spline = curtain_to_spline(*out.solution.curtain, out.solution.simplex);
  out.residuals = Vector(3);
  for (std::size_t i = 0; i < clouds.size(); ++i) {
    const auto& c = clouds[i].cloud();
    double side = 0;
    for (Eigen::Index k = 0; k < c.points.cols(); ++k)
      if (planar_side_3d(*out.solution.curtain, out.solution.simplex, c.points.col(k)) == 1) side += c.weights(k);
    out.residuals(static_cast<Eigen::Index>(i)) = std::abs(side - clouds[i].total() / 2);
  }
  return out;
}

std::vector<Allocation> vertex_bipartitions(Eigen::Index d) { return allocations(d, 2); }

}  // namespace curtain
