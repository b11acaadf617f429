#pragma once

#include <cmath>
#include <vector>

#include "curtain/geometry.hpp"
#include "curtain/measures.hpp"
#include "curtain/solver.hpp"

namespace curtain {

enum class PieceKind { Arc, Segment, Point };

/// Planar image of one curtain wall on the paraboloid z = x^2 + y^2.
/// Arcs run counterclockwise over angles [t0, t1]; segments are origin + t * direction.
struct SplinePiece {
  PieceKind kind{PieceKind::Arc};
  Eigen::Vector4d plane{Eigen::Vector4d::Zero()};  // a x + b y + c z = e
  Eigen::Vector2d center{Eigen::Vector2d::Zero()};
  double radius{0};
  Eigen::Vector2d origin{Eigen::Vector2d::Zero()};
  Eigen::Vector2d direction{Eigen::Vector2d::Zero()};
  double t0{0};
  double t1{0};
  bool reversed{false};
  int nu{0};
  int mu{0};

  Eigen::Vector2d at(double t) const;
  Eigen::Vector2d start() const { return at(reversed ? t1 : t0); }
  Eigen::Vector2d end() const { return at(reversed ? t0 : t1); }
  bool bounded() const { return std::isfinite(t0) && std::isfinite(t1); }
};

struct CircularSpline {
  std::vector<SplinePiece> pieces;
  std::vector<std::size_t> chain_starts;  // index of the first piece of each chain
  int outer_color{0};                     // side of the unbounded planar region
  std::vector<int> part;
};

inline Eigen::Vector3d lift_point(const Eigen::Vector2d& p) { return {p.x(), p.y(), p.squaredNorm()}; }

/// Pushforward of planar clouds to the paraboloid. Bodies throw UnsupportedVariant.
std::vector<MassDistribution> lift_measures(const std::vector<MassDistribution>& planar);

CircularSpline curtain_to_spline(const Curtain<double>& c, const Simplex<double>& s);

/// Color of a planar point from the cone containing its lift.
int planar_side_3d(const Curtain<double>& c, const Simplex<double>& s, const Eigen::Vector2d& p);

/// Color of a planar point by crossing parity against the spline.
int planar_side_2d(const CircularSpline& spline, const Eigen::Vector2d& p);

double distance_to_spline(const CircularSpline& spline, const Eigen::Vector2d& p);

struct SplineResult {
  CircularSpline spline;
  Solution solution;
  Vector residuals;  // per planar measure, from the lifted classification
};

SplineResult solve_circular_spline(const std::vector<MassDistribution>& planar, const Simplex<double>& tet,
                                   const SolverConfig& cfg = {});

/// Nontrivial vertex bipartitions of the simplex, one per unordered pair.
std::vector<Allocation> vertex_bipartitions(Eigen::Index d);

}  // namespace curtain
