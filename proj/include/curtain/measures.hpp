#pragma once

#include "curtain/common.hpp"
#include "curtain/geometry.hpp"
#include "curtain/polytope.hpp"

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace curtain {

/// Weighted atoms; a discrete stand-in for a continuous measure.
struct PointCloud {
  Matrix points;   // d x N, one point per column
  Vector weights;  // N positive weights
};

/// Constant density on a bounded full-dimensional convex polytope.
struct PolytopeBody {
  Polytope body;
  double density{1.0};
};

struct BodyUnion {
  std::vector<PolytopeBody> bodies;
  bool disjoint{true};
};

class MassDistribution {
 public:
  using Variant = std::variant<PointCloud, PolytopeBody, BodyUnion>;

  static MassDistribution points(Matrix points, Vector weights);
  static MassDistribution points(Matrix points);  // unit weights
  static MassDistribution body(Polytope body, double density = 1.0);
  static MassDistribution bodies(std::vector<PolytopeBody> bodies, bool disjoint = true);

  Eigen::Index dim() const { return dim_; }
  double total() const { return total_; }
  const Variant& variant() const { return data_; }

  bool is_cloud() const { return std::holds_alternative<PointCloud>(data_); }
  const PointCloud& cloud() const { return std::get<PointCloud>(data_); }

  /// Points whose convex hull contains the support (atoms or body vertices).
  Matrix support_points() const;

  /// Heaviest atom; zero for continuous variants.
  double max_atom() const;

  MassDistribution scaled(double factor) const;

 private:
  MassDistribution(Variant v, Eigen::Index dim);

  Variant data_;
  Eigen::Index dim_{0};
  double total_{0};
};

double total_mass(const MassDistribution& mu);

enum class MassMethod { Exact, Sampled };

struct RegionMass {
  double mass{0};
  MassMethod method{MassMethod::Exact};
  double error{0};  // one standard deviation for sampled values, 0 if exact
};

/// Dimension up to which polytope masses are computed by exact clipping.
inline constexpr Eigen::Index kMaxExactDim = 6;

struct SamplingOptions {
  std::uint64_t seed{0};
  std::size_t samples{200000};
};

/// Mass of cone `index` of the fan. Atoms on shared boundaries belong to the
/// lowest cone index, so the masses over all cones partition the total.
RegionMass mass_in_cone(const MassDistribution& mu, const Fan<double>& fan, int index,
                        const SamplingOptions& sampling = {});

/// Masses of every cone of the fan, in cone order.
Vector fan_masses(const MassDistribution& mu, const Fan<double>& fan, const SamplingOptions& sampling = {});

/// Monte Carlo estimate of every cone mass with one-sigma errors; the
/// samples are a pure function of (seed, sample index).
std::vector<RegionMass> sampled_fan_masses(const MassDistribution& mu, const Fan<double>& fan,
                                           const SamplingOptions& sampling);

/// Mass of a polytope body inside a full-dimensional simplicial cone.
double body_mass_in_cone(const PolytopeBody& body, const SimplicialCone<double>& cone);

/// Point-cloud cone masses with softmin membership at the given temperature
/// (in units of the normalized cone coefficients). Tends to fan_masses as
/// the temperature goes to zero.
Vector soft_fan_masses(const PointCloud& cloud, const Fan<double>& fan, double temperature);

Polytope clip_polytope(const Polytope& p, const HalfSpace<double>& h);
double polytope_volume(const Polytope& p);

/// Volumes alpha_i of (x + cone(F_i)) n R_Delta for every i.
Vector alpha_vector(const DeltaZonotope<double>& z, const Vector& x);

/// Uniform samples from the distribution, returned as an equal-weight cloud
/// of the same total mass. Atoms are returned unchanged.
PointCloud sample_distribution(const MassDistribution& mu, std::size_t count, std::uint64_t seed);

/// Reads "x1,...,xd,weight" rows; a non-numeric first row is a header.
PointCloud load_point_cloud_csv(const std::string& path, Eigen::Index dim);

/// Regular polygon with `segments` vertices inscribed in the disc.
Polytope disc_polygon(const Vector& center, double radius, int segments);

}  // namespace curtain
