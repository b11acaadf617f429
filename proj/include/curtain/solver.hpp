#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "curtain/complexes.hpp"
#include "curtain/geometry.hpp"
#include "curtain/measures.hpp"

namespace curtain {

/// A: translated face fan x + cone(F_i). B: apex fan cone(x, F_i).
enum class FanMode { A, B };

struct Instance {
  Simplex<double> simplex;
  std::vector<MassDistribution> measures;
  int q{2};
  FanMode mode{FanMode::A};

  /// Checks d = n(q-1) and measure dimensions.
  static Instance create(Simplex<double> simplex, std::vector<MassDistribution> measures, int q, FanMode mode);

  Eigen::Index dim() const { return simplex.dim(); }
  std::size_t size() const { return measures.size(); }
  Vector totals() const;
};

struct DiscrepancyMatrix {
  Matrix entries;  // n x q
  Vector totals;

  int q() const { return static_cast<int>(entries.cols()); }
};

enum class SolveStatus { Converged, DiscretizationFloor, BudgetExceeded };

std::string to_string(SolveStatus s);

struct Solution {
  Vector x;
  Allocation theta;
  double residual{0};
  DiscrepancyMatrix matrix;
  std::optional<Curtain<double>> curtain;
  SolveStatus status{SolveStatus::BudgetExceeded};
  Simplex<double> simplex;  // after homothety
  double scale{1};
  double target{0};  // absolute residual accepted as success
  long evaluations{0};
  std::string method;
};

struct SolverConfig {
  double epsilon{1e-6};  // relative to the largest measure total
  int grid{0};           // stage-1 points per axis; 0 picks a default by dimension
  int candidates{12};
  long max_evaluations{400000};
  std::uint64_t seed{0};
  std::size_t body_samples{100000};  // bodies mixed with clouds are sampled
  int exact_points{60};              // largest planar cloud solved by full enumeration
};

std::pair<int, int> verify_prime_power(int q);

/// Restricted growth strings: one representative per color-permutation orbit.
std::vector<Allocation> allocations(Eigen::Index d, int q, bool surjective_only = true);

/// Every map {0..d} -> {0..q-1}.
std::vector<Allocation> all_allocations(Eigen::Index d, int q);

/// Rescales the simplex so that the carrier contains every support with margin two.
Instance with_homothety(const Instance& inst, double* scale = nullptr);

Fan<double> instance_fan(const Instance& inst, const Vector& x);

/// n x (d+1) masses of each measure in each cone.
Matrix cone_masses(const Instance& inst, const Vector& x);
DiscrepancyMatrix group_by_color(const Matrix& masses, const Vector& totals, const Allocation& theta);
DiscrepancyMatrix color_masses(const Instance& inst, const Vector& x, const Allocation& theta);
double residual(const DiscrepancyMatrix& m);

/// Largest atom weight over half, plus the relative slack, for clouds; otherwise epsilon.
double acceptance_target(const Instance& inst, const SolverConfig& cfg);

Solution solve_fan(const Instance& inst, const SolverConfig& cfg = {});
Solution solve_curtain(const Instance& inst, const SolverConfig& cfg = {});

/// Odd test map on the L1 sphere for q = 2: F(z)_j = mu_j(color 1) - mu_j(color 0).
Vector test_map(const Instance& inst, const SpherePoint& z, const InversionOptions& options = {});

struct LimitReport {
  double ratio{0};
  double radius{0};
  double max_discrepancy{0};
  double total{0};
};

LimitReport limit_consistency(const Instance& inst, double ratio, int samples = 200, double apex_factor = 1.0,
                              std::uint64_t seed = 0);

struct CounterexampleReport {
  double radius{0};
  int grid{0};
  double disc_mass{0};
  double min_residual{0};
  Vector best_x;
  Allocation best_theta;
  Solution two_measure;
};

Instance counterexample_instance(double radius, int segments = 64);
CounterexampleReport counterexample_report(double radius, int grid, const SolverConfig& cfg = {});

}  // namespace curtain
