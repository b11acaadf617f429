#pragma once

#include <vector>

#include "curtain/common.hpp"
#include "curtain/geometry.hpp"

namespace curtain {

/// Color used for coordinates whose value is forgotten by the identification.
inline constexpr int kMasked = -1;

/// Map {0..d} -> {0..q-1}; entries may be kMasked in canonical forms.
struct Allocation {
  std::vector<int> values;
  int q{2};

  static Allocation create(std::vector<int> values, int q);
  std::size_t size() const { return values.size(); }
  int operator[](std::size_t i) const { return values[i]; }
  bool operator==(const Allocation&) const = default;
};

enum class ComplexKind { A, B };

/// A point (x, f). A-kind apexes live in the zonotope, B-kind in the simplex.
struct ConfigPoint {
  ComplexKind kind{ComplexKind::B};
  Vector x;
  Allocation f;
};

struct JoinPoint {
  Vector weights;
  std::vector<int> colors;
};

/// Point of the L1 unit sphere in R^{d+1}.
struct SpherePoint {
  Vector z;

  static SpherePoint create(Vector z);
};

ConfigPoint make_config(const DeltaZonotope<double>& carrier, ComplexKind kind, const Vector& x, Allocation f);

ConfigPoint canonicalize(const DeltaZonotope<double>& carrier, const ConfigPoint& p);
bool config_equal(const DeltaZonotope<double>& carrier, const ConfigPoint& a, const ConfigPoint& b);

/// Barycentric weights alpha_i(x) / vol(R_Delta).
Vector psi_weights(const DeltaZonotope<double>& z, const Vector& x);
Vector psi(const DeltaZonotope<double>& z, const Vector& x);

JoinPoint big_psi(const DeltaZonotope<double>& z, const ConfigPoint& p);
JoinPoint phi_B(const Simplex<double>& s, const ConfigPoint& p);

struct InversionOptions {
  double tol{-1};  // negative: 1e-8 * diameter
  int max_iterations{100};
};

struct Inversion {
  Vector x;
  double residual{0};
  int start{0};
};

/// Throws InversionBudgetExceeded when no start reaches the tolerance.
Inversion invert_psi(const DeltaZonotope<double>& z, const Vector& target, const InversionOptions& options = {});

/// Scales x toward the center until it lies in the zonotope.
Vector retract_to_zonotope(const DeltaZonotope<double>& z, const Vector& x);

ConfigPoint decode_sphere(const SpherePoint& z, ComplexKind kind, const DeltaZonotope<double>& carrier,
                          const InversionOptions& options = {});

/// Complemented colors for a two-color palette; masked entries stay masked.
ConfigPoint antipode(const ConfigPoint& p);

ConfigPoint permute_colors(const ConfigPoint& p, const std::vector<int>& perm);
JoinPoint permute_colors(const JoinPoint& p, const std::vector<int>& perm);

/// L1-sphere coordinates of a two-color join point: +w for color 1, -w for color 0.
Vector sphere_chart(const JoinPoint& p);

}  // namespace curtain
