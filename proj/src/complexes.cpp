#include "curtain/complexes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "curtain/measures.hpp"

namespace curtain {

namespace {

constexpr double kActivity = 1e-10;
constexpr double kBarycentricZero = 1e-12;

void check_size(const DeltaZonotope<double>& carrier, const Allocation& f) {
  if (static_cast<Eigen::Index>(f.size()) != carrier.dim() + 1)
    throw Error(ErrorCode::InvalidArgument, "allocation length must be d+1");
}

std::vector<int> mask_where(const Vector& weights, std::vector<int> colors, double threshold) {
  for (std::size_t i = 0; i < colors.size(); ++i)
    if (weights(static_cast<Eigen::Index>(i)) <= threshold) colors[i] = kMasked;
  return colors;
}

void check_permutation(const std::vector<int>& perm) {
  std::vector<int> seen(perm.size(), 0);
  for (int p : perm) {
    if (p < 0 || p >= static_cast<int>(perm.size()) || seen[static_cast<std::size_t>(p)]++)
      throw Error(ErrorCode::InvalidArgument, "color map is not a permutation");
  }
}

std::vector<int> apply(const std::vector<int>& colors, const std::vector<int>& perm) {
  std::vector<int> out(colors);
  for (int& c : out) {
    if (c == kMasked) continue;
    if (c >= static_cast<int>(perm.size())) throw Error(ErrorCode::InvalidArgument, "color outside the permuted palette");
    c = perm[static_cast<std::size_t>(c)];
  }
  return out;
}

}  // namespace

Allocation Allocation::create(std::vector<int> values, int q) {
  if (q < 1) throw Error(ErrorCode::InvalidArgument, "palette must be non-empty");
  for (int v : values)
    if (v != kMasked && (v < 0 || v >= q)) throw Error(ErrorCode::InvalidArgument, "allocation value outside the palette");
  return Allocation{std::move(values), q};
}

SpherePoint SpherePoint::create(Vector z) {
  if (std::abs(z.lpNorm<1>() - 1.0) > 1e-12) throw Error(ErrorCode::InvalidArgument, "sphere point must have unit L1 norm");
  return SpherePoint{std::move(z)};
}

ConfigPoint make_config(const DeltaZonotope<double>& carrier, ComplexKind kind, const Vector& x, Allocation f) {
  check_size(carrier, f);
  if (x.size() != carrier.dim()) throw Error(ErrorCode::InvalidArgument, "apex dimension mismatch");
  const bool inside = kind == ComplexKind::A ? carrier.contains(x, 1e-12 * std::max(1.0, carrier.diameter()))
                                             : carrier.simplex.contains(x, 1e-12);
  if (!inside) throw Error(ErrorCode::PointOutside, "apex lies outside the carrier");
  return ConfigPoint{kind, x, std::move(f)};
}

ConfigPoint canonicalize(const DeltaZonotope<double>& carrier, const ConfigPoint& p) {
  check_size(carrier, p.f);
  ConfigPoint out = p;
  if (p.kind == ComplexKind::A) {
    out.f.values = mask_where(alpha_vector(carrier, p.x), p.f.values, kActivity * carrier.volume);
  } else {
    out.f.values = mask_where(carrier.simplex.barycentric(p.x).cwiseAbs(), p.f.values, kBarycentricZero);
  }
  return out;
}

bool config_equal(const DeltaZonotope<double>& carrier, const ConfigPoint& a, const ConfigPoint& b) {
  if (a.kind != b.kind || a.x != b.x) return false;
  return canonicalize(carrier, a).f == canonicalize(carrier, b).f;
}

Vector psi_weights(const DeltaZonotope<double>& z, const Vector& x) { return alpha_vector(z, x) / z.volume; }

Vector psi(const DeltaZonotope<double>& z, const Vector& x) { return z.simplex.vertices() * psi_weights(z, x); }

JoinPoint big_psi(const DeltaZonotope<double>& z, const ConfigPoint& p) {
  if (p.kind != ComplexKind::A) throw Error(ErrorCode::InvalidArgument, "big_psi expects an A-kind point");
  check_size(z, p.f);
  Vector w = psi_weights(z, p.x);
  return JoinPoint{w, mask_where(w, p.f.values, kActivity)};
}

JoinPoint phi_B(const Simplex<double>& s, const ConfigPoint& p) {
  if (p.kind != ComplexKind::B) throw Error(ErrorCode::InvalidArgument, "phi_B expects a B-kind point");
  if (!s.contains(p.x, 1e-12)) throw Error(ErrorCode::PointOutside, "apex lies outside the simplex");
  Vector w = s.barycentric(p.x);
  return JoinPoint{w, mask_where(w.cwiseAbs(), p.f.values, kBarycentricZero)};
}

Vector retract_to_zonotope(const DeltaZonotope<double>& z, const Vector& x) {
  double t = 1.0;
  for (const auto& h : z.facets()) {
    const double nx = h.normal.dot(x);
    if (nx < h.offset) t = std::min(t, h.offset / nx);
  }
  if (t >= 1.0) return x;
  return x * (t * (1 - 1e-12));
}

Inversion invert_psi(const DeltaZonotope<double>& z, const Vector& target, const InversionOptions& options) {
  const auto d = z.dim();
  if (target.size() != d) throw Error(ErrorCode::InvalidArgument, "target dimension mismatch");
  if (!z.simplex.contains(target, 1e-9)) throw Error(ErrorCode::PointOutside, "target lies outside the simplex");
  const double diam = z.diameter();
  const double tol = options.tol > 0 ? options.tol : 1e-8 * diam;
  const double h = 1e-7 * diam;

  auto residual = [&](const Vector& x) -> Vector { return target - psi(z, x); };

  std::vector<Vector> starts{Vector::Zero(d)};
  for (Eigen::Index i = 0; i <= d; ++i) starts.push_back(-0.5 * z.simplex.vertex(i));  // cell centroids

  Inversion best{Vector::Zero(d), std::numeric_limits<double>::infinity(), -1};
  for (std::size_t s = 0; s < starts.size(); ++s) {
    Vector x = starts[s];
    Vector r = residual(x);
    double norm = r.norm();
    for (int it = 0; it < options.max_iterations && norm > tol; ++it) {
      Matrix jac(d, d);
      for (Eigen::Index k = 0; k < d; ++k) {
        Vector hi = x, lo = x;
        hi(k) += h;
        lo(k) -= h;
        const bool hi_ok = z.contains(hi, 0.0), lo_ok = z.contains(lo, 0.0);
        if (hi_ok && lo_ok) {
          jac.col(k) = (psi(z, hi) - psi(z, lo)) / (2 * h);
        } else if (hi_ok) {
          jac.col(k) = (psi(z, hi) - psi(z, x)) / h;
        } else {
          jac.col(k) = (psi(z, x) - psi(z, lo)) / h;
        }
      }
      // Levenberg-style damping keeps the step defined near rank loss.
      const Matrix jtj = jac.transpose() * jac;
      const double damp = 1e-12 * std::max(1.0, jtj.trace());
      const Vector step = (jtj + damp * Matrix::Identity(d, d)).ldlt().solve(jac.transpose() * r);
      double scale = 1.0;
      bool improved = false;
      for (int ls = 0; ls < 40; ++ls, scale *= 0.5) {
        const Vector y = retract_to_zonotope(z, x + scale * step);
        const Vector ry = residual(y);
        if (ry.norm() < norm) {
          x = y;
          r = ry;
          norm = ry.norm();
          improved = true;
          break;
        }
      }
      if (!improved) break;
    }
    if (norm < best.residual) best = Inversion{x, norm, static_cast<int>(s)};
    if (best.residual <= tol) return best;
  }
  std::ostringstream msg;
  msg << "psi inversion did not reach tolerance " << tol << "; best residual " << best.residual;
  throw Error(ErrorCode::InversionBudgetExceeded, msg.str());
}

ConfigPoint decode_sphere(const SpherePoint& z, ComplexKind kind, const DeltaZonotope<double>& carrier,
                          const InversionOptions& options) {
  const auto d = carrier.dim();
  if (z.z.size() != d + 1) throw Error(ErrorCode::InvalidArgument, "sphere point must have d+1 coordinates");
  std::vector<int> colors(static_cast<std::size_t>(d + 1));
  for (Eigen::Index i = 0; i <= d; ++i) colors[static_cast<std::size_t>(i)] = z.z(i) > 0 ? 1 : (z.z(i) < 0 ? 0 : kMasked);
  const Vector target = carrier.simplex.vertices() * z.z.cwiseAbs();
  const Vector x = kind == ComplexKind::B ? target : invert_psi(carrier, target, options).x;
  ConfigPoint p{kind, x, Allocation{colors, 2}};
  return canonicalize(carrier, p);
}

ConfigPoint antipode(const ConfigPoint& p) {
  if (p.f.q != 2) throw Error(ErrorCode::InvalidArgument, "antipode needs a two-color palette");
  return permute_colors(p, {1, 0});
}

ConfigPoint permute_colors(const ConfigPoint& p, const std::vector<int>& perm) {
  check_permutation(perm);
  ConfigPoint out = p;
  out.f.values = apply(p.f.values, perm);
  return out;
}

JoinPoint permute_colors(const JoinPoint& p, const std::vector<int>& perm) {
  check_permutation(perm);
  return JoinPoint{p.weights, apply(p.colors, perm)};
}

Vector sphere_chart(const JoinPoint& p) {
  Vector z(p.weights.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const int c = p.colors[static_cast<std::size_t>(i)];
    if (c == kMasked) {
      z(i) = 0;
    } else if (c == 0 || c == 1) {
      z(i) = c == 1 ? p.weights(i) : -p.weights(i);
    } else {
      throw Error(ErrorCode::InvalidArgument, "sphere chart needs a two-color palette");
    }
  }
  return z;
}

}  // namespace curtain
