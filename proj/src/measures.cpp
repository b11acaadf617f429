#include "curtain/measures.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace curtain {

namespace {

double body_total(const PolytopeBody& b) { return b.density * b.body.volume(); }

void check_body(const PolytopeBody& b) {
  if (b.body.empty()) throw Error(ErrorCode::EmptyMeasure, "polytope body is empty or not full-dimensional");
  if (!(b.density > 0)) throw Error(ErrorCode::InvalidArgument, "density must be positive");
}

// Uniform point in the body by rejection from its bounding box.
Vector sample_in_body(const Polytope& p, CounterRng& rng) {
  const Vector lo = p.lower();
  const Vector hi = p.upper();
  Vector x(lo.size());
  for (int attempt = 0; attempt < 1000000; ++attempt) {
    for (Eigen::Index k = 0; k < x.size(); ++k) x(k) = rng.uniform(lo(k), hi(k));
    if (p.contains(x, 0.0)) return x;
  }
  throw Error(ErrorCode::EmptyMeasure, "rejection sampling failed");
}

std::vector<const PolytopeBody*> bodies_of(const MassDistribution& mu) {
  std::vector<const PolytopeBody*> out;
  if (const auto* b = std::get_if<PolytopeBody>(&mu.variant())) out.push_back(b);
  if (const auto* u = std::get_if<BodyUnion>(&mu.variant()))
    for (const auto& b : u->bodies) out.push_back(&b);
  return out;
}

}  // namespace

MassDistribution::MassDistribution(Variant v, Eigen::Index dim) : data_(std::move(v)), dim_(dim) {
  if (const auto* c = std::get_if<PointCloud>(&data_)) {
    total_ = c->weights.sum();
  } else {
    for (const auto* b : bodies_of(*this)) total_ += body_total(*b);
  }
  if (!(total_ > 0)) throw Error(ErrorCode::EmptyMeasure, "total mass must be positive");
}

MassDistribution MassDistribution::points(Matrix points, Vector weights) {
  if (points.cols() == 0) throw Error(ErrorCode::EmptyMeasure, "point cloud has no points");
  if (weights.size() != points.cols()) throw Error(ErrorCode::InvalidArgument, "one weight per point required");
  if (!(weights.minCoeff() > 0)) throw Error(ErrorCode::InvalidArgument, "weights must be positive");
  const auto d = points.rows();
  return MassDistribution(PointCloud{std::move(points), std::move(weights)}, d);
}

MassDistribution MassDistribution::points(Matrix points) {
  Vector w = Vector::Ones(points.cols());
  return MassDistribution::points(std::move(points), std::move(w));
}

MassDistribution MassDistribution::body(Polytope body, double density) {
  PolytopeBody b{std::move(body), density};
  check_body(b);
  const auto d = b.body.dim();
  return MassDistribution(std::move(b), d);
}

MassDistribution MassDistribution::bodies(std::vector<PolytopeBody> bodies, bool disjoint) {
  if (bodies.empty()) throw Error(ErrorCode::EmptyMeasure, "body union is empty");
  for (const auto& b : bodies) check_body(b);
  const auto d = bodies.front().body.dim();
  for (const auto& b : bodies)
    if (b.body.dim() != d) throw Error(ErrorCode::InvalidArgument, "bodies of mixed dimension");
  return MassDistribution(BodyUnion{std::move(bodies), disjoint}, d);
}

Matrix MassDistribution::support_points() const {
  if (is_cloud()) return cloud().points;
  std::vector<const PolytopeBody*> bs = bodies_of(*this);
  Eigen::Index n = 0;
  for (const auto* b : bs) n += b->body.num_vertices();
  Matrix out(dim_, n);
  Eigen::Index k = 0;
  for (const auto* b : bs) {
    out.middleCols(k, b->body.num_vertices()) = b->body.vertices();
    k += b->body.num_vertices();
  }
  return out;
}

double MassDistribution::max_atom() const { return is_cloud() ? cloud().weights.maxCoeff() : 0.0; }

MassDistribution MassDistribution::scaled(double factor) const {
  if (is_cloud()) return points(cloud().points * factor, cloud().weights);
  std::vector<PolytopeBody> bs;
  for (const auto* b : bodies_of(*this)) bs.push_back({b->body.scaled(factor), b->density});
  if (std::holds_alternative<PolytopeBody>(data_)) return body(bs.front().body, bs.front().density);
  return bodies(std::move(bs), std::get<BodyUnion>(data_).disjoint);
}

double total_mass(const MassDistribution& mu) { return mu.total(); }

double body_mass_in_cone(const PolytopeBody& body, const SimplicialCone<double>& cone) {
  return body.density * body.body.clip(cone_halfspaces(cone)).volume();
}

RegionMass mass_in_cone(const MassDistribution& mu, const Fan<double>& fan, int index,
                        const SamplingOptions& sampling) {
  if (index < 0 || index >= fan.size()) throw Error(ErrorCode::InvalidArgument, "cone index out of range");
  if (mu.is_cloud()) {
    const auto& c = mu.cloud();
    double m = 0;
    for (Eigen::Index k = 0; k < c.points.cols(); ++k)
      if (fan.owner(c.points.col(k) - fan.apex()) == index) m += c.weights(k);
    return {m, MassMethod::Exact, 0.0};
  }
  if (mu.dim() > kMaxExactDim) return sampled_fan_masses(mu, fan, sampling)[static_cast<std::size_t>(index)];
  const auto cone = fan.cone(index);
  double m = 0;
  for (const auto* b : bodies_of(mu)) m += body_mass_in_cone(*b, cone);
  return {m, MassMethod::Exact, 0.0};
}

Vector fan_masses(const MassDistribution& mu, const Fan<double>& fan, const SamplingOptions& sampling) {
  Vector out = Vector::Zero(fan.size());
  if (mu.is_cloud()) {
    const auto& c = mu.cloud();
    for (Eigen::Index k = 0; k < c.points.cols(); ++k) out(fan.owner(c.points.col(k) - fan.apex())) += c.weights(k);
    return out;
  }
  if (mu.dim() > kMaxExactDim) {
    const auto s = sampled_fan_masses(mu, fan, sampling);
    for (std::size_t i = 0; i < s.size(); ++i) out(static_cast<Eigen::Index>(i)) = s[i].mass;
    return out;
  }
  std::vector<const PolytopeBody*> split;
  for (const auto* b : bodies_of(mu)) {
    const Matrix& v = b->body.vertices();
    int whole = -2;
    for (Eigen::Index k = 0; k < v.cols() && whole != -1; ++k) {
      const auto cones = fan.locate(v.col(k) - fan.apex());
      const int c = cones.size() == 1 ? cones.front() : -1;
      whole = (whole == -2 || whole == c) ? c : -1;
    }
    if (whole >= 0) {
      out(whole) += body_total(*b);
    } else {
      split.push_back(b);
    }
  }
  if (split.empty()) return out;
  for (Eigen::Index i = 0; i < fan.size(); ++i) {
    const auto hs = cone_halfspaces(fan.cone(i));
    for (const auto* b : split) out(i) += b->density * b->body.clip(hs).volume();
  }
  return out;
}

std::vector<RegionMass> sampled_fan_masses(const MassDistribution& mu, const Fan<double>& fan,
                                           const SamplingOptions& sampling) {
  const auto cones = static_cast<std::size_t>(fan.size());
  std::vector<RegionMass> out(cones, RegionMass{0.0, MassMethod::Sampled, 0.0});
  if (mu.is_cloud()) {
    const Vector exact = fan_masses(mu, fan);
    for (std::size_t i = 0; i < cones; ++i) out[i] = {exact(static_cast<Eigen::Index>(i)), MassMethod::Exact, 0.0};
    return out;
  }
  const std::size_t n = std::max<std::size_t>(sampling.samples, 1);
  std::uint64_t stream = sampling.seed;
  for (const auto* b : bodies_of(mu)) {
    CounterRng rng(stream++);
    std::vector<std::size_t> hits(cones, 0);
    for (std::size_t s = 0; s < n; ++s) {
      const Vector x = sample_in_body(b->body, rng);
      ++hits[static_cast<std::size_t>(fan.owner(x - fan.apex()))];
    }
    const double m = body_total(*b);
    for (std::size_t i = 0; i < cones; ++i) {
      const double p = static_cast<double>(hits[i]) / static_cast<double>(n);
      out[i].mass += m * p;
      const double sd = m * std::sqrt(p * (1 - p) / static_cast<double>(n));
      out[i].error = std::sqrt(out[i].error * out[i].error + sd * sd);
    }
  }
  return out;
}

Vector soft_fan_masses(const PointCloud& cloud, const Fan<double>& fan, double temperature) {
  const auto m = fan.size();
  Vector out = Vector::Zero(m);
  Vector w(m);
  for (Eigen::Index k = 0; k < cloud.points.cols(); ++k) {
    const Vector t = fan.coefficients(cloud.points.col(k) - fan.apex());
    // t has minimum zero, so the largest exponent is exactly 1.
    w = (-t.array() / temperature).exp();
    out += cloud.weights(k) * w / w.sum();
  }
  return out;
}

Polytope clip_polytope(const Polytope& p, const HalfSpace<double>& h) { return p.clip(h); }

double polytope_volume(const Polytope& p) { return p.volume(); }

Vector alpha_vector(const DeltaZonotope<double>& z, const Vector& x) {
  const double tol = 1e-9 * std::max(1.0, z.diameter());
  if (!z.contains(x, tol)) throw Error(ErrorCode::PointOutside, "apex lies outside the zonotope");
  const Fan<double> fan = face_fan(z.simplex).translated_to(x);
  Vector out(fan.size());
  for (Eigen::Index i = 0; i < fan.size(); ++i) out(i) = z.polytope.clip(cone_halfspaces(fan.cone(i))).volume();
  return out;
}

PointCloud sample_distribution(const MassDistribution& mu, std::size_t count, std::uint64_t seed) {
  if (mu.is_cloud()) return mu.cloud();
  const auto bs = bodies_of(mu);
  // Allocate samples to bodies in proportion to mass, remainder to the first.
  std::vector<std::size_t> per(bs.size());
  std::size_t used = 0;
  for (std::size_t i = 0; i < bs.size(); ++i) {
    per[i] = static_cast<std::size_t>(std::floor(static_cast<double>(count) * body_total(*bs[i]) / mu.total()));
    used += per[i];
  }
  per[0] += count - used;
  PointCloud out{Matrix(mu.dim(), static_cast<Eigen::Index>(count)), Vector::Constant(static_cast<Eigen::Index>(count), mu.total() / static_cast<double>(count))};
  Eigen::Index col = 0;
  for (std::size_t i = 0; i < bs.size(); ++i) {
    CounterRng rng(seed + i);
    for (std::size_t k = 0; k < per[i]; ++k) out.points.col(col++) = sample_in_body(bs[i]->body, rng);
  }
  return out;
}

PointCloud load_point_cloud_csv(const std::string& path, Eigen::Index dim) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidScene, "cannot open point file " + path);
  std::vector<double> values;
  std::string line;
  std::size_t lineno = 0;
  Eigen::Index rows = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t\r", used) != std::string::npos) numeric = false;
      } catch (const std::exception&) {
        numeric = false;
      }
    }
    if (!numeric) {
      if (rows == 0 && values.empty()) continue;  // header
      throw Error(ErrorCode::InvalidScene, path + ":" + std::to_string(lineno) + ": non-numeric field");
    }
    if (static_cast<Eigen::Index>(row.size()) != dim + 1)
      throw Error(ErrorCode::InvalidScene, path + ":" + std::to_string(lineno) + ": expected " +
                                               std::to_string(dim + 1) + " fields");
    values.insert(values.end(), row.begin(), row.end());
    ++rows;
  }
  if (rows == 0) throw Error(ErrorCode::EmptyMeasure, path + ": no points");
  PointCloud c{Matrix(dim, rows), Vector(rows)};
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index k = 0; k < dim; ++k) c.points(k, r) = values[static_cast<std::size_t>(r * (dim + 1) + k)];
    c.weights(r) = values[static_cast<std::size_t>(r * (dim + 1) + dim)];
  }
  return c;
}

Polytope disc_polygon(const Vector& center, double radius, int segments) {
  if (center.size() != 2 || segments < 3 || !(radius > 0))
    throw Error(ErrorCode::InvalidArgument, "disc needs a planar center, positive radius and >= 3 segments");
  Matrix v(2, segments);
  for (int k = 0; k < segments; ++k) {
    const double phi = 2 * std::numbers::pi * k / segments;
    v.col(k) = center + radius * Vector{{std::cos(phi), std::sin(phi)}};
  }
  return Polytope::from_vertices(v);
}

}  // namespace curtain
