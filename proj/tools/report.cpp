#include <cmath>
#include <limits>

#include "cli.hpp"

namespace curtain::cli {
namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

const char* kind_name(PieceKind k) {
  switch (k) {
    case PieceKind::Arc: return "arc";
    case PieceKind::Segment: return "segment";
    case PieceKind::Point: return "point";
  }
  return "arc";
}

json body_json(const PolytopeBody& b) {
  return {{"vertices", matrix_columns_json(b.body.vertices())}, {"density", b.density}};
}

}  // namespace

json vector_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v(k));
  return out;
}

json matrix_columns_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(vector_json(m.col(c)));
  return out;
}

Vector json_vector(const json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v(static_cast<Eigen::Index>(k)) = j[k].get<double>();
  return v;
}

Matrix json_matrix_columns(const json& j) {
  if (j.empty()) return Matrix();
  Matrix m(static_cast<Eigen::Index>(j.front().size()), static_cast<Eigen::Index>(j.size()));
  for (std::size_t c = 0; c < j.size(); ++c) m.col(static_cast<Eigen::Index>(c)) = json_vector(j[c]);
  return m;
}

json measure_json(const MassDistribution& m) {
  return std::visit(
      [&](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, PointCloud>) {
          return {{"type", "points"}, {"points", matrix_columns_json(v.points)}, {"weights", vector_json(v.weights)},
                  {"total", m.total()}};
        } else if constexpr (std::is_same_v<T, PolytopeBody>) {
          json out = body_json(v);
          out["type"] = "polytope";
          out["total"] = m.total();
          return out;
        } else {
          json bodies = json::array();
          for (const auto& b : v.bodies) bodies.push_back(body_json(b));
          return {{"type", "union"}, {"bodies", bodies}, {"disjoint", v.disjoint}, {"total", m.total()}};
        }
      },
      m.variant());
}

Vector measure_residuals(const DiscrepancyMatrix& m) {
  Vector r = Vector::Zero(m.entries.rows());
  for (Eigen::Index i = 0; i < m.entries.rows(); ++i)
    r(i) = (m.entries.row(i).array() - m.totals(i) / m.q()).abs().maxCoeff();
  return r;
}

json solution_json(const Solution& s) {
  json matrix = json::array();
  for (Eigen::Index i = 0; i < s.matrix.entries.rows(); ++i) matrix.push_back(vector_json(s.matrix.entries.row(i)));
  json out = {{"status", to_string(s.status)},
              {"apex", vector_json(s.x)},
              {"allocation", s.theta.values},
              {"colors", s.theta.q},
              {"residual", s.residual},
              {"target", s.target},
              {"measure_residuals", vector_json(measure_residuals(s.matrix))},
              {"matrix", matrix},
              {"totals", vector_json(s.matrix.totals)},
              {"simplex", matrix_columns_json(s.simplex.vertices())},
              {"scale", s.scale},
              {"evaluations", s.evaluations},
              {"method", s.method}};
  if (s.curtain) {
    json walls = json::array();
    for (const auto& w : s.curtain->walls)
      walls.push_back({{"nu", w.nu}, {"mu", w.mu}, {"generators", matrix_columns_json(w.cone.generators)}});
    out["curtain"] = {{"apex", vector_json(s.curtain->apex)}, {"part", s.curtain->part}, {"walls", walls}};
  }
  return out;
}

json spline_json(const CircularSpline& s) {
  json pieces = json::array();
  for (const auto& p : s.pieces) {
    json j = {{"kind", kind_name(p.kind)},
              {"plane", vector_json(Vector(p.plane))},
              {"t0", finite_or_null(p.t0)},
              {"t1", finite_or_null(p.t1)},
              {"reversed", p.reversed},
              {"nu", p.nu},
              {"mu", p.mu}};
    if (p.kind == PieceKind::Segment) {
      j["origin"] = vector_json(Vector(p.origin));
      j["direction"] = vector_json(Vector(p.direction));
    } else {
      j["center"] = vector_json(Vector(p.center));
      j["radius"] = p.radius;
    }
    pieces.push_back(j);
  }
  return {{"pieces", pieces}, {"chain_starts", s.chain_starts}, {"outer_color", s.outer_color}, {"part", s.part}};
}

}  // namespace curtain::cli
