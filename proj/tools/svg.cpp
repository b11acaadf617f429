#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "cli.hpp"

namespace curtain::cli {
namespace {

const char* const kPalette[] = {"#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#b07aa1",
                                "#76b7b2", "#edc948", "#ff9da7", "#9c755f", "#bab0ac"};
const char* const kMeasureInk[] = {"#1b1b1b", "#7a1f5c", "#1f5c7a", "#5c7a1f", "#7a5c1f"};

const char* palette(int k) { return kPalette[static_cast<std::size_t>(k) % std::size(kPalette)]; }
const char* ink(std::size_t k) { return kMeasureInk[k % std::size(kMeasureInk)]; }

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v == 0 ? 0.0 : v);
  return buf;
}

struct Box {
  Eigen::Vector2d lo;
  Eigen::Vector2d hi;

  double diagonal() const { return (hi - lo).norm(); }
};

Box padded(const Matrix& pts) {
  Box b{pts.rowwise().minCoeff(), pts.rowwise().maxCoeff()};
  const double margin = 0.1 * std::max((b.hi - b.lo).maxCoeff(), 1e-9);
  b.lo.array() -= margin;
  b.hi.array() += margin;
  return b;
}

// SVG y grows downward, so every y coordinate is negated.
class Canvas {
 public:
  explicit Canvas(const Box& box) : box_(box), unit_(box.diagonal() / 400) {
    out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << num(box.lo.x()) << ' ' << num(-box.hi.y()) << ' '
         << num(box.hi.x() - box.lo.x()) << ' ' << num(box.hi.y() - box.lo.y()) << "\" width=\"800\" height=\""
         << num(800 * (box.hi.y() - box.lo.y()) / (box.hi.x() - box.lo.x())) << "\">\n";
    out_ << "<rect x=\"" << num(box.lo.x()) << "\" y=\"" << num(-box.hi.y()) << "\" width=\"" << num(box.hi.x() - box.lo.x())
         << "\" height=\"" << num(box.hi.y() - box.lo.y()) << "\" fill=\"white\"/>\n";
  }

  const Box& box() const { return box_; }
  double unit() const { return unit_; }

  void open(const std::string& id) { out_ << "<g id=\"" << id << "\">\n"; }
  void close() { out_ << "</g>\n"; }

  std::string pt(const Eigen::Vector2d& p) const { return num(p.x()) + "," + num(-p.y()); }

  void polygon(const std::vector<Eigen::Vector2d>& poly, const std::string& fill, double opacity) {
    if (poly.size() < 3) return;
    out_ << "<polygon points=\"";
    for (std::size_t k = 0; k < poly.size(); ++k) out_ << (k ? " " : "") << pt(poly[k]);
    out_ << "\" fill=\"" << fill << "\" fill-opacity=\"" << num(opacity) << "\" stroke=\"none\"/>\n";
  }

  void dot(const Eigen::Vector2d& p, double r, const std::string& fill) {
    out_ << "<circle cx=\"" << num(p.x()) << "\" cy=\"" << num(-p.y()) << "\" r=\"" << num(r) << "\" fill=\"" << fill
         << "\"/>\n";
  }

  void line(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const std::string& stroke, double width, bool dashed) {
    out_ << "<line x1=\"" << num(a.x()) << "\" y1=\"" << num(-a.y()) << "\" x2=\"" << num(b.x()) << "\" y2=\""
         << num(-b.y()) << "\" stroke=\"" << stroke << "\" stroke-width=\"" << num(width * unit_) << "\"";
    if (dashed) out_ << " stroke-dasharray=\"" << num(4 * unit_) << "," << num(3 * unit_) << "\"";
    out_ << "/>\n";
  }

  void arc(const Eigen::Vector2d& c, double r, double t0, double t1, const std::string& stroke, double width) {
    const double sweep = t1 - t0;
    if (sweep >= 2 * std::numbers::pi - 1e-12) {
      out_ << "<circle cx=\"" << num(c.x()) << "\" cy=\"" << num(-c.y()) << "\" r=\"" << num(r)
           << "\" fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"" << num(width * unit_) << "\"/>\n";
      return;
    }
    const Eigen::Vector2d a = c + r * Eigen::Vector2d(std::cos(t0), std::sin(t0));
    const Eigen::Vector2d b = c + r * Eigen::Vector2d(std::cos(t1), std::sin(t1));
    out_ << "<path d=\"M " << pt(a) << " A " << num(r) << ' ' << num(r) << " 0 " << (sweep > std::numbers::pi ? 1 : 0)
         << " 0 " << pt(b) << "\" fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"" << num(width * unit_)
         << "\"/>\n";
  }

  std::string finish() {
    out_ << "</svg>\n";
    return out_.str();
  }

 private:
  Box box_;
  double unit_;
  std::ostringstream out_;
};

std::vector<Eigen::Vector2d> ordered(const Matrix& v) {
  std::vector<Eigen::Vector2d> pts;
  if (v.cols() == 0) return pts;
  const Eigen::Vector2d c = v.rowwise().mean();
  std::vector<std::pair<double, Eigen::Index>> order;
  for (Eigen::Index k = 0; k < v.cols(); ++k) order.emplace_back(std::atan2(v(1, k) - c.y(), v(0, k) - c.x()), k);
  std::sort(order.begin(), order.end());
  for (const auto& [angle, k] : order) pts.push_back(v.col(k));
  return pts;
}

void draw_body(Canvas& cv, const json& body, const std::string& color) {
  cv.polygon(ordered(json_matrix_columns(body["vertices"])), color, 0.45);
}

void draw_measures(Canvas& cv, const json& measures) {
  cv.open("measures");
  for (std::size_t i = 0; i < measures.size(); ++i) {
    const json& m = measures[i];
    const std::string type = m["type"];
    if (type == "points") {
      const Matrix pts = json_matrix_columns(m["points"]);
      for (Eigen::Index k = 0; k < pts.cols(); ++k) cv.dot(pts.col(k), 1.2 * cv.unit(), ink(i));
    } else if (type == "polytope") {
      draw_body(cv, m, ink(i));
    } else {
      for (const auto& b : m["bodies"]) draw_body(cv, b, ink(i));
    }
  }
  cv.close();
}

Matrix planar_points(const json& measures) {
  std::vector<Eigen::Vector2d> pts;
  auto add = [&](const Matrix& m) {
    for (Eigen::Index k = 0; k < m.cols(); ++k) pts.push_back(m.col(k));
  };
  for (const auto& m : measures) {
    if (m["type"] == "points") add(json_matrix_columns(m["points"]));
    else if (m["type"] == "polytope") add(json_matrix_columns(m["vertices"]));
    else
      for (const auto& b : m["bodies"]) add(json_matrix_columns(b["vertices"]));
  }
  Matrix out(2, static_cast<Eigen::Index>(pts.size()));
  for (std::size_t k = 0; k < pts.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = pts[k];
  return out;
}

std::string draw_fan(const Matrix& vertices, FanMode mode, const Vector& apex, const std::vector<int>& allocation,
                     const json& measures) {
  const auto simplex = Simplex<double>::create(vertices);
  const Matrix carrier = mode == FanMode::A ? Matrix(build_zonotope(simplex).vertices()) : vertices;
  Canvas cv(padded(carrier));
  const Box& box = cv.box();
  const Fan<double> fan = mode == FanMode::A ? face_fan(simplex).translated_to(apex) : apex_fan(simplex, apex);
  Matrix rect(2, 4);
  rect << box.lo.x(), box.hi.x(), box.hi.x(), box.lo.x(), box.lo.y(), box.lo.y(), box.hi.y(), box.hi.y();
  const Polytope view = Polytope::from_vertices(rect);

  cv.open("regions");
  for (Eigen::Index i = 0; i < fan.size(); ++i) {
    const Polytope region = view.clip(cone_halfspaces(fan.cone(i)));
    if (!region.empty()) cv.polygon(ordered(region.vertices()), palette(allocation[static_cast<std::size_t>(i)]), 0.18);
  }
  cv.close();
  draw_measures(cv, measures);

  // the ray through vertex k bounds the two cones other than k
  const double reach = 2 * box.diagonal();
  auto ray_end = [&](Eigen::Index k) {
    const Eigen::Vector2d dir = mode == FanMode::A ? Eigen::Vector2d(vertices.col(k)) : Eigen::Vector2d(vertices.col(k) - apex);
    return Eigen::Vector2d(apex + reach * dir.normalized());
  };
  cv.open("cone-boundaries");
  for (Eigen::Index k = 0; k < 3; ++k) cv.line(apex, ray_end(k), "#555555", 0.8, true);
  cv.close();
  cv.open("curtain");
  for (Eigen::Index k = 0; k < 3; ++k) {
    const auto i = static_cast<std::size_t>((k + 1) % 3), j = static_cast<std::size_t>((k + 2) % 3);
    if (allocation[i] != allocation[j]) cv.line(apex, ray_end(k), "#000000", 2.0, false);
  }
  cv.close();
  cv.open("apex");
  cv.dot(apex, 3 * cv.unit(), "#d62728");
  cv.close();
  return cv.finish();
}

double bound(const json& j, double fallback) { return j.is_null() ? fallback : j.get<double>(); }

std::string draw_spline(const json& spline, const json& measures) {
  Canvas cv(padded(planar_points(measures)));
  const Box& box = cv.box();
  draw_measures(cv, measures);
  cv.open("spline");
  for (const auto& p : spline["pieces"]) {
    const double inf = std::numeric_limits<double>::infinity();
    double t0 = bound(p["t0"], -inf), t1 = bound(p["t1"], inf);
    if (p["kind"] == "arc") {
      cv.arc(json_vector(p["center"]), p["radius"].get<double>(), t0, t1, "#000000", 2.0);
    } else if (p["kind"] == "segment") {
      const Eigen::Vector2d o = json_vector(p["origin"]), dir = json_vector(p["direction"]);
      const double mid = ((box.lo + box.hi) / 2 - o).dot(dir) / dir.squaredNorm();
      const double half = 2 * box.diagonal() / dir.norm();
      t0 = std::max(t0, mid - half);
      t1 = std::min(t1, mid + half);
      if (t0 < t1) cv.line(o + t0 * dir, o + t1 * dir, "#000000", 2.0, false);
    }
  }
  cv.close();
  return cv.finish();
}

}  // namespace

std::string render_svg(const json& report) {
  const std::string command = report.at("command");
  const json& measures = report.at("scene").at("measures");
  if (command == "spline") return draw_spline(report.at("spline"), measures);
  if (command == "demo-counterexample") {
    const json& g = report.at("grid_minimum");
    return draw_fan(json_matrix_columns(report.at("scene").at("simplex")), FanMode::A, json_vector(g.at("apex")),
                    g.at("allocation").get<std::vector<int>>(), measures);
  }
  if (command == "solve-curtain" || command == "solve-fan") {
    const json& s = report.at("solution");
    const Matrix vertices = json_matrix_columns(s.at("simplex"));
    if (vertices.rows() != 2) return {};
    const FanMode mode = report.at("config").at("mode") == "B" ? FanMode::B : FanMode::A;
    return draw_fan(vertices, mode, json_vector(s.at("apex")), s.at("allocation").get<std::vector<int>>(), measures);
  }
  return {};
}

}  // namespace curtain::cli
