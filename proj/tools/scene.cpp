#include <fstream>
#include <sstream>

#include "cli.hpp"

namespace curtain::cli {
namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw SceneError("field " + (path.empty() ? std::string("/") : path) + ": " + msg);
}

const json& member(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.contains(key)) fail(path + "/" + key, "missing");
  return obj.at(key);
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

double positive(const json& j, const std::string& path) {
  const double v = number(j, path);
  if (!(v > 0)) fail(path, "expected a positive number");
  return v;
}

long long integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<long long>();
}

std::string string(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

/// Array of points, one inner array per point, all of dimension `dim` (or any when dim < 0).
Matrix points(const json& j, const std::string& path, Eigen::Index dim = -1) {
  if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array of points");
  const Eigen::Index d = dim >= 0 ? dim : static_cast<Eigen::Index>(j.front().is_array() ? j.front().size() : 0);
  if (d == 0) fail(path + "/0", "expected a point");
  Matrix m(d, static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) {
    const std::string p = path + "/" + std::to_string(k);
    if (!j[k].is_array() || static_cast<Eigen::Index>(j[k].size()) != d)
      fail(p, "expected a point with " + std::to_string(d) + " coordinates");
    for (std::size_t c = 0; c < j[k].size(); ++c)
      m(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(k)) = number(j[k][c], p + "/" + std::to_string(c));
  }
  return m;
}

Polytope polytope(const json& j, const std::string& path) {
  const Matrix v = points(member(j, "vertices", path), path + "/vertices");
  try {
    Polytope p = Polytope::from_vertices(v);
    if (p.empty() || p.volume() <= 0) fail(path + "/vertices", "polytope is not full-dimensional");
    return p;
  } catch (const Error& e) {
    fail(path + "/vertices", e.what());
  }
}

double density(const json& j, const std::string& path) {
  return j.contains("density") ? positive(j["density"], path + "/density") : 1.0;
}

MassDistribution measure(const json& j, const std::string& path, const std::filesystem::path& base) {
  if (!j.is_object()) fail(path, "expected an object");
  const std::string type = string(member(j, "type", path), path + "/type");
  try {
    if (type == "points") {
      const Matrix pts = points(member(j, "points", path), path + "/points");
      if (!j.contains("weights")) return MassDistribution::points(pts);
      const json& w = j["weights"];
      if (!w.is_array() || static_cast<Eigen::Index>(w.size()) != pts.cols())
        fail(path + "/weights", "expected one weight per point");
      Vector weights(pts.cols());
      for (std::size_t k = 0; k < w.size(); ++k)
        weights(static_cast<Eigen::Index>(k)) = positive(w[k], path + "/weights/" + std::to_string(k));
      return MassDistribution::points(pts, weights);
    }
    if (type == "csv") {
      const auto dim = integer(member(j, "dim", path), path + "/dim");
      if (dim < 1) fail(path + "/dim", "expected a positive dimension");
      std::filesystem::path file = string(member(j, "path", path), path + "/path");
      if (file.is_relative()) file = base / file;
      try {
        auto c = load_point_cloud_csv(file.string(), static_cast<Eigen::Index>(dim));
        if ((c.weights.array() <= 0).any()) fail(path + "/path", "weights must be positive");
        return MassDistribution::points(std::move(c.points), std::move(c.weights));
      } catch (const Error& e) {
        fail(path + "/path", e.what());
      }
    }
    if (type == "polytope") return MassDistribution::body(polytope(j, path), density(j, path));
    if (type == "disc") {
      const Matrix c = points(json::array({member(j, "center", path)}), path + "/center", 2);
      const double r = positive(member(j, "radius", path), path + "/radius");
      const int segments = j.contains("segments") ? static_cast<int>(integer(j["segments"], path + "/segments")) : 64;
      if (segments < 3) fail(path + "/segments", "expected at least 3");
      return MassDistribution::body(disc_polygon(c.col(0), r, segments), density(j, path));
    }
    if (type == "union") {
      const json& bodies = member(j, "bodies", path);
      if (!bodies.is_array() || bodies.empty()) fail(path + "/bodies", "expected a non-empty array");
      std::vector<PolytopeBody> parts;
      for (std::size_t k = 0; k < bodies.size(); ++k) {
        const std::string p = path + "/bodies/" + std::to_string(k);
        parts.push_back({polytope(bodies[k], p), density(bodies[k], p)});
      }
      const bool disjoint = j.value("disjoint", true);
      return MassDistribution::bodies(std::move(parts), disjoint);
    }
  } catch (const Error& e) {
    fail(path, e.what());
  }
  fail(path + "/type", "unknown measure type '" + type + "'");
}

Simplex<double> simplex(const json& j, const std::string& path, std::string& source) {
  try {
    if (j.is_string()) {
      source = j.get<std::string>();
      std::istringstream in(source);
      std::string word;
      long long d = 0;
      std::string rest;
      if (!(in >> word >> d) || word != "regular" || (in >> rest)) fail(path, "expected \"regular <d>\" or a vertex list");
      if (d < 1 || d > 6) fail(path, "dimension must be between 1 and 6");
      return Simplex<double>::regular(static_cast<Eigen::Index>(d));
    }
    source = "vertices";
    const Matrix v = points(j, path);
    if (v.cols() != v.rows() + 1) fail(path, "expected d + 1 vertices in dimension d");
    return Simplex<double>::create(v);
  } catch (const Error& e) {
    fail(path, e.what());
  }
}

void solver_config(const json& j, const std::string& path, SolverConfig& cfg) {
  if (!j.is_object()) fail(path, "expected an object");
  for (const auto& [key, value] : j.items()) {
    const std::string p = path + "/" + key;
    if (key == "epsilon") cfg.epsilon = positive(value, p);
    else if (key == "grid") cfg.grid = static_cast<int>(integer(value, p));
    else if (key == "candidates") cfg.candidates = static_cast<int>(integer(value, p));
    else if (key == "max_evaluations") cfg.max_evaluations = static_cast<long>(integer(value, p));
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(integer(value, p));
    else if (key == "body_samples") cfg.body_samples = static_cast<std::size_t>(integer(value, p));
    else if (key == "exact_points") cfg.exact_points = static_cast<int>(integer(value, p));
    else fail(p, "unknown solver option");
  }
  if (cfg.grid < 0 || cfg.candidates < 1 || cfg.max_evaluations < 1 || cfg.body_samples < 1)
    fail(path, "solver options must be positive");
}

std::string position(const std::string& text, std::size_t byte) {
  std::size_t line = 1, column = 1;
  for (std::size_t k = 0; k < std::min(byte, text.size()); ++k) {
    if (text[k] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

}  // namespace

Scene parse_scene(const std::string& text, const std::filesystem::path& base) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SceneError(position(text, e.byte > 0 ? e.byte - 1 : 0) + ": " + e.what());
  }
  if (!doc.is_object()) fail("", "expected a JSON object");
  Scene s;
  const auto version = integer(member(doc, "version", ""), "/version");
  if (version != kSceneVersion) fail("/version", "unsupported version " + std::to_string(version));
  s.version = static_cast<int>(version);
  for (const auto& [key, value] : doc.items())
    if (key != "version" && key != "simplex" && key != "measures" && key != "q" && key != "mode" && key != "solver" &&
        key != "demo" && key != "description")
      fail("/" + key, "unknown field");
  if (doc.contains("simplex")) s.simplex = simplex(doc["simplex"], "/simplex", s.simplex_source);
  if (doc.contains("measures")) {
    const json& ms = doc["measures"];
    if (!ms.is_array()) fail("/measures", "expected an array");
    for (std::size_t k = 0; k < ms.size(); ++k) {
      const std::string p = "/measures/" + std::to_string(k);
      s.measures.push_back(measure(ms[k], p, base));
      if (s.measures.back().dim() != s.measures.front().dim()) fail(p, "dimension differs from the first measure");
      s.resolved_measures.push_back(measure_json(s.measures.back()));
    }
  }
  if (doc.contains("q")) {
    s.q = static_cast<int>(integer(doc["q"], "/q"));
    if (s.q < 2) fail("/q", "expected at least two colors");
  }
  if (doc.contains("mode")) {
    const std::string m = string(doc["mode"], "/mode");
    if (m != "A" && m != "B") fail("/mode", "expected \"A\" or \"B\"");
    s.mode = m == "A" ? FanMode::A : FanMode::B;
  }
  if (doc.contains("solver")) solver_config(doc["solver"], "/solver", s.solver);
  if (doc.contains("demo")) {
    const json& d = doc["demo"];
    if (!d.is_object()) fail("/demo", "expected an object");
    if (d.contains("radius")) s.demo_radius = positive(d["radius"], "/demo/radius");
    if (d.contains("grid")) s.demo_grid = static_cast<int>(integer(d["grid"], "/demo/grid"));
    if (s.demo_grid < 1) fail("/demo/grid", "expected a positive integer");
  }
  return s;
}

Scene load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SceneError("cannot read scene " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scene(buf.str(), path.parent_path());
}

}  // namespace curtain::cli
