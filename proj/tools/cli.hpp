#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "curtain/applications.hpp"
#include "curtain/solver.hpp"

namespace curtain::cli {

using nlohmann::json;

inline constexpr int kSceneVersion = 1;
inline constexpr const char* kArtifactVersion = CURTAIN_VERSION;

enum ExitCode { kOk = 0, kInvalidScene = 1, kBudgetExceeded = 2, kInvariantViolation = 3 };

/// Scene problem located by input line or by JSON pointer into the document.
class SceneError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Scene {
  int version{kSceneVersion};
  std::string simplex_source;
  std::optional<Simplex<double>> simplex;
  std::vector<MassDistribution> measures;
  json resolved_measures = json::array();
  int q{2};
  FanMode mode{FanMode::A};
  SolverConfig solver;
  double demo_radius{0.05};
  int demo_grid{200};
};

/// Relative CSV paths resolve against `base`.
Scene parse_scene(const std::string& text, const std::filesystem::path& base);
Scene load_scene(const std::filesystem::path& path);

json vector_json(const Vector& v);
json matrix_columns_json(const Matrix& m);
Vector json_vector(const json& j);
Matrix json_matrix_columns(const json& j);

json measure_json(const MassDistribution& m);
json solution_json(const Solution& s);
json spline_json(const CircularSpline& s);

/// Largest deviation from an equal split, per measure.
Vector measure_residuals(const DiscrepancyMatrix& m);

/// SVG derived from a report alone; empty when the report has nothing planar to draw.
std::string render_svg(const json& report);

struct SuiteResult {
  std::string name;
  bool passed{false};
  double worst{0};
  double tolerance{0};
  std::string detail;
};

/// Invariant checks of every module, run against the scene simplex.
std::vector<SuiteResult> run_suites(const Simplex<double>& s, std::uint64_t seed);

/// Full command line including the program name; returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace curtain::cli
