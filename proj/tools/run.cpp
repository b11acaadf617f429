#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "cli.hpp"

namespace curtain::cli {
namespace {

struct Flags {
  std::string scene;
  std::string out{"."};
  std::string report;
  std::optional<std::uint64_t> seed;
  std::optional<double> epsilon;
  std::optional<std::string> mode;
  std::optional<long> budget;
  bool svg{false};
};

const char* mode_name(FanMode m) { return m == FanMode::A ? "A" : "B"; }

json config_json(const Scene& s, const SolverConfig& cfg) {
  return {{"epsilon", cfg.epsilon},
          {"grid", cfg.grid},
          {"candidates", cfg.candidates},
          {"max_evaluations", cfg.max_evaluations},
          {"seed", cfg.seed},
          {"body_samples", cfg.body_samples},
          {"exact_points", cfg.exact_points},
          {"q", s.q},
          {"mode", mode_name(s.mode)}};
}

json scene_json(const Scene& s) {
  json out = {{"version", s.version}, {"measures", s.resolved_measures}, {"q", s.q}, {"mode", mode_name(s.mode)}};
  if (s.simplex) {
    out["simplex_source"] = s.simplex_source;
    out["simplex"] = matrix_columns_json(s.simplex->vertices());
  }
  return out;
}

[[noreturn]] void scene_fail(const std::string& field, const std::string& msg) {
  throw SceneError("field " + field + ": " + msg);
}

const Simplex<double>& require_simplex(const Scene& s) {
  if (!s.simplex) scene_fail("/simplex", "missing");
  return *s.simplex;
}

Instance make_instance(const Scene& s) {
  const auto& simplex = require_simplex(s);
  if (s.measures.empty()) scene_fail("/measures", "at least one measure is required");
  const auto d = simplex.dim();
  if (s.measures.front().dim() != d)
    scene_fail("/measures/0", "measures live in dimension " + std::to_string(s.measures.front().dim()) +
                                  " but the simplex in dimension " + std::to_string(d));
  if (static_cast<Eigen::Index>(s.measures.size()) * (s.q - 1) != d)
    scene_fail("/measures", "expected d = n(q-1), got d = " + std::to_string(d) + ", n = " +
                                std::to_string(s.measures.size()) + ", q = " + std::to_string(s.q));
  return Instance::create(simplex, s.measures, s.q, s.mode);
}

/// Row sums of the reported matrix must reproduce the measure totals.
bool rows_conserved(const DiscrepancyMatrix& m) {
  for (Eigen::Index i = 0; i < m.entries.rows(); ++i)
    if (std::abs(m.entries.row(i).sum() - m.totals(i)) > 1e-9 * std::max(1.0, m.totals(i))) return false;
  return true;
}

int status_code(const Solution& s) {
  if (!rows_conserved(s.matrix)) return kInvariantViolation;
  return s.status == SolveStatus::BudgetExceeded ? kBudgetExceeded : kOk;
}

struct Outcome {
  json report;
  int code{kOk};
  std::string summary;
};

Outcome solve_command(const std::string& command, const Scene& scene, const SolverConfig& cfg) {
  Outcome o;
  if (command == "solve-curtain" && scene.q != 2) scene_fail("/q", "curtains split into two colors");
  if (command == "solve-fan") {
    try {
      verify_prime_power(scene.q);
    } catch (const Error& e) {
      scene_fail("/q", e.what());
    }
  }
  const Instance inst = make_instance(scene);
  const Solution sol = command == "solve-curtain" ? solve_curtain(inst, cfg) : solve_fan(inst, cfg);
  o.report["solution"] = solution_json(sol);
  o.code = status_code(sol);
  std::ostringstream line;
  line << command << ": " << to_string(sol.status) << " residual " << sol.residual << " (target " << sol.target << ")";
  o.summary = line.str();
  return o;
}

Outcome spline_command(const Scene& scene, const SolverConfig& cfg) {
  Outcome o;
  if (scene.measures.size() != 3) scene_fail("/measures", "circular splines bisect exactly three planar measures");
  for (std::size_t i = 0; i < 3; ++i)
    if (scene.measures[i].dim() != 2) scene_fail("/measures/" + std::to_string(i), "expected a planar measure");
  if (scene.simplex && scene.simplex->dim() != 3) scene_fail("/simplex", "circular splines need a tetrahedron");
  const auto tet = scene.simplex ? *scene.simplex : Simplex<double>::regular(3);
  const auto res = solve_circular_spline(scene.measures, tet, cfg);
  o.report["solution"] = solution_json(res.solution);
  o.report["spline"] = spline_json(res.spline);
  o.report["residuals"] = vector_json(res.residuals);
  o.code = status_code(res.solution);
  std::ostringstream line;
  line << "spline: " << to_string(res.solution.status) << " " << res.spline.pieces.size() << " pieces, max residual "
       << res.residuals.maxCoeff();
  o.summary = line.str();
  return o;
}

Outcome verify_command(const Scene& scene, const SolverConfig& cfg, std::ostream& out) {
  Outcome o;
  const auto results = run_suites(require_simplex(scene), cfg.seed);
  json suites = json::array();
  int failed = 0;
  for (const auto& r : results) {
    out << (r.passed ? "PASS " : "FAIL ") << r.name << " worst " << r.worst << " tolerance " << r.tolerance
        << (r.detail.empty() ? "" : " " + r.detail) << "\n";
    suites.push_back({{"name", r.name}, {"passed", r.passed}, {"worst", r.worst}, {"tolerance", r.tolerance},
                      {"detail", r.detail}});
    failed += r.passed ? 0 : 1;
  }
  o.report["suites"] = suites;
  o.code = failed ? kInvariantViolation : kOk;
  o.summary = "verify: " + std::to_string(results.size() - static_cast<std::size_t>(failed)) + "/" +
              std::to_string(results.size()) + " suites passed";
  return o;
}

Outcome demo_command(Scene& scene, const SolverConfig& cfg) {
  Outcome o;
  const Instance inst = counterexample_instance(scene.demo_radius);
  scene.simplex = inst.simplex;
  scene.simplex_source = "regular 2";
  scene.resolved_measures = json::array();
  for (const auto& m : inst.measures) scene.resolved_measures.push_back(measure_json(m));
  const auto rep = counterexample_report(scene.demo_radius, scene.demo_grid, cfg);
  const double floor = 0.5 * rep.disc_mass;
  o.report["demo"] = {{"radius", rep.radius}, {"grid", rep.grid}, {"disc_mass", rep.disc_mass},
                      {"floor", floor}, {"min_residual", rep.min_residual}};
  o.report["grid_minimum"] = {{"apex", vector_json(rep.best_x)},
                              {"allocation", rep.best_theta.values},
                              {"residual", rep.min_residual}};
  o.report["two_measure"] = solution_json(rep.two_measure);
  o.code = rep.min_residual < floor - 1e-12 ? kInvariantViolation : status_code(rep.two_measure);
  std::ostringstream line;
  line << "demo-counterexample: grid minimum " << rep.min_residual << " (floor " << floor << "), two measures "
       << rep.two_measure.residual;
  o.summary = line.str();
  return o;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) throw std::runtime_error("cannot write " + path.string());
}

int render_command(const Flags& flags, std::ostream& out, std::ostream& err) {
  json report;
  {
    std::ifstream in(flags.report);
    if (!in) {
      err << "error: cannot read report " << flags.report << "\n";
      return kInvalidScene;
    }
    try {
      report = json::parse(in);
    } catch (const json::exception& e) {
      err << "error: " << flags.report << ": " << e.what() << "\n";
      return kInvalidScene;
    }
  }
  std::string svg;
  try {
    svg = render_svg(report);
  } catch (const json::exception& e) {
    err << "error: " << flags.report << ": " << e.what() << "\n";
    return kInvalidScene;
  }
  if (svg.empty()) {
    err << "error: nothing planar to render\n";
    return kInvalidScene;
  }
  std::filesystem::path target = flags.report;
  target.replace_extension(".svg");
  if (flags.out != ".") target = std::filesystem::path(flags.out) / target.filename();
  write_file(target, svg);
  out << "render: wrote " << target.string() << "\n";
  return kOk;
}

int execute(const std::string& command, const Flags& flags, std::ostream& out, std::ostream& err) {
  if (command == "render") return render_command(flags, out, err);
  const auto start = std::chrono::steady_clock::now();
  Scene scene;
  SolverConfig cfg;
  Outcome o;
  try {
    scene = load_scene(flags.scene);
    if (flags.mode) scene.mode = *flags.mode == "A" ? FanMode::A : FanMode::B;
    cfg = scene.solver;
    if (flags.seed) cfg.seed = *flags.seed;
    if (flags.epsilon) cfg.epsilon = *flags.epsilon;
    if (flags.budget) cfg.max_evaluations = *flags.budget;
    if (command == "solve-curtain" || command == "solve-fan") o = solve_command(command, scene, cfg);
    else if (command == "spline") o = spline_command(scene, cfg);
    else if (command == "verify") o = verify_command(scene, cfg, out);
    else o = demo_command(scene, cfg);
  } catch (const SceneError& e) {
    err << "error: " << flags.scene << ": " << e.what() << "\n";
    return kInvalidScene;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kInvariantViolation;
  }
  json report = {{"artifact", {{"name", "curtain"}, {"version", kArtifactVersion}}},
                 {"command", command},
                 {"seed", cfg.seed},
                 {"config", config_json(scene, cfg)},
                 {"scene", scene_json(scene)}};
  report.update(o.report);
  report["exit_code"] = o.code;
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report["timing"] = {{"seconds", seconds}};

  const std::filesystem::path dir = flags.out;
  std::filesystem::create_directories(dir);
  const auto report_path = dir / (command + ".json");
  write_file(report_path, report.dump(2) + "\n");
  out << o.summary << "\n" << "report: " << report_path.string() << "\n";
  if (flags.svg) {
    const std::string svg = render_svg(json::parse(report.dump()));
    if (svg.empty()) {
      err << "warning: no planar drawing for this scene\n";
    } else {
      const auto svg_path = dir / (command + ".svg");
      write_file(svg_path, svg);
      out << "svg: " << svg_path.string() << "\n";
    }
  }
  return o.code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fair partitions by curtains, fans and circular splines", "curtain"};
  app.require_subcommand(1);
  Flags flags;
  std::string chosen;
  auto scene_command = [&](const std::string& name, const std::string& help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--scene", flags.scene, "scene JSON file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", flags.out, "output directory");
    sub->add_option("--seed", flags.seed, "seed for sampling and search");
    sub->add_option("--epsilon", flags.epsilon, "relative residual target")->check(CLI::PositiveNumber);
    sub->add_option("--mode", flags.mode, "fan mode")->check(CLI::IsMember({"A", "B"}));
    sub->add_option("--budget", flags.budget, "maximum objective evaluations")->check(CLI::PositiveNumber);
    sub->add_flag("--svg", flags.svg, "also write an SVG drawing");
    sub->callback([&chosen, name] { chosen = name; });
  };
  scene_command("solve-curtain", "equipartition d measures in R^d by a curtain");
  scene_command("solve-fan", "equipartition n measures into q parts by a translated or apex fan");
  scene_command("spline", "bisect three planar measures by a circular spline");
  scene_command("verify", "run the invariant suites against the scene simplex");
  scene_command("demo-counterexample", "three small discs that no planar curtain bisects");
  auto* render = app.add_subcommand("render", "redraw the SVG of a report");
  render->add_option("--report", flags.report, "report JSON file")->required()->check(CLI::ExistingFile);
  render->add_option("--out", flags.out, "output directory");
  render->callback([&chosen] { chosen = "render"; });

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInvalidScene;
  }
  try {
    return execute(chosen, flags, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInvariantViolation;
  }
}

}  // namespace curtain::cli
