#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "tfib/app/runner.hpp"
#include "tfib/geom/audit.hpp"
#include "tfib/geom/stl.hpp"
#include "tfib/ibm/mask.hpp"
#include "tfib/solver/flow.hpp"

using namespace tfib;
namespace fs = std::filesystem;

namespace {

int cmd_audit(const std::string& path, double scale, double weld) {
  const TriangleSoup soup = load_geometry(path, scale);
  const IssueReport rep = audit_geometry(soup, weld > 0.0 ? weld : default_weld_tolerance(soup));
  std::cout << to_json(rep).dump(2) << "\n";
  return 0;
}

int cmd_grid(const std::string& path) {
  const CaseConfig c = read_config(path);
  c.validate();
  const TriangleSoup soup = build_geometry(c);
  ForestSpec spec;
  spec.domain = Box3(c.domain_lo, c.domain_hi);
  spec.dim = c.dim;
  spec.cells_per_side = c.resolution / (c.root_cubes << c.max_levels);
  spec.finest_dx = c.finest_dx();
  spec.max_levels = c.max_levels;
  spec.pad_cells = c.pad_cells;
  for (int a = 0; a < 3; ++a) spec.periodic[static_cast<std::size_t>(a)] = a < c.dim && c.bc[2 * a] == BcType::kPeriodic;
  const CubeForest forest = generate_forest(spec, soup);
  nlohmann::json j = forest.summary();
  j["triangles"] = soup.size();
  if (!soup.empty()) {
    const HaloPlan plan(forest);
    const RayAccelerator acc(soup);
    CellMask mask = classify_cells(forest, plan, acc);
    if (c.dead_end_filter) dead_end_filter(forest, mask);
    j["mask"] = {{"fluid", mask.fluid},
                 {"wall_including", mask.wall_including},
                 {"wall_adjacent", mask.wall_adjacent},
                 {"dead_end", mask.dead_end_count}};
  }
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_run(const std::string& path, const std::string& out, int threads, long steps) {
  CaseConfig c = read_config(path);
  if (threads > 0) c.threads = threads;
  if (steps >= 0) c.steps = steps;
  const fs::path dir = out.empty() ? fs::path("runs") / c.name : fs::path(out);
  const RunResult r = run_case(c, dir);
  nlohmann::json j = nlohmann::json::parse(std::ifstream(dir / "report.json"));
  std::cout << j.dump(2) << "\n";
  if (!r.divergence_ok) {
    std::cerr << "divergence exceeded 10 x poisson_tol (worst " << r.worst_divergence << ")\n";
    return 3;
  }
  return 0;
}

int cmd_study(const std::string& path, const std::vector<int>& levels, const std::string& out, int threads) {
  CaseConfig c = read_config(path);
  if (threads > 0) c.threads = threads;
  const fs::path dir = out.empty() ? fs::path("runs") / (c.name + "_study") : fs::path(out);
  fs::create_directories(dir);
  const StudyResult r = convergence_study(c, levels, dir);
  std::cout << nlohmann::json::parse(std::ifstream(dir / "study.json")).dump(2) << "\n";
  for (bool ok : r.divergence_ok) {
    if (!ok) return 3;
  }
  return 0;
}

int cmd_report(const std::string& dir) {
  const auto problems = verify_manifest(dir);
  std::ifstream in(fs::path(dir) / "report.json");
  if (in) std::cout << nlohmann::json::parse(in).dump(2) << "\n";
  for (const auto& p : problems) std::cerr << "manifest: " << p << "\n";
  if (!problems.empty()) return 4;
  const auto m = nlohmann::json::parse(std::ifstream(fs::path(dir) / "manifest.json"));
  return m.value("status", "") == "ok" ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Immersed-boundary flow solver for dirty triangle geometry"};
  app.require_subcommand(1);

  std::string stl, config, out, run_dir;
  double scale = 1.0, weld = 0.0;
  int threads = 0;
  long steps = -1;
  std::vector<int> levels;

  auto* audit = app.add_subcommand("audit", "Report gaps, over-connected edges and duplicates of an STL file");
  audit->add_option("stl", stl, "STL file")->required()->check(CLI::ExistingFile);
  audit->add_option("--scale", scale, "Unit scale applied to vertices");
  audit->add_option("--weld", weld, "Weld distance (default 1e-6 of the bounding-box diagonal)");

  auto* grid = app.add_subcommand("grid", "Build the cube forest and cell mask of a case and print a summary");
  grid->add_option("config", config, "Case config")->required()->check(CLI::ExistingFile);

  auto* run = app.add_subcommand("run", "Run a case");
  run->add_option("config", config, "Case config")->required()->check(CLI::ExistingFile);
  run->add_option("-o,--out", out, "Run directory (default runs/<name>)");
  run->add_option("--threads", threads, "Worker threads");
  run->add_option("--steps", steps, "Override the step count");

  auto* study = app.add_subcommand("study", "Convergence study of a TGV case over several resolutions");
  study->add_option("config", config, "Case config")->required()->check(CLI::ExistingFile);
  study->add_option("--levels", levels, "Resolutions, at least three")->required()->expected(3, -1);
  study->add_option("-o,--out", out, "Study directory (default runs/<name>_study)");
  study->add_option("--threads", threads, "Worker threads");

  auto* report = app.add_subcommand("report", "Verify a run directory and print its report");
  report->add_option("run_dir", run_dir, "Run directory")->required()->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*audit) return cmd_audit(stl, scale, weld);
    if (*grid) return cmd_grid(config);
    if (*run) return cmd_run(config, out, threads, steps);
    if (*study) return cmd_study(config, levels, out, threads);
    if (*report) return cmd_report(run_dir);
  } catch (const CaseError& e) {
    std::cerr << "error in stage " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
