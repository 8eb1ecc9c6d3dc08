// Acceptance runner: one PASS/FAIL line per criterion, exit code 0 only when
// every selected criterion passes. `--only 1,7` selects criteria,
// `--work DIR` sets the scratch directory for run outputs. `--report` exits 0
// once every criterion has reached a verdict, failing only when one throws.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "tfib/app/runner.hpp"
#include "tfib/geom/raycast.hpp"
#include "tfib/geom/shapes.hpp"
#include "tfib/ibm/dummy.hpp"
#include "tfib/ibm/forcing.hpp"
#include "tfib/ibm/mask.hpp"
#include "tfib/post/forces.hpp"
#include "tfib/solver/flow.hpp"
#include "tfib/turb/csm.hpp"
#include "tfib/turb/isotropic.hpp"

using namespace tfib;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

fs::path g_work;
// Divergence record of every flow run, for criterion 3.
struct DivergenceLog {
  int runs = 0;
  int failed = 0;
  double worst_ratio = 0.0;  // max |div U| / poisson_tol
  void add(bool ok, double worst, double tol) {
    ++runs;
    failed += ok ? 0 : 1;
    worst_ratio = std::max(worst_ratio, worst / tol);
  }
} g_div;

CaseConfig load_case(const std::string& name) { return read_config(fs::path(TFIB_CASES_DIR) / (name + ".cfg")); }

StudyResult study(const std::string& name, const std::vector<int>& levels) {
  const CaseConfig c = load_case(name);
  const fs::path dir = g_work / (name + "_study");
  fs::create_directories(dir);
  StudyResult r = convergence_study(c, levels, dir);
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const auto rep = nlohmann::json::parse(std::ifstream(dir / ("N" + std::to_string(r.resolutions[i])) / "report.json"));
    g_div.add(r.divergence_ok[i], rep["worst_divergence"].get<double>(), c.poisson_tol);
  }
  return r;
}

std::string l2_list(const StudyResult& r) {
  std::string s;
  for (std::size_t i = 0; i < r.norms.size(); ++i) {
    s += (i ? " " : "") + std::to_string(r.resolutions[i]) + ":" + fmt("%.3e", r.norms[i].l2);
  }
  return s;
}

// 1. Periodic vortex without a body, second order in space.
Outcome baseline_order() {
  const StudyResult r = study("tgv_periodic", {40, 80, 160});
  const double s = r.overall[1].slope;
  return {s >= 1.8 && s <= 2.2, "L2 slope " + fmt("%.3f", s) + " in [1.8, 2.2] (" + l2_list(r) + ")"};
}

// 2. Vortex around the square and the circle over N = 40 ... 640.
Outcome immersed_order() {
  struct Target {
    const char* name;
    double overall, coarse;
  };
  bool pass = true;
  std::string detail;
  for (const Target& t : {Target{"tgv_square", 1.37, 2.08}, Target{"tgv_circle", 1.34, 2.23}}) {
    const StudyResult r = study(t.name, {40, 80, 160, 320, 640});
    const double so = r.overall[1].slope, sc = r.coarse[1].slope;
    const bool ok = std::abs(so - t.overall) <= 0.35 && std::abs(sc - t.coarse) <= 0.35;
    pass = pass && ok;
    detail += std::string(detail.empty() ? "" : "; ") + t.name + " overall " + fmt("%.3f", so) + " (target " +
              fmt("%.2f", t.overall) + "), coarse three " + fmt("%.3f", sc) + " (target " + fmt("%.2f", t.coarse) +
              ") [" + l2_list(r) + "]";
  }
  return {pass, detail};
}

// 4. Moving lid wall inside the domain: after every step, the straight line
// through a forced cell and its opposite neighbour reaches the wall
// velocity at the crossing to within C dx.
Outcome ghost_consistency() {
  std::vector<double> ratio;  // max error / dx per resolution
  std::vector<double> errs, dxs;
  std::string detail;
  for (int n : {16, 32, 64}) {
    ForestSpec fs;
    fs.dim = 2;
    fs.cells_per_side = n / 2;
    fs.finest_dx = 1.0 / n;
    fs.domain = Box3(Vec3(0, 0, -0.5), Vec3(1, 1, 0.5));
    fs.periodic = {true, false, false};
    const CubeForest forest = generate_forest(fs, TriangleSoup{});
    const double dx = 1.0 / n;
    // Wall between cell centres, 0.3 of a cell above the row boundary.
    const double y0 = 0.625 + 0.3 * dx;
    TriangleSoup lid;
    lid.add(Vec3(-1, y0, -1), Vec3(2, y0, -1), Vec3(2, y0, 1));
    lid.add(Vec3(-1, y0, -1), Vec3(2, y0, 1), Vec3(-1, y0, 1));
    lid.refresh();
    BoundarySpec bc = BoundarySpec::all_periodic();
    for (int f = 2; f < 4; ++f) bc.face[static_cast<std::size_t>(f)].type = BcType::kSlip;
    SchemeConfig sc;
    sc.dt = 0.25 * dx;
    sc.re = 100;
    sc.integrator = TimeIntegrator::kAdamsBashforth;
    sc.quick_blend = 0.0;
    sc.forcing = ForcingRule::kInterpolate;
    const Vec3 wall_u(1, 0, 0);
    FlowSolver s(forest, sc, bc, &lid, [wall_u](const Vec3&, double) { return wall_u; });
    s.initialize([](const Vec3&, double) { return Vec3::Zero(); });
    double worst = 0.0, worst_div = 0.0;
    std::size_t checks = 0;
    bool div_ok = true;
    for (int step = 0; step < 40; ++step) {
      const StepStats st = s.advance();
      worst_div = std::max(worst_div, st.max_divergence);
      div_ok = div_ok && st.max_divergence <= 10 * sc.poisson_tol;
      std::array<CellField, 3> u = s.state().u;
      s.fill_velocity_halos(u);
      const auto& strides = forest.strides();
      for (const ForcingSite& site : s.forcing_sites()) {
        const int axis = site.direction / 2, side = site.direction % 2 ? 1 : -1;
        const std::ptrdiff_t off = -side * strides[static_cast<std::size_t>(axis)];
        const std::size_t opp = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(site.flat) + off);
        for (int c = 0; c < 2; ++c) {
          const double uc = u[static_cast<std::size_t>(c)][site.flat];
          const double uo = u[static_cast<std::size_t>(c)][opp];
          const double at_wall = uo + (uc - uo) * (site.dx + site.d) / site.dx;
          worst = std::max(worst, std::abs(at_wall - wall_u[c]));
          ++checks;
        }
      }
    }
    g_div.add(div_ok, worst_div, sc.poisson_tol);
    ratio.push_back(worst / dx);
    errs.push_back(worst);
    dxs.push_back(dx);
    detail += std::string(detail.empty() ? "" : ", ") + "N=" + std::to_string(n) + " err/dx=" +
              fmt("%.3g", worst / dx) + " (" + std::to_string(checks) + " checks)";
  }
  // C from the coarsest grid with a factor-two allowance, then held fixed.
  // The bound carries a roundoff term: an exact reconstruction leaves
  // errors near machine epsilon that do not scale with dx.
  const double c = 2.0 * ratio.front();
  constexpr double kRoundoff = 1e-12;
  bool pass = true;
  for (std::size_t i = 0; i < errs.size(); ++i) pass = pass && errs[i] <= c * dxs[i] + kRoundoff;
  return {pass, "C=" + fmt("%.3g", c) + ": " + detail};
}

// 5. Sphere family at Re = 100: clean and gap-injected agree, face reduction
// orders the drag.
Outcome sphere_family() {
  auto mean_cd = [](const std::string& name) {
    const CaseConfig c = load_case(name);
    const RunResult r = run_case(c, g_work / name);
    g_div.add(r.divergence_ok, r.worst_divergence, c.poisson_tol);
    // Mean over the force rows of the last quarter of the run.
    std::ifstream in(g_work / name / "history.csv");
    std::string line;
    std::getline(in, line);
    std::vector<std::pair<long, double>> cd;
    while (std::getline(in, line)) {
      std::vector<std::string> cols;
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) cols.push_back(cell);
      if (cols.size() >= 14 && !cols[13].empty()) cd.emplace_back(std::stol(cols[0]), std::stod(cols[13]));
    }
    double sum = 0.0;
    int n = 0;
    for (const auto& [step, v] : cd) {
      if (step > 3 * c.steps / 4) {
        sum += v;
        ++n;
      }
    }
    return n > 0 ? sum / n : std::nan("");
  };
  const double clean = mean_cd("sphere_clean"), gaps = mean_cd("sphere_gaps");
  const double r10 = mean_cd("sphere_reduce10"), r20 = mean_cd("sphere_reduce20"), r50 = mean_cd("sphere_reduce50");
  const double rel = std::abs(gaps - clean) / std::abs(clean);
  const bool pass = rel <= 0.02 && r10 < r20 && r20 < r50;
  return {pass, "Cd clean " + fmt("%.4f", clean) + ", gaps " + fmt("%.4f", gaps) + " (diff " + fmt("%.2f", 100 * rel) +
                    "%), reduced 10/20/50% " + fmt("%.4f", r10) + " / " + fmt("%.4f", r20) + " / " + fmt("%.4f", r50)};
}

// 6. Coherent-structure model bounds.
Outcome csm_properties() {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_real_distribution<double> expo(-10.0, 10.0);
  long bad = 0;
  for (int n = 0; n < 1000000; ++n) {
    Eigen::Matrix3d g;
    const double scale = std::pow(10.0, expo(rng));
    for (int i = 0; i < 9; ++i) g.data()[i] = scale * nd(rng);
    const auto t = csm_terms(g, 0.05);
    if (!(std::abs(t.f_cs) <= 1.0) || !(t.nu_t >= 0.0)) ++bad;
  }
  Eigen::Matrix3d shear = Eigen::Matrix3d::Zero(), rot = Eigen::Matrix3d::Zero();
  shear(0, 1) = 3.7;
  rot(0, 1) = -2.1;
  rot(1, 0) = 2.1;
  const double nu_shear = csm_eddy_viscosity(shear, 0.05), nu_rot = csm_eddy_viscosity(rot, 0.05);
  return {bad == 0 && nu_shear == 0.0 && nu_rot == 0.0,
          std::to_string(bad) + " violations in 1e6 tensors; shear nu_t=" + fmt("%g", nu_shear) +
              ", rotation nu_t=" + fmt("%g", nu_rot)};
}

// 7. Random-mode initializer at 64^3 against the tabulated spectrum.
Outcome isotropic_spectrum() {
  const double length = 0.09 * 2 * kPi;
  const int n = 64;
  ForestSpec fs;
  fs.dim = 3;
  fs.cells_per_side = 16;
  fs.finest_dx = length / n;
  fs.domain = Box3(Vec3::Zero(), Vec3::Constant(length));
  fs.periodic = {true, true, true};
  const CubeForest forest = generate_forest(fs, TriangleSoup{});
  SpectrumSpec spec;
  spec.table = SpectrumTable::read(TFIB_DATA_DIR "/cbc_spectrum.txt");
  spec.modes = 5000;
  spec.seed = 1;
  const double k0 = 2 * kPi / length;
  spec.k_min = spec.table.k_min();
  spec.k_max = 0.5 * n * k0;  // Nyquist
  const auto modes = draw_modes(spec);
  double ortho = 0.0;
  for (const auto& m : modes) ortho = std::max(ortho, std::abs(m.direction.dot(m.sigma)));
  std::array<CellField, 3> u;
  sample_modes(forest, modes, u);
  const ShellSpectrum sp = energy_spectrum(forest, u);
  write_spectrum_csv((g_work / "isotropic_spectrum.csv").string(), sp);
  // Resolved band: shells at least one shell width inside the mode band.
  int shells = 0;
  double worst = 0.0;
  for (std::size_t q = 1; q < sp.e.size(); ++q) {
    const double k = sp.k[q];
    if (k - 1.5 * k0 < spec.k_min || k + 1.5 * k0 > spec.k_max) continue;
    worst = std::max(worst, std::abs(sp.e[q] / spec.table(k) - 1.0));
    ++shells;
  }
  const bool pass = shells >= 20 && worst <= 0.20 && ortho <= 1e-14;
  return {pass, std::to_string(shells) + " shells, worst deviation " + fmt("%.1f", 100 * worst) +
                    "%, max |khat . sigma| " + fmt("%.1e", ortho)};
}

// 8. Accelerated ray queries against exhaustive scans.
Outcome ray_oracle() {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 1);
  long mismatches = 0, hits = 0;
  for (int soup_id = 0; soup_id < 100; ++soup_id) {
    TriangleSoup s;
    const int kind = soup_id % 4;
    if (kind == 0) {
      const int count = 50 + static_cast<int>(u(rng) * 2000);
      const double size = 0.02 + 0.2 * u(rng);
      for (int i = 0; i < count; ++i) {
        const Vec3 c(u(rng), u(rng), u(rng));
        s.add(c, c + size * Vec3(u(rng), u(rng), u(rng)), c + size * Vec3(u(rng), u(rng), u(rng)));
      }
      s.refresh();
    } else if (kind == 1) {
      s = shapes::inject_gaps(shapes::icosphere(Vec3(0.5, 0.5, 0.5), 0.2 + 0.2 * u(rng), 3), 0.01, 0.3, rng());
    } else if (kind == 2) {
      s = shapes::duplicate_faces(shapes::subdivide(shapes::box(Vec3(0.2, 0.3, 0.25), Vec3(0.7, 0.8, 0.6)), 2), 0.3,
                                  rng());
    } else {
      s = shapes::flat_plate(Vec3(0.5, 0.5, 0.5), 0.6, 0.6, u(rng), 8, 8);
      s.append(shapes::reduce_faces(shapes::icosphere(Vec3(0.4, 0.6, 0.5), 0.25, 2), 0.3));
      s.refresh();
    }
    const RayAccelerator acc(s);
    for (int r = 0; r < 1000; ++r) {
      const Vec3 o(u(rng), u(rng), u(rng));
      Vec3 d(u(rng) - 0.5, u(rng) - 0.5, u(rng) - 0.5);
      if (r % 10 == 0) d = Vec3::Unit(r % 3) * (u(rng) < 0.5 ? -1.0 : 1.0);  // axis rays
      d.normalize();
      const auto a = acc.ray_intersections(o, d, 2.0);
      const auto b = acc.ray_intersections_exhaustive(o, d, 2.0);
      bool same = a.size() == b.size();
      for (std::size_t i = 0; same && i < a.size(); ++i) same = a[i].triangle == b[i].triangle && a[i].t == b[i].t;
      mismatches += same ? 0 : 1;
      hits += static_cast<long>(b.size());
    }
  }
  return {mismatches == 0 && hits > 0,
          std::to_string(mismatches) + " mismatches over 1e5 rays (" + std::to_string(hits) + " hits)"};
}

// 9. Thin-plate filter on a sub-cell-thickness closed body and the
// zero-thickness plate under uniform pressure.
Outcome thin_plate() {
  ForestSpec fs;
  fs.dim = 3;
  fs.cells_per_side = 8;
  fs.finest_dx = 2.0 / 16;
  fs.domain = Box3(Vec3::Constant(-1), Vec3::Constant(1));
  const CubeForest forest = generate_forest(fs, TriangleSoup{});
  const double dx = fs.finest_dx;
  auto field = [&](const std::function<double(const Vec3&)>& fn) {
    CellField c(forest);
    for_each_cell(forest, [&](int cb, int i, int j, int k) { c.at(cb, i, j, k) = fn(forest.cell_center(cb, i, j, k)); });
    return c;
  };
  auto force = [&](const CellField& p, const TriangleSoup& soup, bool filter) {
    SurfaceFields sf;
    sf.forest = &forest;
    sf.p = &p;
    auto samples = sample_surface(sf, soup);
    if (filter) thin_plate_filter(samples, RayAccelerator(soup), dx);
    return integrate_forces(samples, soup, ForceReference{});
  };
  // Closed plate 0.3 dx thick, tilted, loaded from below by a near-uniform
  // pressure.
  const double alpha = 0.15;
  const Vec3 centre(0.01, 0.02, 0.015);
  const TriangleSoup body = shapes::subdivide(shapes::thin_plate_box(centre, 1.0, 1.0, 0.3 * dx, alpha), 4);
  const Vec3 normal(std::sin(alpha), std::cos(alpha), 0.0);  // nose-up tilt
  const CellField p = field([&](const Vec3& x) { return normal.dot(x - centre) < 0 ? 1.0 + 0.05 * x.x() : 0.0; });
  const ForceReport with = force(p, body, true), without = force(p, body, false);
  const double diff = (without.force - with.force).norm() / with.force.norm();
  // Zero-thickness plate, uniform pressure on both sides.
  const TriangleSoup plate = shapes::flat_plate(Vec3(0.013, 0.021, -0.017), 1.0, 1.0, 0.3, 6, 6);
  const double p0 = 2.5;
  const ForceReport flat = force(field([p0](const Vec3&) { return p0; }), plate, true);
  const double rel = flat.force.norm() / (p0 * plate.total_area());
  return {diff >= 0.05 && rel <= 1e-10,
          "with/without filter differ by " + fmt("%.1f", 100 * diff) + "% (|f| " + fmt("%.3f", with.force.norm()) +
              " vs " + fmt("%.3f", without.force.norm()) + "); flat plate net force " + fmt("%.1e", rel) + " relative"};
}

// 10. Sealed one-cell-wide cavities: forcing is cancelled in every cell with
// at least five wall-including axis neighbours.
Outcome dead_end_cavity() {
  ForestSpec fs;
  fs.dim = 3;
  fs.cells_per_side = 16;
  fs.finest_dx = 1.0 / 16;
  fs.domain = Box3(Vec3::Zero(), Vec3::Ones());
  const CubeForest forest = generate_forest(fs, TriangleSoup{});
  const double dx = fs.finest_dx;
  auto centre = [&](int i, int j, int k) { return Vec3((i + 0.5) * dx, (j + 0.5) * dx, (k + 0.5) * dx); };
  // A single sealed cell, a sealed one-cell tube three cells long, and a
  // resolved box for contrast.
  TriangleSoup soup = shapes::box(centre(4, 4, 4) - Vec3::Constant(0.9 * dx), centre(4, 4, 4) + Vec3::Constant(0.9 * dx));
  soup.append(shapes::box(centre(10, 4, 4) - Vec3(0.9, 0.9, 0.9) * dx, centre(10, 4, 6) + Vec3(0.9, 0.9, 0.9) * dx));
  soup.append(shapes::box(centre(3, 10, 9) - Vec3::Constant(0.4 * dx), centre(7, 13, 12) + Vec3::Constant(0.4 * dx)));
  soup.refresh();
  const HaloPlan plan(forest);
  const RayAccelerator acc(soup);
  CellMask mask = classify_cells(forest, plan, acc);
  dead_end_filter(forest, mask);
  const DummyBlocks blocks = build_dummy_blocks(forest, mask, acc);
  const auto sites = forcing_sites(blocks, mask);
  std::vector<std::uint8_t> forced(mask.kind.size(), 0);
  for (const ForcingSite& s : sites) forced[s.flat] = 1;
  const auto& st = forest.strides();
  long enclosed = 0, cancelled = 0, wrong = 0, forced_elsewhere = 0;
  for_each_cell(forest, [&](int cb, int i, int j, int k) {
    const std::size_t q = forest.flat(cb, i, j, k);
    int n = 0;
    for (int a = 0; a < 3; ++a) {
      const auto sa = static_cast<std::size_t>(st[static_cast<std::size_t>(a)]);
      n += mask.kind[q + sa] == CellKind::kWallIncluding;
      n += mask.kind[q - sa] == CellKind::kWallIncluding;
    }
    if (n >= 5) {
      ++enclosed;
      if (mask.dead_end[q] && !forced[q]) ++cancelled;
      else ++wrong;
    } else {
      if (mask.dead_end[q]) ++wrong;
      if (forced[q]) ++forced_elsewhere;
    }
  });
  const bool cells_found = mask.dead_end[forest.flat(0, 4, 4, 4)] && mask.dead_end[forest.flat(0, 10, 4, 4)] &&
                           mask.dead_end[forest.flat(0, 10, 4, 6)];
  return {wrong == 0 && cells_found && enclosed > 0 && forced_elsewhere > 0,
          std::to_string(cancelled) + " of " + std::to_string(enclosed) +
              " cells with >= 5 wall-including neighbours cancelled, " + std::to_string(wrong) + " disagreements, " +
              std::to_string(forced_elsewhere) + " forcing sites elsewhere"};
}

// 3. Every flow run above kept max |div U| within 10 x tolerance.
Outcome divergence_control() {
  return {g_div.runs > 0 && g_div.failed == 0,
          std::to_string(g_div.runs) + " runs, " + std::to_string(g_div.failed) + " over the limit, worst " +
              fmt("%.2f", g_div.worst_ratio) + " x tolerance"};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  bool report = false;
  g_work = fs::temp_directory_path() / "tfib_acceptance";
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string item;
      while (std::getline(ss, item, ',')) only.insert(std::stoi(item));
    } else if (a == "--work" && i + 1 < argc) {
      g_work = argv[++i];
    } else if (a == "--report") {
      report = true;
    } else {
      std::cerr << "usage: tfib_acceptance [--only 1,2,...] [--work DIR] [--report]\n";
      return 2;
    }
  }
  fs::create_directories(g_work);
  struct Criterion {
    int id;
    const char* title;
    std::function<Outcome()> run;
  };
  // Flow runs first so criterion 3 sees all of them; printed in order.
  const std::vector<Criterion> criteria = {
      {1, "TGV baseline order", baseline_order},
      {2, "TGV immersed square and circle order", immersed_order},
      {4, "ghost-condition consistency", ghost_consistency},
      {5, "topology-free sphere family", sphere_family},
      {3, "divergence control", divergence_control},
      {6, "coherent-structure model bounds", csm_properties},
      {7, "isotropic initializer spectrum", isotropic_spectrum},
      {8, "ray-tracing oracle", ray_oracle},
      {9, "thin-plate filter effect", thin_plate},
      {10, "dead-end filter", dead_end_cavity},
  };
  std::map<int, std::string> lines;
  bool all = true, crashed = false;
  for (const Criterion& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    if (c.id == 3 && g_div.runs == 0 && !only.empty()) {
      // Selected alone: criterion 3 needs flow runs of its own.
      baseline_order();
    }
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
      crashed = true;
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    all = all && o.pass;
    std::ostringstream line;
    line << "C" << c.id << " " << (o.pass ? "PASS" : "FAIL") << " " << c.title << ": " << o.detail << " ["
         << fmt("%.0f", sec) << " s]";
    std::cerr << line.str() << "\n";
    lines[c.id] = line.str();
  }
  for (const auto& [id, line] : lines) std::cout << line << "\n";
  if (report) return crashed ? 1 : 0;
  return all ? 0 : 1;
}
