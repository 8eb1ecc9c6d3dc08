#include "tfib/app/runner.hpp"

#include <openssl/evp.h>

#include <Eigen/Core>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "tfib/geom/audit.hpp"
#include "tfib/geom/shapes.hpp"
#include "tfib/geom/stl.hpp"
#include "tfib/post/export.hpp"
#include "tfib/solver/flow.hpp"
#include "tfib/turb/isotropic.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tfib {
namespace fs = std::filesystem;
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr const char* kVersion = "0.1.0";

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string hex(const unsigned char* data, unsigned int n) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  for (unsigned int i = 0; i < n; ++i) {
    s += digits[data[i] >> 4];
    s += digits[data[i] & 15];
  }
  return s;
}

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) { EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr); }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;
  void update(const void* data, std::size_t n) { EVP_DigestUpdate(ctx_, data, n); }
  std::string finish() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int n = 0;
    EVP_DigestFinal_ex(ctx_, md, &n);
    return hex(md, n);
  }

 private:
  EVP_MD_CTX* ctx_;
};

/// Runs `f`, rethrowing any failure as a CaseError of `stage`.
template <class F>
auto stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const CaseError&) {
    throw;
  } catch (const std::exception& e) {
    throw CaseError(name, e.what());
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::json norms_json(const ErrorNorms& n) {
  return {{"l1", n.l1}, {"l2", n.l2}, {"linf", n.linf}, {"count", n.count}};
}

nlohmann::json force_json(const ForceReport& f) {
  return {{"force", {f.force.x(), f.force.y(), f.force.z()}},
          {"pressure", {f.pressure.x(), f.pressure.y(), f.pressure.z()}},
          {"viscous", {f.viscous.x(), f.viscous.y(), f.viscous.z()}},
          {"cd", f.cd},
          {"cl", f.cl},
          {"reference_area", f.area},
          {"dynamic_pressure", f.dynamic_pressure},
          {"invalid_samples", f.invalid_samples}};
}

}  // namespace

Vec3 tgv_velocity(const Vec3& x, double t, double re) {
  const double e = std::exp(-2.0 * kPi * kPi * t / re);
  return Vec3(-std::cos(kPi * x.x()) * std::sin(kPi * x.y()) * e,
              std::sin(kPi * x.x()) * std::cos(kPi * x.y()) * e, 0.0);
}

double tgv_pressure(const Vec3& x, double t, double re) {
  return -0.25 * (std::cos(2.0 * kPi * x.x()) + std::cos(2.0 * kPi * x.y())) *
         std::exp(-4.0 * kPi * kPi * t / re);
}

TriangleSoup build_geometry(const CaseConfig& c) {
  TriangleSoup soup;
  for (const auto& g : c.geometry) soup.append(load_geometry(c.resolve(g), c.geometry_scale));
  if (c.geometry.empty()) {
    const Eigen::Vector2d centre(c.shape_center.x(), c.shape_center.y());
    const double z_lo = c.domain_lo.z() - 1.0, z_hi = c.domain_hi.z() + 1.0;
    const int res = c.shape_resolution;
    const double alpha = c.plate_alpha * kPi / 180.0;
    switch (c.shape) {
      case ShapeKind::kNone:
        break;
      case ShapeKind::kSquare:
        soup = shapes::extrude_polygon(
            shapes::square_polygon(centre, c.shape_size, kPi / 4, res > 0 ? res : 1), z_lo, z_hi);
        break;
      case ShapeKind::kCircle:
        soup = shapes::extrude_polygon(
            shapes::circle_polygon(centre, c.shape_size / 2, res > 0 ? res : 4096), z_lo, z_hi);
        break;
      case ShapeKind::kSphere:
        soup = shapes::icosphere(c.shape_center, c.shape_size / 2, res > 0 ? res : 4);
        break;
      case ShapeKind::kPlate: {
        const int nx = res > 0 ? res : 8;
        soup = shapes::flat_plate(c.shape_center, c.shape_size, 6 * c.shape_size, alpha, nx, 6 * nx);
        break;
      }
      case ShapeKind::kThinPlate:
        soup = shapes::subdivide(shapes::thin_plate_box(c.shape_center, c.shape_size, 6 * c.shape_size,
                                                        c.plate_thickness, alpha),
                                 res);
        break;
      case ShapeKind::kBox: {
        const Vec3 h = Vec3::Constant(c.shape_size / 2);
        soup = shapes::subdivide(shapes::box(c.shape_center - h, c.shape_center + h), res);
        break;
      }
    }
  }
  if (c.dirty_reduce > 0.0) soup = shapes::reduce_faces(soup, c.dirty_reduce);
  if (c.dirty_gap > 0.0 && c.dirty_gap_fraction > 0.0) {
    soup = shapes::inject_gaps(soup, c.dirty_gap, c.dirty_gap_fraction, c.seed);
  }
  if (c.dirty_duplicate > 0.0) soup = shapes::duplicate_faces(soup, c.dirty_duplicate, c.seed + 1);
  if (c.dirty_flip > 0.0) soup = shapes::flip_faces(soup, c.dirty_flip, c.seed + 2);
  return soup;
}

double reference_area(const CaseConfig& c, const TriangleSoup& soup) {
  if (c.geometry.empty()) {
    switch (c.shape) {
      case ShapeKind::kSphere:
        return sphere_reference_area(c.shape_size);
      case ShapeKind::kPlate:
      case ShapeKind::kThinPlate:
        return plate_reference_area(c.shape_size);
      case ShapeKind::kSquare:
      case ShapeKind::kCircle:
        // Per unit span over the extruded length.
        return c.shape_size * (c.domain_hi.z() - c.domain_lo.z() + 2.0);
      default:
        break;
    }
  }
  if (soup.empty()) return 1.0;
  const Vec3 e = soup.bounds().sizes();
  return e.y() * e.z();
}

RunResult run_case(const CaseConfig& config, const fs::path& dir) {
  const auto t_start = Clock::now();
  RunResult result;
  result.dir = dir;
  nlohmann::json timings = nlohmann::json::object();
  auto timed = [&](const char* name, auto&& f) {
    const auto t0 = Clock::now();
    auto r = stage(name, f);
    timings[name] = seconds_since(t0);
    return r;
  };
  auto warn = [&](const std::string& w) {
    std::cerr << "warning: " << w << "\n";
    result.warnings.push_back(w);
  };

  timed("validate", [&] {
    config.validate();
    fs::create_directories(dir);
    return 0;
  });
#ifdef _OPENMP
  if (config.threads > 0) omp_set_num_threads(config.threads);
#endif
  {
    std::ofstream out(dir / "config.txt");
    out << serialize(config);
  }

  const TriangleSoup soup = timed("load", [&] { return build_geometry(config); });
  timed("audit", [&] {
    const IssueReport rep = audit_geometry(soup, default_weld_tolerance(soup));
    std::ofstream(dir / "audit.json") << to_json(rep).dump(2) << "\n";
    return 0;
  });

  const CubeForest forest = timed("grid", [&] {
    ForestSpec spec;
    spec.domain = Box3(config.domain_lo, config.domain_hi);
    spec.dim = config.dim;
    spec.cells_per_side = config.resolution / (config.root_cubes << config.max_levels);
    spec.finest_dx = config.finest_dx();
    spec.max_levels = config.max_levels;
    spec.pad_cells = config.pad_cells;
    for (int a = 0; a < 3; ++a) spec.periodic[static_cast<std::size_t>(a)] = a < config.dim && config.bc[2 * a] == BcType::kPeriodic;
    CubeForest f = generate_forest(spec, soup);
    if (!config.allow_large && static_cast<double>(f.cell_count()) > kDeskCellBudget) {
      throw ConfigError(std::to_string(f.cell_count()) +
                        " cells exceed the desk budget; set allow_large = true to run it anyway");
    }
    std::ofstream(dir / "grid.json") << f.summary().dump(2) << "\n";
    return f;
  });

  const double re = config.re;
  WallVelocity wall;
  if (config.kind == CaseKind::kTgv) {
    wall = [re](const Vec3& x, double t) { return tgv_velocity(x, t, re); };
  }
  const TriangleSoup* body = soup.empty() ? nullptr : &soup;
  std::unique_ptr<FlowSolver> solver = timed("classify", [&] {
    auto s = std::make_unique<FlowSolver>(forest, config.scheme(), config.boundary(), body, wall);
    if (const CellMask* m = s->mask()) {
      nlohmann::json j = {{"fluid", m->fluid},
                          {"wall_including", m->wall_including},
                          {"wall_adjacent", m->wall_adjacent},
                          {"dead_end", m->dead_end_count},
                          {"forcing_sites", s->forcing_sites().size()}};
      std::ofstream(dir / "mask.json") << j.dump(2) << "\n";
    }
    return s;
  });

  if (config.kind == CaseKind::kBody && (config.shape == ShapeKind::kSphere || config.shape == ShapeKind::kPlate ||
                                         config.shape == ShapeKind::kThinPlate)) {
    const double delta = bl_thickness(config.shape_size, config.u0, config.nu());
    if (forest.finest_dx() > delta) {
      warn("finest cell " + fmt(forest.finest_dx()) + " is coarser than the laminar boundary layer estimate " +
           fmt(delta));
    }
  }

  timed("initialize", [&] {
    switch (config.kind) {
      case CaseKind::kTgv:
        solver->initialize([re](const Vec3& x, double t) { return tgv_velocity(x, t, re); },
                           [re](const Vec3& x, double t) { return tgv_pressure(x, t, re); });
        break;
      case CaseKind::kBody: {
        const Vec3 u(config.u0, 0, 0);
        solver->initialize([u](const Vec3&, double) { return u; });
        break;
      }
      case CaseKind::kIsotropic: {
        SpectrumSpec s;
        s.table = SpectrumTable::read(config.resolve(config.spectrum).string());
        s.modes = config.spectrum_modes;
        s.seed = config.seed;
        s.k_min = config.spectrum_kmin > 0.0 ? config.spectrum_kmin : s.table.k_min();
        s.k_max = config.spectrum_kmax > 0.0 ? config.spectrum_kmax
                                              : std::min(s.table.k_max(), kPi / forest.finest_dx());
        const auto modes = draw_modes(s);
        std::array<CellField, 3> u;
        sample_modes(forest, modes, u);
        solver->initialize([&](const Vec3& x, double) {
          const CellRef r = forest.locate_cell(x);
          return Vec3(u[0].at(r.cube, r.i, r.j, r.k), u[1].at(r.cube, r.i, r.j, r.k),
                      u[2].at(r.cube, r.i, r.j, r.k));
        });
        write_spectrum_csv((dir / "spectrum_initial.csv").string(), energy_spectrum(forest, solver->state().u));
        break;
      }
    }
    return 0;
  });

  // Output helpers.
  std::unique_ptr<ProbeWriter> probes;
  if (!config.probes.empty()) {
    probes = std::make_unique<ProbeWriter>((dir / "probes.csv").string(), forest, config.probes,
                                           std::vector<std::string>{"u", "v", "w", "p"});
  }
  std::unique_ptr<RayAccelerator> filter_acc;
  const ForceReference fref{config.rho, config.u0, body ? reference_area(config, soup) : 1.0,
                            config.rho * config.nu()};
  auto compute_forces = [&]() {
    SurfaceFields sf{&forest, &solver->state().p, &solver->state().u, solver->mask()};
    std::vector<SurfaceSample> samples = sample_surface(sf, soup);
    if (config.thin_plate_filter) {
      if (!filter_acc) filter_acc = std::make_unique<RayAccelerator>(soup);
      thin_plate_filter(samples, *filter_acc, forest.finest_dx());
    }
    return integrate_forces(samples, soup, fref);
  };
  const bool want_forces = config.kind == CaseKind::kBody && body;
  auto write_fields = [&](const fs::path& sub) {
    FieldState& st = solver->state();
    std::array<CellField, 3> u = st.u;
    solver->fill_velocity_halos(u);
    CellField q(forest), mask_field(forest);
    q_criterion(forest, u, q);
    if (const CellMask* m = solver->mask()) {
      for_each_cell(forest, [&](int c, int i, int j, int k) {
        const std::size_t f = forest.flat(c, i, j, k);
        mask_field[f] = m->dead_end[f] ? 3.0 : static_cast<double>(m->kind[f]);
      });
    }
    const std::map<std::string, const CellField*> fields = {
        {"u", &st.u[0]}, {"v", &st.u[1]}, {"w", &st.u[2]}, {"p", &st.p},
        {"nu_t", &st.nu_t}, {"mask", &mask_field}, {"q", &q}};
    write_vtk_blocks((dir / sub).string(), forest, fields);
    if (config.slice_axis >= 0) {
      write_slice_csv((dir / sub / "slice.csv").string(), forest, fields, config.slice_axis,
                      config.slice_position);
    }
  };

  std::ofstream history(dir / "history.csv");
  history << "step,t,kinetic_energy,max_divergence,poisson_iterations,poisson_residual,"
             "inner_iterations,cfl,max_velocity,max_forcing";
  if (want_forces) history << ",fx,fy,fz,cd,cl";
  history << "\n";

  const double div_limit = 10.0 * config.poisson_tol;
  timed("time_loop", [&] {
    bool cfl_warned = false;
    for (long n = 1; n <= config.steps; ++n) {
      const StepStats st = solver->advance();
      result.worst_divergence = std::max(result.worst_divergence, st.max_divergence);
      if (!(st.max_divergence <= div_limit)) result.divergence_ok = false;
      if (st.cfl > 1.0 && !cfl_warned) {
        warn("CFL " + fmt(st.cfl) + " above one at step " + std::to_string(st.step));
        cfl_warned = true;
      }
      const bool last = n == config.steps;
      if (n % config.history_every == 0 || last) {
        history << st.step << "," << fmt(st.t) << "," << fmt(st.kinetic_energy) << ","
                << fmt(st.max_divergence) << "," << st.poisson_iterations << ","
                << fmt(st.poisson_residual) << "," << st.inner_iterations << "," << fmt(st.cfl)
                << "," << fmt(st.max_velocity) << "," << fmt(st.max_forcing);
        if (want_forces) {
          if ((config.force_every > 0 && n % config.force_every == 0) || last) {
            const ForceReport f = compute_forces();
            history << "," << fmt(f.force.x()) << "," << fmt(f.force.y()) << "," << fmt(f.force.z())
                    << "," << fmt(f.cd) << "," << fmt(f.cl);
          } else {
            history << ",,,,,";
          }
        }
        history << "\n";
        if (probes) {
          const FieldState& s = solver->state();
          probes->record(st.t, {&s.u[0], &s.u[1], &s.u[2], &s.p});
        }
      }
      if (config.fields_every > 0 && n % config.fields_every == 0 && !last) {
        char name[32];
        std::snprintf(name, sizeof name, "fields_%06ld", n);
        write_fields(name);
      }
    }
    return 0;
  });
  history.close();

  nlohmann::json report;
  timed("post", [&] {
    const FieldState& st = solver->state();
    result.steps = st.step;
    result.t = st.t;
    if (config.kind == CaseKind::kTgv) {
      // Every cell: the method has no inside/outside, so the dummy region and
      // the body interior belong to the computed field.
      const double t = st.t;
      result.u_error = error_norms(forest, st.u[0], [t, re](const Vec3& x) { return tgv_velocity(x, t, re).x(); });
      report["u_error"] = norms_json(*result.u_error);
    }
    if (want_forces) {
      result.forces = compute_forces();
      report["forces"] = force_json(*result.forces);
    }
    if (config.kind == CaseKind::kIsotropic) {
      write_spectrum_csv((dir / "spectrum_final.csv").string(), energy_spectrum(forest, st.u));
    }
    if (config.fields_every >= 0) write_fields("fields");
    return 0;
  });

  result.seconds = seconds_since(t_start);
  report["steps"] = result.steps;
  report["t"] = result.t;
  report["divergence_ok"] = result.divergence_ok;
  report["worst_divergence"] = result.worst_divergence;
  report["divergence_limit"] = div_limit;
  report["warnings"] = result.warnings;
  report["seconds"] = result.seconds;
  std::ofstream(dir / "report.json") << report.dump(2) << "\n";

  nlohmann::json m;
  m["name"] = config.name;
  m["config_sha256"] = sha256_text(serialize(config));
  m["versions"] = {{"tfib", kVersion},
                   {"compiler", __VERSION__},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)}};
#ifdef _OPENMP
  m["threads"] = omp_get_max_threads();
#else
  m["threads"] = 1;
#endif
  m["timings"] = timings;
  m["status"] = result.divergence_ok ? "ok" : "divergence_exceeded";
  nlohmann::json files = nlohmann::json::array();
  std::vector<fs::path> paths;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().filename() != "manifest.json") paths.push_back(e.path());
  }
  std::sort(paths.begin(), paths.end());
  for (const auto& p : paths) {
    files.push_back({{"path", fs::relative(p, dir).generic_string()},
                     {"bytes", fs::file_size(p)},
                     {"sha256", sha256_file(p)}});
  }
  m["files"] = files;
  std::ofstream(dir / "manifest.json") << m.dump(2) << "\n";
  result.manifest = m;
  return result;
}

SlopeFit fit_slope(const std::vector<double>& n, const std::vector<double>& e) {
  if (n.size() != e.size() || n.size() < 3) throw std::invalid_argument("slope fit needs at least three points");
  const std::size_t m = n.size();
  Eigen::MatrixXd a(m, 2);
  Eigen::VectorXd b(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (!(n[i] > 0.0) || !(e[i] > 0.0)) throw std::invalid_argument("slope fit needs positive values");
    a(static_cast<Eigen::Index>(i), 0) = std::log(n[i]);
    a(static_cast<Eigen::Index>(i), 1) = 1.0;
    b(static_cast<Eigen::Index>(i)) = std::log(e[i]);
  }
  const Eigen::Vector2d x = a.colPivHouseholderQr().solve(b);
  const double mean = b.mean();
  const double ss_tot = (b.array() - mean).square().sum();
  const double ss_res = (a * x - b).squaredNorm();
  return {-x(0), ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0};
}

StudyResult convergence_study(const CaseConfig& base, std::vector<int> resolutions, const fs::path& dir) {
  if (base.kind != CaseKind::kTgv) throw CaseError("study", "convergence study needs a tgv case");
  if (resolutions.size() < 3) throw CaseError("study", "need at least three resolutions");
  std::sort(resolutions.begin(), resolutions.end());
  StudyResult r;
  r.resolutions = resolutions;
  for (int n : resolutions) {
    CaseConfig c = base;
    c.resolution = n;
    c.name = base.name + "_N" + std::to_string(n);
    const RunResult run = run_case(c, dir / ("N" + std::to_string(n)));
    r.norms.push_back(*run.u_error);
    r.seconds.push_back(run.seconds);
    r.divergence_ok.push_back(run.divergence_ok);
    std::cerr << "N=" << n << " L2=" << run.u_error->l2 << " (" << run.seconds << " s)\n";
  }
  std::vector<double> nn(resolutions.begin(), resolutions.end());
  for (int q = 0; q < 3; ++q) {
    std::vector<double> e;
    for (const ErrorNorms& en : r.norms) e.push_back(q == 0 ? en.l1 : q == 1 ? en.l2 : en.linf);
    r.overall[static_cast<std::size_t>(q)] = fit_slope(nn, e);
    r.coarse[static_cast<std::size_t>(q)] =
        fit_slope(std::vector<double>(nn.begin(), nn.begin() + 3), std::vector<double>(e.begin(), e.begin() + 3));
  }
  std::ofstream csv(dir / "study.csv");
  csv << "resolution,l1,l2,linf,seconds,divergence_ok\n";
  for (std::size_t i = 0; i < resolutions.size(); ++i) {
    csv << resolutions[i] << "," << fmt(r.norms[i].l1) << "," << fmt(r.norms[i].l2) << ","
        << fmt(r.norms[i].linf) << "," << fmt(r.seconds[i]) << "," << (r.divergence_ok[i] ? 1 : 0) << "\n";
  }
  nlohmann::json j;
  const char* names[3] = {"l1", "l2", "linf"};
  for (int q = 0; q < 3; ++q) {
    j["overall"][names[q]] = {{"slope", r.overall[static_cast<std::size_t>(q)].slope},
                              {"r2", r.overall[static_cast<std::size_t>(q)].r2}};
    j["coarse_three"][names[q]] = {{"slope", r.coarse[static_cast<std::size_t>(q)].slope},
                                   {"r2", r.coarse[static_cast<std::size_t>(q)].r2}};
  }
  j["resolutions"] = resolutions;
  j["seconds"] = r.seconds;
  std::ofstream(dir / "study.json") << j.dump(2) << "\n";
  return r;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  Sha256 h;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    h.update(buf, static_cast<std::size_t>(in.gcount()));
  }
  return h.finish();
}

std::string sha256_text(const std::string& text) {
  Sha256 h;
  h.update(text.data(), text.size());
  return h.finish();
}

std::vector<std::string> verify_manifest(const fs::path& dir) {
  std::vector<std::string> problems;
  std::ifstream in(dir / "manifest.json");
  if (!in) return {"manifest.json missing"};
  nlohmann::json m;
  try {
    in >> m;
  } catch (const std::exception& e) {
    return {std::string("manifest.json unreadable: ") + e.what()};
  }
  for (const auto& f : m.value("files", nlohmann::json::array())) {
    const fs::path p = dir / f.at("path").get<std::string>();
    if (!fs::exists(p)) {
      problems.push_back("missing " + f.at("path").get<std::string>());
    } else if (sha256_file(p) != f.at("sha256").get<std::string>()) {
      problems.push_back("checksum mismatch " + f.at("path").get<std::string>());
    }
  }
  return problems;
}

}  // namespace tfib
