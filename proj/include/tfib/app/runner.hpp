#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "tfib/app/config.hpp"
#include "tfib/geom/soup.hpp"
#include "tfib/post/forces.hpp"
#include "tfib/post/norms.hpp"

namespace tfib {

/// A pipeline failure, tagged with the stage that raised it.
class CaseError : public std::runtime_error {
 public:
  CaseError(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

/// Velocity of the two-dimensional decaying vortex on [-2, 2]^2 at time t.
Vec3 tgv_velocity(const Vec3& x, double t, double re);
double tgv_pressure(const Vec3& x, double t, double re);

/// Loads the STL files or builds the shape, then applies the configured
/// synthetic defects (gaps, face reduction, duplication, flips).
TriangleSoup build_geometry(const CaseConfig& config);

/// Reference area for force coefficients: pi D^2 / 4 for a sphere, 6 C^2 for
/// a plate, D (per unit span) for 2D shapes, else the projected box area.
double reference_area(const CaseConfig& config, const TriangleSoup& soup);

struct RunResult {
  std::filesystem::path dir;
  long steps = 0;
  double t = 0.0;
  /// max |div U| stayed within 10 x poisson_tol at every step.
  bool divergence_ok = true;
  double worst_divergence = 0.0;
  std::optional<ErrorNorms> u_error;  // TGV: u_x against the analytic field
  std::optional<ForceReport> forces;  // body cases, final step
  std::vector<std::string> warnings;
  double seconds = 0.0;
  nlohmann::json manifest;
};

/// Full pipeline: load, audit, grid, classify, time loop, post. Writes
/// config.txt, history.csv, fields, reports and manifest.json into `dir`.
/// Throws CaseError naming the failing stage.
RunResult run_case(const CaseConfig& config, const std::filesystem::path& dir);

struct SlopeFit {
  double slope = 0.0;  // order of accuracy (-d log e / d log N)
  double r2 = 0.0;
};

/// Least-squares line through (log N, log e); needs at least three points.
SlopeFit fit_slope(const std::vector<double>& n, const std::vector<double>& e);

struct StudyResult {
  std::vector<int> resolutions;
  std::vector<ErrorNorms> norms;
  std::vector<double> seconds;
  std::vector<bool> divergence_ok;
  // Per norm (L1, L2, Linf): all points and the coarsest three.
  std::array<SlopeFit, 3> overall;
  std::array<SlopeFit, 3> coarse;
};

/// Runs the TGV base config at each resolution (ascending) into
/// dir/N<res>, then fits slopes. Writes study.csv and study.json.
StudyResult convergence_study(const CaseConfig& base, std::vector<int> resolutions,
                              const std::filesystem::path& dir);

std::string sha256_file(const std::filesystem::path& path);
std::string sha256_text(const std::string& text);

/// Checks every file listed in dir/manifest.json against its checksum.
/// Returns the list of problems (empty when the run directory is intact).
std::vector<std::string> verify_manifest(const std::filesystem::path& dir);

}  // namespace tfib
