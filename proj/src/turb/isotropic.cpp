#include "tfib/turb/isotropic.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <random>
#include <sstream>

namespace tfib {
namespace {

constexpr double kPi = 3.14159265358979323846;

// In-place FFT along one axis of an n^3 complex array (x fastest).
void fft_axis(std::vector<std::complex<double>>& a, int n, int axis) {
  Eigen::FFT<double> fft;
  const std::size_t stride = axis == 0 ? 1 : axis == 1 ? static_cast<std::size_t>(n)
                                                       : static_cast<std::size_t>(n) * n;
  std::vector<std::complex<double>> in(static_cast<std::size_t>(n)), out(static_cast<std::size_t>(n));
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q) {
      std::size_t base = 0;
      if (axis == 0) base = (static_cast<std::size_t>(q) * n + p) * n;
      if (axis == 1) base = static_cast<std::size_t>(q) * n * n + p;
      if (axis == 2) base = static_cast<std::size_t>(q) * n + p;
      for (int m = 0; m < n; ++m) in[static_cast<std::size_t>(m)] = a[base + m * stride];
      fft.fwd(out, in);
      for (int m = 0; m < n; ++m) a[base + m * stride] = out[static_cast<std::size_t>(m)];
    }
}

}  // namespace

SpectrumTable::SpectrumTable(std::vector<double> k, std::vector<double> e) : k_(std::move(k)), e_(std::move(e)) {
  if (k_.size() != e_.size() || k_.size() < 2) throw TurbulenceError("spectrum table needs at least two (k, E) rows");
  for (std::size_t i = 0; i < k_.size(); ++i) {
    if (!(k_[i] > 0.0) || (i > 0 && !(k_[i] > k_[i - 1]))) {
      throw TurbulenceError("spectrum wavenumbers must be positive and strictly increasing");
    }
    if (!(e_[i] >= 0.0)) throw TurbulenceError("spectrum energies must be non-negative");
  }
}

SpectrumTable SpectrumTable::read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw TurbulenceError("cannot open spectrum table " + path);
  std::vector<double> k, e;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double a = 0.0, b = 0.0;
    if (!(ls >> a >> b)) throw TurbulenceError(path + ":" + std::to_string(lineno) + ": expected two numbers");
    k.push_back(a);
    e.push_back(b);
  }
  return SpectrumTable(std::move(k), std::move(e));
}

double SpectrumTable::operator()(double k) const {
  if (k_.empty() || k < k_.front() || k > k_.back()) return 0.0;
  const auto it = std::upper_bound(k_.begin(), k_.end(), k);
  if (it == k_.end()) return e_.back();
  const std::size_t i = static_cast<std::size_t>(it - k_.begin());
  const double e0 = e_[i - 1], e1 = e_[i];
  if (e0 <= 0.0 || e1 <= 0.0) {
    const double t = (k - k_[i - 1]) / (k_[i] - k_[i - 1]);
    return e0 + t * (e1 - e0);
  }
  const double t = std::log(k / k_[i - 1]) / std::log(k_[i] / k_[i - 1]);
  return std::exp(std::log(e0) + t * std::log(e1 / e0));
}

std::vector<FourierMode> draw_modes(const SpectrumSpec& spec) {
  if (spec.modes < 1) throw TurbulenceError("mode count must be at least 1");
  if (spec.table.k().empty()) throw TurbulenceError("empty spectrum table");
  double lo = spec.k_min, hi = spec.k_max;
  if (lo <= 0.0 && hi <= 0.0) {
    lo = spec.table.k_min();
    hi = spec.table.k_max();
  }
  if (!(lo < hi)) throw TurbulenceError("wavenumber band must satisfy k_min < k_max");
  const double dk = (hi - lo) / spec.modes;
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<FourierMode> modes(static_cast<std::size_t>(spec.modes));
  double total = 0.0;
  for (int m = 0; m < spec.modes; ++m) {
    FourierMode& f = modes[static_cast<std::size_t>(m)];
    f.wavenumber = lo + (m + 0.5) * dk;
    f.amplitude = std::sqrt(spec.table(f.wavenumber) * dk);
    total += f.amplitude;
    const double ct = 2.0 * unit(rng) - 1.0;
    const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
    const double az = 2.0 * kPi * unit(rng);
    f.direction = Vec3(st * std::cos(az), st * std::sin(az), ct);
    f.phase = 2.0 * kPi * unit(rng);
    const double rot = 2.0 * kPi * unit(rng);
    // Orthonormal pair spanning the plane normal to khat.
    const Vec3 helper = std::abs(f.direction.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    const Vec3 e1 = f.direction.cross(helper).normalized();
    const Vec3 e2 = f.direction.cross(e1);
    f.sigma = std::cos(rot) * e1 + std::sin(rot) * e2;
  }
  if (total <= 0.0) throw TurbulenceError("spectrum is zero over the wavenumber band");
  return modes;
}

Vec3 evaluate_modes(const std::vector<FourierMode>& modes, const Vec3& x) {
  Vec3 u = Vec3::Zero();
  for (const FourierMode& f : modes) {
    u += 2.0 * f.amplitude * std::cos(f.wavenumber * f.direction.dot(x) + f.phase) * f.sigma;
  }
  return u;
}

void sample_modes(const CubeForest& forest, const std::vector<FourierMode>& modes,
                  std::array<CellField, 3>& u) {
  for (auto& c : u) {
    if (!c.allocated()) c = CellField(forest);
  }
  // Cube by cube in parallel; each cell sums the modes in a fixed order.
  const int cubes = static_cast<int>(forest.cube_count());
#pragma omp parallel for schedule(dynamic)
  for (int c = 0; c < cubes; ++c) {
    const auto e = forest.extent();
    for (int k = 0; k < e[2]; ++k)
      for (int j = 0; j < e[1]; ++j)
        for (int i = 0; i < e[0]; ++i) {
          const Vec3 v = evaluate_modes(modes, forest.cell_center(c, i, j, k));
          for (int a = 0; a < 3; ++a) u[static_cast<std::size_t>(a)].at(c, i, j, k) = v[a];
        }
  }
}

ShellSpectrum energy_spectrum(const std::array<std::vector<double>, 3>& u, int n, double length) {
  const std::size_t total = static_cast<std::size_t>(n) * n * n;
  for (const auto& c : u) {
    if (c.size() != total) throw TurbulenceError("velocity arrays must hold n^3 values");
  }
  ShellSpectrum s;
  s.k0 = 2.0 * kPi / length;
  const int shells = static_cast<int>(std::ceil(std::sqrt(3.0) * (n / 2))) + 1;
  s.e.assign(static_cast<std::size_t>(shells), 0.0);
  std::vector<std::complex<double>> a(total);
  const double norm = 1.0 / static_cast<double>(total);
  for (const auto& comp : u) {
    for (std::size_t q = 0; q < total; ++q) a[q] = comp[q];
    for (int axis = 0; axis < 3; ++axis) fft_axis(a, n, axis);
    for (int kz = 0; kz < n; ++kz)
      for (int ky = 0; ky < n; ++ky)
        for (int kx = 0; kx < n; ++kx) {
          auto wrap = [n](int m) { return m <= n / 2 ? m : m - n; };
          const double mx = wrap(kx), my = wrap(ky), mz = wrap(kz);
          const int shell = static_cast<int>(std::lround(std::sqrt(mx * mx + my * my + mz * mz)));
          const std::complex<double> c = a[(static_cast<std::size_t>(kz) * n + ky) * n + kx] * norm;
          s.e[static_cast<std::size_t>(shell)] += 0.5 * std::norm(c);
        }
  }
  s.k.resize(s.e.size());
  for (std::size_t q = 0; q < s.e.size(); ++q) {
    s.k[q] = static_cast<double>(q) * s.k0;
    s.e[q] /= s.k0;
  }
  return s;
}

ShellSpectrum energy_spectrum(const CubeForest& forest, const std::array<CellField, 3>& u) {
  if (forest.dim() != 3 || forest.max_level() != 0) {
    throw TurbulenceError("spectrum needs a uniform single-level 3D forest");
  }
  const Box3& box = forest.domain();
  const Vec3 size = box.sizes();
  const double dx = forest.cube(0).dx;
  const int n = static_cast<int>(std::lround(size.x() / dx));
  if (std::abs(size.y() - size.x()) > 1e-9 * size.x() || std::abs(size.z() - size.x()) > 1e-9 * size.x()) {
    throw TurbulenceError("spectrum needs a cubic domain");
  }
  std::array<std::vector<double>, 3> g;
  for (auto& c : g) c.assign(static_cast<std::size_t>(n) * n * n, 0.0);
  for_each_cell(forest, [&](int c, int i, int j, int k) {
    const Vec3 x = forest.cell_center(c, i, j, k) - box.min();
    const auto gi = static_cast<std::size_t>(std::floor(x.x() / dx));
    const auto gj = static_cast<std::size_t>(std::floor(x.y() / dx));
    const auto gk = static_cast<std::size_t>(std::floor(x.z() / dx));
    const std::size_t q = (gk * static_cast<std::size_t>(n) + gj) * static_cast<std::size_t>(n) + gi;
    for (std::size_t a = 0; a < 3; ++a) g[a][q] = u[a].at(c, i, j, k);
  });
  return energy_spectrum(g, n, size.x());
}

void write_spectrum_csv(const std::string& path, const ShellSpectrum& s) {
  std::ofstream out(path);
  if (!out) throw TurbulenceError("cannot write " + path);
  out.precision(10);
  out << "k,E\n";
  for (std::size_t q = 0; q < s.k.size(); ++q) out << s.k[q] << ',' << s.e[q] << '\n';
  if (!out) throw TurbulenceError("write failed for " + path);
}

}  // namespace tfib
