#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "tfib/grid/field.hpp"

namespace tfib {

class TurbulenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tabulated energy spectrum E(k), interpolated linearly in log-log space
/// and zero outside the table.
class SpectrumTable {
 public:
  SpectrumTable() = default;
  /// Throws TurbulenceError unless k is strictly increasing, E >= 0 and the
  /// table has at least two rows.
  SpectrumTable(std::vector<double> k, std::vector<double> e);
  /// Two-column text (k, E); blank lines and lines starting with '#' skipped.
  static SpectrumTable read(const std::string& path);

  double operator()(double k) const;
  const std::vector<double>& k() const { return k_; }
  const std::vector<double>& e() const { return e_; }
  double k_min() const { return k_.front(); }
  double k_max() const { return k_.back(); }

 private:
  std::vector<double> k_, e_;
};

struct SpectrumSpec {
  SpectrumTable table;
  int modes = 5000;
  double k_min = 0.0;  // band; both <= 0 selects the table range
  double k_max = 0.0;
  std::uint64_t seed = 1;
};

/// One term 2 q cos(kappa khat . x + psi) sigma of the random Fourier sum.
struct FourierMode {
  Vec3 direction = Vec3::UnitX();  // unit khat
  Vec3 sigma = Vec3::UnitY();      // unit, orthogonal to khat
  double wavenumber = 0.0;
  double amplitude = 0.0;  // q = sqrt(E(kappa) dkappa)
  double phase = 0.0;
};

/// Draws the modes: wavenumbers at the centres of `modes` equal bins over
/// the band, directions uniform on the sphere, phases and the sigma angle
/// around khat uniform. All draws happen serially from one seeded engine.
/// Throws TurbulenceError for an empty band or a spectrum that is zero over it.
std::vector<FourierMode> draw_modes(const SpectrumSpec& spec);

Vec3 evaluate_modes(const std::vector<FourierMode>& modes, const Vec3& x);

/// Samples the mode sum at every interior cell centre.
void sample_modes(const CubeForest& forest, const std::vector<FourierMode>& modes,
                  std::array<CellField, 3>& u);

/// Shell-averaged spectrum on a periodic cube of side length L sampled on
/// n^3 points: e[s] is the energy density of shell s (|k| / k0 rounded to s,
/// k0 = 2 pi / L) so that sum_s e[s] k0 = mean(|u|^2) / 2.
struct ShellSpectrum {
  double k0 = 0.0;
  std::vector<double> k;  // s k0
  std::vector<double> e;
};

/// `u` holds three components of n^3 values with x fastest.
ShellSpectrum energy_spectrum(const std::array<std::vector<double>, 3>& u, int n, double length);

/// Gathers a single-level forest covering a periodic cube into n^3 arrays
/// and takes its spectrum. Throws TurbulenceError for refined forests or
/// non-cubic domains.
ShellSpectrum energy_spectrum(const CubeForest& forest, const std::array<CellField, 3>& u);

void write_spectrum_csv(const std::string& path, const ShellSpectrum& s);

}  // namespace tfib
