#include "tfib/app/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace tfib {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double to_double(const std::string& s) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ConfigError("expected a number, got '" + s + "'");
  }
  return v;
}

long to_long(const std::string& s) {
  long v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw ConfigError("expected an integer, got '" + s + "'");
  }
  return v;
}

bool to_bool(const std::string& s) {
  if (s == "true" || s == "on" || s == "yes" || s == "1") return true;
  if (s == "false" || s == "off" || s == "no" || s == "0") return false;
  throw ConfigError("expected true or false, got '" + s + "'");
}

Vec3 to_vec3(const std::string& s) {
  std::vector<std::string> parts = split(s, ' ');
  if (parts.size() == 1) parts = split(s, ',');
  if (parts.size() != 3) throw ConfigError("expected three numbers, got '" + s + "'");
  return Vec3(to_double(parts[0]), to_double(parts[1]), to_double(parts[2]));
}

std::string fmt(const Vec3& v) { return fmt(v.x()) + " " + fmt(v.y()) + " " + fmt(v.z()); }

template <class F>
auto enum_from(F&& parse, const std::string& s) {
  try {
    return parse(s);
  } catch (const SolverError& e) {
    throw ConfigError(e.what());
  }
}

struct Key {
  std::string name;
  std::function<std::string(const CaseConfig&)> get;
  std::function<void(CaseConfig&, const std::string&)> set;
};

#define TFIB_NUM(key, member)                                                   \
  Key {                                                                        \
    key, [](const CaseConfig& c) { return fmt(static_cast<double>(c.member)); }, \
        [](CaseConfig& c, const std::string& v) { c.member = to_double(v); }     \
  }
#define TFIB_INT(key, member)                                                        \
  Key {                                                                             \
    key, [](const CaseConfig& c) { return std::to_string(c.member); },              \
        [](CaseConfig& c, const std::string& v) {                                     \
          c.member = static_cast<decltype(c.member)>(to_long(v));                     \
        }                                                                             \
  }
#define TFIB_BOOL(key, member)                                                  \
  Key {                                                                        \
    key, [](const CaseConfig& c) { return std::string(c.member ? "true" : "false"); }, \
        [](CaseConfig& c, const std::string& v) { c.member = to_bool(v); }       \
  }
#define TFIB_ENUM(key, member, parse)                                                \
  Key {                                                                             \
    key, [](const CaseConfig& c) { return to_string(c.member); },                   \
        [](CaseConfig& c, const std::string& v) { c.member = enum_from(parse, v); }   \
  }
#define TFIB_VEC(key, member)                                             \
  Key {                                                                  \
    key, [](const CaseConfig& c) { return fmt(c.member); },              \
        [](CaseConfig& c, const std::string& v) { c.member = to_vec3(v); } \
  }

Key bc_key(const char* name, int face) {
  return Key{name, [face](const CaseConfig& c) { return to_string(c.bc[static_cast<std::size_t>(face)]); },
             [face](CaseConfig& c, const std::string& v) {
               c.bc[static_cast<std::size_t>(face)] = enum_from(parse_bc_type, v);
             }};
}

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      Key{"name", [](const CaseConfig& c) { return c.name; },
          [](CaseConfig& c, const std::string& v) { c.name = v; }},
      TFIB_ENUM("case", kind, parse_case_kind),
      Key{"geometry",
          [](const CaseConfig& c) {
            std::string s;
            for (const auto& g : c.geometry) s += (s.empty() ? "" : ", ") + g;
            return s;
          },
          [](CaseConfig& c, const std::string& v) { c.geometry = split(v, ','); }},
      TFIB_NUM("geometry_scale", geometry_scale),
      TFIB_ENUM("shape", shape, parse_shape),
      TFIB_NUM("shape_size", shape_size),
      TFIB_VEC("shape_center", shape_center),
      TFIB_INT("shape_resolution", shape_resolution),
      TFIB_NUM("plate_alpha", plate_alpha),
      TFIB_NUM("plate_thickness", plate_thickness),
      TFIB_NUM("dirty_gap", dirty_gap),
      TFIB_NUM("dirty_gap_fraction", dirty_gap_fraction),
      TFIB_NUM("dirty_reduce", dirty_reduce),
      TFIB_NUM("dirty_duplicate", dirty_duplicate),
      TFIB_NUM("dirty_flip", dirty_flip),
      TFIB_INT("dim", dim),
      TFIB_VEC("domain_lo", domain_lo),
      TFIB_VEC("domain_hi", domain_hi),
      TFIB_INT("resolution", resolution),
      TFIB_INT("root_cubes", root_cubes),
      TFIB_INT("max_levels", max_levels),
      TFIB_INT("pad_cells", pad_cells),
      bc_key("bc_x_lo", 0),
      bc_key("bc_x_hi", 1),
      bc_key("bc_y_lo", 2),
      bc_key("bc_y_hi", 3),
      bc_key("bc_z_lo", 4),
      bc_key("bc_z_hi", 5),
      TFIB_NUM("re", re),
      TFIB_NUM("rho", rho),
      TFIB_NUM("u0", u0),
      TFIB_NUM("dt", dt),
      TFIB_INT("steps", steps),
      TFIB_ENUM("integrator", integrator, parse_integrator),
      TFIB_NUM("quick_blend", quick_blend),
      TFIB_ENUM("poisson", poisson, parse_poisson),
      TFIB_NUM("poisson_tol", poisson_tol),
      TFIB_INT("poisson_max", poisson_max),
      TFIB_BOOL("multigrid", multigrid),
      TFIB_ENUM("pressure_coupling", pressure_coupling, parse_pressure_coupling),
      TFIB_ENUM("forcing", forcing, parse_forcing_rule),
      TFIB_BOOL("turbulence", turbulence),
      TFIB_BOOL("dead_end_filter", dead_end_filter),
      TFIB_BOOL("thin_plate_filter", thin_plate_filter),
      Key{"spectrum", [](const CaseConfig& c) { return c.spectrum; },
          [](CaseConfig& c, const std::string& v) { c.spectrum = v; }},
      TFIB_INT("spectrum_modes", spectrum_modes),
      TFIB_NUM("spectrum_kmin", spectrum_kmin),
      TFIB_NUM("spectrum_kmax", spectrum_kmax),
      TFIB_INT("history_every", history_every),
      TFIB_INT("force_every", force_every),
      TFIB_INT("fields_every", fields_every),
      TFIB_INT("slice_axis", slice_axis),
      TFIB_NUM("slice_position", slice_position),
      Key{"probes",
          [](const CaseConfig& c) {
            std::string s;
            for (const Vec3& p : c.probes) s += (s.empty() ? "" : "; ") + fmt(p);
            return s;
          },
          [](CaseConfig& c, const std::string& v) {
            c.probes.clear();
            for (const auto& p : split(v, ';')) c.probes.push_back(to_vec3(p));
          }},
      Key{"seed", [](const CaseConfig& c) { return std::to_string(c.seed); },
          [](CaseConfig& c, const std::string& v) {
            const long s = to_long(v);
            if (s < 0) throw ConfigError("seed must be non-negative");
            c.seed = static_cast<std::uint64_t>(s);
          }},
      TFIB_INT("threads", threads),
      TFIB_BOOL("allow_large", allow_large),
  };
  return table;
}

#undef TFIB_NUM
#undef TFIB_INT
#undef TFIB_BOOL
#undef TFIB_ENUM
#undef TFIB_VEC

}  // namespace

CaseKind parse_case_kind(const std::string& s) {
  if (s == "tgv") return CaseKind::kTgv;
  if (s == "body") return CaseKind::kBody;
  if (s == "isotropic") return CaseKind::kIsotropic;
  throw ConfigError("unknown case kind '" + s + "'");
}

std::string to_string(CaseKind k) {
  switch (k) {
    case CaseKind::kTgv:
      return "tgv";
    case CaseKind::kBody:
      return "body";
    case CaseKind::kIsotropic:
      break;
  }
  return "isotropic";
}

ShapeKind parse_shape(const std::string& s) {
  static const std::map<std::string, ShapeKind> m = {
      {"none", ShapeKind::kNone},   {"square", ShapeKind::kSquare}, {"circle", ShapeKind::kCircle},
      {"sphere", ShapeKind::kSphere}, {"plate", ShapeKind::kPlate},
      {"thin_plate", ShapeKind::kThinPlate}, {"box", ShapeKind::kBox}};
  const auto it = m.find(s);
  if (it == m.end()) throw ConfigError("unknown shape '" + s + "'");
  return it->second;
}

std::string to_string(ShapeKind k) {
  switch (k) {
    case ShapeKind::kNone:
      return "none";
    case ShapeKind::kSquare:
      return "square";
    case ShapeKind::kCircle:
      return "circle";
    case ShapeKind::kSphere:
      return "sphere";
    case ShapeKind::kPlate:
      return "plate";
    case ShapeKind::kThinPlate:
      return "thin_plate";
    case ShapeKind::kBox:
      break;
  }
  return "box";
}

BoundarySpec CaseConfig::boundary() const {
  BoundarySpec b;
  for (std::size_t f = 0; f < 6; ++f) {
    b.face[f].type = bc[f];
    b.face[f].velocity = Vec3(u0, 0, 0);
  }
  return b;
}

SchemeConfig CaseConfig::scheme() const {
  SchemeConfig s;
  s.dt = dt;
  s.re = re;
  s.quick_blend = quick_blend;
  s.integrator = integrator;
  s.poisson = poisson;
  s.poisson_tol = poisson_tol;
  s.poisson_max = poisson_max;
  s.poisson_multigrid = multigrid;
  s.pressure_coupling = pressure_coupling;
  s.forcing = forcing;
  s.turbulence = turbulence;
  s.dead_end_filter = dead_end_filter;
  return s;
}

double CaseConfig::finest_dx() const { return (domain_hi.x() - domain_lo.x()) / resolution; }

double CaseConfig::nu() const {
  const double length = kind == CaseKind::kBody && shape != ShapeKind::kNone ? shape_size : 1.0;
  return u0 * length / re;
}

std::filesystem::path CaseConfig::resolve(const std::string& path) const {
  const std::filesystem::path p(path);
  return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
}

void CaseConfig::validate() const {
  if (dim != 2 && dim != 3) throw ConfigError("dim must be 2 or 3");
  for (int a = 0; a < 3; ++a) {
    if (!(domain_hi[a] > domain_lo[a])) throw ConfigError("domain_hi must exceed domain_lo");
  }
  if (resolution <= 0 || root_cubes <= 0 || max_levels < 0) {
    throw ConfigError("resolution and root_cubes must be positive, max_levels non-negative");
  }
  if (resolution % (root_cubes << max_levels) != 0) {
    throw ConfigError("resolution must be a multiple of root_cubes * 2^max_levels");
  }
  for (int a = 0; a < dim; ++a) {
    if ((bc[2 * a] == BcType::kPeriodic) != (bc[2 * a + 1] == BcType::kPeriodic)) {
      throw ConfigError("periodic boundaries must come in pairs");
    }
  }
  if (!(re > 0.0) || !(rho > 0.0) || !(u0 > 0.0)) throw ConfigError("re, rho and u0 must be positive");
  if (steps < 0) throw ConfigError("steps must be non-negative");
  if (history_every <= 0) throw ConfigError("history_every must be positive");
  if (slice_axis < -1 || slice_axis > 2) throw ConfigError("slice_axis must be -1, 0, 1 or 2");
  if (shape_resolution < 0) throw ConfigError("shape_resolution must be non-negative");
  if (!(shape_size > 0.0) || !(geometry_scale > 0.0)) {
    throw ConfigError("shape_size and geometry_scale must be positive");
  }
  for (double f : {dirty_gap_fraction, dirty_reduce, dirty_duplicate, dirty_flip}) {
    if (f < 0.0 || f >= 1.0) throw ConfigError("dirty fractions must lie in [0, 1)");
  }
  try {
    scheme().validate();
  } catch (const SolverError& e) {
    throw ConfigError(e.what());
  }
  for (const auto& g : geometry) {
    if (!std::filesystem::exists(resolve(g))) {
      throw ConfigError("geometry file not found: " + resolve(g).string());
    }
  }
  if (kind == CaseKind::kIsotropic) {
    if (dim != 3) throw ConfigError("isotropic case needs dim = 3");
    if (spectrum.empty()) throw ConfigError("isotropic case needs a spectrum file");
    if (!std::filesystem::exists(resolve(spectrum))) {
      throw ConfigError("spectrum file not found: " + resolve(spectrum).string());
    }
  }
  if (kind == CaseKind::kBody && geometry.empty() && shape == ShapeKind::kNone) {
    throw ConfigError("body case needs geometry or a shape");
  }
  double cells = 1.0;
  for (int a = 0; a < dim; ++a) cells *= (domain_hi[a] - domain_lo[a]) / finest_dx();
  if (max_levels == 0 && cells > kDeskCellBudget && !allow_large) {
    throw ConfigError("uniform grid of " + fmt(cells) +
                      " cells exceeds the desk budget; set allow_large = true to run it anyway");
  }
}

CaseConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  std::map<std::string, const Key*> index;
  for (const Key& k : keys()) index[k.name] = &k;
  CaseConfig c;
  c.base_dir = base_dir;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(number) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    const auto it = index.find(key);
    if (it == index.end()) {
      throw ConfigError("line " + std::to_string(number) + ": unknown key '" + key + "'");
    }
    if (!seen.insert(key).second) {
      throw ConfigError("line " + std::to_string(number) + ": duplicate key '" + key + "'");
    }
    try {
      it->second->set(c, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(number) + " (" + key + "): " + e.what());
    }
  }
  return c;
}

CaseConfig read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

std::string serialize(const CaseConfig& config) {
  std::string out;
  for (const Key& k : keys()) {
    const std::string v = k.get(config);
    out += k.name + " = " + (v.empty() ? "\"\"" : v) + "\n";
  }
  return out;
}

}  // namespace tfib
