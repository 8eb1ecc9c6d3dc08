#include "tfib/ibm/forcing.hpp"

#include <stdexcept>

namespace tfib {

ForcingRule parse_forcing_rule(const std::string& s) {
  if (s == "blend") return ForcingRule::kBlend;
  if (s == "interpolate") return ForcingRule::kInterpolate;
  if (s == "none") return ForcingRule::kNone;
  throw std::invalid_argument("unknown forcing rule '" + s + "'");
}

std::string to_string(ForcingRule r) {
  switch (r) {
    case ForcingRule::kBlend:
      return "blend";
    case ForcingRule::kInterpolate:
      return "interpolate";
    case ForcingRule::kNone:
      break;
  }
  return "none";
}

std::vector<ForcingSite> forcing_sites(const DummyBlocks& blocks, const CellMask& mask) {
  std::vector<ForcingSite> sites;
  for (std::size_t b = 0; b < blocks.blocks.size(); ++b) {
    const DummyBlock& blk = blocks.blocks[b];
    if (mask.dead_end[blk.flat]) continue;
    const int dir = blk.nearest_direction();
    if (dir < 0) continue;
    ForcingSite s;
    s.flat = blk.flat;
    s.block = static_cast<int>(b);
    s.direction = dir;
    s.dx = blk.dx;
    s.d = nudged_distance(blk.crossing[static_cast<std::size_t>(dir)].d, blk.dx);
    s.weight = s.dx / (s.dx + s.d);
    sites.push_back(s);
  }
  return sites;
}

void compute_forcing(const CubeForest& forest, const DummyBlocks& blocks,
                     const std::vector<ForcingSite>& sites, ForcingRule rule,
                     std::array<std::vector<double>*, 3> u_pred, int components, double dt,
                     ForcingField& out, bool apply) {
  out.sites = sites;
  out.f.assign(sites.size(), {0.0, 0.0, 0.0});
  if (rule == ForcingRule::kNone) return;
  const auto strides = forest.strides();
  std::vector<std::array<double, 3>> target(sites.size());
  for (std::size_t n = 0; n < sites.size(); ++n) {
    const ForcingSite& s = sites[n];
    const DummyBlock& b = blocks.blocks[static_cast<std::size_t>(s.block)];
    const int axis = face_axis(s.direction);
    const int side = face_side(s.direction);
    const std::ptrdiff_t off = -side * strides[static_cast<std::size_t>(axis)];
    const int opp_dir = face_id(axis, -side);
    const bool opp_blocked = b.first_ghost(opp_dir) == 1;
    const Vec3& uib = b.crossing[static_cast<std::size_t>(s.direction)].wall_velocity;
    for (int c = 0; c < components; ++c) {
      const std::vector<double>& u = *u_pred[static_cast<std::size_t>(c)];
      const double up = u[s.flat];
      double uo = up;
      if (!opp_blocked) uo = u[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(s.flat) + off)];
      const double ustar = opp_blocked ? forced_value(ForcingRule::kBlend, up, up, uib[c], s.d, s.dx)
                                       : forced_value(rule, up, uo, uib[c], s.d, s.dx);
      target[n][static_cast<std::size_t>(c)] = ustar;
      out.f[n][static_cast<std::size_t>(c)] = (ustar - up) / dt;
    }
  }
  if (!apply) return;
  // Targets read predicted neighbours first, then all writes happen.
  for (std::size_t n = 0; n < sites.size(); ++n) {
    for (int c = 0; c < components; ++c) {
      (*u_pred[static_cast<std::size_t>(c)])[sites[n].flat] = target[n][static_cast<std::size_t>(c)];
    }
  }
}

}  // namespace tfib
