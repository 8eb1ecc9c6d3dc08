#include "tfib/post/export.hpp"

#include <Eigen/Core>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

namespace tfib {
namespace {

std::string block_name(int c) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "cube_%05d.vtk", c);
  return buf;
}

}  // namespace

void q_criterion(const CubeForest& forest, const std::array<CellField, 3>& u, CellField& q) {
  if (!q.allocated()) q = CellField(forest);
  const int dim = forest.dim();
  const auto s = forest.strides();
  for_each_cell(forest, [&](int c, int i, int j, int k) {
    const std::size_t f = forest.flat(c, i, j, k);
    const double inv = 0.5 / forest.cube(c).dx;
    Eigen::Matrix3d g = Eigen::Matrix3d::Zero();
    for (int a = 0; a < dim; ++a) {
      const auto st = static_cast<std::size_t>(s[static_cast<std::size_t>(a)]);
      for (int b = 0; b < 3; ++b) {
        const auto& ub = u[static_cast<std::size_t>(b)];
        if (!ub.allocated()) continue;
        g(b, a) = (ub[f + st] - ub[f - st]) * inv;
      }
    }
    const Eigen::Matrix3d S = 0.5 * (g + g.transpose());
    const Eigen::Matrix3d W = 0.5 * (g - g.transpose());
    q[f] = 0.5 * (W.cwiseProduct(W).sum() - S.cwiseProduct(S).sum());
  });
}

void write_vtk_blocks(const std::string& dir, const CubeForest& forest,
                      const std::map<std::string, const CellField*>& fields) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ExportError("cannot create " + dir + ": " + ec.message());
  const auto e = forest.extent();
  std::ofstream index(fs::path(dir) / "blocks.visit");
  if (!index) throw ExportError("cannot write index in " + dir);
  index << "!NBLOCKS " << forest.cube_count() << '\n';
  for (int c = 0; c < static_cast<int>(forest.cube_count()); ++c) {
    const Cube& cube = forest.cube(c);
    const std::string name = block_name(c);
    index << name << '\n';
    std::ofstream out(fs::path(dir) / name);
    if (!out) throw ExportError("cannot write " + name);
    out.precision(17);
    const Vec3 o = forest.cell_center(c, 0, 0, 0);
    out << "# vtk DataFile Version 3.0\ncube " << c << " level " << cube.level << "\nASCII\n"
        << "DATASET STRUCTURED_POINTS\n"
        << "DIMENSIONS " << e[0] << ' ' << e[1] << ' ' << e[2] << '\n'
        << "ORIGIN " << o.x() << ' ' << o.y() << ' ' << o.z() << '\n'
        << "SPACING " << cube.dx << ' ' << cube.dx << ' ' << cube.dx << '\n'
        << "POINT_DATA " << static_cast<long>(e[0]) * e[1] * e[2] << '\n';
    for (const auto& [fname, field] : fields) {
      out << "SCALARS " << fname << " double 1\nLOOKUP_TABLE default\n";
      for (int k = 0; k < e[2]; ++k)
        for (int j = 0; j < e[1]; ++j)
          for (int i = 0; i < e[0]; ++i) out << field->at(c, i, j, k) << '\n';
    }
    if (!out) throw ExportError("write failed for " + name);
  }
}

std::map<std::string, CellField> read_vtk_blocks(const std::string& dir, const CubeForest& forest) {
  namespace fs = std::filesystem;
  std::ifstream index(fs::path(dir) / "blocks.visit");
  if (!index) throw ExportError("missing blocks.visit in " + dir);
  std::string word;
  std::size_t count = 0;
  index >> word >> count;
  if (word != "!NBLOCKS" || count != forest.cube_count()) {
    throw ExportError("block index does not match the forest");
  }
  const auto e = forest.extent();
  std::map<std::string, CellField> result;
  for (int c = 0; c < static_cast<int>(count); ++c) {
    std::string name;
    index >> name;
    std::ifstream in(fs::path(dir) / name);
    if (!in) throw ExportError("cannot open " + name);
    std::string line;
    while (std::getline(in, line)) {
      if (line.rfind("SCALARS ", 0) != 0) continue;
      std::istringstream ls(line);
      std::string tag, fname;
      ls >> tag >> fname;
      std::getline(in, line);  // lookup table
      auto it = result.find(fname);
      if (it == result.end()) it = result.emplace(fname, CellField(forest)).first;
      for (int k = 0; k < e[2]; ++k)
        for (int j = 0; j < e[1]; ++j)
          for (int i = 0; i < e[0]; ++i) {
            std::string tok;
            if (!(in >> tok)) throw ExportError("truncated field " + fname + " in " + name);
            it->second.at(c, i, j, k) = std::stod(tok);
          }
      std::getline(in, line);
    }
  }
  return result;
}

void write_slice_csv(const std::string& path, const CubeForest& forest,
                     const std::map<std::string, const CellField*>& fields, int axis,
                     double position) {
  std::ofstream out(path);
  if (!out) throw ExportError("cannot write " + path);
  out.precision(12);
  out << "x,y,z";
  for (const auto& f : fields) out << ',' << f.first;
  out << '\n';
  for_each_cell(forest, [&](int c, int i, int j, int k) {
    const Vec3 x = forest.cell_center(c, i, j, k);
    const double h = 0.5 * forest.cube(c).dx;
    if (!(x[axis] - h <= position && position < x[axis] + h)) return;
    out << x.x() << ',' << x.y() << ',' << x.z();
    for (const auto& f : fields) out << ',' << f.second->at(c, i, j, k);
    out << '\n';
  });
  if (!out) throw ExportError("write failed for " + path);
}

ProbeWriter::ProbeWriter(const std::string& path, const CubeForest& forest,
                         const std::vector<Vec3>& points, const std::vector<std::string>& names)
    : out_(path), names_(names.size()) {
  if (!out_) throw ExportError("cannot write " + path);
  out_.precision(12);
  out_ << 't';
  for (std::size_t p = 0; p < points.size(); ++p) {
    const CellRef r = forest.locate_cell(points[p]);
    cells_.push_back(forest.flat(r.cube, r.i, r.j, r.k));
    for (const std::string& n : names) out_ << ",p" << p << '_' << n;
  }
  out_ << '\n';
}

void ProbeWriter::record(double t, const std::vector<const CellField*>& fields) {
  if (fields.size() != names_) throw ExportError("probe record needs one field per name");
  out_ << t;
  for (std::size_t c : cells_) {
    for (const CellField* f : fields) out_ << ',' << (*f)[c];
  }
  out_ << '\n';
  out_.flush();
}

}  // namespace tfib
