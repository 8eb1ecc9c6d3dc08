#include "tfib/geom/stl.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace tfib {
namespace {

constexpr std::size_t kHeaderBytes = 80;
constexpr std::size_t kRecordBytes = 50;

std::uint32_t read_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

float read_f32_le(const unsigned char* p) {
  const std::uint32_t bits = read_u32_le(p);
  float f;
  std::memcpy(&f, &bits, sizeof f);
  return f;
}

void write_u32_le(std::ostream& os, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                              static_cast<char>((v >> 16) & 0xff),
                              static_cast<char>((v >> 24) & 0xff)};
  os.write(b.data(), 4);
}

void write_f32_le(std::ostream& os, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, sizeof bits);
  write_u32_le(os, bits);
}

bool looks_binary(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < kHeaderBytes + 4) return false;
  const std::uint32_t n = read_u32_le(bytes.data() + kHeaderBytes);
  return bytes.size() == kHeaderBytes + 4 + static_cast<std::size_t>(n) * kRecordBytes;
}

TriangleSoup parse_binary(const std::vector<unsigned char>& bytes, double scale) {
  TriangleSoup soup;
  const std::uint32_t n = read_u32_le(bytes.data() + kHeaderBytes);
  for (std::uint32_t t = 0; t < n; ++t) {
    const std::size_t offset = kHeaderBytes + 4 + static_cast<std::size_t>(t) * kRecordBytes;
    const unsigned char* rec = bytes.data() + offset;
    std::array<Vec3, 3> v;
    for (int k = 0; k < 3; ++k) {
      for (int c = 0; c < 3; ++c) {
        const float f = read_f32_le(rec + 12 + 12 * k + 4 * c);
        if (!std::isfinite(f)) {
          throw GeometryError("non-finite vertex coordinate at byte offset " +
                              std::to_string(offset + 12 + 12 * k + 4 * c));
        }
        v[k][c] = static_cast<double>(f) * scale;
      }
    }
    soup.add(v[0], v[1], v[2]);
  }
  soup.refresh();
  return soup;
}

TriangleSoup parse_text(const std::string& text, double scale) {
  TriangleSoup soup;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<Vec3> pending;
  bool saw_solid = false;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;
    if (word == "solid") {
      saw_solid = true;
    } else if (word == "vertex") {
      Vec3 v;
      if (!(ls >> v.x() >> v.y() >> v.z())) {
        throw GeometryError("malformed vertex record at line " + std::to_string(line_no));
      }
      if (!v.allFinite()) {
        throw GeometryError("non-finite vertex at line " + std::to_string(line_no));
      }
      pending.push_back(v * scale);
    } else if (word == "endloop") {
      if (pending.size() != 3) {
        throw GeometryError("facet with " + std::to_string(pending.size()) +
                            " vertices ending at line " + std::to_string(line_no));
      }
      soup.add(pending[0], pending[1], pending[2]);
      pending.clear();
    } else if (word == "facet" || word == "outer" || word == "endfacet" || word == "endsolid") {
      // structural keywords; the stored normal is recomputed from the winding
    } else {
      throw GeometryError("unexpected token '" + word + "' at line " + std::to_string(line_no));
    }
  }
  if (!saw_solid) throw GeometryError("text STL without 'solid' header");
  if (!pending.empty()) throw GeometryError("truncated facet at end of file");
  soup.refresh();
  return soup;
}

}  // namespace

TriangleSoup load_geometry(const std::filesystem::path& path, double units_scale) {
  if (!(units_scale > 0.0)) throw GeometryError("units_scale must be positive");
  std::ifstream file(path, std::ios::binary);
  if (!file) throw GeometryError("cannot open geometry file " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(file)),
                                   std::istreambuf_iterator<char>());
  if (looks_binary(bytes)) return parse_binary(bytes, units_scale);
  return parse_text(std::string(bytes.begin(), bytes.end()), units_scale);
}

void save_stl(const TriangleSoup& soup, const std::filesystem::path& path, StlFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw GeometryError("cannot write " + path.string());
  if (format == StlFormat::kBinary) {
    std::array<char, kHeaderBytes> header{};
    const char tag[] = "tfib binary stl";
    std::memcpy(header.data(), tag, sizeof tag - 1);
    out.write(header.data(), header.size());
    write_u32_le(out, static_cast<std::uint32_t>(soup.size()));
    for (const Triangle& t : soup.triangles()) {
      for (int c = 0; c < 3; ++c) write_f32_le(out, static_cast<float>(t.normal[c]));
      for (const Vec3* v : {&t.v0, &t.v1, &t.v2}) {
        for (int c = 0; c < 3; ++c) write_f32_le(out, static_cast<float>((*v)[c]));
      }
      const char attr[2] = {0, 0};
      out.write(attr, 2);
    }
  } else {
    out << "solid tfib\n" << std::setprecision(17);
    for (const Triangle& t : soup.triangles()) {
      out << "  facet normal " << t.normal.x() << ' ' << t.normal.y() << ' ' << t.normal.z()
          << "\n    outer loop\n";
      for (const Vec3* v : {&t.v0, &t.v1, &t.v2}) {
        out << "      vertex " << v->x() << ' ' << v->y() << ' ' << v->z() << '\n';
      }
      out << "    endloop\n  endfacet\n";
    }
    out << "endsolid tfib\n";
  }
  if (!out) throw GeometryError("write failed for " + path.string());
}

}  // namespace tfib
