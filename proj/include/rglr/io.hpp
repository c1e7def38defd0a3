#pragma once

#include "rglr/point_cloud.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace rglr {

enum class Format { Xyz, PlyAscii };

/// Picks a format from the file extension: .ply -> PLY, everything else XYZ.
inline Format format_from_path(const std::string& path) {
  const auto dot = path.find_last_of('.');
  if (dot != std::string::npos) {
    std::string ext = path.substr(dot + 1);
    for (char& c : ext) c = static_cast<char>(std::tolower(c));
    if (ext == "ply") return Format::PlyAscii;
  }
  return Format::Xyz;
}

namespace detail {

inline bool parse_doubles(const std::string& line, std::vector<double>& out) {
  out.clear();
  std::istringstream ss(line);
  double v;
  while (ss >> v) out.push_back(v);
  // Trailing junk (non-numeric tokens) makes the row malformed.
  std::string rest;
  if (ss.clear(), ss >> rest) return false;
  return true;
}

inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline PointCloud load_xyz(std::istream& in) {
  PointCloud cloud;
  std::string line;
  long line_no = 0;
  int columns = 0;
  std::vector<double> vals;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (!parse_doubles(line, vals)) throw ParseError("malformed row", line_no);
    if (vals.empty()) continue;
    if (columns == 0) {
      if (vals.size() != 3 && vals.size() != 6)
        throw ParseError("expected 3 or 6 columns", line_no);
      columns = static_cast<int>(vals.size());
      if (columns == 6) cloud.normals.emplace();
    }
    if (static_cast<int>(vals.size()) != columns)
      throw ParseError("inconsistent column count", line_no);
    cloud.points.emplace_back(vals[0], vals[1], vals[2]);
    if (columns == 6) cloud.normals->emplace_back(vals[3], vals[4], vals[5]);
  }
  if (cloud.empty()) throw EmptyCloud();
  return cloud;
}

inline PointCloud load_ply(std::istream& in) {
  std::string line;
  long line_no = 0;

  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };

  if (!next_line() || line != "ply") throw ParseError("missing 'ply' magic", line_no);

  long vertex_count = -1;
  bool in_vertex_element = false;
  bool saw_format = false;
  std::vector<std::string> vertex_props;
  while (true) {
    if (!next_line()) throw ParseError("unexpected end of header", line_no);
    std::istringstream ss(line);
    std::string tok;
    ss >> tok;
    if (tok == "comment" || tok.empty()) continue;
    if (tok == "format") {
      std::string kind;
      ss >> kind;
      if (kind != "ascii")
        throw ParseError("only ascii PLY is supported (got '" + kind + "')", line_no);
      saw_format = true;
    } else if (tok == "element") {
      std::string name;
      long count = 0;
      ss >> name >> count;
      if (name == "vertex") {
        if (vertex_count >= 0) throw ParseError("duplicate vertex element", line_no);
        vertex_count = count;
        in_vertex_element = true;
      } else {
        if (vertex_count < 0)
          throw ParseError("vertex element must come first", line_no);
        in_vertex_element = false;
      }
    } else if (tok == "property") {
      if (in_vertex_element) {
        std::string type, name;
        ss >> type >> name;
        if (type == "list") throw ParseError("list property on vertex element", line_no);
        vertex_props.push_back(name);
      }
    } else if (tok == "end_header") {
      break;
    } else {
      throw ParseError("unrecognized header keyword '" + tok + "'", line_no);
    }
  }
  if (!saw_format) throw ParseError("missing format line", line_no);
  if (vertex_count < 0) throw ParseError("missing vertex element", line_no);

  auto prop_index = [&](const std::string& name) -> int {
    for (std::size_t i = 0; i < vertex_props.size(); ++i)
      if (vertex_props[i] == name) return static_cast<int>(i);
    return -1;
  };
  const int ix = prop_index("x"), iy = prop_index("y"), iz = prop_index("z");
  if (ix < 0 || iy < 0 || iz < 0) throw ParseError("vertex element lacks x/y/z", line_no);
  const int inx = prop_index("nx"), iny = prop_index("ny"), inz = prop_index("nz");
  const bool has_normals = inx >= 0 && iny >= 0 && inz >= 0;

  PointCloud cloud;
  if (has_normals) cloud.normals.emplace();
  std::vector<double> vals;
  for (long v = 0; v < vertex_count; ++v) {
    if (!next_line()) throw ParseError("unexpected end of file in vertex data", line_no);
    if (!parse_doubles(line, vals) || vals.size() != vertex_props.size())
      throw ParseError("malformed row", line_no);
    cloud.points.emplace_back(vals[ix], vals[iy], vals[iz]);
    if (has_normals) cloud.normals->emplace_back(vals[inx], vals[iny], vals[inz]);
  }
  if (cloud.empty()) throw EmptyCloud();
  return cloud;
}

}  // namespace detail

inline PointCloud load(const std::string& path, Format format) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return format == Format::Xyz ? detail::load_xyz(in) : detail::load_ply(in);
}

inline PointCloud load(const std::string& path) {
  return load(path, format_from_path(path));
}

inline void save(const PointCloud& cloud, const std::string& path, Format format) {
  std::ofstream out(path, std::ios::binary);  // binary mode pins LF endings
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  const bool with_normals = cloud.normals.has_value();
  if (format == Format::PlyAscii) {
    out << "ply\nformat ascii 1.0\n";
    out << "element vertex " << cloud.size() << "\n";
    out << "property double x\nproperty double y\nproperty double z\n";
    if (with_normals)
      out << "property double nx\nproperty double ny\nproperty double nz\n";
    out << "end_header\n";
  }
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    out << detail::fmt_double(p.x()) << ' ' << detail::fmt_double(p.y()) << ' '
        << detail::fmt_double(p.z());
    if (with_normals) {
      const Vec3& n = (*cloud.normals)[i];
      out << ' ' << detail::fmt_double(n.x()) << ' ' << detail::fmt_double(n.y()) << ' '
          << detail::fmt_double(n.z());
    }
    out << '\n';
  }
  if (!out) throw IoError("write to '" + path + "' failed");
}

inline void save(const PointCloud& cloud, const std::string& path) {
  save(cloud, path, format_from_path(path));
}

}  // namespace rglr
