#include "p2m/io.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <string_view>

namespace p2m::io {

ParseError::ParseError(const std::string& path, std::size_t line, const std::string& what)
    : Error(path + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + what), line_(line) {}

namespace {

namespace fs = std::filesystem;

std::string extension(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string(), 0, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(path.string() + ": cannot open file for writing");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(path.string() + ": write failed");
}

// Splits text into lines, tracking 1-based line numbers; strips a trailing '\r'.
class LineReader {
 public:
  LineReader(std::string_view text, std::size_t pos = 0, std::size_t first_line = 1)
      : text_(text), pos_(pos), line_(first_line - 1) {}

  bool next(std::string_view& out) {
    if (pos_ >= text_.size()) return false;
    std::size_t end = text_.find('\n', pos_);
    if (end == std::string_view::npos) end = text_.size();
    out = text_.substr(pos_, end - pos_);
    if (!out.empty() && out.back() == '\r') out.remove_suffix(1);
    pos_ = end + 1;
    ++line_;
    return true;
  }
  std::size_t line() const { return line_; }
  std::size_t position() const { return std::min(pos_, text_.size()); }

 private:
  std::string_view text_;
  std::size_t pos_;
  std::size_t line_;
};

std::vector<std::string_view> tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::optional<double> parse_double(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<long long> parse_int(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

void append_number(std::string& out, double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);  // shortest exact representation
  out.append(buf, ptr);
}

template <class T>
void append_binary(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  out.append(buf, sizeof(T));
}

// Normals become unit length; any zero or non-finite normal drops them all.
void finish_normals(PointCloud& cloud, const std::string& path) {
  for (Vec3& n : cloud.normals) {
    const double len = n.norm();
    if (!(len > 0.0) || !std::isfinite(len)) {
      spdlog::warn("{}: zero or invalid normal found; ignoring all normals", path);
      cloud.normals.clear();
      return;
    }
    if (std::abs(len - 1.0) > 1e-12) n /= len;
  }
}

// ---------------------------------------------------------------------------- PLY

enum class PlyType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

std::optional<PlyType> ply_type(std::string_view s) {
  static const std::pair<std::string_view, PlyType> names[] = {
      {"char", PlyType::Int8},     {"int8", PlyType::Int8},       {"uchar", PlyType::UInt8},
      {"uint8", PlyType::UInt8},   {"short", PlyType::Int16},     {"int16", PlyType::Int16},
      {"ushort", PlyType::UInt16}, {"uint16", PlyType::UInt16},   {"int", PlyType::Int32},
      {"int32", PlyType::Int32},   {"uint", PlyType::UInt32},     {"uint32", PlyType::UInt32},
      {"float", PlyType::Float32}, {"float32", PlyType::Float32}, {"double", PlyType::Float64},
      {"float64", PlyType::Float64}};
  for (const auto& [name, type] : names) {
    if (name == s) return type;
  }
  return std::nullopt;
}

std::size_t ply_size(PlyType t) {
  switch (t) {
    case PlyType::Int8:
    case PlyType::UInt8: return 1;
    case PlyType::Int16:
    case PlyType::UInt16: return 2;
    case PlyType::Int32:
    case PlyType::UInt32:
    case PlyType::Float32: return 4;
    case PlyType::Float64: return 8;
  }
  return 0;
}

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::Float32;
  bool list = false;
  PlyType count_type = PlyType::UInt8;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;

  int find(std::string_view prop) const {
    for (std::size_t i = 0; i < properties.size(); ++i) {
      if (properties[i].name == prop) return static_cast<int>(i);
    }
    return -1;
  }
};

// One parsed record: scalar properties by position, plus the list properties.
struct PlyRecord {
  std::vector<double> scalars;
  std::vector<std::vector<long long>> lists;
};

class PlyReader {
 public:
  PlyReader(std::string data, std::string path) : data_(std::move(data)), path_(std::move(path)) { parse_header(); }

  const std::vector<PlyElement>& elements() const { return elements_; }

  /// Visits every record of every element in file order.
  template <class Visit>
  void read(Visit&& visit) {
    if (binary_) {
      std::size_t pos = body_;
      for (std::size_t e = 0; e < elements_.size(); ++e) {
        const PlyElement& el = elements_[e];
        for (std::size_t r = 0; r < el.count; ++r) {
          PlyRecord rec;
          for (const PlyProperty& p : el.properties) {
            if (p.list) {
              const double n = binary_value(pos, p.count_type, el, r);
              if (n < 0 || n != std::floor(n)) fail(0, "negative list length in element '" + el.name + "'");
              if (n * static_cast<double>(ply_size(p.type)) > static_cast<double>(data_.size() - pos)) {
                fail(0, "truncated binary data in element '" + el.name + "' (record " + std::to_string(r) + ")");
              }
              std::vector<long long> items(static_cast<std::size_t>(n));
              for (auto& item : items) item = integral(binary_value(pos, p.type, el, r), 0, el.name);
              rec.lists.push_back(std::move(items));
            } else {
              rec.scalars.push_back(binary_value(pos, p.type, el, r));
            }
          }
          visit(e, rec, std::size_t{0});
        }
      }
      return;
    }
    LineReader lines(data_, body_, body_line_ + 1);
    for (std::size_t e = 0; e < elements_.size(); ++e) {
      const PlyElement& el = elements_[e];
      for (std::size_t r = 0; r < el.count; ++r) {
        std::string_view line;
        std::vector<std::string_view> tok;
        do {
          if (!lines.next(line)) {
            fail(lines.line(), "unexpected end of file in element '" + el.name + "' (record " + std::to_string(r) + ")");
          }
          tok = tokens(line);
        } while (tok.empty());
        const std::size_t ln = lines.line();
        std::size_t t = 0;
        auto next = [&]() {
          if (t >= tok.size()) fail(ln, "too few values for element '" + el.name + "'");
          const auto v = parse_double(tok[t]);
          if (!v) fail(ln, "invalid number '" + std::string(tok[t]) + "'");
          ++t;
          return *v;
        };
        PlyRecord rec;
        for (const PlyProperty& p : el.properties) {
          if (p.list) {
            const long long n = integral(next(), ln, el.name);
            if (n < 0) fail(ln, "negative list length in element '" + el.name + "'");
            if (static_cast<std::size_t>(n) > tok.size() - t) fail(ln, "too few values for element '" + el.name + "'");
            std::vector<long long> items(static_cast<std::size_t>(n));
            for (auto& item : items) item = integral(next(), ln, el.name);
            rec.lists.push_back(std::move(items));
          } else {
            rec.scalars.push_back(next());
          }
        }
        if (t != tok.size()) fail(ln, "too many values for element '" + el.name + "'");
        visit(e, rec, ln);
      }
    }
  }

  [[noreturn]] void fail(std::size_t line, const std::string& what) const { throw ParseError(path_, line, what); }

 private:
  void parse_header() {
    LineReader lines(data_);
    std::string_view line;
    if (!lines.next(line) || line != "ply") fail(1, "missing 'ply' magic line");
    bool have_format = false;
    while (true) {
      if (!lines.next(line)) fail(lines.line(), "header has no 'end_header'");
      const auto tok = tokens(line);
      const std::size_t ln = lines.line();
      if (tok.empty() || tok[0] == "comment" || tok[0] == "obj_info") continue;
      if (tok[0] == "end_header") break;
      if (tok[0] == "format") {
        if (tok.size() != 3) fail(ln, "malformed format line");
        if (tok[1] == "ascii") {
          binary_ = false;
        } else if (tok[1] == "binary_little_endian") {
          binary_ = true;
        } else {
          fail(ln, "unsupported PLY format '" + std::string(tok[1]) + "'");
        }
        have_format = true;
      } else if (tok[0] == "element") {
        if (tok.size() != 3) fail(ln, "malformed element line");
        const auto n = parse_int(tok[2]);
        if (!n || *n < 0) fail(ln, "invalid element count '" + std::string(tok[2]) + "'");
        elements_.push_back({std::string(tok[1]), static_cast<std::size_t>(*n), {}});
      } else if (tok[0] == "property") {
        if (elements_.empty()) fail(ln, "property before any element");
        PlyProperty p;
        if (tok.size() == 5 && tok[1] == "list") {
          const auto ct = ply_type(tok[2]);
          const auto it = ply_type(tok[3]);
          if (!ct || !it) fail(ln, "unknown property type");
          if (*ct == PlyType::Float32 || *ct == PlyType::Float64) fail(ln, "list count type must be integral");
          p = {std::string(tok[4]), *it, true, *ct};
        } else if (tok.size() == 3) {
          const auto t = ply_type(tok[1]);
          if (!t) fail(ln, "unknown property type '" + std::string(tok[1]) + "'");
          p = {std::string(tok[2]), *t, false, PlyType::UInt8};
        } else {
          fail(ln, "malformed property line");
        }
        elements_.back().properties.push_back(std::move(p));
      } else {
        fail(ln, "unexpected header keyword '" + std::string(tok[0]) + "'");
      }
    }
    if (!have_format) fail(lines.line(), "header has no format line");
    for (const PlyElement& el : elements_) {
      if (el.count > 0 && el.properties.empty()) fail(lines.line(), "element '" + el.name + "' has no properties");
    }
    body_ = lines.position();
    body_line_ = lines.line();
  }

  long long integral(double v, std::size_t line, const std::string& element) const {
    if (v != std::floor(v) || std::abs(v) > 9.0e15) fail(line, "non-integer value in element '" + element + "'");
    return static_cast<long long>(v);
  }

  double binary_value(std::size_t& pos, PlyType t, const PlyElement& el, std::size_t record) const {
    const std::size_t n = ply_size(t);
    if (pos + n > data_.size()) {
      fail(0, "truncated binary data in element '" + el.name + "' (record " + std::to_string(record) + ")");
    }
    char buf[8];
    std::memcpy(buf, data_.data() + pos, n);
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + n);
    pos += n;
    auto get = [&](auto v) {
      std::memcpy(&v, buf, sizeof v);
      return static_cast<double>(v);
    };
    double v = 0.0;
    switch (t) {
      case PlyType::Int8: v = get(std::int8_t{}); break;
      case PlyType::UInt8: v = get(std::uint8_t{}); break;
      case PlyType::Int16: v = get(std::int16_t{}); break;
      case PlyType::UInt16: v = get(std::uint16_t{}); break;
      case PlyType::Int32: v = get(std::int32_t{}); break;
      case PlyType::UInt32: v = get(std::uint32_t{}); break;
      case PlyType::Float32: v = get(float{}); break;
      case PlyType::Float64: v = get(double{}); break;
    }
    if (!std::isfinite(v)) fail(0, "non-finite value in element '" + el.name + "' (record " + std::to_string(record) + ")");
    return v;
  }

  std::string data_;
  std::string path_;
  std::vector<PlyElement> elements_;
  bool binary_ = false;
  std::size_t body_ = 0;
  std::size_t body_line_ = 0;
};

struct PlyVertexColumns {
  int element = -1;
  std::array<int, 3> xyz{-1, -1, -1};
  std::array<int, 3> normal{-1, -1, -1};
  bool has_normals() const { return normal[0] >= 0 && normal[1] >= 0 && normal[2] >= 0; }
};

PlyVertexColumns vertex_columns(const PlyReader& ply) {
  PlyVertexColumns c;
  const auto& els = ply.elements();
  for (std::size_t e = 0; e < els.size(); ++e) {
    if (els[e].name == "vertex") c.element = static_cast<int>(e);
  }
  if (c.element < 0) ply.fail(0, "no 'vertex' element");
  const PlyElement& v = els[c.element];
  // Scalars are stored by position among the non-list properties.
  std::vector<int> scalar_slot(v.properties.size(), -1);
  int next = 0;
  for (std::size_t i = 0; i < v.properties.size(); ++i) {
    if (!v.properties[i].list) scalar_slot[i] = next++;
  }
  auto slot = [&](std::string_view name) {
    const int i = v.find(name);
    return i >= 0 ? scalar_slot[i] : -1;
  };
  c.xyz = {slot("x"), slot("y"), slot("z")};
  c.normal = {slot("nx"), slot("ny"), slot("nz")};
  if (c.xyz[0] < 0 || c.xyz[1] < 0 || c.xyz[2] < 0) ply.fail(0, "vertex element lacks x, y or z");
  return c;
}

PointCloud read_ply_cloud(std::string data, const std::string& path) {
  PlyReader ply(std::move(data), path);
  const PlyVertexColumns cols = vertex_columns(ply);
  PointCloud cloud;
  ply.read([&](std::size_t e, const PlyRecord& r, std::size_t) {
    if (static_cast<int>(e) != cols.element) return;
    cloud.points.emplace_back(r.scalars[cols.xyz[0]], r.scalars[cols.xyz[1]], r.scalars[cols.xyz[2]]);
    if (cols.has_normals()) cloud.normals.emplace_back(r.scalars[cols.normal[0]], r.scalars[cols.normal[1]], r.scalars[cols.normal[2]]);
  });
  return cloud;
}

Mesh read_ply_mesh(std::string data, const std::string& path) {
  PlyReader ply(std::move(data), path);
  const PlyVertexColumns cols = vertex_columns(ply);
  int face_element = -1, face_list = -1;
  const auto& els = ply.elements();
  for (std::size_t e = 0; e < els.size(); ++e) {
    if (els[e].name != "face") continue;
    face_element = static_cast<int>(e);
    int list_slot = 0;
    for (const PlyProperty& p : els[e].properties) {
      if (!p.list) continue;
      if (p.name == "vertex_indices" || p.name == "vertex_index") face_list = list_slot;
      ++list_slot;
    }
  }
  if (face_element < 0 || face_list < 0) ply.fail(0, "no 'face' element with vertex_indices");
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  ply.read([&](std::size_t e, const PlyRecord& r, std::size_t line) {
    if (static_cast<int>(e) == cols.element) {
      vertices.emplace_back(r.scalars[cols.xyz[0]], r.scalars[cols.xyz[1]], r.scalars[cols.xyz[2]]);
    } else if (static_cast<int>(e) == face_element) {
      const auto& idx = r.lists[face_list];
      if (idx.size() != 3) {
        ply.fail(line, "face with " + std::to_string(idx.size()) + " vertices; only triangles are supported");
      }
      Face f{};
      for (int k = 0; k < 3; ++k) {
        if (idx[k] < 0 || idx[k] >= static_cast<long long>(els[cols.element].count)) {
          ply.fail(line, "vertex index " + std::to_string(idx[k]) + " out of range");
        }
        f[k] = static_cast<int>(idx[k]);
      }
      faces.push_back(f);
    }
  });
  if (faces.empty()) ply.fail(0, "mesh has no faces");
  return Mesh(std::move(vertices), std::move(faces));
}

std::string ply_header(PlyEncoding enc, std::size_t vertices, bool normals, std::size_t faces) {
  std::string h = "ply\nformat ";
  h += enc == PlyEncoding::Ascii ? "ascii" : "binary_little_endian";
  h += " 1.0\nelement vertex " + std::to_string(vertices) + "\nproperty double x\nproperty double y\nproperty double z\n";
  if (normals) h += "property double nx\nproperty double ny\nproperty double nz\n";
  if (faces > 0) h += "element face " + std::to_string(faces) + "\nproperty list uchar int vertex_indices\n";
  h += "end_header\n";
  return h;
}

void append_vertex_row(std::string& out, PlyEncoding enc, std::initializer_list<double> values) {
  if (enc == PlyEncoding::BinaryLittleEndian) {
    for (double v : values) append_binary(out, v);
    return;
  }
  bool first = true;
  for (double v : values) {
    if (!first) out += ' ';
    append_number(out, v);
    first = false;
  }
  out += '\n';
}

// ---------------------------------------------------------------------------- text formats

PointCloud read_xyz(const std::string& data, const std::string& path) {
  PointCloud cloud;
  std::size_t with_normals = 0;
  LineReader lines(data);
  std::string_view line;
  while (lines.next(line)) {
    const auto tok = tokens(line);
    if (tok.empty() || tok[0].front() == '#') continue;
    if (tok.size() != 3 && tok.size() != 6) {
      throw ParseError(path, lines.line(), "expected 3 or 6 numbers, got " + std::to_string(tok.size()));
    }
    double v[6];
    for (std::size_t i = 0; i < tok.size(); ++i) {
      const auto d = parse_double(tok[i]);
      if (!d) throw ParseError(path, lines.line(), "invalid number '" + std::string(tok[i]) + "'");
      v[i] = *d;
    }
    cloud.points.emplace_back(v[0], v[1], v[2]);
    cloud.normals.emplace_back(tok.size() == 6 ? Vec3(v[3], v[4], v[5]) : Vec3::Zero());
    with_normals += tok.size() == 6 ? 1 : 0;
  }
  if (with_normals == 0) {
    cloud.normals.clear();
  } else if (with_normals != cloud.points.size()) {
    spdlog::warn("{}: only {} of {} points have normals; ignoring all normals", path, with_normals, cloud.points.size());
    cloud.normals.clear();
  }
  return cloud;
}

struct ObjData {
  std::vector<Vec3> vertices;
  std::vector<Vec3> normals;
  std::vector<Face> faces;
};

ObjData read_obj(const std::string& data, const std::string& path, bool want_faces) {
  ObjData obj;
  LineReader lines(data);
  std::string_view line;
  auto vec3 = [&](const std::vector<std::string_view>& tok) {
    if (tok.size() < 4) throw ParseError(path, lines.line(), "expected 3 coordinates");
    Vec3 p;
    for (int k = 0; k < 3; ++k) {
      const auto d = parse_double(tok[k + 1]);
      if (!d) throw ParseError(path, lines.line(), "invalid number '" + std::string(tok[k + 1]) + "'");
      p[k] = *d;
    }
    return p;
  };
  std::vector<std::pair<std::array<long long, 3>, std::size_t>> raw_faces;
  while (lines.next(line)) {
    const auto tok = tokens(line);
    if (tok.empty() || tok[0].front() == '#') continue;
    if (tok[0] == "v") {
      obj.vertices.push_back(vec3(tok));
    } else if (tok[0] == "vn") {
      obj.normals.push_back(vec3(tok));
    } else if (tok[0] == "f" && want_faces) {
      if (tok.size() != 4) {
        throw ParseError(path, lines.line(),
                         "face with " + std::to_string(tok.size() - 1) + " vertices; only triangles are supported");
      }
      std::array<long long, 3> idx{};
      for (int k = 0; k < 3; ++k) {
        const std::string_view s = tok[k + 1].substr(0, tok[k + 1].find('/'));
        const auto i = parse_int(s);
        if (!i || *i == 0) throw ParseError(path, lines.line(), "invalid vertex reference '" + std::string(tok[k + 1]) + "'");
        idx[k] = *i < 0 ? static_cast<long long>(obj.vertices.size()) + *i : *i - 1;
      }
      raw_faces.push_back({idx, lines.line()});
    }
  }
  for (const auto& [idx, ln] : raw_faces) {
    Face f{};
    for (int k = 0; k < 3; ++k) {
      if (idx[k] < 0 || idx[k] >= static_cast<long long>(obj.vertices.size())) {
        throw ParseError(path, ln, "vertex reference out of range");
      }
      f[k] = static_cast<int>(idx[k]);
    }
    obj.faces.push_back(f);
  }
  return obj;
}

}  // namespace

PointCloud read_point_cloud(const fs::path& path) {
  const std::string ext = extension(path);
  const std::string name = path.string();
  std::string data = read_file(path);
  PointCloud cloud;
  if (ext == ".ply") {
    cloud = read_ply_cloud(std::move(data), name);
  } else if (ext == ".obj") {
    ObjData obj = read_obj(data, name, false);
    cloud.points = std::move(obj.vertices);
    if (!obj.normals.empty() && obj.normals.size() != cloud.points.size()) {
      spdlog::warn("{}: {} normals for {} points; ignoring all normals", name, obj.normals.size(), cloud.points.size());
    } else {
      cloud.normals = std::move(obj.normals);
    }
  } else if (ext == ".xyz" || ext == ".txt" || ext == ".pts") {
    cloud = read_xyz(data, name);
  } else {
    throw ParseError(name, 0, "unsupported point cloud format '" + ext + "'");
  }
  if (cloud.points.empty()) throw ParseError(name, 0, "no points");
  finish_normals(cloud, name);
  return cloud;
}

void write_point_cloud(const PointCloud& cloud, const fs::path& path, PlyEncoding encoding) {
  if (cloud.points.empty()) throw NumericError("write_point_cloud: empty cloud");
  const bool normals = cloud.has_normals();
  const std::string ext = extension(path);
  std::string out;
  if (ext == ".ply") {
    out = ply_header(encoding, cloud.size(), normals, 0);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const Vec3& p = cloud.points[i];
      if (normals) {
        const Vec3& n = cloud.normals[i];
        append_vertex_row(out, encoding, {p.x(), p.y(), p.z(), n.x(), n.y(), n.z()});
      } else {
        append_vertex_row(out, encoding, {p.x(), p.y(), p.z()});
      }
    }
  } else if (ext == ".xyz" || ext == ".txt" || ext == ".pts" || ext == ".obj") {
    const bool obj = ext == ".obj";
    auto row = [&](const char* tag, const Vec3& v, bool last) {
      if (tag) out += tag;
      for (int k = 0; k < 3; ++k) {
        append_number(out, v[k]);
        out += (k < 2 || !last) ? ' ' : '\n';
      }
    };
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      if (obj) {
        row("v ", cloud.points[i], true);
      } else {
        row(nullptr, cloud.points[i], !normals);
        if (normals) row(nullptr, cloud.normals[i], true);
      }
    }
    if (obj && normals) {
      for (const Vec3& n : cloud.normals) row("vn ", n, true);
    }
  } else {
    throw Error(path.string() + ": unsupported point cloud format '" + ext + "'");
  }
  write_file(path, out);
}

Mesh read_mesh(const fs::path& path) {
  const std::string ext = extension(path);
  const std::string name = path.string();
  std::string data = read_file(path);
  if (ext == ".ply") return read_ply_mesh(std::move(data), name);
  if (ext == ".obj") {
    ObjData obj = read_obj(data, name, true);
    if (obj.faces.empty()) throw ParseError(name, 0, "mesh has no faces");
    return Mesh(std::move(obj.vertices), std::move(obj.faces));
  }
  throw ParseError(name, 0, "unsupported mesh format '" + ext + "'");
}

void write_mesh(const Mesh& mesh, const fs::path& path, PlyEncoding encoding) {
  if (mesh.empty()) throw MeshError("write_mesh: mesh has no faces");
  const std::string ext = extension(path);
  std::string out;
  if (ext == ".obj") {
    for (const Vec3& v : mesh.vertices()) {
      out += "v ";
      for (int k = 0; k < 3; ++k) {
        append_number(out, v[k]);
        out += k < 2 ? ' ' : '\n';
      }
    }
    for (const Face& f : mesh.faces()) {
      out += "f " + std::to_string(f[0] + 1) + ' ' + std::to_string(f[1] + 1) + ' ' + std::to_string(f[2] + 1) + '\n';
    }
  } else if (ext == ".ply") {
    out = ply_header(encoding, mesh.vertex_count(), false, mesh.face_count());
    for (const Vec3& v : mesh.vertices()) append_vertex_row(out, encoding, {v.x(), v.y(), v.z()});
    for (const Face& f : mesh.faces()) {
      if (encoding == PlyEncoding::BinaryLittleEndian) {
        append_binary(out, std::uint8_t{3});
        for (int k : f) append_binary(out, static_cast<std::int32_t>(k));
      } else {
        out += "3 " + std::to_string(f[0]) + ' ' + std::to_string(f[1]) + ' ' + std::to_string(f[2]) + '\n';
      }
    }
  } else {
    throw Error(path.string() + ": unsupported mesh format '" + ext + "'");
  }
  write_file(path, out);
}

}  // namespace p2m::io
