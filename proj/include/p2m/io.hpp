#pragma once

#include "p2m/cloud.hpp"

#include <filesystem>

namespace p2m::io {

/// Malformed or unreadable input. `line` is the 1-based text line (0 when unknown
/// or for binary payloads).
class ParseError : public Error {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

enum class PlyEncoding { Ascii, BinaryLittleEndian };

/// Point cloud from .ply (ascii or binary little-endian; x y z with optional
/// nx ny nz), .obj (v / vn lines) or .xyz / .txt (3 or 6 numbers per line).
/// Normals are scaled to unit length. When only some records carry normals, or a
/// normal is zero, all normals are dropped with a warning.
PointCloud read_point_cloud(const std::filesystem::path& path);

/// Writes every coordinate in its shortest exact decimal form (text) or as float64
/// (binary), so reading back gives identical values.
void write_point_cloud(const PointCloud& cloud, const std::filesystem::path& path,
                       PlyEncoding encoding = PlyEncoding::BinaryLittleEndian);

/// Triangle mesh from .obj or .ply. Faces that are not triangles are rejected.
Mesh read_mesh(const std::filesystem::path& path);

void write_mesh(const Mesh& mesh, const std::filesystem::path& path,
                PlyEncoding encoding = PlyEncoding::BinaryLittleEndian);

}  // namespace p2m::io
