#pragma once

#include <filesystem>
#include <string>

#include "earscan/types.hpp"

namespace earscan {

/// ASCII PLY reader. Recognized vertex properties: x y z, nx ny nz, quality (read as AO).
/// Other properties and elements are skipped. Errors carry the offending line number.
PointCloud load_point_cloud(const std::filesystem::path& path);

/// ASCII PLY or OBJ (chosen by extension). Faces must be triangles.
TriangleMesh load_mesh(const std::filesystem::path& path);

PointCloud parse_point_cloud_ply(const std::string& text);
TriangleMesh parse_mesh_ply(const std::string& text);
TriangleMesh parse_mesh_obj(const std::string& text);

/// Writers emit 9 significant digits.
std::string format_ply(const PointCloud& cloud);
std::string format_ply(const TriangleMesh& mesh);
void save_point_cloud(const std::filesystem::path& path, const PointCloud& cloud);
void save_mesh(const std::filesystem::path& path, const TriangleMesh& mesh);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// "%.9g" rendering used by every writer and report.
std::string format_double(double value);

}  // namespace earscan
