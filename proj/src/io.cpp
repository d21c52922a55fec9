#include "earscan/io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string_view>
#include <vector>

#include "earscan/error.hpp"

namespace earscan {
namespace {

class LineReader {
public:
    explicit LineReader(const std::string& text) : text_(text) {}

    bool next(std::string_view& line) {
        if (pos_ >= text_.size()) return false;
        auto end = text_.find('\n', pos_);
        if (end == std::string::npos) end = text_.size();
        line = std::string_view(text_).substr(pos_, end - pos_);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        pos_ = end + 1;
        ++line_no_;
        return true;
    }

    std::size_t line_no() const { return line_no_; }

private:
    const std::string& text_;
    std::size_t pos_ = 0;
    std::size_t line_no_ = 0;
};

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

[[noreturn]] void parse_fail(std::size_t line, const std::string& msg) {
    throw Error(ErrorKind::Parse, "line " + std::to_string(line) + ": " + msg);
}

bool parse_number(std::string_view tok, double& out) {
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

bool parse_index(std::string_view tok, long long& out) {
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    return ec == std::errc() && ptr == tok.data() + tok.size();
}

bool is_float_type(std::string_view t) {
    return t == "float" || t == "double" || t == "float32" || t == "float64";
}

bool is_int_type(std::string_view t) {
    return t == "char" || t == "uchar" || t == "short" || t == "ushort" || t == "int" ||
           t == "uint" || t == "int8" || t == "uint8" || t == "int16" || t == "uint16" ||
           t == "int32" || t == "uint32";
}

struct PlyProperty {
    std::string name;
    bool is_list = false;
};

struct PlyElement {
    std::string name;
    std::size_t count = 0;
    std::vector<PlyProperty> properties;
};

struct PlyData {
    std::vector<Vec3> positions;
    std::vector<Vec3> normals;
    std::vector<double> quality;
    bool has_normals = false;
    bool has_quality = false;
    std::vector<Face> faces;
};

PlyData parse_ply(const std::string& text, bool want_faces) {
    LineReader reader(text);
    std::string_view line;
    if (!reader.next(line) || line != "ply") parse_fail(1, "missing 'ply' magic");

    std::vector<PlyElement> elements;
    bool format_seen = false;
    bool header_done = false;
    while (reader.next(line)) {
        const auto tok = split_ws(line);
        if (tok.empty()) continue;
        if (tok[0] == "comment" || tok[0] == "obj_info") continue;
        if (tok[0] == "format") {
            if (tok.size() != 3 || tok[1] != "ascii")
                parse_fail(reader.line_no(), "only 'format ascii 1.0' is supported");
            format_seen = true;
        } else if (tok[0] == "element") {
            long long count = 0;
            if (tok.size() != 3 || !parse_index(tok[2], count) || count < 0)
                parse_fail(reader.line_no(), "malformed element declaration");
            elements.push_back({std::string(tok[1]), static_cast<std::size_t>(count), {}});
        } else if (tok[0] == "property") {
            if (elements.empty()) parse_fail(reader.line_no(), "property before element");
            auto& el = elements.back();
            if (tok.size() == 5 && tok[1] == "list") {
                if (!is_int_type(tok[2]) || !is_int_type(tok[3]))
                    parse_fail(reader.line_no(), "list property must use integer types");
                el.properties.push_back({std::string(tok[4]), true});
            } else if (tok.size() == 3) {
                const std::string name(tok[2]);
                const bool known = name == "x" || name == "y" || name == "z" || name == "nx" ||
                                   name == "ny" || name == "nz" || name == "quality";
                if (el.name == "vertex" && known && !is_float_type(tok[1]))
                    parse_fail(reader.line_no(), "property '" + name + "' must be float or double");
                if (!is_float_type(tok[1]) && !is_int_type(tok[1]))
                    parse_fail(reader.line_no(), "unknown property type '" + std::string(tok[1]) + "'");
                el.properties.push_back({name, false});
            } else {
                parse_fail(reader.line_no(), "malformed property declaration");
            }
        } else if (tok[0] == "end_header") {
            header_done = true;
            break;
        } else {
            parse_fail(reader.line_no(), "unexpected header keyword '" + std::string(tok[0]) + "'");
        }
    }
    if (!format_seen) parse_fail(reader.line_no(), "missing format line");
    if (!header_done) parse_fail(reader.line_no(), "missing end_header");

    PlyData data;
    for (const auto& el : elements) {
        if (el.name == "vertex") {
            int ix = -1, iy = -1, iz = -1, inx = -1, iny = -1, inz = -1, iq = -1;
            for (int p = 0; p < static_cast<int>(el.properties.size()); ++p) {
                const auto& prop = el.properties[p];
                if (prop.is_list) parse_fail(reader.line_no(), "list property on vertex element");
                if (prop.name == "x") ix = p;
                if (prop.name == "y") iy = p;
                if (prop.name == "z") iz = p;
                if (prop.name == "nx") inx = p;
                if (prop.name == "ny") iny = p;
                if (prop.name == "nz") inz = p;
                if (prop.name == "quality") iq = p;
            }
            if (ix < 0 || iy < 0 || iz < 0) parse_fail(reader.line_no(), "vertex element lacks x y z");
            const bool normals = inx >= 0 && iny >= 0 && inz >= 0;
            if (!normals && (inx >= 0 || iny >= 0 || inz >= 0))
                parse_fail(reader.line_no(), "incomplete normal properties");
            data.has_normals = normals;
            data.has_quality = iq >= 0;
            data.positions.reserve(el.count);
            std::vector<double> values(el.properties.size());
            for (std::size_t v = 0; v < el.count; ++v) {
                if (!reader.next(line))
                    parse_fail(reader.line_no() + 1, "file ends after " + std::to_string(v) + " of " +
                                                         std::to_string(el.count) + " vertices");
                const auto tok = split_ws(line);
                if (tok.size() != values.size())
                    parse_fail(reader.line_no(), "expected " + std::to_string(values.size()) +
                                                     " values, found " + std::to_string(tok.size()));
                for (std::size_t k = 0; k < tok.size(); ++k) {
                    if (!parse_number(tok[k], values[k]) || !std::isfinite(values[k]))
                        parse_fail(reader.line_no(), "invalid number '" + std::string(tok[k]) + "'");
                }
                data.positions.emplace_back(values[ix], values[iy], values[iz]);
                if (normals) {
                    Vec3 n(values[inx], values[iny], values[inz]);
                    const double len = n.norm();
                    if (len == 0.0) parse_fail(reader.line_no(), "zero-length normal");
                    data.normals.push_back(std::abs(len - 1.0) > 1e-9 ? Vec3(n / len) : n);
                }
                if (iq >= 0) {
                    const double q = values[iq];
                    if (q < 0.0 || q > 1.0) parse_fail(reader.line_no(), "quality outside [0,1]");
                    data.quality.push_back(q);
                }
            }
        } else if (el.name == "face" && want_faces) {
            int il = -1;
            for (int p = 0; p < static_cast<int>(el.properties.size()); ++p) {
                const auto& prop = el.properties[p];
                if (prop.is_list && (prop.name == "vertex_indices" || prop.name == "vertex_index"))
                    il = p;
            }
            if (il < 0) parse_fail(reader.line_no(), "face element lacks vertex_indices");
            data.faces.reserve(el.count);
            for (std::size_t f = 0; f < el.count; ++f) {
                if (!reader.next(line))
                    parse_fail(reader.line_no() + 1, "file ends after " + std::to_string(f) + " of " +
                                                         std::to_string(el.count) + " faces");
                const auto tok = split_ws(line);
                std::size_t pos = 0;
                for (int p = 0; p < static_cast<int>(el.properties.size()); ++p) {
                    if (pos >= tok.size()) parse_fail(reader.line_no(), "truncated face record");
                    if (!el.properties[p].is_list) {
                        ++pos;
                        continue;
                    }
                    long long count = 0;
                    if (!parse_index(tok[pos], count) || count < 0)
                        parse_fail(reader.line_no(), "invalid list length");
                    ++pos;
                    if (pos + static_cast<std::size_t>(count) > tok.size())
                        parse_fail(reader.line_no(), "truncated face record");
                    if (p == il) {
                        if (count != 3)
                            throw Error(ErrorKind::UnsupportedFace,
                                        "line " + std::to_string(reader.line_no()) + ": face with " +
                                            std::to_string(count) + " vertices");
                        Face face{};
                        for (int k = 0; k < 3; ++k) {
                            long long idx = 0;
                            if (!parse_index(tok[pos + k], idx))
                                parse_fail(reader.line_no(), "invalid vertex index");
                            if (idx < 0 || static_cast<std::size_t>(idx) >= data.positions.size())
                                throw Error(ErrorKind::Index, "line " + std::to_string(reader.line_no()) +
                                                                  ": vertex index " + std::to_string(idx) +
                                                                  " out of range");
                            face[k] = static_cast<std::uint32_t>(idx);
                        }
                        data.faces.push_back(face);
                    }
                    pos += static_cast<std::size_t>(count);
                }
            }
        } else {
            for (std::size_t r = 0; r < el.count; ++r) {
                if (!reader.next(line))
                    parse_fail(reader.line_no() + 1, "file ends inside element '" + el.name + "'");
            }
        }
    }
    return data;
}

void check_faces(TriangleMesh& mesh) {
    for (std::size_t i = 0; i < mesh.faces.size(); ++i) {
        const auto& f = mesh.faces[i];
        if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2] || mesh.face_normal(i).norm() == 0.0)
            throw Error(ErrorKind::DegenerateFace, "face " + std::to_string(i) + " is degenerate");
    }
}

}  // namespace

std::string format_double(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", value);
    return buf;
}

PointCloud parse_point_cloud_ply(const std::string& text) {
    auto data = parse_ply(text, false);
    PointCloud cloud;
    cloud.positions = std::move(data.positions);
    if (data.has_normals) cloud.normals = std::move(data.normals);
    if (data.has_quality) cloud.ao = std::move(data.quality);
    return cloud;
}

TriangleMesh parse_mesh_ply(const std::string& text) {
    auto data = parse_ply(text, true);
    TriangleMesh mesh;
    mesh.vertices = std::move(data.positions);
    mesh.faces = std::move(data.faces);
    if (data.has_normals) mesh.vertex_normals = std::move(data.normals);
    if (data.has_quality) mesh.vertex_ao = std::move(data.quality);
    check_faces(mesh);
    return mesh;
}

TriangleMesh parse_mesh_obj(const std::string& text) {
    TriangleMesh mesh;
    LineReader reader(text);
    std::string_view line;
    std::vector<std::pair<std::array<long long, 3>, std::size_t>> raw_faces;
    while (reader.next(line)) {
        const auto tok = split_ws(line);
        if (tok.empty() || tok[0].front() == '#') continue;
        if (tok[0] == "v") {
            if (tok.size() < 4) parse_fail(reader.line_no(), "vertex needs three coordinates");
            Vec3 p;
            for (int k = 0; k < 3; ++k) {
                if (!parse_number(tok[k + 1], p[k]) || !std::isfinite(p[k]))
                    parse_fail(reader.line_no(), "invalid number '" + std::string(tok[k + 1]) + "'");
            }
            mesh.vertices.push_back(p);
        } else if (tok[0] == "f") {
            if (tok.size() != 4)
                throw Error(ErrorKind::UnsupportedFace, "line " + std::to_string(reader.line_no()) +
                                                            ": face with " + std::to_string(tok.size() - 1) +
                                                            " vertices");
            std::array<long long, 3> idx{};
            for (int k = 0; k < 3; ++k) {
                auto t = tok[k + 1];
                t = t.substr(0, t.find('/'));
                if (!parse_index(t, idx[k])) parse_fail(reader.line_no(), "invalid face index");
            }
            raw_faces.push_back({idx, reader.line_no()});
        }
    }
    for (const auto& [idx, line_no] : raw_faces) {
        Face face{};
        for (int k = 0; k < 3; ++k) {
            if (idx[k] < 1 || static_cast<std::size_t>(idx[k]) > mesh.vertices.size())
                throw Error(ErrorKind::Index, "line " + std::to_string(line_no) + ": vertex index " +
                                                  std::to_string(idx[k]) + " out of range (1-based)");
            face[k] = static_cast<std::uint32_t>(idx[k] - 1);
        }
        mesh.faces.push_back(face);
    }
    check_faces(mesh);
    return mesh;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

PointCloud load_point_cloud(const std::filesystem::path& path) {
    try {
        return parse_point_cloud_ply(read_text_file(path));
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Io) throw;
        throw Error(e.kind(), path.string() + ": " + e.what());
    }
}

TriangleMesh load_mesh(const std::filesystem::path& path) {
    const auto text = read_text_file(path);
    auto ext = path.extension().string();
    for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    try {
        if (ext == ".obj") return parse_mesh_obj(text);
        return parse_mesh_ply(text);
    } catch (const Error& e) {
        throw Error(e.kind(), path.string() + ": " + e.what());
    }
}

namespace {

void append_vertex_header(std::string& out, std::size_t count, bool normals, bool ao) {
    out += "element vertex " + std::to_string(count) + "\n";
    out += "property float x\nproperty float y\nproperty float z\n";
    if (normals) out += "property float nx\nproperty float ny\nproperty float nz\n";
    if (ao) out += "property float quality\n";
}

void append_vertices(std::string& out, const std::vector<Vec3>& pos,
                     const std::optional<std::vector<Vec3>>& normals,
                     const std::optional<std::vector<double>>& ao) {
    for (std::size_t i = 0; i < pos.size(); ++i) {
        out += format_double(pos[i].x()) + ' ' + format_double(pos[i].y()) + ' ' +
               format_double(pos[i].z());
        if (normals) {
            const auto& n = (*normals)[i];
            out += ' ' + format_double(n.x()) + ' ' + format_double(n.y()) + ' ' + format_double(n.z());
        }
        if (ao) out += ' ' + format_double((*ao)[i]);
        out += '\n';
    }
}

}  // namespace

std::string format_ply(const PointCloud& cloud) {
    std::string out = "ply\nformat ascii 1.0\n";
    append_vertex_header(out, cloud.size(), cloud.has_normals(), cloud.has_ao());
    out += "end_header\n";
    append_vertices(out, cloud.positions, cloud.normals, cloud.ao);
    return out;
}

std::string format_ply(const TriangleMesh& mesh) {
    std::string out = "ply\nformat ascii 1.0\n";
    append_vertex_header(out, mesh.vertices.size(), mesh.vertex_normals.has_value(),
                         mesh.vertex_ao.has_value());
    out += "element face " + std::to_string(mesh.faces.size()) + "\n";
    out += "property list uchar int vertex_indices\nend_header\n";
    append_vertices(out, mesh.vertices, mesh.vertex_normals, mesh.vertex_ao);
    for (const auto& f : mesh.faces)
        out += "3 " + std::to_string(f[0]) + ' ' + std::to_string(f[1]) + ' ' + std::to_string(f[2]) + '\n';
    return out;
}

void save_point_cloud(const std::filesystem::path& path, const PointCloud& cloud) {
    write_text_file(path, format_ply(cloud));
}

void save_mesh(const std::filesystem::path& path, const TriangleMesh& mesh) {
    write_text_file(path, format_ply(mesh));
}

}  // namespace earscan
