#include "salforge/mesh_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "salforge/errors.hpp"
#include "salforge/io_util.hpp"

namespace salforge::geom {

namespace {

[[noreturn]] void fail(const std::filesystem::path& path, std::size_t line,
                       const std::string& what) {
    throw ParseError(path.string() + ":" + std::to_string(line) + ": " + what);
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

double parse_double(const std::string& s, const std::filesystem::path& path, std::size_t line) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        fail(path, line, "bad number '" + s + "'");
    }
}

long parse_long(const std::string& s, const std::filesystem::path& path, std::size_t line) {
    long v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        fail(path, line, "bad integer '" + s + "'");
    return v;
}

// ---- OBJ --------------------------------------------------------------------

TriangleSoup load_obj(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open file: " + path.string());
    TriangleSoup soup;
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(f, raw)) {
        ++lineno;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        const auto toks = split_ws(raw);
        if (toks.empty() || toks[0][0] == '#') continue;
        if (toks[0] == "v") {
            if (toks.size() < 4) fail(path, lineno, "vertex needs 3 coordinates");
            soup.vertices.push_back({parse_double(toks[1], path, lineno),
                                     parse_double(toks[2], path, lineno),
                                     parse_double(toks[3], path, lineno)});
        } else if (toks[0] == "f") {
            if (toks.size() < 4) fail(path, lineno, "face needs at least 3 vertices");
            std::vector<int> idx;
            for (std::size_t i = 1; i < toks.size(); ++i) {
                // forms: i, i/t, i//n, i/t/n; only the vertex index matters
                const std::string head = toks[i].substr(0, toks[i].find('/'));
                const long raw_idx = parse_long(head, path, lineno);
                if (raw_idx == 0) fail(path, lineno, "vertex index 0 (OBJ indices are 1-based)");
                long resolved = raw_idx > 0
                                    ? raw_idx - 1
                                    : static_cast<long>(soup.vertices.size()) + raw_idx;
                if (resolved < 0 || resolved >= static_cast<long>(soup.vertices.size()))
                    fail(path, lineno, "vertex index " + std::to_string(raw_idx) +
                                           " out of range (have " +
                                           std::to_string(soup.vertices.size()) + " vertices)");
                idx.push_back(static_cast<int>(resolved));
            }
            for (std::size_t i = 1; i + 1 < idx.size(); ++i)
                soup.triangles.push_back({idx[0], idx[i], idx[i + 1]});
        }
        // all other directives (vn, vt, o, g, s, usemtl, ...) are ignored
    }
    soup.validate();
    return soup;
}

// ---- PLY --------------------------------------------------------------------

struct PlyProperty {
    std::string type;        // scalar type, or list count type
    std::string list_elem;   // non-empty for list properties
    std::string name;
};

struct PlyElement {
    std::string name;
    std::size_t count = 0;
    std::vector<PlyProperty> props;
};

std::size_t ply_type_size(const std::string& t, const std::filesystem::path& path,
                          std::size_t line) {
    if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
    if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
    if (t == "int" || t == "uint" || t == "int32" || t == "uint32" || t == "float" ||
        t == "float32")
        return 4;
    if (t == "double" || t == "float64" || t == "int64" || t == "uint64") return 8;
    fail(path, line, "unknown PLY type '" + t + "'");
}

double ply_read_ascii_scalar(std::istringstream& is, const std::filesystem::path& path,
                             std::size_t line) {
    std::string tok;
    if (!(is >> tok)) fail(path, line, "missing value");
    return parse_double(tok, path, line);
}

double ply_decode(const char* p, const std::string& t) {
    auto load = [&]<typename T>() {
        T v;
        std::memcpy(&v, p, sizeof(T));
        return static_cast<double>(v);
    };
    if (t == "char" || t == "int8") return load.operator()<std::int8_t>();
    if (t == "uchar" || t == "uint8") return load.operator()<std::uint8_t>();
    if (t == "short" || t == "int16") return load.operator()<std::int16_t>();
    if (t == "ushort" || t == "uint16") return load.operator()<std::uint16_t>();
    if (t == "int" || t == "int32") return load.operator()<std::int32_t>();
    if (t == "uint" || t == "uint32") return load.operator()<std::uint32_t>();
    if (t == "float" || t == "float32") return load.operator()<float>();
    if (t == "int64") return load.operator()<std::int64_t>();
    if (t == "uint64") return load.operator()<std::uint64_t>();
    return load.operator()<double>();
}

TriangleSoup load_ply(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open file: " + path.string());
    std::string raw;
    std::size_t lineno = 0;
    auto next_line = [&]() {
        if (!std::getline(f, raw)) fail(path, lineno, "unexpected end of header");
        ++lineno;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    };

    next_line();
    if (raw != "ply") fail(path, lineno, "not a PLY file (missing 'ply' magic)");
    next_line();
    auto fmt = split_ws(raw);
    if (fmt.size() != 3 || fmt[0] != "format") fail(path, lineno, "expected format line");
    bool binary;
    if (fmt[1] == "ascii") binary = false;
    else if (fmt[1] == "binary_little_endian") binary = true;
    else fail(path, lineno, "unsupported PLY format '" + fmt[1] + "'");

    std::vector<PlyElement> elements;
    for (;;) {
        next_line();
        const auto toks = split_ws(raw);
        if (toks.empty() || toks[0] == "comment" || toks[0] == "obj_info") continue;
        if (toks[0] == "end_header") break;
        if (toks[0] == "element") {
            if (toks.size() != 3) fail(path, lineno, "malformed element line");
            PlyElement e;
            e.name = toks[1];
            e.count = static_cast<std::size_t>(parse_long(toks[2], path, lineno));
            if (e.name != "vertex" && e.name != "face")
                fail(path, lineno, "unsupported element '" + e.name + "'");
            elements.push_back(std::move(e));
        } else if (toks[0] == "property") {
            if (elements.empty()) fail(path, lineno, "property before any element");
            PlyProperty p;
            if (toks.size() >= 2 && toks[1] == "list") {
                if (toks.size() != 5) fail(path, lineno, "malformed list property");
                p.type = toks[2];
                p.list_elem = toks[3];
                p.name = toks[4];
            } else {
                if (toks.size() != 3) fail(path, lineno, "malformed property");
                p.type = toks[1];
                p.name = toks[2];
            }
            elements.back().props.push_back(std::move(p));
        } else {
            fail(path, lineno, "unexpected header line '" + toks[0] + "'");
        }
    }

    TriangleSoup soup;
    std::size_t body_offset = static_cast<std::size_t>(f.tellg());
    for (const PlyElement& e : elements) {
        const bool is_vertex = e.name == "vertex";
        int xi = -1, yi = -1, zi = -1;
        if (is_vertex) {
            for (std::size_t i = 0; i < e.props.size(); ++i) {
                if (e.props[i].name == "x") xi = static_cast<int>(i);
                if (e.props[i].name == "y") yi = static_cast<int>(i);
                if (e.props[i].name == "z") zi = static_cast<int>(i);
            }
            if (xi < 0 || yi < 0 || zi < 0)
                fail(path, lineno, "vertex element lacks x/y/z properties");
        }
        for (std::size_t row = 0; row < e.count; ++row) {
            std::vector<double> scalars(e.props.size(), 0.0);
            std::vector<long> list;
            if (binary) {
                for (std::size_t pi = 0; pi < e.props.size(); ++pi) {
                    const PlyProperty& p = e.props[pi];
                    char buf[8];
                    auto read_n = [&](std::size_t n) {
                        if (!f.read(buf, static_cast<std::streamsize>(n)))
                            throw IntegrityError(path.string() + ": truncated PLY body at offset " +
                                                 std::to_string(body_offset));
                        body_offset += n;
                    };
                    if (!p.list_elem.empty()) {
                        read_n(ply_type_size(p.type, path, lineno));
                        const long n = static_cast<long>(ply_decode(buf, p.type));
                        for (long k = 0; k < n; ++k) {
                            read_n(ply_type_size(p.list_elem, path, lineno));
                            list.push_back(static_cast<long>(ply_decode(buf, p.list_elem)));
                        }
                    } else {
                        read_n(ply_type_size(p.type, path, lineno));
                        scalars[pi] = ply_decode(buf, p.type);
                    }
                }
            } else {
                next_line();
                std::istringstream is(raw);
                for (std::size_t pi = 0; pi < e.props.size(); ++pi) {
                    const PlyProperty& p = e.props[pi];
                    if (!p.list_elem.empty()) {
                        const long n =
                            static_cast<long>(ply_read_ascii_scalar(is, path, lineno));
                        for (long k = 0; k < n; ++k)
                            list.push_back(
                                static_cast<long>(ply_read_ascii_scalar(is, path, lineno)));
                    } else {
                        scalars[pi] = ply_read_ascii_scalar(is, path, lineno);
                    }
                }
            }
            if (is_vertex) {
                soup.vertices.push_back({scalars[xi], scalars[yi], scalars[zi]});
            } else if (!list.empty()) {
                for (long v : list)
                    if (v < 0 || v >= static_cast<long>(soup.vertices.size()))
                        fail(path, lineno, "face index " + std::to_string(v) + " out of range");
                for (std::size_t i = 1; i + 1 < list.size(); ++i)
                    soup.triangles.push_back({static_cast<int>(list[0]),
                                              static_cast<int>(list[i]),
                                              static_cast<int>(list[i + 1])});
            }
        }
    }
    soup.validate();
    return soup;
}

std::string lower_ext(const std::filesystem::path& path) {
    std::string e = path.extension().string();
    std::transform(e.begin(), e.end(), e.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return e;
}

}  // namespace

TriangleSoup load_mesh(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw Error("mesh file not found: " + path.string());
    const std::string ext = lower_ext(path);
    if (ext == ".obj") return load_obj(path);
    if (ext == ".ply") return load_ply(path);
    throw ParseError("unsupported mesh extension '" + ext + "' (want .obj or .ply): " +
                     path.string());
}

void save_obj(const std::filesystem::path& path, const TriangleSoup& soup,
              const std::vector<std::string>& comments) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw Error("cannot open file for writing: " + path.string());
    for (const std::string& c : comments) f << "# " << c << "\n";
    char buf[96];
    for (const Vec3& v : soup.vertices) {
        std::snprintf(buf, sizeof(buf), "v %.17g %.17g %.17g\n", v.x, v.y, v.z);
        f << buf;
    }
    for (const auto& t : soup.triangles)
        f << "f " << t[0] + 1 << " " << t[1] + 1 << " " << t[2] + 1 << "\n";
    if (!f) throw Error("write failed: " + path.string());
}

void save_ply(const std::filesystem::path& path, const TriangleSoup& soup, bool binary,
              const std::vector<std::string>& comments) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open file for writing: " + path.string());
    f << "ply\nformat " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n";
    for (const std::string& c : comments) f << "comment " << c << "\n";
    f << "element vertex " << soup.vertices.size() << "\n";
    f << "property float x\nproperty float y\nproperty float z\n";
    f << "element face " << soup.triangles.size() << "\n";
    f << "property list uchar int vertex_indices\n";
    f << "end_header\n";
    if (binary) {
        for (const Vec3& v : soup.vertices) {
            const float c[3] = {static_cast<float>(v.x), static_cast<float>(v.y),
                                static_cast<float>(v.z)};
            f.write(reinterpret_cast<const char*>(c), 12);
        }
        for (const auto& t : soup.triangles) {
            const unsigned char n = 3;
            const std::int32_t idx[3] = {t[0], t[1], t[2]};
            f.write(reinterpret_cast<const char*>(&n), 1);
            f.write(reinterpret_cast<const char*>(idx), 12);
        }
    } else {
        char buf[64];
        for (const Vec3& v : soup.vertices) {
            std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g\n", v.x, v.y, v.z);
            f << buf;
        }
        for (const auto& t : soup.triangles)
            f << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
    }
    if (!f) throw Error("write failed: " + path.string());
}

}  // namespace salforge::geom
