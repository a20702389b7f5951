// Writes a small menu of synthetic meshes for demos and smoke runs.

#include <cmath>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "salforge/geometry.hpp"
#include "salforge/mesh_io.hpp"

namespace fs = std::filesystem;
using namespace salforge;

int main(int argc, char** argv) {
    CLI::App app{"write synthetic demo meshes (icosphere, torus, ellipsoid, capsule-ish blend)"};
    std::string out_dir;
    int subdivisions = 3;
    app.add_option("--out-dir", out_dir, "output directory")->required();
    app.add_option("--subdivisions", subdivisions, "icosphere subdivision level")
        ->check(CLI::Range(0, 6));
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        fs::create_directories(out_dir);
        auto write = [&](const std::string& name, const geom::TriangleSoup& soup) {
            const fs::path p = fs::path(out_dir) / name;
            geom::save_obj(p, soup);
            std::cout << p.string() << ": " << soup.vertices.size() << " vertices, "
                      << soup.triangles.size() << " triangles\n";
        };

        write("icosphere.obj", geom::make_icosphere(subdivisions));
        write("torus.obj", geom::make_torus(0.7, 0.25, 64, 32));

        geom::TriangleSoup ellipsoid = geom::make_icosphere(subdivisions);
        for (auto& v : ellipsoid.vertices) {
            v.x *= 1.0;
            v.y *= 0.6;
            v.z *= 0.8;
        }
        write("ellipsoid.obj", ellipsoid);

        // a gently bumped sphere: radius modulated by a low-order harmonic
        geom::TriangleSoup bumpy = geom::make_icosphere(std::max(3, subdivisions));
        for (auto& v : bumpy.vertices) {
            const double r = 1.0 + 0.15 * std::sin(3.0 * v.x) * std::cos(2.0 * v.y);
            v = v * r;
        }
        write("bumpy.obj", bumpy);
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
