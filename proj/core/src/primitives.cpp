#include "meshrefine/primitives.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "meshrefine/error.hpp"

namespace meshrefine {

Mesh make_icosphere(int subdivisions, double radius) {
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> verts = {
        {-1, phi, 0}, {1, phi, 0},  {-1, -phi, 0}, {1, -phi, 0},
        {0, -1, phi}, {0, 1, phi},  {0, -1, -phi}, {0, 1, -phi},
        {phi, 0, -1}, {phi, 0, 1},  {-phi, 0, -1}, {-phi, 0, 1},
    };
    std::vector<Face> faces = {
        {{0, 11, 5}}, {{0, 5, 1}},  {{0, 1, 7}},   {{0, 7, 10}}, {{0, 10, 11}},
        {{1, 5, 9}},  {{5, 11, 4}}, {{11, 10, 2}}, {{10, 7, 6}}, {{7, 1, 8}},
        {{3, 9, 4}},  {{3, 4, 2}},  {{3, 2, 6}},   {{3, 6, 8}},  {{3, 8, 9}},
        {{4, 9, 5}},  {{2, 4, 11}}, {{6, 2, 10}},  {{8, 6, 7}},  {{9, 8, 1}},
    };
    for (Vec3& v : verts) v = normalized(v) * radius;

    for (int level = 0; level < subdivisions; ++level) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            auto key = std::minmax(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            Vec3 m = normalized(verts[a] + verts[b]) * radius;
            verts.push_back(m);
            int idx = int(verts.size()) - 1;
            midpoint.emplace(key, idx);
            return idx;
        };
        std::vector<Face> next;
        next.reserve(faces.size() * 4);
        for (const Face& f : faces) {
            int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
            next.push_back({{f[0], ab, ca}});
            next.push_back({{f[1], bc, ab}});
            next.push_back({{f[2], ca, bc}});
            next.push_back({{ab, bc, ca}});
        }
        faces = std::move(next);
    }
    return Mesh(std::move(verts), std::move(faces));
}

Mesh make_cube(int n, double half) {
    if (n < 1) throw_usage("cube subdivision must be >= 1");
    std::vector<Vec3> verts;
    std::vector<Face> faces;
    std::map<std::array<long, 3>, int> dedup;  // lattice coords in units of half/n

    auto vertex_at = [&](const Vec3& p) {
        std::array<long, 3> key = {std::lround(p.x * 2 * n / half), std::lround(p.y * 2 * n / half),
                                   std::lround(p.z * 2 * n / half)};
        auto it = dedup.find(key);
        if (it != dedup.end()) return it->second;
        verts.push_back(p);
        dedup.emplace(key, int(verts.size()) - 1);
        return int(verts.size()) - 1;
    };

    // axis u, v span the face; w is the outward axis with sign s.
    auto add_face_grid = [&](int w, double s) {
        int u = (w + 1) % 3, v = (w + 2) % 3;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                auto corner = [&](int di, int dj) {
                    Vec3 p;
                    p[w] = s * half;
                    p[u] = -half + 2.0 * half * (i + di) / n;
                    p[v] = -half + 2.0 * half * (j + dj) / n;
                    return vertex_at(p);
                };
                int c00 = corner(0, 0), c10 = corner(1, 0), c01 = corner(0, 1), c11 = corner(1, 1);
                if (s > 0) {
                    faces.push_back({{c00, c10, c11}});
                    faces.push_back({{c00, c11, c01}});
                } else {
                    faces.push_back({{c00, c11, c10}});
                    faces.push_back({{c00, c01, c11}});
                }
            }
        }
    };
    for (int w = 0; w < 3; ++w) {
        add_face_grid(w, +1.0);
        add_face_grid(w, -1.0);
    }
    return Mesh(std::move(verts), std::move(faces));
}

Mesh make_grid(int n, double half) {
    if (n < 1) throw_usage("grid subdivision must be >= 1");
    std::vector<Vec3> verts;
    std::vector<Face> faces;
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i)
            verts.push_back({-half + 2.0 * half * i / n, -half + 2.0 * half * j / n, 0.0});
    auto at = [&](int i, int j) { return j * (n + 1) + i; };
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            faces.push_back({{at(i, j), at(i + 1, j), at(i + 1, j + 1)}});
            faces.push_back({{at(i, j), at(i + 1, j + 1), at(i, j + 1)}});
        }
    return Mesh(std::move(verts), std::move(faces));
}

namespace {

double factorial_ratio(int num_from, int den_to) {
    // num_from! / den_to! for num_from >= den_to
    double r = 1.0;
    for (int k = den_to + 1; k <= num_from; ++k) r *= k;
    return r;
}

// Associated Legendre P_l^m(x) for m >= 0 via the standard recurrences.
double assoc_legendre(int l, int m, double x) {
    double pmm = 1.0;
    if (m > 0) {
        double somx2 = std::sqrt(std::max(0.0, (1.0 - x) * (1.0 + x)));
        double fact = 1.0;
        for (int i = 1; i <= m; ++i) {
            pmm *= -fact * somx2;
            fact += 2.0;
        }
    }
    if (l == m) return pmm;
    double pmmp1 = x * (2.0 * m + 1.0) * pmm;
    if (l == m + 1) return pmmp1;
    double pll = 0.0;
    for (int ll = m + 2; ll <= l; ++ll) {
        pll = ((2.0 * ll - 1.0) * x * pmmp1 - (ll + m - 1.0) * pmm) / (ll - m);
        pmm = pmmp1;
        pmmp1 = pll;
    }
    return pll;
}

}  // namespace

double real_spherical_harmonic(int l, int m, const Vec3& d) {
    // Polar angle measured from +y (the up axis used throughout).
    double ct = std::clamp(d.y, -1.0, 1.0);
    double phi = std::atan2(d.z, d.x);
    int am = std::abs(m);
    double norm_lm = std::sqrt((2.0 * l + 1.0) / (4.0 * M_PI) / factorial_ratio(l + am, l - am));
    double p = assoc_legendre(l, am, ct);
    if (m == 0) return norm_lm * p;
    double sqrt2 = std::sqrt(2.0);
    if (m > 0) return sqrt2 * norm_lm * p * std::cos(am * phi);
    return sqrt2 * norm_lm * p * std::sin(am * phi);
}

Mesh displace_radial_harmonics(const Mesh& mesh, const std::vector<int>& bands,
                               double amplitude, uint64_t seed) {
    Rng rng(seed);
    struct Term {
        int l, m;
        double coef;
    };
    std::vector<Term> terms;
    for (int l : bands)
        for (int m = -l; m <= l; ++m) terms.push_back({l, m, rng.uniform(-1.0, 1.0)});

    std::vector<Vec3> verts = mesh.vertices();
    std::vector<double> disp(verts.size(), 0.0);
    double max_abs = 0.0;
    for (size_t i = 0; i < verts.size(); ++i) {
        Vec3 dir = normalized(verts[i]);
        double s = 0.0;
        for (const Term& t : terms) s += t.coef * real_spherical_harmonic(t.l, t.m, dir);
        disp[i] = s;
        max_abs = std::max(max_abs, std::abs(s));
    }
    if (max_abs > 0) {
        for (size_t i = 0; i < verts.size(); ++i)
            verts[i] += normalized(verts[i]) * (disp[i] / max_abs * amplitude);
    }
    return Mesh(std::move(verts), mesh.faces());
}

Mesh displace_gaussian_dents(const Mesh& mesh, int count, double amplitude,
                             double sigma, uint64_t seed) {
    Rng rng(seed);
    std::vector<Vec3> verts = mesh.vertices();
    std::vector<Vec3> normals = vertex_normals(mesh);
    struct Dent {
        Vec3 center;
        double sign;
    };
    std::vector<Dent> dents;
    for (int k = 0; k < count; ++k) {
        int vi = int(rng.next_below(verts.size()));
        dents.push_back({verts[vi], rng.next_double() < 0.5 ? -1.0 : 1.0});
    }
    std::vector<Vec3> out = verts;
    for (size_t i = 0; i < verts.size(); ++i) {
        double s = 0.0;
        for (const Dent& d : dents) {
            double r2 = norm2(verts[i] - d.center);
            s += d.sign * std::exp(-r2 / (2.0 * sigma * sigma));
        }
        out[i] += normals[i] * (amplitude * s);
    }
    return Mesh(std::move(out), mesh.faces());
}

}  // namespace meshrefine
