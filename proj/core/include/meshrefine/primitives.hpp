#pragma once

#include <vector>

#include "meshrefine/geometry.hpp"
#include "meshrefine/rng.hpp"

namespace meshrefine {

// Icosphere of the given radius centered at the origin.
// subdivisions = 0 gives the icosahedron (12 v / 20 f); each level quadruples
// the face count (1 -> 80 f, 2 -> 320 f, 3 -> 1280 f, 4 -> 5120 f).
Mesh make_icosphere(int subdivisions, double radius = 0.5);

// Axis-aligned cube [-half, half]^3 with each face split into an n x n quad
// grid (triangulated). n = 1 gives the plain 12-triangle cube.
Mesh make_cube(int n = 1, double half = 0.5);

// Flat z=0 grid over [-half, half]^2, (n+1)^2 vertices.
Mesh make_grid(int n, double half = 0.5);

// Real spherical harmonic Y_l^m evaluated at a unit direction.
double real_spherical_harmonic(int l, int m, const Vec3& unit_dir);

// Displaces every vertex radially by a seeded random mix of real spherical
// harmonics over the given bands, rescaled so max |displacement| = amplitude.
Mesh displace_radial_harmonics(const Mesh& mesh, const std::vector<int>& bands,
                               double amplitude, uint64_t seed);

// Displaces vertices along their normals by seeded Gaussian dents/bumps.
Mesh displace_gaussian_dents(const Mesh& mesh, int count, double amplitude,
                             double sigma, uint64_t seed);

}  // namespace meshrefine
