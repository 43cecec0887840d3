#pragma once

#include "p2m/mesh.hpp"

namespace p2m::shapes {

/// Regular tetrahedron with outward winding.
Mesh tetrahedron();

/// Axis-aligned cube [-s, s]^3 split into 12 triangles.
Mesh cube(double half_extent = 1.0);

/// Unit icosahedron (vertices on the unit sphere).
Mesh icosahedron();

/// Icosahedron subdivided `level` times and projected to the sphere of `radius`.
/// Level n has 20 * 4^n faces.
Mesh icosphere(int level, double radius = 1.0);

/// Torus in the xy-plane around the z axis, sampled on a (major x minor) grid.
Mesh torus(double major_radius, double minor_radius, int major_segments, int minor_segments);

/// Sphere mapped along x: elongated by `length` and pinched at the middle by a
/// Gaussian waist. Concave, genus 0.
Mesh peanut(int level = 4, double length = 2.2, double pinch = 0.6, double waist_width = 0.5);

/// Cube with a deep square pocket drilled into its top face.
Mesh cup(int resolution = 40);

}  // namespace p2m::shapes
