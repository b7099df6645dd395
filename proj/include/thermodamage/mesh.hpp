#pragma once

#include "thermodamage/types.hpp"

#include <array>
#include <optional>
#include <set>
#include <vector>

namespace thermodamage {

// ==== mesh ==================================================================
//
// Conforming P1 triangulations of a polygonal domain. Triangles are stored
// counterclockwise (strictly positive signed area); every edge shared by a
// single triangle must appear in the boundary list with a label.

enum class BoundaryLabel { Dirichlet, Neumann };

// Sides of the generated unit square, used for labeling and load selectors.
enum class Side : int { Left = 0, Right = 1, Bottom = 2, Top = 3 };

Side side_from_string(const std::string& s);
std::string side_to_string(Side s);

struct BoundaryEdge {
    int a = -1, b = -1;              // endpoint node ids
    BoundaryLabel label = BoundaryLabel::Neumann;
    Vec2 normal = Vec2::Zero();      // unit outward normal (derived)
    double length = 0.0;             // derived
    int side = -1;                   // 0..3 for generated unit squares, else -1
};

struct Mesh2D {
    std::vector<Vec2> nodes;
    std::vector<std::array<int, 3>> triangles;   // CCW node ids
    std::vector<BoundaryEdge> boundary;

    // derived per-triangle data, filled by finalize()
    std::vector<double> area;                    // strictly positive
    std::vector<std::array<Vec2, 3>> grad;       // hat-function gradients

    int n_nodes() const { return static_cast<int>(nodes.size()); }
    int n_triangles() const { return static_cast<int>(triangles.size()); }
    double total_area() const;

    // Validates connectivity, orientation, boundary completeness and labels;
    // computes areas, hat gradients, edge lengths and outward normals.
    // Throws ValidationError on any defect. If repair_orientation is set,
    // clockwise (negative-area) triangles are fixed by swapping two indices
    // and the repair count is returned instead of throwing.
    int finalize(bool repair_orientation = false);
};

// Structured n x n unit-square mesh (2*n^2 CCW triangles). Boundary edges on
// the listed sides are labeled Dirichlet, the rest Neumann.
Mesh2D generate_unit_square(int n, const std::set<Side>& dirichlet_sides);

// Plain-text mesh file:
//   NODES k        followed by k lines  "x y"
//   TRIANGLES m    followed by m lines  "i j k"   (0-based node ids)
//   BOUNDARY b     followed by b lines  "a b LABEL"  (LABEL: DIRICHLET|NEUMANN)
// '#' starts a comment; blank lines are ignored.
Mesh2D load_mesh(const std::string& path, bool repair_orientation = false,
                 int* repairs_out = nullptr);
void save_mesh(const Mesh2D& mesh, const std::string& path);

// ==== degrees of freedom ====================================================
//
// Scalar fields (damage, temperature) use one dof per node, unconstrained.
// The displacement field uses two dofs per node (node i -> 2i, 2i+1); both
// components of every node touching a Dirichlet edge are eliminated.

struct DofMap {
    explicit DofMap(const Mesh2D& mesh);

    int n_nodes = 0;
    int n_full = 0;                   // 2 * n_nodes
    int n_free = 0;
    std::vector<bool> node_constrained;
    std::vector<int> full_to_free;    // -1 on constrained dofs
    std::vector<int> free_to_full;

    // Expand a free-dof vector to full length with zeros on Dirichlet dofs.
    Vec expand(const Vec& free_vec) const;
    // Restrict a full-length vector to the free dofs.
    Vec restrict_free(const Vec& full_vec) const;
};

} // namespace thermodamage
