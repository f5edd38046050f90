#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

namespace revolver {

using Vec3 = std::array<double, 3>;

inline double norm3(const Vec3& v) {
    return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
}

struct Body {
    std::string name;
    int parent = -1;  // -1 for the root
    Vec3 length{0.0, 0.0, 0.0};
    double mass = 0.0;
    Vec3 inertia{0.0, 0.0, 0.0};
};

struct Joint {
    int child = -1;  // index of the body this joint drives
    Vec3 axis{0.0, 0.0, 1.0};
    double motor = 0.0;
    double damping = 0.0;
    double range_lo = 0.0;
    double range_hi = 0.0;
};

// Rooted tree of bodies; every non-root body is driven by exactly one joint.
struct KinematicTree {
    std::vector<Body> nodes;
    std::vector<Joint> joints;

    int node_count() const { return static_cast<int>(nodes.size()); }
    int joint_count() const { return static_cast<int>(joints.size()); }

    int root() const;
    int find_node(const std::string& name) const;  // -1 if absent

    // joint index driving body `node`, -1 for the root
    int joint_of(int node) const;

    std::vector<std::vector<int>> children() const;
    std::vector<int> topological_order() const;  // parents before children
    std::vector<int> subtree_sizes() const;
    std::vector<int> depths() const;

    // Throws std::invalid_argument on any violated structural invariant
    // (single root, acyclic, non-negative masses/lengths/damping, ordered
    // joint ranges, one joint per non-root body).
    void validate() const;
};

bool trees_identical(const KinematicTree& a, const KinematicTree& b, double tol = 0.0);

}  // namespace revolver
