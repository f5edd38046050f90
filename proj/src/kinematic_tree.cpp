#include "revolver/kinematic_tree.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace revolver {

int KinematicTree::root() const {
    for (int i = 0; i < node_count(); ++i)
        if (nodes[i].parent < 0) return i;
    return -1;
}

int KinematicTree::find_node(const std::string& name) const {
    for (int i = 0; i < node_count(); ++i)
        if (nodes[i].name == name) return i;
    return -1;
}

int KinematicTree::joint_of(int node) const {
    for (int j = 0; j < joint_count(); ++j)
        if (joints[j].child == node) return j;
    return -1;
}

std::vector<std::vector<int>> KinematicTree::children() const {
    std::vector<std::vector<int>> ch(nodes.size());
    for (int i = 0; i < node_count(); ++i)
        if (nodes[i].parent >= 0) ch[nodes[i].parent].push_back(i);
    return ch;
}

std::vector<int> KinematicTree::topological_order() const {
    auto ch = children();
    std::vector<int> order;
    order.reserve(nodes.size());
    std::vector<int> stack{root()};
    while (!stack.empty()) {
        int n = stack.back();
        stack.pop_back();
        order.push_back(n);
        for (auto it = ch[n].rbegin(); it != ch[n].rend(); ++it) stack.push_back(*it);
    }
    return order;
}

std::vector<int> KinematicTree::subtree_sizes() const {
    auto order = topological_order();
    std::vector<int> size(nodes.size(), 1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        int p = nodes[*it].parent;
        if (p >= 0) size[p] += size[*it];
    }
    return size;
}

std::vector<int> KinematicTree::depths() const {
    auto order = topological_order();
    std::vector<int> d(nodes.size(), 0);
    for (int n : order) {
        int p = nodes[n].parent;
        d[n] = p >= 0 ? d[p] + 1 : 0;
    }
    return d;
}

void KinematicTree::validate() const {
    if (nodes.empty()) throw std::invalid_argument("tree has no bodies");

    int roots = 0;
    for (const auto& b : nodes) {
        if (b.parent < 0) ++roots;
        if (b.parent >= node_count())
            throw std::invalid_argument("body '" + b.name + "': parent index out of range");
        if (b.mass < 0.0) throw std::invalid_argument("body '" + b.name + "': negative mass");
        for (double l : b.length)
            if (!std::isfinite(l))
                throw std::invalid_argument("body '" + b.name + "': non-finite length");
    }
    if (roots == 0) throw std::invalid_argument("cycle detected: no root body");
    if (roots > 1) throw std::invalid_argument("multiple roots");

    for (int i = 0; i < node_count(); ++i)
        for (int k = i + 1; k < node_count(); ++k)
            if (nodes[i].name == nodes[k].name)
                throw std::invalid_argument("duplicate body name '" + nodes[i].name + "'");

    // Reachability from the root doubles as the cycle check.
    if (static_cast<int>(topological_order().size()) != node_count())
        throw std::invalid_argument("cycle detected: not all bodies reachable from root");

    if (joint_count() != node_count() - 1)
        throw std::invalid_argument("expected " + std::to_string(node_count() - 1) +
                                    " joints, got " + std::to_string(joint_count()));

    std::vector<int> seen(nodes.size(), 0);
    for (const auto& j : joints) {
        if (j.child < 0 || j.child >= node_count())
            throw std::invalid_argument("joint child index out of range");
        if (nodes[j.child].parent < 0)
            throw std::invalid_argument("joint attached to the root body");
        if (++seen[j.child] > 1)
            throw std::invalid_argument("body '" + nodes[j.child].name + "' has two joints");
        if (j.damping < 0.0)
            throw std::invalid_argument("joint of '" + nodes[j.child].name + "': negative damping");
        if (j.range_lo > j.range_hi)
            throw std::invalid_argument("joint of '" + nodes[j.child].name + "': range lo > hi");
    }
}

bool trees_identical(const KinematicTree& a, const KinematicTree& b, double tol) {
    if (a.node_count() != b.node_count() || a.joint_count() != b.joint_count()) return false;
    auto close = [tol](double x, double y) { return std::abs(x - y) <= tol; };
    for (int i = 0; i < a.node_count(); ++i) {
        const Body &x = a.nodes[i], &y = b.nodes[i];
        if (x.name != y.name || x.parent != y.parent) return false;
        if (!close(x.mass, y.mass)) return false;
        for (int k = 0; k < 3; ++k)
            if (!close(x.length[k], y.length[k]) || !close(x.inertia[k], y.inertia[k])) return false;
    }
    for (int j = 0; j < a.joint_count(); ++j) {
        const Joint &x = a.joints[j], &y = b.joints[j];
        if (x.child != y.child) return false;
        if (!close(x.motor, y.motor) || !close(x.damping, y.damping)) return false;
        if (!close(x.range_lo, y.range_lo) || !close(x.range_hi, y.range_hi)) return false;
        for (int k = 0; k < 3; ++k)
            if (!close(x.axis[k], y.axis[k])) return false;
    }
    return true;
}

}  // namespace revolver
