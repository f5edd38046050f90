#include "revolver/morphology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

namespace revolver {

namespace {

double sq(double x) { return x * x; }

double body_l2sq(const Body& a, const Body& b) {
    double s = sq(a.mass - b.mass);
    for (int k = 0; k < 3; ++k)
        s += sq(a.length[k] - b.length[k]) + sq(a.inertia[k] - b.inertia[k]);
    return s;
}

double joint_l2sq(const Joint& a, const Joint& b) {
    return sq(a.motor - b.motor) + sq(a.damping - b.damping) +
           sq(a.range_lo - b.range_lo) + sq(a.range_hi - b.range_hi);
}

// A tree re-rooted at an arbitrary node. Children are sorted by name so the
// search is independent of declaration order.
struct RootedView {
    const KinematicTree* tree = nullptr;
    int root = -1;
    std::vector<int> parent;
    std::vector<std::vector<int>> kids;
    std::vector<int> edge_joint;  // joint on the edge to the parent, -1 at root
    std::vector<int> sub_size;
    std::vector<double> sub_param_sq;

    const Body& body(int n) const { return tree->nodes[n]; }
    const Joint& joint_above(int n) const { return tree->joints[edge_joint[n]]; }
};

RootedView make_rooted(const KinematicTree& t, int root) {
    int n = t.node_count();
    std::vector<std::vector<std::pair<int, int>>> adj(n);  // (neighbor, joint)
    for (int j = 0; j < t.joint_count(); ++j) {
        int c = t.joints[j].child;
        int p = t.nodes[c].parent;
        adj[c].push_back({p, j});
        adj[p].push_back({c, j});
    }

    RootedView rv;
    rv.tree = &t;
    rv.root = root;
    rv.parent.assign(n, -1);
    rv.kids.assign(n, {});
    rv.edge_joint.assign(n, -1);
    rv.sub_size.assign(n, 1);
    rv.sub_param_sq.assign(n, 0.0);

    std::vector<int> order;
    std::vector<int> stack{root};
    std::vector<char> seen(n, 0);
    seen[root] = 1;
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        order.push_back(u);
        for (auto [v, j] : adj[u]) {
            if (seen[v]) continue;
            seen[v] = 1;
            rv.parent[v] = u;
            rv.edge_joint[v] = j;
            rv.kids[u].push_back(v);
            stack.push_back(v);
        }
    }
    for (auto& ks : rv.kids)
        std::sort(ks.begin(), ks.end(),
                  [&](int a, int b) { return t.nodes[a].name < t.nodes[b].name; });

    Body zero_body;
    Joint zero_joint;
    zero_joint.axis = {0, 0, 0};
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        int u = *it;
        double s = body_l2sq(t.nodes[u], zero_body);
        if (rv.edge_joint[u] >= 0) s += joint_l2sq(rv.joint_above(u), zero_joint);
        rv.sub_param_sq[u] += s;
        int p = rv.parent[u];
        if (p >= 0) {
            rv.sub_size[p] += rv.sub_size[u];
            rv.sub_param_sq[p] += rv.sub_param_sq[u];
        }
    }
    return rv;
}

// Matching cost, compared lexicographically: added-node count first, then the
// squared L2 distance between paired parameters.
struct Cost {
    long added = 0;
    double l2 = 0.0;
    Cost operator+(const Cost& o) const { return {added + o.added, l2 + o.l2}; }
    bool operator<(const Cost& o) const {
        if (added != o.added) return added < o.added;
        return l2 < o.l2;
    }
};

struct PairChoice {
    Cost cost;
    std::vector<std::pair<int, int>> matched;  // child pairs (source node, target node)
    bool done = false;
};

constexpr int kExhaustiveChildLimit = 5;

class Matcher {
public:
    Matcher(const RootedView& s, const RootedView& t) : s_(s), t_(t) {
        memo_.assign(s.parent.size() * t.parent.size(), PairChoice{});
    }

    const PairChoice& match(int u, int v) {
        PairChoice& pc = memo_[u * t_.parent.size() + v];
        if (pc.done) return pc;

        Cost base{0, body_l2sq(s_.body(u), t_.body(v))};
        if (s_.edge_joint[u] >= 0 && t_.edge_joint[v] >= 0)
            base.l2 += joint_l2sq(s_.joint_above(u), t_.joint_above(v));

        const auto& A = s_.kids[u];
        const auto& B = t_.kids[v];
        Cost best;
        std::vector<std::pair<int, int>> best_matched;
        if (std::max(A.size(), B.size()) <= kExhaustiveChildLimit) {
            best = exhaustive(A, B, best_matched);
        } else {
            best = greedy(A, B, best_matched);
        }
        pc.cost = base + best;
        pc.matched = std::move(best_matched);
        pc.done = true;
        return pc;
    }

    Cost unmatched_source(int a) const { return {s_.sub_size[a], s_.sub_param_sq[a]}; }
    Cost unmatched_target(int b) const { return {t_.sub_size[b], t_.sub_param_sq[b]}; }

private:
    // All injections of the smaller child list into the larger one; child lists
    // are name-sorted, so the first minimum found is the lexicographic choice.
    Cost exhaustive(const std::vector<int>& A, const std::vector<int>& B,
                    std::vector<std::pair<int, int>>& out) {
        Cost best{std::numeric_limits<long>::max() / 4, 0.0};
        std::vector<std::pair<int, int>> cur;
        std::vector<char> used(B.size(), 0);
        rec(A, B, 0, used, Cost{}, cur, best, out);
        return best;
    }

    void rec(const std::vector<int>& A, const std::vector<int>& B, size_t i,
             std::vector<char>& used, Cost acc, std::vector<std::pair<int, int>>& cur,
             Cost& best, std::vector<std::pair<int, int>>& out) {
        if (i == A.size()) {
            Cost total = acc;
            for (size_t k = 0; k < B.size(); ++k)
                if (!used[k]) total = total + unmatched_target(B[k]);
            if (total < best) {
                best = total;
                out = cur;
            }
            return;
        }
        bool any_free = false;
        for (size_t k = 0; k < B.size(); ++k) {
            if (used[k]) continue;
            any_free = true;
            used[k] = 1;
            cur.push_back({A[i], B[k]});
            rec(A, B, i + 1, used, acc + match(A[i], B[k]).cost, cur, best, out);
            cur.pop_back();
            used[k] = 0;
        }
        if (!any_free)
            rec2_tail(A, i, acc, cur, best, out);
    }

    // Source children beyond the target's arity are necessarily unmatched.
    void rec2_tail(const std::vector<int>& A, size_t i, Cost acc,
                   std::vector<std::pair<int, int>>& cur, Cost& best,
                   std::vector<std::pair<int, int>>& out) {
        Cost total = acc;
        for (size_t k = i; k < A.size(); ++k) total = total + unmatched_source(A[k]);
        if (total < best) {
            best = total;
            out = cur;
        }
    }

    // Fallback for very wide nodes: source children in subtree-size order each
    // take the cheapest remaining target child.
    Cost greedy(const std::vector<int>& A, const std::vector<int>& B,
                std::vector<std::pair<int, int>>& out) {
        std::vector<int> order = A;
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (s_.sub_size[a] != s_.sub_size[b]) return s_.sub_size[a] > s_.sub_size[b];
            return s_.body(a).name < s_.body(b).name;
        });
        std::vector<char> used(B.size(), 0);
        Cost total;
        for (int a : order) {
            int pick = -1;
            Cost pick_cost;
            for (size_t k = 0; k < B.size(); ++k) {
                if (used[k]) continue;
                Cost c = match(a, B[k]).cost;
                if (pick < 0 || c < pick_cost) {
                    pick = static_cast<int>(k);
                    pick_cost = c;
                }
            }
            if (pick < 0) {
                total = total + unmatched_source(a);
            } else {
                used[pick] = 1;
                out.push_back({a, B[pick]});
                total = total + pick_cost;
            }
        }
        for (size_t k = 0; k < B.size(); ++k)
            if (!used[k]) total = total + unmatched_target(B[k]);
        return total;
    }

    const RootedView& s_;
    const RootedView& t_;
    std::vector<PairChoice> memo_;
};

// Emits the two aligned augmented trees in canonical order.
class Builder {
public:
    Builder(const RootedView& s, const RootedView& t, Matcher& m,
            MorphologyCorrespondence& out)
        : s_(s), t_(t), m_(m), out_(out) {
        for (const auto& b : s.tree->nodes) used_src_names_.insert(b.name);
        for (const auto& b : t.tree->nodes) used_tgt_names_.insert(b.name);
        out_.source_node_map.assign(s.tree->node_count(), -1);
        out_.target_node_map.assign(t.tree->node_count(), -1);
        out_.source_joint_map.assign(s.tree->joint_count(), -1);
        out_.target_joint_map.assign(t.tree->joint_count(), -1);
    }

    void run() { emit_pair(s_.root, t_.root, -1); }

private:
    struct Child {
        enum Kind { Pair, SourceOnly, TargetOnly } kind;
        int a = -1, b = -1;
        std::string key;  // source-side name used for canonical ordering
    };

    std::string fresh_name(std::set<std::string>& used, const std::string& want) {
        if (!used.count(want)) {
            used.insert(want);
            return want;
        }
        for (int i = 2;; ++i) {
            std::string cand = want + "_" + std::to_string(i);
            if (!used.count(cand)) {
                used.insert(cand);
                return cand;
            }
        }
    }

    int emit_nodes(const Body& sb, const Body& tb, int parent) {
        int idx = out_.augmented_source.node_count();
        Body a = sb, b = tb;
        a.parent = parent;
        b.parent = parent;
        out_.augmented_source.nodes.push_back(a);
        out_.augmented_target.nodes.push_back(b);
        out_.node_pairs.push_back({idx, idx});
        return idx;
    }

    void emit_joints(const Joint& sj, const Joint& tj, int child) {
        Joint a = sj, b = tj;
        a.child = child;
        b.child = child;
        out_.augmented_source.joints.push_back(a);
        out_.augmented_target.joints.push_back(b);
    }

    void emit_children(const std::vector<Child>& children, int idx) {
        auto sorted = children;
        std::sort(sorted.begin(), sorted.end(), [](const Child& x, const Child& y) {
            if (x.key != y.key) return x.key < y.key;
            return x.kind < y.kind;
        });
        for (const auto& c : sorted) {
            switch (c.kind) {
                case Child::Pair: emit_pair(c.a, c.b, idx); break;
                case Child::SourceOnly: emit_source_only(c.a, idx); break;
                case Child::TargetOnly: emit_target_only(c.b, idx); break;
            }
        }
    }

    void emit_pair(int u, int v, int parent) {
        int idx = emit_nodes(s_.body(u), t_.body(v), parent);
        if (parent >= 0) {
            emit_joints(s_.joint_above(u), t_.joint_above(v), idx);
            out_.source_joint_map[s_.edge_joint[u]] =
                out_.augmented_source.joint_count() - 1;
            out_.target_joint_map[t_.edge_joint[v]] =
                out_.augmented_target.joint_count() - 1;
        }
        out_.source_node_map[u] = idx;
        out_.target_node_map[v] = idx;

        const auto& choice = m_.match(u, v);
        std::vector<Child> children;
        std::set<int> used_a, used_b;
        for (auto [a, b] : choice.matched) {
            children.push_back({Child::Pair, a, b, s_.body(a).name});
            used_a.insert(a);
            used_b.insert(b);
        }
        for (int a : s_.kids[u])
            if (!used_a.count(a)) children.push_back({Child::SourceOnly, a, -1, s_.body(a).name});
        for (int b : t_.kids[v])
            if (!used_b.count(b))
                children.push_back({Child::TargetOnly, -1, b, "pad_" + t_.body(b).name});
        emit_children(children, idx);
    }

    // Subtree present only in the source; the target grows a zero copy.
    void emit_source_only(int u, int parent) {
        Body pad;
        pad.name = fresh_name(used_tgt_names_, "pad_" + s_.body(u).name);
        int idx = emit_nodes(s_.body(u), pad, parent);
        Joint zero;
        zero.axis = s_.joint_above(u).axis;
        emit_joints(s_.joint_above(u), zero, idx);
        out_.source_joint_map[s_.edge_joint[u]] = out_.augmented_source.joint_count() - 1;
        out_.source_node_map[u] = idx;
        out_.added_in_target.push_back(idx);

        std::vector<Child> children;
        for (int a : s_.kids[u]) children.push_back({Child::SourceOnly, a, -1, s_.body(a).name});
        emit_children(children, idx);
    }

    void emit_target_only(int v, int parent) {
        Body pad;
        pad.name = fresh_name(used_src_names_, "pad_" + t_.body(v).name);
        int idx = emit_nodes(pad, t_.body(v), parent);
        Joint zero;
        zero.axis = t_.joint_above(v).axis;
        emit_joints(zero, t_.joint_above(v), idx);
        out_.target_joint_map[t_.edge_joint[v]] = out_.augmented_target.joint_count() - 1;
        out_.target_node_map[v] = idx;
        out_.added_in_source.push_back(idx);

        std::vector<Child> children;
        for (int b : t_.kids[v])
            children.push_back({Child::TargetOnly, -1, b, "pad_" + t_.body(b).name});
        emit_children(children, idx);
    }

    const RootedView& s_;
    const RootedView& t_;
    Matcher& m_;
    MorphologyCorrespondence& out_;
    std::set<std::string> used_src_names_, used_tgt_names_;
};

bool is_zero_body(const Body& b) {
    return b.mass == 0.0 && b.length == Vec3{0, 0, 0} && b.inertia == Vec3{0, 0, 0};
}

}  // namespace

MorphologyCorrespondence match_morphology(const KinematicTree& source,
                                          const KinematicTree& target) {
    source.validate();
    target.validate();

    // Candidate roots in name order, the declared pair first: full ties on
    // (count, L2) keep the declared roots, then the smallest name pair.
    auto root_candidates = [](const KinematicTree& t) {
        std::vector<int> idx(t.node_count());
        for (int i = 0; i < t.node_count(); ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(),
                  [&](int a, int b) { return t.nodes[a].name < t.nodes[b].name; });
        return idx;
    };
    std::vector<int> src_roots = root_candidates(source);
    std::vector<int> tgt_roots = root_candidates(target);

    struct Candidate {
        int rs, rt;
    };
    std::vector<Candidate> cands;
    cands.push_back({source.root(), target.root()});
    for (int rs : src_roots)
        for (int rt : tgt_roots)
            if (!(rs == source.root() && rt == target.root())) cands.push_back({rs, rt});

    bool have_best = false;
    Cost best_cost;
    int best_rs = -1, best_rt = -1;
    // The same pairing reached through different roots sums its L2 in a
    // different order, so exact comparison would let rounding noise override
    // the declared-root preference; require a real improvement instead.
    auto strictly_better = [](const Cost& a, const Cost& b) {
        if (a.added != b.added) return a.added < b.added;
        double scale = std::max({1.0, std::abs(a.l2), std::abs(b.l2)});
        return a.l2 < b.l2 - 1e-9 * scale;
    };
    for (const auto& c : cands) {
        RootedView rs = make_rooted(source, c.rs);
        RootedView rt = make_rooted(target, c.rt);
        Matcher m(rs, rt);
        Cost cost = m.match(c.rs, c.rt).cost;
        if (!have_best || strictly_better(cost, best_cost)) {
            have_best = true;
            best_cost = cost;
            best_rs = c.rs;
            best_rt = c.rt;
        }
    }

    MorphologyCorrespondence corr;
    RootedView rs = make_rooted(source, best_rs);
    RootedView rt = make_rooted(target, best_rt);
    Matcher m(rs, rt);
    m.match(best_rs, best_rt);
    Builder b(rs, rt, m, corr);
    b.run();

    corr.augmented_source.validate();
    corr.augmented_target.validate();
    return corr;
}

void MorphologyCorrespondence::validate() const {
    augmented_source.validate();
    augmented_target.validate();
    int n = augmented_source.node_count();
    if (augmented_target.node_count() != n)
        throw std::invalid_argument("augmented trees differ in size");
    if (static_cast<int>(node_pairs.size()) != n)
        throw std::invalid_argument("node_pairs does not cover the trees");

    std::vector<int> s2t(n, -1), covered_t(n, 0);
    for (auto [a, bb] : node_pairs) {
        if (a < 0 || a >= n || bb < 0 || bb >= n || s2t[a] >= 0 || covered_t[bb])
            throw std::invalid_argument("node_pairs is not a bijection");
        s2t[a] = bb;
        covered_t[bb] = 1;
    }
    auto ds = augmented_source.depths();
    auto dt = augmented_target.depths();
    for (auto [a, bb] : node_pairs) {
        if (ds[a] != dt[bb]) throw std::invalid_argument("paired nodes differ in depth");
        int pa = augmented_source.nodes[a].parent;
        int pb = augmented_target.nodes[bb].parent;
        if ((pa < 0) != (pb < 0)) throw std::invalid_argument("root paired with non-root");
        if (pa >= 0 && s2t[pa] != pb)
            throw std::invalid_argument("parents are not paired consistently");
    }
    auto check_added = [](const KinematicTree& t, const std::vector<int>& added) {
        for (int i : added) {
            if (!is_zero_body(t.nodes[i]))
                throw std::invalid_argument("added node '" + t.nodes[i].name +
                                            "' has nonzero parameters");
            int j = t.joint_of(i);
            if (j >= 0 && t.joints[j].motor != 0.0)
                throw std::invalid_argument("added joint has nonzero motor gain");
        }
    };
    check_added(augmented_source, added_in_source);
    check_added(augmented_target, added_in_target);
}

namespace {

void append_node_params(const KinematicTree& t, int node, std::vector<double>& out) {
    const Body& b = t.nodes[node];
    out.insert(out.end(), {b.length[0], b.length[1], b.length[2], b.mass, b.inertia[0],
                           b.inertia[1], b.inertia[2]});
    int j = t.joint_of(node);
    if (j >= 0) {
        const Joint& jo = t.joints[j];
        out.insert(out.end(), {jo.motor, jo.damping, jo.range_lo, jo.range_hi});
    }
}

}  // namespace

std::pair<ParamVector, ParamVector> flatten_params(const MorphologyCorrespondence& corr) {
    ParamVector ts, tt;
    for (int i = 0; i < corr.augmented_source.node_count(); ++i) {
        append_node_params(corr.augmented_source, i, ts.values);
        append_node_params(corr.augmented_target, i, tt.values);
    }
    return {ts, tt};
}

RobotModel interpolate(const MorphologyCorrespondence& corr, double alpha,
                       const InterpSchedule& schedule) {
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw std::invalid_argument("alpha out of range [0,1]");
    double w = schedule ? schedule(alpha) : alpha;

    RobotModel model;
    model.beta = alpha;
    if (w == 0.0) {
        model.tree = corr.augmented_source;
        return model;
    }
    if (w == 1.0) {
        model.tree = corr.augmented_target;
        return model;
    }

    const KinematicTree& S = corr.augmented_source;
    const KinematicTree& T = corr.augmented_target;
    KinematicTree out = S;
    auto lerp = [w](double a, double b) { return (1.0 - w) * a + w * b; };
    for (int i = 0; i < S.node_count(); ++i) {
        out.nodes[i].mass = lerp(S.nodes[i].mass, T.nodes[i].mass);
        for (int k = 0; k < 3; ++k) {
            out.nodes[i].length[k] = lerp(S.nodes[i].length[k], T.nodes[i].length[k]);
            out.nodes[i].inertia[k] = lerp(S.nodes[i].inertia[k], T.nodes[i].inertia[k]);
        }
    }
    for (int j = 0; j < S.joint_count(); ++j) {
        Joint& o = out.joints[j];
        const Joint &a = S.joints[j], &b = T.joints[j];
        o.motor = lerp(a.motor, b.motor);
        o.damping = lerp(a.damping, b.damping);
        o.range_lo = lerp(a.range_lo, b.range_lo);
        o.range_hi = lerp(a.range_hi, b.range_hi);
        Vec3 ax{lerp(a.axis[0], b.axis[0]), lerp(a.axis[1], b.axis[1]),
                lerp(a.axis[2], b.axis[2])};
        double n = norm3(ax);
        if (n < 1e-8) {
            o.axis = a.axis;  // degenerate blend keeps the source direction
        } else {
            o.axis = {ax[0] / n, ax[1] / n, ax[2] / n};
        }
    }
    model.tree = std::move(out);
    return model;
}

namespace {

const std::vector<int>& joint_map(const MorphologyCorrespondence& corr, Side side) {
    return side == Side::Source ? corr.source_joint_map : corr.target_joint_map;
}

}  // namespace

std::vector<double> pad_action(const std::vector<double>& v,
                               const MorphologyCorrespondence& corr, Side side) {
    const auto& map = joint_map(corr, side);
    if (v.size() != map.size())
        throw std::invalid_argument("length mismatch: expected " +
                                    std::to_string(map.size()) + " entries, got " +
                                    std::to_string(v.size()));
    std::vector<double> out(corr.shared_joint_count(), 0.0);
    for (size_t i = 0; i < v.size(); ++i) out[map[i]] = v[i];
    return out;
}

std::vector<double> unpad_action(const std::vector<double>& v,
                                 const MorphologyCorrespondence& corr, Side side) {
    const auto& map = joint_map(corr, side);
    if (v.size() != static_cast<size_t>(corr.shared_joint_count()))
        throw std::invalid_argument("length mismatch: expected augmented size " +
                                    std::to_string(corr.shared_joint_count()));
    std::vector<double> out(map.size(), 0.0);
    for (size_t i = 0; i < map.size(); ++i) out[i] = v[map[i]];
    return out;
}

std::vector<double> pad_state(const std::vector<double>& v,
                              const MorphologyCorrespondence& corr, Side side) {
    const auto& map = joint_map(corr, side);
    size_t j = map.size();
    if (j == 0 || v.size() == 0 || v.size() % j != 0)
        throw std::invalid_argument("length mismatch: state must be a multiple of " +
                                    std::to_string(j) + " entries");
    size_t blocks = v.size() / j;
    size_t ja = corr.shared_joint_count();
    std::vector<double> out(blocks * ja, 0.0);
    for (size_t b = 0; b < blocks; ++b)
        for (size_t i = 0; i < j; ++i) out[b * ja + map[i]] = v[b * j + i];
    return out;
}

std::vector<double> unpad_state(const std::vector<double>& v,
                                const MorphologyCorrespondence& corr, Side side) {
    const auto& map = joint_map(corr, side);
    size_t ja = corr.shared_joint_count();
    if (ja == 0 || v.size() == 0 || v.size() % ja != 0)
        throw std::invalid_argument("length mismatch: state must be a multiple of " +
                                    std::to_string(ja) + " entries");
    size_t blocks = v.size() / ja;
    std::vector<double> out(blocks * map.size(), 0.0);
    for (size_t b = 0; b < blocks; ++b)
        for (size_t i = 0; i < map.size(); ++i) out[b * map.size() + i] = v[b * ja + map[i]];
    return out;
}

}  // namespace revolver
