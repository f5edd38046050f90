#include "revolver/env_sim.hpp"

#include <algorithm>
#include <cmath>

#include "revolver/rng.hpp"

namespace revolver {

namespace {

struct Mat3 {
    double m[3][3];
};

Mat3 mat_identity() {
    return {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
}

Mat3 mat_mul(const Mat3& a, const Mat3& b) {
    Mat3 r{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0;
            for (int k = 0; k < 3; ++k) s += a.m[i][k] * b.m[k][j];
            r.m[i][j] = s;
        }
    return r;
}

Vec3 mat_apply(const Mat3& a, const Vec3& v) {
    Vec3 r{};
    for (int i = 0; i < 3; ++i)
        r[i] = a.m[i][0] * v[0] + a.m[i][1] * v[1] + a.m[i][2] * v[2];
    return r;
}

Mat3 rodrigues(const Vec3& axis, double angle) {
    double c = std::cos(angle), s = std::sin(angle), t = 1.0 - c;
    double x = axis[0], y = axis[1], z = axis[2];
    Mat3 r;
    r.m[0][0] = t * x * x + c;
    r.m[0][1] = t * x * y - s * z;
    r.m[0][2] = t * x * z + s * y;
    r.m[1][0] = t * x * y + s * z;
    r.m[1][1] = t * y * y + c;
    r.m[1][2] = t * y * z - s * x;
    r.m[2][0] = t * x * z - s * y;
    r.m[2][1] = t * y * z + s * x;
    r.m[2][2] = t * z * z + c;
    return r;
}

Vec3 add3(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
Vec3 sub3(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

// Base-relative forward kinematics: root at the origin, children attach at the
// parent tip, each joint rotates its child's link vector about the joint axis
// (expressed in the parent frame).
void local_fk(const KinematicTree& t, const std::vector<double>& q,
              std::vector<Vec3>& origin, std::vector<Vec3>& tip) {
    int n = t.node_count();
    origin.assign(n, Vec3{0, 0, 0});
    tip.assign(n, Vec3{0, 0, 0});
    std::vector<Mat3> rot(n, mat_identity());
    for (int node : t.topological_order()) {
        const Body& b = t.nodes[node];
        if (b.parent < 0) {
            origin[node] = {0, 0, 0};
            rot[node] = mat_identity();
        } else {
            origin[node] = tip[b.parent];
            int j = t.joint_of(node);
            rot[node] = mat_mul(rot[b.parent], rodrigues(t.joints[j].axis, q[j]));
        }
        tip[node] = add3(origin[node], mat_apply(rot[node], b.length));
    }
}

std::vector<double> subtree_masses(const KinematicTree& t) {
    std::vector<double> m(t.node_count());
    for (int i = 0; i < t.node_count(); ++i) m[i] = t.nodes[i].mass;
    auto order = t.topological_order();
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        int p = t.nodes[*it].parent;
        if (p >= 0) m[p] += m[*it];
    }
    return m;
}

bool joint_is_dead(const Joint& j, double subtree_mass) {
    return j.motor == 0.0 && j.damping == 0.0 && subtree_mass == 0.0;
}

double base_height(const std::vector<Vec3>& origin, const std::vector<Vec3>& tip) {
    double zmin = 0.0;
    for (const auto& p : origin) zmin = std::min(zmin, p[2]);
    for (const auto& p : tip) zmin = std::min(zmin, p[2]);
    return -zmin;
}

int required_node(const KinematicTree& t, FamilyId f) {
    const char* name = (f == FamilyId::ChainLocomotion) ? "torso" : "palm";
    int idx = t.find_node(name);
    if (idx < 0)
        throw std::invalid_argument(std::string("incompatible model/family: ") +
                                    to_string(f) + " requires a body named '" + name +
                                    "'");
    return idx;
}

bool is_descendant(const KinematicTree& t, int node, int ancestor) {
    for (int p = t.nodes[node].parent; p >= 0; p = t.nodes[p].parent)
        if (p == ancestor) return true;
    return false;
}

// Motor-weighted mean of normalized finger-joint positions, 0 = fully open.
double grip_closure(const KinematicTree& t, const std::vector<double>& q, int palm) {
    double num = 0.0, den = 0.0;
    for (int j = 0; j < t.joint_count(); ++j) {
        const Joint& jo = t.joints[j];
        if (!is_descendant(t, jo.child, palm)) continue;
        double span = jo.range_hi - jo.range_lo;
        if (jo.motor <= 0.0 || span <= 1e-12) continue;
        num += jo.motor * (q[j] - jo.range_lo) / span;
        den += jo.motor;
    }
    return den > 0.0 ? num / den : 0.0;
}

void check_finite(const std::vector<double>& v, int step_index) {
    for (double x : v)
        if (!std::isfinite(x)) throw NumericalDivergence(step_index);
}

}  // namespace

EnvFamily EnvFamily::chain_locomotion() {
    EnvFamily f;
    f.family = FamilyId::ChainLocomotion;
    f.horizon = 200;
    return f;
}

EnvFamily EnvFamily::reach_grasp() {
    EnvFamily f;
    f.family = FamilyId::ReachGrasp;
    f.horizon = 150;
    f.gravity = 0.0;  // quasi-static manipulation; the arm holds its pose
    return f;
}

FamilyId family_id_from_string(const std::string& s) {
    if (s == "chain-locomotion") return FamilyId::ChainLocomotion;
    if (s == "reach-grasp") return FamilyId::ReachGrasp;
    throw std::invalid_argument("unknown family '" + s + "'");
}

std::string to_string(FamilyId f) {
    return f == FamilyId::ChainLocomotion ? "chain-locomotion" : "reach-grasp";
}

RewardMode reward_mode_from_string(const std::string& s) {
    if (s == "dense") return RewardMode::Dense;
    if (s == "sparse") return RewardMode::Sparse;
    throw std::invalid_argument("unknown reward mode '" + s + "'");
}

std::string to_string(RewardMode m) {
    return m == RewardMode::Dense ? "dense" : "sparse";
}

void recompute_cache(const RobotModel& model, const EnvFamily& family, EnvState& state) {
    const KinematicTree& t = model.tree;
    std::vector<Vec3> o, tip;
    local_fk(t, state.q, o, tip);
    state.base_z =
        family.family == FamilyId::ChainLocomotion ? base_height(o, tip) : 0.0;
    double bx = family.family == FamilyId::ChainLocomotion ? state.base_x : 0.0;
    state.body_origin.resize(t.node_count());
    state.body_tip.resize(t.node_count());
    for (int i = 0; i < t.node_count(); ++i) {
        state.body_origin[i] = add3(o[i], Vec3{bx, 0, state.base_z});
        state.body_tip[i] = add3(tip[i], Vec3{bx, 0, state.base_z});
    }
}

EnvState reset(const RobotModel& model, const EnvFamily& family, uint64_t seed) {
    const KinematicTree& t = model.tree;
    int anchor = required_node(t, family.family);

    EnvState s;
    s.q.assign(t.joint_count(), 0.0);
    s.qdot.assign(t.joint_count(), 0.0);

    Rng rng(seed);
    auto msub = subtree_masses(t);
    for (int j = 0; j < t.joint_count(); ++j) {
        const Joint& jo = t.joints[j];
        if (joint_is_dead(jo, msub[jo.child])) continue;
        double v = rng.uniform(-0.01, 0.01);
        s.q[j] = std::clamp(v, jo.range_lo, jo.range_hi);
    }

    if (family.family == FamilyId::ReachGrasp) {
        for (int k = 0; k < 3; ++k)
            s.object_pos[k] = family.object_pos[k] + rng.uniform(-0.01, 0.01);
    } else {
        // nominal torso height from the unperturbed pose
        std::vector<Vec3> o0, tip0;
        local_fk(t, std::vector<double>(t.joint_count(), 0.0), o0, tip0);
        double bz0 = base_height(o0, tip0);
        s.nominal_torso_z = o0[anchor][2] + bz0;
    }

    recompute_cache(model, family, s);
    return s;
}

StepResult step(const RobotModel& model, const EnvFamily& family, const EnvState& state,
                const std::vector<double>& action) {
    const KinematicTree& t = model.tree;
    int J = t.joint_count();
    if (static_cast<int>(action.size()) != J)
        throw std::invalid_argument("action dimension mismatch: expected " +
                                    std::to_string(J) + ", got " +
                                    std::to_string(action.size()));
    check_finite(state.q, state.step_count);
    check_finite(state.qdot, state.step_count);
    check_finite(action, state.step_count);

    std::vector<double> a(action);
    for (double& x : a) x = std::clamp(x, -1.0, 1.0);

    StepResult out;
    EnvState& ns = out.state;
    ns = state;

    auto msub = subtree_masses(t);
    std::vector<Vec3> o_old, tip_old;
    local_fk(t, state.q, o_old, tip_old);

    for (int j = 0; j < J; ++j) {
        const Joint& jo = t.joints[j];
        if (joint_is_dead(jo, msub[jo.child])) {
            ns.q[j] = 0.0;
            ns.qdot[j] = 0.0;
            continue;
        }
        const Body& c = t.nodes[jo.child];
        double r = 0.5 * norm3(c.length);
        double i_eff = jo.axis[0] * jo.axis[0] * c.inertia[0] +
                       jo.axis[1] * jo.axis[1] * c.inertia[1] +
                       jo.axis[2] * jo.axis[2] * c.inertia[2] + msub[jo.child] * r * r;
        double tilt = std::sqrt(std::max(0.0, 1.0 - jo.axis[2] * jo.axis[2]));
        double tau = jo.motor * a[j] -
                     family.gravity * msub[jo.child] * r * tilt * std::sin(state.q[j]);
        // implicit damping: stable for stiff joints (small I, large d) at any dt
        ns.qdot[j] = (state.qdot[j] + family.dt * tau / (i_eff + 1e-12)) /
                     (1.0 + family.dt * jo.damping / (i_eff + 1e-12));
        ns.q[j] = state.q[j] + family.dt * ns.qdot[j];
        if (ns.q[j] < jo.range_lo) {
            ns.q[j] = jo.range_lo;
            ns.qdot[j] = 0.0;
        } else if (ns.q[j] > jo.range_hi) {
            ns.q[j] = jo.range_hi;
            ns.qdot[j] = 0.0;
        }
    }

    std::vector<Vec3> o_new, tip_new;
    local_fk(t, ns.q, o_new, tip_new);

    double action_sq = 0.0;
    for (double x : a) action_sq += x * x;

    if (family.family == FamilyId::ChainLocomotion) {
        int torso = required_node(t, family.family);
        // Every massive body tip is a contact candidate; the exponential
        // height decay singles out tips actually near the ground, and
        // zero-mass padding limbs drop out by construction.
        double num = 0.0, den = family.thrust_damping;
        for (int b = 0; b < t.node_count(); ++b) {
            double m = t.nodes[b].mass;
            if (m <= 0.0) continue;
            double z_world = tip_old[b][2] + state.base_z;
            double w = m * std::exp(-std::max(0.0, z_world) / family.contact_scale);
            num += w * (tip_new[b][0] - tip_old[b][0]);
            den += w;
        }
        double dx = -num / den;
        ns.base_x = state.base_x + dx;
        ns.base_z = base_height(o_new, tip_new);

        double torso_z = o_new[torso][2] + ns.base_z;
        bool fell = torso_z < family.fall_fraction * state.nominal_torso_z;

        bool newly_succeeded = !state.succeeded && ns.base_x >= family.success_distance;
        if (newly_succeeded) ns.succeeded = true;
        if (family.reward_mode == RewardMode::Dense) {
            out.reward = dx - family.action_penalty * action_sq;
        } else {
            out.reward = newly_succeeded ? 1.0 : 0.0;
            if (newly_succeeded) out.done = true;
        }
        if (fell) {
            out.reward += family.fall_penalty;
            ns.fallen = true;
            out.done = true;
        }
    } else {
        int palm = required_node(t, family.family);
        ns.base_x = 0.0;
        ns.base_z = 0.0;
        Vec3 palm_tip = tip_new[palm];

        Vec3 obj = state.attached ? palm_tip : state.object_pos;
        double closure = grip_closure(t, ns.q, palm);
        bool attached = state.attached;
        if (attached) {
            if (closure < family.detach_closure) attached = false;
        } else {
            double d = norm3(sub3(palm_tip, obj));
            if (d < family.attach_dist && closure > family.attach_closure) {
                attached = true;
                obj = palm_tip;
            }
        }
        ns.attached = attached;
        ns.object_pos = obj;

        double reach_d = norm3(sub3(palm_tip, obj));
        double goal_d = norm3(sub3(obj, family.goal_pos));
        bool hold_at_goal = attached && goal_d < family.success_radius;
        if (family.reward_mode == RewardMode::Sparse) {
            out.reward = hold_at_goal ? 1.0 : 0.0;
        } else {
            out.reward = (hold_at_goal ? 1.0 : 0.0) - reach_d - goal_d +
                         family.closure_bonus * closure *
                             std::exp(-reach_d / family.attach_dist);
            // smooth pull toward the goal once the object is in hand; without
            // it the hold bonus is a step discontinuity at success_radius and
            // policies park the carry wherever exploration noise peters out
            if (attached)
                out.reward +=
                    family.goal_bonus * std::exp(-goal_d / family.goal_scale);
        }
        // success latches but never ends the episode: holding at the goal has
        // to stay more valuable than hovering at the object farming the
        // closure term, and in sparse mode a sustained +1 stream gives the
        // critic a real attractor instead of a single terminal blip
        if (hold_at_goal) ns.succeeded = true;
    }

    ns.step_count = state.step_count + 1;
    ns.body_origin.resize(t.node_count());
    ns.body_tip.resize(t.node_count());
    double bx = family.family == FamilyId::ChainLocomotion ? ns.base_x : 0.0;
    for (int i = 0; i < t.node_count(); ++i) {
        ns.body_origin[i] = add3(o_new[i], Vec3{bx, 0, ns.base_z});
        ns.body_tip[i] = add3(tip_new[i], Vec3{bx, 0, ns.base_z});
    }
    check_finite(ns.q, ns.step_count);
    check_finite(ns.qdot, ns.step_count);
    return out;
}

std::vector<double> observation(const RobotModel& model, const EnvFamily& family,
                                const EnvState& state) {
    std::vector<double> obs;
    obs.reserve(observation_dim(model, family));
    obs.insert(obs.end(), state.q.begin(), state.q.end());
    obs.insert(obs.end(), state.qdot.begin(), state.qdot.end());
    if (family.family == FamilyId::ChainLocomotion) {
        int torso = model.tree.find_node("torso");
        obs.push_back(torso >= 0 ? state.body_origin[torso][2] : 0.0);
    } else {
        int palm = model.tree.find_node("palm");
        Vec3 palm_tip = palm >= 0 ? state.body_tip[palm] : Vec3{0, 0, 0};
        Vec3 to_obj = sub3(state.object_pos, palm_tip);
        Vec3 to_goal = sub3(family.goal_pos, state.object_pos);
        obs.insert(obs.end(), to_obj.begin(), to_obj.end());
        obs.insert(obs.end(), to_goal.begin(), to_goal.end());
        obs.push_back(state.attached ? 1.0 : 0.0);
    }
    return obs;
}

int observation_dim(const RobotModel& model, const EnvFamily& family) {
    int j = model.tree.joint_count();
    return 2 * j + (family.family == FamilyId::ChainLocomotion ? 1 : 7);
}

std::vector<Transition> rollout(const RobotModel& model, const EnvFamily& family,
                                const Policy& policy, uint64_t seed, int horizon) {
    std::vector<Transition> traj;
    if (horizon <= 0) return traj;
    EnvState s = reset(model, family, seed);
    std::vector<double> obs = observation(model, family, s);
    for (int i = 0; i < horizon; ++i) {
        std::vector<double> a = policy(obs);
        StepResult r = step(model, family, s, a);
        std::vector<double> next_obs = observation(model, family, r.state);
        Transition tr;
        tr.state = obs;
        tr.action = a;
        tr.reward = r.reward;
        tr.next_state = next_obs;
        tr.done = r.done;
        tr.beta = model.beta;
        traj.push_back(std::move(tr));
        if (r.done) break;
        s = std::move(r.state);
        obs = std::move(next_obs);
    }
    return traj;
}

EpisodeStats run_episode(const RobotModel& model, const EnvFamily& family,
                         const Policy& policy, uint64_t seed, int horizon) {
    EpisodeStats stats;
    EnvState s = reset(model, family, seed);
    for (int i = 0; i < horizon; ++i) {
        std::vector<double> a = policy(observation(model, family, s));
        StepResult r = step(model, family, s, a);
        stats.total_reward += r.reward;
        stats.steps += 1;
        s = std::move(r.state);
        if (r.done) break;
    }
    stats.success = s.succeeded && !s.fallen;
    stats.fallen = s.fallen;
    stats.final_base_x = s.base_x;
    return stats;
}

double kinetic_energy(const RobotModel& model, const EnvState& state) {
    const KinematicTree& t = model.tree;
    auto msub = subtree_masses(t);
    double e = 0.0;
    for (int j = 0; j < t.joint_count(); ++j) {
        const Joint& jo = t.joints[j];
        const Body& c = t.nodes[jo.child];
        double r = 0.5 * norm3(c.length);
        double i_eff = jo.axis[0] * jo.axis[0] * c.inertia[0] +
                       jo.axis[1] * jo.axis[1] * c.inertia[1] +
                       jo.axis[2] * jo.axis[2] * c.inertia[2] + msub[jo.child] * r * r;
        e += 0.5 * i_eff * state.qdot[j] * state.qdot[j];
    }
    return e;
}

double estimate_step_lipschitz(const MorphologyCorrespondence& corr,
                               const EnvFamily& family, int grid_points, uint64_t seed) {
    if (grid_points < 2) throw std::invalid_argument("grid_points must be >= 2");
    RobotModel m0 = interpolate(corr, 0.0);
    EnvState s = reset(m0, family, seed);
    Rng rng(derive_seed(seed, RngStreamId::Misc, 1));
    std::vector<double> a(m0.tree.joint_count());
    for (double& x : a) x = rng.uniform(-1.0, 1.0);

    double c_max = 0.0;
    std::vector<double> prev;
    double prev_beta = 0.0;
    for (int i = 0; i < grid_points; ++i) {
        double beta = static_cast<double>(i) / (grid_points - 1);
        RobotModel m = interpolate(corr, beta);
        StepResult r = step(m, family, s, a);
        std::vector<double> v = r.state.q;
        v.insert(v.end(), r.state.qdot.begin(), r.state.qdot.end());
        if (i > 0) {
            double d = 0.0;
            for (size_t k = 0; k < v.size(); ++k) d += (v[k] - prev[k]) * (v[k] - prev[k]);
            c_max = std::max(c_max, std::sqrt(d) / (beta - prev_beta));
        }
        prev = std::move(v);
        prev_beta = beta;
    }
    return c_max;
}

}  // namespace revolver
