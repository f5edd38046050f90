#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "revolver/morphology.hpp"

namespace revolver {

enum class FamilyId { ChainLocomotion, ReachGrasp };
enum class RewardMode { Dense, Sparse };

// One parameterized task family; E(beta) binds a family to an interpolated
// robot. All knobs are plain data so configs can override them.
struct EnvFamily {
    FamilyId family = FamilyId::ChainLocomotion;
    RewardMode reward_mode = RewardMode::Dense;
    int horizon = 200;
    double dt = 0.01;
    double gravity = 9.81;

    double fall_penalty = -10.0;
    double fall_fraction = 0.3;       // episode ends below this share of nominal height
    double action_penalty = 0.001;
    double success_distance = 1.0;    // locomotion: forward travel counted as success

    // reach-grasp layout: the object sits just outside the arm's rest pose so
    // reaching is discoverable, while the goal still demands a full carry
    Vec3 object_pos{0.32, 0.0, 0.12};
    Vec3 goal_pos{0.10, 0.0, 0.25};
    double attach_dist = 0.03;
    double attach_closure = 0.7;
    double detach_closure = 0.4;
    double success_radius = 0.05;
    double closure_bonus = 1.0;  // dense-mode shaping toward closing near the object
    double goal_bonus = 1.0;     // dense-mode pull toward the goal while attached
    double goal_scale = 0.1;

    double contact_scale = 0.02;  // thrust weight decay with tip height
    double thrust_damping = 0.05;

    static EnvFamily chain_locomotion();
    static EnvFamily reach_grasp();
};

FamilyId family_id_from_string(const std::string& s);
std::string to_string(FamilyId f);
RewardMode reward_mode_from_string(const std::string& s);
std::string to_string(RewardMode m);

struct EnvState {
    std::vector<double> q, qdot;
    std::vector<Vec3> body_origin, body_tip;  // world frame, one entry per body
    int step_count = 0;

    double base_x = 0.0;
    double base_z = 0.0;
    double nominal_torso_z = 0.0;
    Vec3 object_pos{0, 0, 0};
    bool attached = false;
    bool succeeded = false;
    bool fallen = false;
};

struct NumericalDivergence : std::runtime_error {
    int step_index;
    explicit NumericalDivergence(int step)
        : std::runtime_error("numerical divergence at step " + std::to_string(step)),
          step_index(step) {}
};

struct StepResult {
    EnvState state;
    double reward = 0.0;
    bool done = false;
};

EnvState reset(const RobotModel& model, const EnvFamily& family, uint64_t seed);
StepResult step(const RobotModel& model, const EnvFamily& family, const EnvState& state,
                const std::vector<double>& action);

// Policy inputs: [q, qdot] plus family extras (torso height for locomotion;
// palm→object, object→goal and the latch flag for reach-grasp). Dimension is
// constant across beta for a matched pair.
std::vector<double> observation(const RobotModel& model, const EnvFamily& family,
                                const EnvState& state);
int observation_dim(const RobotModel& model, const EnvFamily& family);

// Refills body_origin/body_tip (and base height) from q alone.
void recompute_cache(const RobotModel& model, const EnvFamily& family, EnvState& state);

struct Transition {
    std::vector<double> state, action, next_state;
    double reward = 0.0;
    bool done = false;
    double beta = 0.0;
};

using Policy = std::function<std::vector<double>(const std::vector<double>& obs)>;

std::vector<Transition> rollout(const RobotModel& model, const EnvFamily& family,
                                const Policy& policy, uint64_t seed, int horizon);

struct EpisodeStats {
    double total_reward = 0.0;
    int steps = 0;
    bool success = false;
    bool fallen = false;
    double final_base_x = 0.0;
};

EpisodeStats run_episode(const RobotModel& model, const EnvFamily& family,
                         const Policy& policy, uint64_t seed, int horizon);

// Sum of 0.5 * I_eff * qdot^2 over joints, matching the integrator's inertia.
double kinetic_energy(const RobotModel& model, const EnvState& state);

// Empirical Lipschitz constant of one step in beta: max over adjacent grid
// points of ||step(E(b),s,a) − step(E(b'),s,a)|| / |b − b'|.
double estimate_step_lipschitz(const MorphologyCorrespondence& corr,
                               const EnvFamily& family, int grid_points, uint64_t seed);

}  // namespace revolver
