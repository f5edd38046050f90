#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "revolver/checkpoint.hpp"
#include "revolver/env_sim.hpp"
#include "revolver/morphology.hpp"
#include "revolver/policy_gradient.hpp"
#include "revolver/replay_buffer.hpp"
#include "revolver/td3.hpp"

namespace revolver {

struct TransferConfig {
    double delta = 0.1;
    double step = 0.05;   // progression l_k, must stay below delta
    double shaping_h = 1.0;
    int epochs_per_phase = 20;  // N_e
    int max_ne_extensions = 5;
    double drop_threshold = 0.2;
    double success_floor = 0.3;
    int cache_size = 1000;
    std::string rl_backend = "td3";  // "td3" | "pg"
    uint64_t seed = 0;

    int episodes_per_epoch = 1;
    long total_step_budget = 0;   // 0: per-phase epochs only
    bool finish_on_target = true; // spend leftover global budget at alpha = 1
    int eval_episodes = 10;
    size_t buffer_capacity = 200000;
    int train_start = 1000;  // td3 warmup: min tuples before updates begin

    void validate() const;
};

double shape_reward(double r, double beta, double h);
double sample_beta(double alpha, double delta, Rng& rng);

struct RobotCache {
    std::vector<RobotModel> models;

    static RobotCache build(const MorphologyCorrespondence& corr, int size,
                            const InterpSchedule& schedule = InterpSchedule());
    const RobotModel& fetch(double beta) const;  // nearest grid point
};

struct PhaseRecord {
    double alpha = 0.0;
    int epochs_used = 0;
    int extensions = 0;
    double mean_shaped_reward = 0.0;
    double mean_raw_reward = 0.0;
    double success_rate = 0.0;
    size_t buffer_removed = 0;
    long env_steps = 0;
    bool reverted = false;  // agent rolled back to the last competent snapshot
};

struct FinalEval {
    double mean_reward = 0.0;
    double success_rate = 0.0;
    int episodes = 0;
};

struct TransferReport {
    std::vector<PhaseRecord> phases;
    FinalEval final_eval;
    long total_env_steps = 0;
    bool completed = true;  // false when the global budget ran out early

    void validate() const;
};

// Extension rule: extend when the phase's raw reward fell more than
// drop_threshold below the previous phase's, or (sparse tasks) success sits
// under the floor. The caller enforces the extension cap.
bool adaptive_extend(const PhaseRecord& current, const PhaseRecord* previous,
                     const TransferConfig& cfg, RewardMode mode);

enum class RunMode { Revolver, DirectFinetune, FromScratch };
RunMode run_mode_from_string(const std::string& s);
std::string to_string(RunMode m);

struct TransferContext {
    MorphologyCorrespondence corr;
    EnvFamily family;
    TransferConfig cfg;
    Td3Config td3;
    PgConfig pg;
    RunMode mode = RunMode::Revolver;
    std::string expert_checkpoint;  // required for Revolver and DirectFinetune
};

// The full curriculum: phase loop over alpha, per-phase training with sampled
// betas and shaped rewards, adaptive extensions, buffer cleaning, and a final
// unshaped evaluation on the target robot. Baseline modes train on the target
// only under the same step budget.
TransferReport run_transfer(const TransferContext& ctx, Checkpoint* final_policy);

// Trains from scratch on E(beta) with raw rewards; used by `pretrain`.
TransferReport run_pretrain(const TransferContext& ctx, double beta, long step_budget,
                            Checkpoint* final_policy);

// Deterministic-policy evaluation on E(beta) with raw rewards.
FinalEval evaluate_policy(const TransferContext& ctx, const Checkpoint& policy,
                          double beta, int episodes, uint64_t seed);

}  // namespace revolver
