#include "revolver/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

#include "revolver/parallel.hpp"

namespace revolver {

void TransferConfig::validate() const {
    if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
    if (!(step > 0.0)) throw std::invalid_argument("step must be positive");
    if (!(step < delta)) throw std::invalid_argument("step must be < delta");
    if (shaping_h < 0.0) throw std::invalid_argument("shaping_h must be non-negative");
    if (epochs_per_phase < 0) throw std::invalid_argument("epochs_per_phase must be >= 0");
    if (max_ne_extensions < 0)
        throw std::invalid_argument("max_ne_extensions must be >= 0");
    if (!(drop_threshold >= 0.0 && drop_threshold <= 1.0))
        throw std::invalid_argument("drop_threshold must be in [0,1]");
    if (!(success_floor >= 0.0 && success_floor <= 1.0))
        throw std::invalid_argument("success_floor must be in [0,1]");
    if (cache_size < 2) throw std::invalid_argument("cache_size must be at least 2");
    if (rl_backend != "td3" && rl_backend != "pg")
        throw std::invalid_argument("unknown rl backend '" + rl_backend + "'");
    if (episodes_per_epoch < 1)
        throw std::invalid_argument("episodes_per_epoch must be >= 1");
    if (total_step_budget < 0)
        throw std::invalid_argument("total_step_budget must be >= 0");
    if (eval_episodes < 1) throw std::invalid_argument("eval_episodes must be >= 1");
    if (buffer_capacity == 0)
        throw std::invalid_argument("buffer_capacity must be positive");
    if (train_start < 0) throw std::invalid_argument("train_start must be >= 0");
}

double shape_reward(double r, double beta, double h) {
    return r * (1.0 + h * beta);
}

double sample_beta(double alpha, double delta, Rng& rng) {
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw std::invalid_argument("alpha out of [0,1]");
    if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
    double hi = std::min(alpha + delta, 1.0);
    return rng.uniform(alpha, hi);
}

RobotCache RobotCache::build(const MorphologyCorrespondence& corr, int size,
                             const InterpSchedule& schedule) {
    if (size < 2) throw std::invalid_argument("cache size must be at least 2");
    RobotCache cache;
    cache.models.reserve(size);
    for (int i = 0; i < size; ++i) {
        double beta = static_cast<double>(i) / (size - 1);
        cache.models.push_back(interpolate(corr, beta, schedule));
    }
    return cache;
}

const RobotModel& RobotCache::fetch(double beta) const {
    if (models.empty()) throw std::runtime_error("empty cache");
    if (!(beta >= 0.0 && beta <= 1.0))
        throw std::invalid_argument("beta out of [0,1]");
    long idx = std::lround(beta * (models.size() - 1));
    idx = std::clamp<long>(idx, 0, static_cast<long>(models.size()) - 1);
    return models[static_cast<size_t>(idx)];
}

void TransferReport::validate() const {
    if (phases.empty()) throw std::invalid_argument("report has no phases");
    for (size_t i = 1; i < phases.size(); ++i)
        if (!(phases[i].alpha > phases[i - 1].alpha))
            throw std::invalid_argument("phase alphas must be strictly increasing");
    if (final_eval.episodes <= 0) throw std::invalid_argument("missing final eval");
}

bool adaptive_extend(const PhaseRecord& current, const PhaseRecord* previous,
                     const TransferConfig& cfg, RewardMode mode) {
    if (mode == RewardMode::Sparse && current.success_rate < cfg.success_floor)
        return true;
    if (previous) {
        // (1 - t) * prev, written so a drop of t*|prev| triggers for either sign
        double floor = previous->mean_raw_reward -
                       cfg.drop_threshold * std::abs(previous->mean_raw_reward);
        if (current.mean_raw_reward < floor) return true;
    }
    return false;
}

RunMode run_mode_from_string(const std::string& s) {
    if (s == "revolver") return RunMode::Revolver;
    if (s == "direct-finetune") return RunMode::DirectFinetune;
    if (s == "from-scratch") return RunMode::FromScratch;
    throw std::invalid_argument("unknown run mode '" + s + "'");
}

std::string to_string(RunMode m) {
    switch (m) {
        case RunMode::Revolver: return "revolver";
        case RunMode::DirectFinetune: return "direct-finetune";
        default: return "from-scratch";
    }
}

namespace {

struct AgentSnapshot {
    virtual ~AgentSnapshot() = default;
};

class Trainer {
public:
    virtual ~Trainer() = default;
    virtual std::vector<double> act(const std::vector<double>& obs, bool explore) = 0;
    virtual std::vector<double> act_eval(const std::vector<double>& obs) const = 0;
    virtual void on_transition(const Transition& t) = 0;
    virtual void on_epoch(const std::vector<std::vector<Transition>>& trajs) = 0;
    virtual bool wants_trajectories() const = 0;
    virtual size_t clean(double lo, double hi) = 0;
    virtual void save(Checkpoint& ck) const = 0;
    virtual std::unique_ptr<AgentSnapshot> snapshot() const = 0;
    virtual void restore(const AgentSnapshot& snap) = 0;
    virtual int obs_dim() const = 0;
    virtual int act_dim() const = 0;
};

class Td3Trainer final : public Trainer {
public:
    Td3Trainer(Td3Agent agent, const TransferConfig& cfg)
        : agent_(std::move(agent)),
          buffer_(cfg.buffer_capacity),
          train_start_(std::max<size_t>(static_cast<size_t>(std::max(cfg.train_start, 1)),
                                        static_cast<size_t>(agent_.cfg.batch_size))),
          expl_rng_(derive_seed(cfg.seed, RngStreamId::Exploration, 0)),
          sample_rng_(derive_seed(cfg.seed, RngStreamId::BufferSample, 0)),
          update_rng_(derive_seed(cfg.seed, RngStreamId::TargetNoise, 0)) {}

    std::vector<double> act(const std::vector<double>& obs, bool explore) override {
        return explore ? agent_.act_noisy(obs, expl_rng_) : agent_.act(obs);
    }
    std::vector<double> act_eval(const std::vector<double>& obs) const override {
        return agent_.act(obs);
    }
    void on_transition(const Transition& t) override {
        buffer_.push(t);
        if (buffer_.size() >= train_start_)
            agent_.update(buffer_.sample(agent_.cfg.batch_size, sample_rng_),
                          update_rng_);
    }
    void on_epoch(const std::vector<std::vector<Transition>>&) override {}
    bool wants_trajectories() const override { return false; }
    size_t clean(double lo, double hi) override { return buffer_.clean(lo, hi); }
    void save(Checkpoint& ck) const override { put_td3(ck, agent_); }
    std::unique_ptr<AgentSnapshot> snapshot() const override {
        auto s = std::make_unique<Snap>();
        s->agent = agent_;
        return s;
    }
    void restore(const AgentSnapshot& snap) override {
        agent_ = static_cast<const Snap&>(snap).agent;
    }
    int obs_dim() const override { return agent_.actor.input_dim(); }
    int act_dim() const override { return agent_.actor.output_dim(); }

private:
    struct Snap : AgentSnapshot {
        Td3Agent agent;
    };
    Td3Agent agent_;
    ReplayBuffer buffer_;
    size_t train_start_;
    Rng expl_rng_, sample_rng_, update_rng_;
};

class PgTrainer final : public Trainer {
public:
    PgTrainer(PgAgent agent, const TransferConfig& cfg)
        : agent_(std::move(agent)),
          expl_rng_(derive_seed(cfg.seed, RngStreamId::Exploration, 0)) {}

    std::vector<double> act(const std::vector<double>& obs, bool explore) override {
        return explore ? agent_.act_stochastic(obs, expl_rng_) : agent_.act(obs);
    }
    std::vector<double> act_eval(const std::vector<double>& obs) const override {
        return agent_.act(obs);
    }
    void on_transition(const Transition&) override {}
    void on_epoch(const std::vector<std::vector<Transition>>& trajs) override {
        if (!trajs.empty()) agent_.update(trajs);
    }
    bool wants_trajectories() const override { return true; }
    size_t clean(double, double) override { return 0; }
    void save(Checkpoint& ck) const override { put_pg(ck, agent_); }
    std::unique_ptr<AgentSnapshot> snapshot() const override {
        auto s = std::make_unique<Snap>();
        s->agent = agent_;
        return s;
    }
    void restore(const AgentSnapshot& snap) override {
        agent_ = static_cast<const Snap&>(snap).agent;
    }
    int obs_dim() const override { return agent_.actor.input_dim(); }
    int act_dim() const override { return agent_.actor.output_dim(); }

private:
    struct Snap : AgentSnapshot {
        PgAgent agent;
    };
    PgAgent agent_;
    Rng expl_rng_;
};

std::unique_ptr<Trainer> make_trainer(const TransferContext& ctx, bool fresh) {
    RobotModel probe = interpolate(ctx.corr, 0.0);
    int od = observation_dim(probe, ctx.family);
    int ad = probe.tree.joint_count();

    std::unique_ptr<Trainer> tr;
    if (ctx.cfg.rl_backend == "td3") {
        Td3Agent agent = [&] {
            if (fresh) {
                Rng rng(derive_seed(ctx.cfg.seed, RngStreamId::NetInit, 0));
                return Td3Agent::make(od, ad, ctx.td3, rng);
            }
            if (ctx.expert_checkpoint.empty())
                throw std::runtime_error("missing expert checkpoint for mode '" +
                                         to_string(ctx.mode) + "'");
            return get_td3(Checkpoint::load(ctx.expert_checkpoint), ctx.td3);
        }();
        tr = std::make_unique<Td3Trainer>(std::move(agent), ctx.cfg);
    } else {
        PgAgent agent = [&] {
            if (fresh) {
                Rng rng(derive_seed(ctx.cfg.seed, RngStreamId::NetInit, 0));
                return PgAgent::make(od, ad, ctx.pg, rng);
            }
            if (ctx.expert_checkpoint.empty())
                throw std::runtime_error("missing expert checkpoint for mode '" +
                                         to_string(ctx.mode) + "'");
            return get_pg(Checkpoint::load(ctx.expert_checkpoint), ctx.pg);
        }();
        tr = std::make_unique<PgTrainer>(std::move(agent), ctx.cfg);
    }
    if (tr->obs_dim() != od || tr->act_dim() != ad)
        throw std::runtime_error(
            "checkpoint dimensions do not match the configured robots/family "
            "(expected " +
            std::to_string(od) + "->" + std::to_string(ad) + ", checkpoint has " +
            std::to_string(tr->obs_dim()) + "->" + std::to_string(tr->act_dim()) + ")");
    return tr;
}

struct RunCounters {
    long env_steps = 0;
    uint64_t episode_counter = 0;
    long budget = 0;  // 0 = unlimited

    bool exhausted() const { return budget > 0 && env_steps >= budget; }
};

struct EpisodeOutcome {
    double raw_sum = 0.0;
    double shaped_sum = 0.0;
    int steps = 0;
    bool success = false;
};

EpisodeOutcome run_training_episode(Trainer& tr, const RobotModel& robot,
                                    const EnvFamily& family, double h, bool shaped,
                                    uint64_t seed, RunCounters& counters,
                                    std::vector<Transition>* collect) {
    EpisodeOutcome out;
    EnvState s = reset(robot, family, seed);
    std::vector<double> obs = observation(robot, family, s);
    for (int i = 0; i < family.horizon; ++i) {
        if (counters.exhausted()) break;
        std::vector<double> a = tr.act(obs, true);
        StepResult r = step(robot, family, s, a);
        counters.env_steps += 1;
        std::vector<double> next_obs = observation(robot, family, r.state);

        Transition t;
        t.state = obs;
        t.action = std::move(a);
        t.next_state = next_obs;
        t.reward = shaped ? shape_reward(r.reward, robot.beta, h) : r.reward;
        t.done = r.done;
        t.beta = robot.beta;
        out.raw_sum += r.reward;
        out.shaped_sum += t.reward;
        out.steps += 1;
        if (collect) collect->push_back(t);
        tr.on_transition(t);

        if (r.done) {
            s = std::move(r.state);
            break;
        }
        s = std::move(r.state);
        obs = std::move(next_obs);
    }
    out.success = s.succeeded && !s.fallen;
    return out;
}

struct BlockStats {
    double mean_raw = 0.0;
    double mean_shaped = 0.0;
    double success_rate = 0.0;
    int episodes = 0;
    int epochs_run = 0;
    long steps = 0;
};

// One block of training epochs. With a cache, each episode runs on a freshly
// sampled beta in [alpha, alpha+delta]; otherwise on the fixed robot.
BlockStats run_block(Trainer& tr, const TransferContext& ctx, const RobotCache* cache,
                     const RobotModel* fixed_robot, double alpha, int epochs,
                     bool shaped, Rng& beta_rng, RunCounters& counters) {
    BlockStats bs;
    long start_steps = counters.env_steps;
    for (int e = 0; e < epochs; ++e) {
        if (counters.exhausted()) break;
        std::vector<std::vector<Transition>> epoch_trajs;
        for (int ep = 0; ep < ctx.cfg.episodes_per_epoch; ++ep) {
            if (counters.exhausted()) break;
            const RobotModel* robot = fixed_robot;
            if (cache) {
                double beta = sample_beta(alpha, ctx.cfg.delta, beta_rng);
                robot = &cache->fetch(beta);
            }
            uint64_t seed = derive_seed(ctx.cfg.seed, RngStreamId::EnvReset,
                                        counters.episode_counter++);
            std::vector<Transition> traj;
            std::vector<Transition>* collect =
                tr.wants_trajectories() ? &traj : nullptr;
            EpisodeOutcome eo = run_training_episode(tr, *robot, ctx.family,
                                                     ctx.cfg.shaping_h, shaped, seed,
                                                     counters, collect);
            bs.mean_raw += eo.raw_sum;
            bs.mean_shaped += eo.shaped_sum;
            bs.success_rate += eo.success ? 1.0 : 0.0;
            bs.episodes += 1;
            if (collect && !traj.empty()) epoch_trajs.push_back(std::move(traj));
        }
        tr.on_epoch(epoch_trajs);
        bs.epochs_run += 1;
    }
    if (bs.episodes > 0) {
        bs.mean_raw /= bs.episodes;
        bs.mean_shaped /= bs.episodes;
        bs.success_rate /= bs.episodes;
    }
    bs.steps = counters.env_steps - start_steps;
    return bs;
}

FinalEval evaluate_trainer(const Trainer& tr, const RobotModel& robot,
                           const EnvFamily& family, int episodes, uint64_t seed) {
    std::vector<EpisodeStats> stats(episodes);
    parallel_for(episodes, [&](int i) {
        Policy pol = [&tr](const std::vector<double>& obs) { return tr.act_eval(obs); };
        stats[i] = run_episode(robot, family, pol,
                               derive_seed(seed, RngStreamId::Eval, i), family.horizon);
    });
    FinalEval ev;
    ev.episodes = episodes;
    for (const auto& s : stats) {
        ev.mean_reward += s.total_reward;
        ev.success_rate += s.success ? 1.0 : 0.0;
    }
    ev.mean_reward /= episodes;
    ev.success_rate /= episodes;
    return ev;
}

void fill_record(PhaseRecord& rec, const BlockStats& bs, bool merge) {
    if (merge) {
        rec.epochs_used += bs.epochs_run;
        rec.env_steps += bs.steps;
    } else {
        rec.epochs_used = bs.epochs_run;
        rec.env_steps = bs.steps;
    }
    rec.mean_raw_reward = bs.mean_raw;
    rec.mean_shaped_reward = bs.mean_shaped;
    rec.success_rate = bs.success_rate;
}

}  // namespace

TransferReport run_transfer(const TransferContext& ctx, Checkpoint* final_policy) {
    ctx.cfg.validate();
    std::unique_ptr<Trainer> trainer =
        make_trainer(ctx, ctx.mode == RunMode::FromScratch);

    TransferReport rep;
    RunCounters counters;
    counters.budget = ctx.cfg.total_step_budget;
    Rng beta_rng(derive_seed(ctx.cfg.seed, RngStreamId::BetaSample, 0));

    if (ctx.mode == RunMode::Revolver) {
        RobotCache cache = RobotCache::build(ctx.corr, ctx.cfg.cache_size);
        std::unique_ptr<AgentSnapshot> last_good;
        int last_good_phase = -10;
        for (int k = 0;; ++k) {
            double alpha = k * ctx.cfg.step;
            if (alpha >= 1.0 - 1e-12) break;
            if (counters.exhausted()) {
                rep.completed = false;
                break;
            }
            PhaseRecord rec;
            rec.alpha = alpha;
            BlockStats bs = run_block(*trainer, ctx, &cache, nullptr, alpha,
                                      ctx.cfg.epochs_per_phase, true, beta_rng,
                                      counters);
            fill_record(rec, bs, false);

            const PhaseRecord* prev = rep.phases.empty() ? nullptr : &rep.phases.back();
            while (adaptive_extend(rec, prev, ctx.cfg, ctx.family.reward_mode)) {
                if (rec.extensions >= ctx.cfg.max_ne_extensions) {
                    std::cerr << "warning: phase alpha=" << alpha
                              << " hit the extension cap without recovering\n";
                    break;
                }
                if (counters.exhausted()) break;
                rec.extensions += 1;
                BlockStats ext = run_block(*trainer, ctx, &cache, nullptr, alpha,
                                           ctx.cfg.epochs_per_phase, true, beta_rng,
                                           counters);
                fill_record(rec, ext, true);
            }

            // Sparse tasks can lose the behaviour entirely inside one phase;
            // training then sees all-zero returns and never climbs back. Keep
            // a snapshot of the last phase that still succeeded and roll back
            // to it on a total collapse — but only while the snapshot's beta
            // window still overlaps the current one. A stale agent re-imposed
            // past its own window only wipes out whatever latent competence
            // training has built since.
            if (ctx.family.reward_mode == RewardMode::Sparse) {
                if (rec.success_rate >= ctx.cfg.success_floor) {
                    last_good = trainer->snapshot();
                    last_good_phase = k;
                } else if (rec.success_rate == 0.0 && last_good &&
                           (k - last_good_phase) * ctx.cfg.step <
                               ctx.cfg.delta - 1e-12) {
                    trainer->restore(*last_good);
                    rec.reverted = true;
                }
            }

            double alpha_next = std::min((k + 1) * ctx.cfg.step, 1.0);
            rec.buffer_removed =
                trainer->clean(alpha_next, std::min(alpha_next + ctx.cfg.delta, 1.0));
            rep.phases.push_back(rec);
        }

        // leftover global budget is spent fine-tuning on the exact target
        if (ctx.cfg.finish_on_target && counters.budget > 0 && !counters.exhausted() &&
            rep.completed) {
            PhaseRecord rec;
            rec.alpha = 1.0;
            const RobotModel& target = cache.fetch(1.0);
            BlockStats bs = run_block(*trainer, ctx, nullptr, &target, 1.0,
                                      std::numeric_limits<int>::max(), true, beta_rng,
                                      counters);
            fill_record(rec, bs, false);
            rep.phases.push_back(rec);
        }
    } else {
        // baselines: all budget on the target robot, raw rewards
        RobotModel target = interpolate(ctx.corr, 1.0);
        PhaseRecord rec;
        rec.alpha = 1.0;
        int epochs = counters.budget > 0 ? std::numeric_limits<int>::max()
                                         : ctx.cfg.epochs_per_phase;
        BlockStats bs = run_block(*trainer, ctx, nullptr, &target, 1.0, epochs, false,
                                  beta_rng, counters);
        fill_record(rec, bs, false);
        rep.phases.push_back(rec);
    }

    RobotModel target = interpolate(ctx.corr, 1.0);
    rep.final_eval = evaluate_trainer(*trainer, target, ctx.family,
                                      ctx.cfg.eval_episodes, ctx.cfg.seed);
    rep.total_env_steps = counters.env_steps;
    if (final_policy) trainer->save(*final_policy);
    if (ctx.mode == RunMode::Revolver && rep.completed) rep.validate();
    return rep;
}

TransferReport run_pretrain(const TransferContext& ctx, double beta, long step_budget,
                            Checkpoint* final_policy) {
    ctx.cfg.validate();
    std::unique_ptr<Trainer> trainer = make_trainer(ctx, true);

    TransferReport rep;
    RunCounters counters;
    counters.budget = step_budget;
    Rng beta_rng(derive_seed(ctx.cfg.seed, RngStreamId::BetaSample, 0));

    RobotModel robot = interpolate(ctx.corr, beta);
    PhaseRecord rec;
    rec.alpha = beta;
    int epochs = step_budget > 0 ? std::numeric_limits<int>::max()
                                 : ctx.cfg.epochs_per_phase;
    BlockStats bs =
        run_block(*trainer, ctx, nullptr, &robot, beta, epochs, false, beta_rng,
                  counters);
    fill_record(rec, bs, false);
    rep.phases.push_back(rec);

    rep.final_eval = evaluate_trainer(*trainer, robot, ctx.family,
                                      ctx.cfg.eval_episodes, ctx.cfg.seed);
    rep.total_env_steps = counters.env_steps;
    if (final_policy) trainer->save(*final_policy);
    return rep;
}

FinalEval evaluate_policy(const TransferContext& ctx, const Checkpoint& policy,
                          double beta, int episodes, uint64_t seed) {
    TransferContext local = ctx;
    if (policy.strings.count("kind")) local.cfg.rl_backend = policy.strings.at("kind");
    std::unique_ptr<Trainer> trainer;
    if (local.cfg.rl_backend == "td3") {
        trainer = std::make_unique<Td3Trainer>(get_td3(policy, local.td3), local.cfg);
    } else {
        trainer = std::make_unique<PgTrainer>(get_pg(policy, local.pg), local.cfg);
    }
    RobotModel robot = interpolate(ctx.corr, beta);
    if (trainer->obs_dim() != observation_dim(robot, ctx.family) ||
        trainer->act_dim() != robot.tree.joint_count())
        throw std::runtime_error(
            "checkpoint dimensions do not match the configured robots/family");
    return evaluate_trainer(*trainer, robot, ctx.family, episodes, seed);
}

}  // namespace revolver
