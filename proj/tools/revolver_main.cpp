#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "revolver/config.hpp"
#include "revolver/report_io.hpp"
#include "revolver/robot_description.hpp"
#include "revolver/theorem.hpp"
#include "revolver/transfer.hpp"

namespace {

constexpr const char* kVersion = "revolver 0.1.0";

// exit codes: 0 ok, 1 usage/config/runtime error, 3 numerical divergence
constexpr int kExitError = 1;
constexpr int kExitDivergence = 3;

namespace fs = std::filesystem;
using namespace revolver;

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    int64_t seed = -1;  // -1: keep the config's seed
};

struct LoadedRun {
    RunConfig cfg;
    TransferContext ctx;
};

LoadedRun load_run(const CommonArgs& args) {
    LoadedRun run;
    run.cfg = load_config(args.config_path);
    if (args.seed >= 0) run.cfg.transfer.seed = static_cast<uint64_t>(args.seed);
    if (run.cfg.source_path.empty() || run.cfg.target_path.empty())
        throw std::runtime_error(
            "config must set source_robot and target_robot in [robots]");

    // robot paths are resolved relative to the config file
    fs::path base = fs::path(args.config_path).parent_path();
    auto resolve = [&](const std::string& p) {
        fs::path q(p);
        return (q.is_absolute() || base.empty()) ? q.string() : (base / q).string();
    };

    KinematicTree source = load_robot_file(resolve(run.cfg.source_path));
    KinematicTree target = load_robot_file(resolve(run.cfg.target_path));
    run.ctx.corr = match_morphology(source, target);
    run.ctx.family = run.cfg.family;
    run.ctx.cfg = run.cfg.transfer;
    run.ctx.td3 = run.cfg.td3;
    run.ctx.pg = run.cfg.pg;
    run.ctx.mode = run.cfg.mode;
    run.ctx.expert_checkpoint = run.cfg.expert_checkpoint;
    if (!run.ctx.expert_checkpoint.empty())
        run.ctx.expert_checkpoint = resolve(run.ctx.expert_checkpoint);
    return run;
}

RunManifest make_manifest(const std::string& subcommand, const CommonArgs& args,
                          const RunConfig& cfg, double wall_seconds) {
    RunManifest m;
    m.code_version = kVersion;
    m.subcommand = subcommand;
    m.args = {"--config", args.config_path, "--out", args.out_dir};
    if (args.seed >= 0) {
        m.args.push_back("--seed");
        m.args.push_back(std::to_string(args.seed));
    }
    m.config_hash = hex64(fnv1a64(cfg.raw_text));
    m.seed = cfg.transfer.seed;
    m.wall_seconds = wall_seconds;
    return m;
}

Policy policy_from_checkpoint(const Checkpoint& ck, const RunConfig& cfg) {
    const std::string kind =
        ck.strings.count("kind") ? ck.strings.at("kind") : cfg.transfer.rl_backend;
    if (kind == "td3") {
        auto agent = std::make_shared<Td3Agent>(get_td3(ck, cfg.td3));
        return [agent](const std::vector<double>& obs) { return agent->act(obs); };
    }
    auto agent = std::make_shared<PgAgent>(get_pg(ck, cfg.pg));
    return [agent](const std::vector<double>& obs) { return agent->act(obs); };
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw std::runtime_error("cannot create output directory " + dir);
}

int cmd_pretrain(const CommonArgs& args, double beta) {
    auto t0 = std::chrono::steady_clock::now();
    LoadedRun run = load_run(args);
    Checkpoint policy;
    TransferReport rep =
        run_pretrain(run.ctx, beta, run.cfg.transfer.total_step_budget, &policy);
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                      .count();
    ensure_dir(args.out_dir);
    export_report(rep, make_manifest("pretrain", args, run.cfg, wall), args.out_dir);
    policy.save((fs::path(args.out_dir) / "policy.ckpt").string());
    std::printf("pretrain beta=%g: mean_reward=%.6g success_rate=%.3f env_steps=%ld\n",
                beta, rep.final_eval.mean_reward, rep.final_eval.success_rate,
                rep.total_env_steps);
    return 0;
}

int cmd_transfer(const CommonArgs& args) {
    auto t0 = std::chrono::steady_clock::now();
    LoadedRun run = load_run(args);
    Checkpoint policy;
    TransferReport rep = run_transfer(run.ctx, &policy);
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                      .count();
    ensure_dir(args.out_dir);
    export_report(rep, make_manifest("transfer", args, run.cfg, wall), args.out_dir);
    policy.save((fs::path(args.out_dir) / "policy.ckpt").string());
    std::printf(
        "transfer mode=%s: phases=%zu final mean_reward=%.6g success_rate=%.3f "
        "env_steps=%ld%s\n",
        to_string(run.ctx.mode).c_str(), rep.phases.size(), rep.final_eval.mean_reward,
        rep.final_eval.success_rate, rep.total_env_steps,
        rep.completed ? "" : " (budget exhausted early)");
    return 0;
}

int cmd_eval(const CommonArgs& args, const std::string& checkpoint_path, double beta) {
    LoadedRun run = load_run(args);
    Checkpoint ck = Checkpoint::load(checkpoint_path);
    FinalEval ev = evaluate_policy(run.ctx, ck, beta, run.cfg.transfer.eval_episodes,
                                   run.cfg.transfer.seed);
    std::printf("eval beta=%g: mean_reward=%.6g success_rate=%.3f episodes=%d\n", beta,
                ev.mean_reward, ev.success_rate, ev.episodes);
    if (!args.out_dir.empty()) {
        ensure_dir(args.out_dir);
        TransferReport rep;  // reuse the final_eval CSV shape for the metrics file
        rep.final_eval = ev;
        write_file_atomic((fs::path(args.out_dir) / "eval.csv").string(),
                          final_eval_csv(rep));
        RobotModel robot = interpolate(run.ctx.corr, beta);
        auto rows = record_rollout(
            robot, run.ctx.family, policy_from_checkpoint(ck, run.cfg),
            derive_seed(run.cfg.transfer.seed, RngStreamId::Eval, 0),
            run.ctx.family.horizon);
        write_file_atomic((fs::path(args.out_dir) / "trajectory.csv").string(),
                          trajectory_csv(rows));
    }
    return 0;
}

int cmd_interp(const CommonArgs& args, const std::vector<double>& alphas) {
    LoadedRun run = load_run(args);
    if (!args.out_dir.empty()) ensure_dir(args.out_dir);
    for (size_t i = 0; i < alphas.size(); ++i) {
        RobotModel robot = interpolate(run.ctx.corr, alphas[i]);
        std::string text = "# alpha = " + format_double(alphas[i]) + "\n" +
                           serialize_robot_description(robot.tree);
        if (args.out_dir.empty()) {
            std::fputs(text.c_str(), stdout);
        } else {
            char name[32];
            std::snprintf(name, sizeof(name), "robot_%03zu.rbt", i);
            std::string path = (fs::path(args.out_dir) / name).string();
            write_file_atomic(path, text);
            std::printf("wrote %s (alpha=%g)\n", path.c_str(), alphas[i]);
        }
    }
    return 0;
}

int cmd_validate_theorem(const std::string& out_path, double alpha, double h,
                         const std::vector<double>& deltas, int trials, uint64_t seed) {
    ValidationSettings settings;
    settings.alpha = alpha;
    settings.h = h;
    settings.trials = trials;
    ValidationReport rep = validate_theorem(settings, deltas, seed);
    if (!out_path.empty()) {
        fs::path parent = fs::path(out_path).parent_path();
        if (!parent.empty()) ensure_dir(parent.string());
        write_file_atomic(out_path, theorem_csv(rep));
    }
    for (size_t i = 0; i < rep.deltas.size(); ++i)
        std::printf("delta=%g: agreement=%.4f over %d trials\n", rep.deltas[i],
                    rep.agreement[i], trials);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"continuous robot-to-robot policy transfer"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    CommonArgs args;
    double beta = 0.0;
    std::string checkpoint_path;
    std::vector<double> alphas;
    std::vector<double> deltas = {0.2, 0.1, 0.05};
    double th_alpha = 0.3, th_h = 1.0;
    int trials = 200;
    int64_t th_seed = 0;
    std::string th_out;

    CLI::App* pre = app.add_subcommand("pretrain", "train a policy from scratch on E(beta)");
    pre->add_option("--config", args.config_path)->required();
    pre->add_option("--out", args.out_dir)->required();
    pre->add_option("--seed", args.seed);
    pre->add_option("--beta", beta)->check(CLI::Range(0.0, 1.0));

    CLI::App* tra = app.add_subcommand("transfer", "evolve the source policy to the target robot");
    tra->add_option("--config", args.config_path)->required();
    tra->add_option("--out", args.out_dir)->required();
    tra->add_option("--seed", args.seed);

    CLI::App* ev = app.add_subcommand("eval", "evaluate a checkpoint on E(beta)");
    ev->add_option("--config", args.config_path)->required();
    ev->add_option("--checkpoint", checkpoint_path)->required();
    ev->add_option("--beta", beta)->check(CLI::Range(0.0, 1.0));
    ev->add_option("--seed", args.seed);
    ev->add_option("--out", args.out_dir);

    CLI::App* in = app.add_subcommand("interp", "emit interpolated robot descriptions");
    in->add_option("--config", args.config_path)->required();
    in->add_option("--alphas", alphas)->required()->delimiter(',');
    in->add_option("--out", args.out_dir);

    CLI::App* th = app.add_subcommand("validate-theorem",
                                      "check the shaped-optimum prediction on tabular families");
    th->set_help_flag("--help", "print this help message and exit");  // frees -h for --h
    th->add_option("--alpha", th_alpha)->check(CLI::Range(0.0, 1.0));
    th->add_option("--h", th_h)->check(CLI::NonNegativeNumber);
    th->add_option("--deltas", deltas)->delimiter(',');
    th->add_option("--trials", trials)->check(CLI::PositiveNumber);
    th->add_option("--seed", th_seed);
    th->add_option("--out", th_out);

    CLI11_PARSE(app, argc, argv);

    try {
        if (pre->parsed()) return cmd_pretrain(args, beta);
        if (tra->parsed()) return cmd_transfer(args);
        if (ev->parsed()) return cmd_eval(args, checkpoint_path, beta);
        if (in->parsed()) {
            for (double a : alphas)
                if (a < 0.0 || a > 1.0)
                    throw std::runtime_error("--alphas values must lie in [0,1]");
            return cmd_interp(args, alphas);
        }
        if (th->parsed())
            return cmd_validate_theorem(th_out, th_alpha, th_h, deltas, trials,
                                        static_cast<uint64_t>(th_seed));
    } catch (const NumericalDivergence& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitDivergence;
    } catch (const std::exception& e) {
        std::string msg = e.what();
        std::fprintf(stderr, "error: %s\n", msg.c_str());
        return msg.find("divergence") != std::string::npos ? kExitDivergence
                                                           : kExitError;
    }
    return kExitError;
}
