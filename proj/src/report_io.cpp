#include "revolver/report_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace revolver {

std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

uint64_t fnv1a64(const std::string& bytes) {
    uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(uint64_t v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp);
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw std::runtime_error("short write to " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

std::string report_csv(const TransferReport& report) {
    std::ostringstream out;
    out << "phase,alpha,epochs_used,extensions,mean_shaped_reward,mean_raw_reward,"
           "success_rate,buffer_removed,env_steps,reverted\n";
    for (size_t i = 0; i < report.phases.size(); ++i) {
        const PhaseRecord& p = report.phases[i];
        out << i << ',' << format_double(p.alpha) << ',' << p.epochs_used << ','
            << p.extensions << ',' << format_double(p.mean_shaped_reward) << ','
            << format_double(p.mean_raw_reward) << ',' << format_double(p.success_rate)
            << ',' << p.buffer_removed << ',' << p.env_steps << ','
            << (p.reverted ? 1 : 0) << '\n';
    }
    return out.str();
}

std::string final_eval_csv(const TransferReport& report) {
    std::ostringstream out;
    out << "mean_reward,success_rate,episodes\n";
    out << format_double(report.final_eval.mean_reward) << ','
        << format_double(report.final_eval.success_rate) << ','
        << report.final_eval.episodes << '\n';
    return out.str();
}

void export_report(const TransferReport& report, const RunManifest& manifest,
                   const std::string& dir) {
    report.validate();

    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir))
        throw std::runtime_error("cannot create output directory " + dir);

    namespace fs = std::filesystem;
    write_file_atomic((fs::path(dir) / "report.csv").string(), report_csv(report));
    write_file_atomic((fs::path(dir) / "final_eval.csv").string(), final_eval_csv(report));

    nlohmann::json j;
    j["code_version"] = manifest.code_version;
    j["subcommand"] = manifest.subcommand;
    j["args"] = manifest.args;
    j["config_hash"] = manifest.config_hash;
    j["seed"] = manifest.seed;
    j["wall_seconds"] = manifest.wall_seconds;
    j["phases"] = report.phases.size();
    j["total_env_steps"] = report.total_env_steps;
    j["completed"] = report.completed;
    write_file_atomic((fs::path(dir) / "manifest.json").string(), j.dump(2) + "\n");
}

std::vector<TrajectoryRow> record_rollout(const RobotModel& model,
                                          const EnvFamily& family, const Policy& policy,
                                          uint64_t seed, int horizon) {
    std::vector<TrajectoryRow> rows;
    EnvState state = reset(model, family, seed);
    for (int t = 0; t < horizon; ++t) {
        std::vector<double> action = policy(observation(model, family, state));
        StepResult res = step(model, family, state, action);
        TrajectoryRow row;
        row.step = t;
        row.beta = model.beta;
        row.q = res.state.q;
        row.qdot = res.state.qdot;
        row.action = action;
        row.reward = res.reward;
        row.done = res.done;
        rows.push_back(std::move(row));
        state = res.state;
        if (res.done) break;
    }
    return rows;
}

std::string trajectory_csv(const std::vector<TrajectoryRow>& rows) {
    std::ostringstream out;
    const size_t nq = rows.empty() ? 0 : rows.front().q.size();
    const size_t na = rows.empty() ? 0 : rows.front().action.size();
    out << "step,beta";
    for (size_t i = 0; i < nq; ++i) out << ",q" << i;
    for (size_t i = 0; i < nq; ++i) out << ",qdot" << i;
    for (size_t i = 0; i < na; ++i) out << ",action" << i;
    out << ",reward,done\n";
    for (const TrajectoryRow& r : rows) {
        out << r.step << ',' << format_double(r.beta);
        for (double v : r.q) out << ',' << format_double(v);
        for (double v : r.qdot) out << ',' << format_double(v);
        for (double v : r.action) out << ',' << format_double(v);
        out << ',' << format_double(r.reward) << ',' << (r.done ? 1 : 0) << '\n';
    }
    return out.str();
}

std::string theorem_csv(const ValidationReport& report) {
    std::ostringstream out;
    out << "trial,delta,interval-lo,interval-hi,alpha-prime,contained\n";
    for (const TheoremTrialRow& r : report.rows) {
        out << r.trial << ',' << format_double(r.delta) << ','
            << format_double(r.interval_lo) << ',' << format_double(r.interval_hi) << ','
            << format_double(r.alpha_prime) << ',' << (r.contained ? 1 : 0) << '\n';
    }
    return out.str();
}

}  // namespace revolver
