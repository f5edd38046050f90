#include "revolver/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

namespace revolver {

namespace {

struct Entry {
    std::string section, key, value;
    int line;
};

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<Entry> tokenize(const std::string& text) {
    std::vector<Entry> entries;
    std::istringstream is(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("malformed section header '" + line + "'", line_no);
            section = trim(line.substr(1, line.size() - 2));
            if (section != "robots" && section != "family" && section != "rl" &&
                section != "revolver")
                throw ConfigError("unknown section [" + section + "]", line_no);
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected key = value, got '" + line + "'", line_no);
        if (section.empty())
            throw ConfigError("key before any [section]", line_no);
        Entry e;
        e.section = section;
        e.key = trim(line.substr(0, eq));
        e.value = trim(line.substr(eq + 1));
        e.line = line_no;
        if (e.key.empty()) throw ConfigError("empty key", line_no);
        entries.push_back(std::move(e));
    }
    return entries;
}

double parse_num(const Entry& e) {
    try {
        size_t pos = 0;
        double v = std::stod(e.value, &pos);
        if (pos != e.value.size() || !std::isfinite(v)) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw ConfigError("key '" + e.key + "' expects a number, got '" + e.value + "'",
                          e.line);
    }
}

long parse_int(const Entry& e) {
    double v = parse_num(e);
    long i = static_cast<long>(v);
    if (static_cast<double>(i) != v)
        throw ConfigError("key '" + e.key + "' expects an integer, got '" + e.value +
                              "'",
                          e.line);
    return i;
}

bool parse_bool(const Entry& e) {
    if (e.value == "true") return true;
    if (e.value == "false") return false;
    throw ConfigError("key '" + e.key + "' expects true or false, got '" + e.value +
                          "'",
                      e.line);
}

Vec3 parse_vec3(const Entry& e) {
    std::string v = e.value;
    std::replace(v.begin(), v.end(), ',', ' ');
    std::istringstream is(v);
    Vec3 out{};
    if (!(is >> out[0] >> out[1] >> out[2]))
        throw ConfigError("key '" + e.key + "' expects x,y,z", e.line);
    std::string rest;
    if (is >> rest) throw ConfigError("key '" + e.key + "' expects exactly 3 values",
                                      e.line);
    return out;
}

std::vector<int> parse_int_list(const Entry& e) {
    std::string v = e.value;
    std::replace(v.begin(), v.end(), ',', ' ');
    std::istringstream is(v);
    std::vector<int> out;
    int x;
    while (is >> x) {
        if (x <= 0)
            throw ConfigError("key '" + e.key + "' expects positive integers", e.line);
        out.push_back(x);
    }
    if (out.empty())
        throw ConfigError("key '" + e.key + "' expects a comma-separated list", e.line);
    return out;
}

void apply_family_defaults(RunConfig& cfg) {
    bool manip = cfg.family.family == FamilyId::ReachGrasp;
    if (manip) {
        cfg.family = EnvFamily::reach_grasp();
        cfg.transfer.rl_backend = "pg";
        cfg.td3.hidden = {32, 32};
        cfg.td3.actor_lr = cfg.td3.critic_lr = 1e-4;
        cfg.td3.batch_size = 16;
        cfg.pg.hidden = {32, 32};
        cfg.pg.actor_lr = 1e-4;
    } else {
        cfg.family = EnvFamily::chain_locomotion();
        cfg.transfer.rl_backend = "td3";
        cfg.td3.hidden = {256, 256};
        cfg.td3.actor_lr = cfg.td3.critic_lr = 3e-4;
        cfg.td3.batch_size = 256;
        cfg.pg.hidden = {256, 256};
        cfg.pg.actor_lr = 3e-4;
    }
}

}  // namespace

ConfigError::ConfigError(const std::string& msg, int line_no)
    : std::runtime_error("config parse error at line " + std::to_string(line_no) +
                         ": " + msg),
      line(line_no) {}

RunConfig parse_config(const std::string& text) {
    std::vector<Entry> entries = tokenize(text);

    RunConfig cfg;
    cfg.raw_text = text;

    // the family choice decides the default hyperparameter block
    for (const Entry& e : entries)
        if (e.section == "family" && e.key == "family")
            cfg.family.family = family_id_from_string(e.value);
    RewardMode keep_reward = cfg.family.reward_mode;
    apply_family_defaults(cfg);
    cfg.family.reward_mode = keep_reward;

    for (const Entry& e : entries) {
        try {
            if (e.section == "robots") {
                if (e.key == "source_robot") cfg.source_path = e.value;
                else if (e.key == "target_robot") cfg.target_path = e.value;
                else throw ConfigError("unknown key '" + e.key + "' in section [robots]",
                                       e.line);
            } else if (e.section == "family") {
                EnvFamily& f = cfg.family;
                if (e.key == "family") ;  // handled above
                else if (e.key == "reward") f.reward_mode = reward_mode_from_string(e.value);
                else if (e.key == "horizon") f.horizon = static_cast<int>(parse_int(e));
                else if (e.key == "dt") f.dt = parse_num(e);
                else if (e.key == "gravity") f.gravity = parse_num(e);
                else if (e.key == "fall_penalty") f.fall_penalty = parse_num(e);
                else if (e.key == "fall_fraction") f.fall_fraction = parse_num(e);
                else if (e.key == "action_penalty") f.action_penalty = parse_num(e);
                else if (e.key == "success_distance") f.success_distance = parse_num(e);
                else if (e.key == "object") f.object_pos = parse_vec3(e);
                else if (e.key == "goal") f.goal_pos = parse_vec3(e);
                else if (e.key == "attach_dist") f.attach_dist = parse_num(e);
                else if (e.key == "attach_closure") f.attach_closure = parse_num(e);
                else if (e.key == "detach_closure") f.detach_closure = parse_num(e);
                else if (e.key == "success_radius") f.success_radius = parse_num(e);
                else if (e.key == "closure_bonus") f.closure_bonus = parse_num(e);
                else if (e.key == "contact_scale") f.contact_scale = parse_num(e);
                else if (e.key == "thrust_damping") f.thrust_damping = parse_num(e);
                else throw ConfigError("unknown key '" + e.key + "' in section [family]",
                                       e.line);
            } else if (e.section == "rl") {
                if (e.key == "backend") {
                    if (e.value != "td3" && e.value != "pg")
                        throw ConfigError("backend must be td3 or pg", e.line);
                    cfg.transfer.rl_backend = e.value;
                } else if (e.key == "hidden") {
                    cfg.td3.hidden = cfg.pg.hidden = parse_int_list(e);
                } else if (e.key == "actor_lr") {
                    cfg.td3.actor_lr = cfg.pg.actor_lr = parse_num(e);
                } else if (e.key == "critic_lr") {
                    cfg.td3.critic_lr = parse_num(e);
                } else if (e.key == "baseline_lr") {
                    cfg.pg.baseline_lr = parse_num(e);
                } else if (e.key == "gamma") {
                    cfg.td3.gamma = cfg.pg.gamma = parse_num(e);
                } else if (e.key == "tau") {
                    cfg.td3.tau = parse_num(e);
                } else if (e.key == "exploration_noise") {
                    cfg.td3.exploration_noise = parse_num(e);
                } else if (e.key == "target_noise") {
                    cfg.td3.target_noise = parse_num(e);
                } else if (e.key == "noise_clip") {
                    cfg.td3.noise_clip = parse_num(e);
                } else if (e.key == "policy_delay") {
                    cfg.td3.policy_delay = static_cast<int>(parse_int(e));
                } else if (e.key == "batch_size") {
                    cfg.td3.batch_size = static_cast<int>(parse_int(e));
                } else if (e.key == "sigma") {
                    cfg.pg.sigma = parse_num(e);
                } else if (e.key == "normalize_advantages") {
                    cfg.pg.normalize_advantages = parse_bool(e);
                } else {
                    throw ConfigError("unknown key '" + e.key + "' in section [rl]",
                                      e.line);
                }
            } else {  // [revolver]
                TransferConfig& t = cfg.transfer;
                if (e.key == "delta") t.delta = parse_num(e);
                else if (e.key == "step") t.step = parse_num(e);
                else if (e.key == "h") t.shaping_h = parse_num(e);
                else if (e.key == "epochs_per_phase") t.epochs_per_phase = static_cast<int>(parse_int(e));
                else if (e.key == "max_ne_extensions") t.max_ne_extensions = static_cast<int>(parse_int(e));
                else if (e.key == "drop_threshold") t.drop_threshold = parse_num(e);
                else if (e.key == "success_floor") t.success_floor = parse_num(e);
                else if (e.key == "cache_size") t.cache_size = static_cast<int>(parse_int(e));
                else if (e.key == "seed") t.seed = static_cast<uint64_t>(parse_int(e));
                else if (e.key == "episodes_per_epoch") t.episodes_per_epoch = static_cast<int>(parse_int(e));
                else if (e.key == "budget") t.total_step_budget = parse_int(e);
                else if (e.key == "finish_on_target") t.finish_on_target = parse_bool(e);
                else if (e.key == "eval_episodes") t.eval_episodes = static_cast<int>(parse_int(e));
                else if (e.key == "buffer_capacity") t.buffer_capacity = static_cast<size_t>(parse_int(e));
                else if (e.key == "train_start") t.train_start = static_cast<int>(parse_int(e));
                else if (e.key == "mode") cfg.mode = run_mode_from_string(e.value);
                else if (e.key == "expert") cfg.expert_checkpoint = e.value;
                else throw ConfigError("unknown key '" + e.key + "' in section [revolver]",
                                       e.line);
            }
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& ex) {
            throw ConfigError(std::string(ex.what()) + " (key '" + e.key + "')", e.line);
        }
    }

    cfg.transfer.validate();
    if (cfg.family.horizon < 1) throw std::invalid_argument("horizon must be >= 1");
    if (!(cfg.family.dt > 0.0)) throw std::invalid_argument("dt must be positive");
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str());
}

}  // namespace revolver
