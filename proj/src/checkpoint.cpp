#include "revolver/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace revolver {

namespace {

constexpr const char* kMagic = "revolver-checkpoint v1";

std::string hex_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%a", x);
    return buf;
}

double parse_double(const std::string& s) {
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw std::runtime_error("checkpoint: bad number '" + s + "'");
    return v;
}

void write_vector(std::ostream& os, const std::vector<double>& v) {
    os << v.size();
    for (double x : v) os << ' ' << hex_double(x);
    os << '\n';
}

std::vector<double> read_vector(std::istringstream& is) {
    size_t n = 0;
    if (!(is >> n)) throw std::runtime_error("checkpoint: missing vector length");
    std::vector<double> v(n);
    std::string tok;
    for (size_t i = 0; i < n; ++i) {
        if (!(is >> tok)) throw std::runtime_error("checkpoint: truncated vector");
        v[i] = parse_double(tok);
    }
    return v;
}

// Fills a parameter-shaped accumulator from a flat vector.
MlpGrads grads_from_flat(const MlpNet& shape, const std::vector<double>& flat) {
    MlpGrads g = MlpGrads::zeros_like(shape);
    size_t k = 0;
    for (size_t l = 0; l < g.w.size(); ++l) {
        for (double& x : g.w[l]) x = flat.at(k++);
        for (double& x : g.b[l]) x = flat.at(k++);
    }
    if (k != flat.size()) throw std::runtime_error("checkpoint: optimizer state size mismatch");
    return g;
}

}  // namespace

void Checkpoint::save(const std::string& path) const {
    std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::trunc);
        if (!os) throw std::runtime_error("cannot write checkpoint '" + tmp + "'");
        os << kMagic << '\n';
        for (const auto& [k, v] : strings) os << "string " << k << ' ' << v << '\n';
        for (const auto& [k, v] : scalars)
            os << "scalar " << k << ' ' << hex_double(v) << '\n';
        for (const auto& [k, v] : vectors) {
            os << "vector " << k << ' ';
            write_vector(os, v);
        }
        for (const auto& [k, net] : nets) {
            os << "net " << k << ' ' << (net.tanh_output ? "tanh" : "linear") << ' '
               << net.sizes.size();
            for (int s : net.sizes) os << ' ' << s;
            os << ' ';
            write_vector(os, net.flat_params());
        }
        os << "end\n";
        if (!os) throw std::runtime_error("write failure on checkpoint '" + tmp + "'");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("cannot move checkpoint into place at '" + path + "'");
}

Checkpoint Checkpoint::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open checkpoint '" + path + "'");
    std::string line;
    if (!std::getline(is, line) || line != kMagic)
        throw std::runtime_error("not a checkpoint file: '" + path + "'");

    Checkpoint ck;
    bool saw_end = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "end") {
            saw_end = true;
            break;
        } else if (tag == "string") {
            std::string k, v;
            ls >> k;
            std::getline(ls, v);
            if (!v.empty() && v.front() == ' ') v.erase(v.begin());
            ck.strings[k] = v;
        } else if (tag == "scalar") {
            std::string k, v;
            ls >> k >> v;
            ck.scalars[k] = parse_double(v);
        } else if (tag == "vector") {
            std::string k;
            ls >> k;
            ck.vectors[k] = read_vector(ls);
        } else if (tag == "net") {
            std::string k, act;
            size_t nsizes = 0;
            ls >> k >> act >> nsizes;
            MlpNet net;
            net.tanh_output = act == "tanh";
            net.sizes.resize(nsizes);
            for (size_t i = 0; i < nsizes; ++i) ls >> net.sizes[i];
            for (size_t l = 0; l + 1 < net.sizes.size(); ++l) {
                net.w.push_back(std::vector<double>(
                    static_cast<size_t>(net.sizes[l]) * net.sizes[l + 1], 0.0));
                net.b.push_back(std::vector<double>(net.sizes[l + 1], 0.0));
            }
            net.set_flat_params(read_vector(ls));
            ck.nets[k] = std::move(net);
        } else {
            throw std::runtime_error("checkpoint: unknown record '" + tag + "'");
        }
    }
    if (!saw_end) throw std::runtime_error("checkpoint truncated: '" + path + "'");
    return ck;
}

namespace {

void put_adam(Checkpoint& ck, const std::string& prefix, const Adam& opt) {
    ck.scalars[prefix + ".t"] = static_cast<double>(opt.t);
    ck.scalars[prefix + ".lr"] = opt.lr;
    ck.vectors[prefix + ".m"] = opt.m.flat();
    ck.vectors[prefix + ".v"] = opt.v.flat();
}

void get_adam(const Checkpoint& ck, const std::string& prefix, const MlpNet& shape,
              Adam& opt) {
    opt.t = static_cast<int64_t>(ck.scalars.at(prefix + ".t"));
    opt.lr = ck.scalars.at(prefix + ".lr");
    opt.m = grads_from_flat(shape, ck.vectors.at(prefix + ".m"));
    opt.v = grads_from_flat(shape, ck.vectors.at(prefix + ".v"));
}

}  // namespace

void put_td3(Checkpoint& ck, const Td3Agent& agent) {
    ck.strings["kind"] = "td3";
    ck.nets["actor"] = agent.actor;
    ck.nets["critic1"] = agent.critic1;
    ck.nets["critic2"] = agent.critic2;
    ck.nets["target_actor"] = agent.target_actor;
    ck.nets["target_critic1"] = agent.target_critic1;
    ck.nets["target_critic2"] = agent.target_critic2;
    ck.scalars["update_count"] = static_cast<double>(agent.update_count);
    put_adam(ck, "opt_actor", agent.opt_actor);
    put_adam(ck, "opt_critic1", agent.opt_critic1);
    put_adam(ck, "opt_critic2", agent.opt_critic2);
}

Td3Agent get_td3(const Checkpoint& ck, const Td3Config& cfg) {
    if (ck.strings.count("kind") && ck.strings.at("kind") != "td3")
        throw std::runtime_error("checkpoint kind is '" + ck.strings.at("kind") +
                                 "', expected td3");
    Td3Agent a;
    a.cfg = cfg;
    a.actor = ck.nets.at("actor");
    a.critic1 = ck.nets.at("critic1");
    a.critic2 = ck.nets.at("critic2");
    a.target_actor = ck.nets.at("target_actor");
    a.target_critic1 = ck.nets.at("target_critic1");
    a.target_critic2 = ck.nets.at("target_critic2");
    a.update_count = static_cast<int64_t>(ck.scalars.at("update_count"));
    get_adam(ck, "opt_actor", a.actor, a.opt_actor);
    get_adam(ck, "opt_critic1", a.critic1, a.opt_critic1);
    get_adam(ck, "opt_critic2", a.critic2, a.opt_critic2);
    return a;
}

void put_pg(Checkpoint& ck, const PgAgent& agent) {
    ck.strings["kind"] = "pg";
    ck.nets["actor"] = agent.actor;
    ck.nets["baseline"] = agent.baseline;
    put_adam(ck, "opt_actor", agent.opt_actor);
    put_adam(ck, "opt_baseline", agent.opt_baseline);
}

PgAgent get_pg(const Checkpoint& ck, const PgConfig& cfg) {
    if (ck.strings.count("kind") && ck.strings.at("kind") != "pg")
        throw std::runtime_error("checkpoint kind is '" + ck.strings.at("kind") +
                                 "', expected pg");
    PgAgent a;
    a.cfg = cfg;
    a.actor = ck.nets.at("actor");
    a.baseline = ck.nets.at("baseline");
    get_adam(ck, "opt_actor", a.actor, a.opt_actor);
    get_adam(ck, "opt_baseline", a.baseline, a.opt_baseline);
    return a;
}

}  // namespace revolver
