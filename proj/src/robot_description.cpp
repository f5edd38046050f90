#include "revolver/robot_description.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace revolver {

namespace {

struct Token {
    std::string text;
    int column;
};

std::vector<Token> tokenize(const std::string& line) {
    std::vector<Token> out;
    size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        if (i >= line.size() || line[i] == '#') break;
        size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '#') ++i;
        out.push_back({line.substr(start, i - start), static_cast<int>(start) + 1});
    }
    return out;
}

double parse_number(const std::string& s, int line, int col) {
    size_t pos = 0;
    double v;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw ParseError(line, col, "expected a number, got '" + s + "'");
    }
    if (pos != s.size()) throw ParseError(line, col, "trailing characters in number '" + s + "'");
    if (!std::isfinite(v)) throw ParseError(line, col, "non-finite number '" + s + "'");
    return v;
}

Vec3 parse_vec3(const std::string& s, int line, int col) {
    Vec3 v;
    size_t start = 0;
    for (int k = 0; k < 3; ++k) {
        size_t comma = (k < 2) ? s.find(',', start) : std::string::npos;
        if (k < 2 && comma == std::string::npos)
            throw ParseError(line, col, "expected three comma-separated numbers in '" + s + "'");
        std::string part = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        v[k] = parse_number(part, line, col);
        start = comma + 1;
    }
    return v;
}

// key=value field with a fixed expected key
std::string field(const Token& tok, const std::string& key, int line) {
    auto eq = tok.text.find('=');
    if (eq == std::string::npos || tok.text.substr(0, eq) != key)
        throw ParseError(line, tok.column, "expected '" + key + "=...', got '" + tok.text + "'");
    return tok.text.substr(eq + 1);
}

}  // namespace

KinematicTree parse_robot_description(const std::string& text) {
    KinematicTree tree;
    struct PendingJoint {
        Joint joint;
        std::string child_name;
        int line, col;
    };
    std::vector<PendingJoint> pending;
    std::vector<std::pair<std::string, int>> parent_refs;  // body index -> parent name

    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto toks = tokenize(line);
        if (toks.empty()) continue;
        const std::string& kind = toks[0].text;
        if (kind == "body") {
            if (toks.size() != 6)
                throw ParseError(lineno, toks[0].column,
                                 "body needs: name parent= length= mass= inertia=");
            Body b;
            b.name = toks[1].text;
            std::string parent = field(toks[2], "parent", lineno);
            b.length = parse_vec3(field(toks[3], "length", lineno), lineno, toks[3].column);
            b.mass = parse_number(field(toks[4], "mass", lineno), lineno, toks[4].column);
            b.inertia = parse_vec3(field(toks[5], "inertia", lineno), lineno, toks[5].column);
            if (b.mass < 0.0) throw ParseError(lineno, toks[4].column, "negative mass");
            tree.nodes.push_back(b);
            parent_refs.emplace_back(parent == "none" ? "" : parent, lineno);
        } else if (kind == "joint") {
            if (toks.size() != 6)
                throw ParseError(lineno, toks[0].column,
                                 "joint needs: child= axis= motor= damping= range=");
            PendingJoint pj;
            pj.child_name = field(toks[1], "child", lineno);
            pj.joint.axis = parse_vec3(field(toks[2], "axis", lineno), lineno, toks[2].column);
            pj.joint.motor = parse_number(field(toks[3], "motor", lineno), lineno, toks[3].column);
            pj.joint.damping = parse_number(field(toks[4], "damping", lineno), lineno, toks[4].column);
            Vec3 r{0, 0, 0};
            std::string rs = field(toks[5], "range", lineno);
            auto comma = rs.find(',');
            if (comma == std::string::npos)
                throw ParseError(lineno, toks[5].column, "range needs two numbers 'lo,hi'");
            pj.joint.range_lo = parse_number(rs.substr(0, comma), lineno, toks[5].column);
            pj.joint.range_hi = parse_number(rs.substr(comma + 1), lineno, toks[5].column);
            (void)r;
            double n = norm3(pj.joint.axis);
            if (n < 1e-12) throw ParseError(lineno, toks[2].column, "joint axis is zero");
            for (auto& c : pj.joint.axis) c /= n;
            pj.line = lineno;
            pj.col = toks[1].column;
            pending.push_back(pj);
        } else {
            throw ParseError(lineno, toks[0].column, "unknown directive '" + kind + "'");
        }
    }

    // Resolve names to indices.
    for (size_t i = 0; i < tree.nodes.size(); ++i) {
        const std::string& pname = parent_refs[i].first;
        if (pname.empty()) {
            tree.nodes[i].parent = -1;
            continue;
        }
        int p = tree.find_node(pname);
        if (p < 0)
            throw ParseError(parent_refs[i].second, 1, "unknown body '" + pname + "'");
        tree.nodes[i].parent = p;
    }
    for (auto& pj : pending) {
        int c = tree.find_node(pj.child_name);
        if (c < 0) throw ParseError(pj.line, pj.col, "unknown body '" + pj.child_name + "'");
        pj.joint.child = c;
        tree.joints.push_back(pj.joint);
    }

    tree.validate();
    return tree;
}

KinematicTree load_robot_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open robot file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_robot_description(ss.str());
}

namespace {
std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
std::string vec(const Vec3& v) { return num(v[0]) + "," + num(v[1]) + "," + num(v[2]); }
}  // namespace

std::string serialize_robot_description(const KinematicTree& tree) {
    std::string out;
    for (const auto& b : tree.nodes) {
        out += "body " + b.name +
               " parent=" + (b.parent < 0 ? std::string("none") : tree.nodes[b.parent].name) +
               " length=" + vec(b.length) + " mass=" + num(b.mass) +
               " inertia=" + vec(b.inertia) + "\n";
    }
    for (const auto& j : tree.joints) {
        out += "joint child=" + tree.nodes[j.child].name + " axis=" + vec(j.axis) +
               " motor=" + num(j.motor) + " damping=" + num(j.damping) +
               " range=" + num(j.range_lo) + "," + num(j.range_hi) + "\n";
    }
    return out;
}

}  // namespace revolver
