#pragma once

#include <map>
#include <string>
#include <vector>

#include "revolver/mlp.hpp"
#include "revolver/policy_gradient.hpp"
#include "revolver/td3.hpp"

namespace revolver {

// Plain-text key-value checkpoint. Doubles are written as hexfloats so a
// save/load cycle restores every parameter bit-exactly.
struct Checkpoint {
    std::map<std::string, MlpNet> nets;
    std::map<std::string, std::vector<double>> vectors;
    std::map<std::string, double> scalars;
    std::map<std::string, std::string> strings;

    void save(const std::string& path) const;  // atomic: temp file then rename
    static Checkpoint load(const std::string& path);
};

void put_td3(Checkpoint& ck, const Td3Agent& agent);
Td3Agent get_td3(const Checkpoint& ck, const Td3Config& cfg);

void put_pg(Checkpoint& ck, const PgAgent& agent);
PgAgent get_pg(const Checkpoint& ck, const PgConfig& cfg);

}  // namespace revolver
