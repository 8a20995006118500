#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "robmv/common.hpp"

namespace robmv {

// A simulated data set. Fields that a scenario does not use stay empty.
struct Scenario {
    std::string name;
    std::uint64_t seed = 0;
    Matrix X;
    Vector y;
    std::vector<int> labels;
    std::vector<bool> contaminated;
    Matrix X_test;
    Vector y_test;
    std::vector<int> labels_test;
    Vector truth;  // generating direction or coefficients, scenario specific
    std::map<std::string, double> params;
};

struct ScenarioParams {
    Index n = 0;         // 0: scenario default
    double eps = -1.0;   // contamination fraction, < 0: scenario default
};

std::vector<std::string> scenario_names();
Scenario simulate_scenario(const std::string& name, std::uint64_t seed, const ScenarioParams& params = {});

}  // namespace robmv
