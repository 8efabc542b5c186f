#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <toml.hpp>

#include "factguard/error.hpp"
#include "factguard/reward.hpp"

namespace factguard {

namespace {

struct Key {
    const char* name;
    bool nonnegative;
};

constexpr Key kKeys[] = {
    {"lambda_risk", true},   {"alpha_fp", true},       {"gamma_fn", true},      {"r_tool_plus", true},
    {"r_tool_minus", true},  {"r_format_valid", false}, {"r_acc_correct", false}, {"beta", true},
};

double* slot(RewardSettings& s, std::string_view key) {
    if (key == "lambda_risk") return &s.rewards.lambda_risk;
    if (key == "alpha_fp") return &s.rewards.alpha_fp;
    if (key == "gamma_fn") return &s.rewards.gamma_fn;
    if (key == "r_tool_plus") return &s.rewards.r_tool_plus;
    if (key == "r_tool_minus") return &s.rewards.r_tool_minus;
    if (key == "r_format_valid") return &s.rewards.r_format_valid;
    if (key == "r_acc_correct") return &s.rewards.r_acc_correct;
    if (key == "beta") return &s.beta;
    return nullptr;
}

void check_value(std::string_view key, double v, bool nonnegative) {
    if (!std::isfinite(v)) throw Error("CONFIG", fmt::format("{} must be finite", key));
    if (nonnegative && v < 0.0) throw Error("CONFIG", fmt::format("{} must be >= 0, got {}", key, v));
}

} // namespace

void validate_reward_config(const RewardConfig& cfg) {
    RewardSettings s{cfg, 0.0};
    for (const auto& k : kKeys) check_value(k.name, *slot(s, k.name), k.nonnegative);
}

RewardSettings with_overrides(RewardSettings base, const std::vector<std::pair<std::string, double>>& values) {
    for (const auto& [key, v] : values) {
        double* target = slot(base, key);
        if (!target) throw Error("CONFIG", fmt::format("unknown key '{}'", key));
        *target = v;
    }
    validate_reward_config(base.rewards);
    check_value("beta", base.beta, true);
    return base;
}

RewardSettings parse_reward_settings(std::string_view toml_text) {
    toml::table table;
    try {
        table = toml::parse(toml_text);
    } catch (const toml::parse_error& e) {
        throw Error("CONFIG", fmt::format("line {}: {}", e.source().begin.line, e.description()));
    }
    std::vector<std::pair<std::string, double>> values;
    for (const auto& [key, node] : table) {
        const auto value = node.value<double>(); // integers convert
        if (!value || node.is_boolean())
            throw Error("CONFIG", fmt::format("{} must be a number", key.str()));
        values.emplace_back(std::string(key.str()), *value);
    }
    return with_overrides(RewardSettings{}, values);
}

RewardSettings load_reward_settings(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("IO", "cannot read " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_reward_settings(buf.str());
}

} // namespace factguard
