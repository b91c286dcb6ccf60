#pragma once

#include <string>

#include "qtrader/training.hpp"

namespace qtrader {

// Every tunable in one place. Defaults follow the reference setup: 24-day
// window, 4 qubits, gamma 0.95, 200 episodes, k1 0.8 / k2 0.4, 0.2% commission.
struct RunConfig {
    TrainConfig train;
    double periods_per_year = 252.0;

    BacktestConfig backtest_config() const {
        return BacktestConfig{train.commission, periods_per_year, 1.0};
    }
};

RunConfig default_config();

// JSON object with flat keys; unknown keys are rejected. Missing keys keep
// their defaults. Throws ConfigError on invalid values.
RunConfig config_from_json_text(const std::string& text);
RunConfig load_config(const std::string& path);
std::string config_to_json_text(const RunConfig& config);

void validate(const RunConfig& config);

}  // namespace qtrader
