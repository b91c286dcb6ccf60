#pragma once

#include <stdexcept>
#include <string>

namespace qtrader {

enum class Action : int { Sit = 0, Buy = 1, Sell = 2 };

inline const char* to_string(Action a) {
    switch (a) {
        case Action::Sit: return "sit";
        case Action::Buy: return "buy";
        case Action::Sell: return "sell";
    }
    return "?";
}

inline Action action_from_string(const std::string& s) {
    if (s == "sit") return Action::Sit;
    if (s == "buy") return Action::Buy;
    if (s == "sell") return Action::Sell;
    throw std::invalid_argument("unknown action '" + s + "'");
}

}  // namespace qtrader
