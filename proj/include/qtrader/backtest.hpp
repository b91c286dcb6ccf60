#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qtrader/action.hpp"
#include "qtrader/market_data.hpp"
#include "qtrader/network.hpp"
#include "qtrader/strategies.hpp"

namespace qtrader {

// Long-only, all-in/all-out book with fractional units.
struct Portfolio {
    double cash = 1.0;
    double units = 0.0;

    bool is_long() const { return units > 0.0; }
    double equity(double price) const { return cash + units * price; }
};

struct TradeRecord {
    int bar = 0;
    Date date;
    Action action = Action::Sit;
    double price = 0.0;
    double units = 0.0;       // units bought or sold
    double commission = 0.0;  // currency paid on this trade
};
using TradeLog = std::vector<TradeRecord>;

struct BacktestReport {
    double return_pct = 0.0;
    std::optional<double> sharpe;
    std::optional<double> sortino;
    std::string sharpe_note;   // set when sharpe is undefined
    std::string sortino_note;  // set when sortino is undefined
    double max_drawdown_pct = 0.0;
    int trades = 0;
    std::vector<double> equity_curve;
};

// Executes at the given price. Buy when flat invests all cash, sell when long
// liquidates everything; invalid actions degrade to Sit. Returns the executed
// action and reports the commission paid through *commission_paid.
Action step(Portfolio& portfolio, Action action, double price, double commission_rate,
            double* commission_paid = nullptr);

// ln(equity / prev_equity), clamped to [-clip, +clip].
double reward_log_return(double prev_equity, double equity, double clip);

double max_drawdown(std::span<const double> equity_curve);

// Annualized mean/std of the simple returns; sample (n-1) std, risk-free 0.
std::optional<double> sharpe_ratio(std::span<const double> returns, double periods_per_year,
                                   std::string* note = nullptr);

// Annualized mean over downside deviation sqrt(mean(min(r,0)^2)).
std::optional<double> sortino_ratio(std::span<const double> returns, double periods_per_year,
                                    std::string* note = nullptr);

struct Policy {
    int warmup = 0;  // earliest bar the policy can decide on
    std::function<Action(const PriceSeries& series, int bar, bool is_long)> decide;
};

struct BacktestConfig {
    double commission = 0.002;
    double periods_per_year = 252.0;
    double initial_cash = 1.0;
};

// Greedy evaluation from the first decidable bar; any open position is
// liquidated at the final close so returns are comparable to Buy & Hold.
std::pair<BacktestReport, TradeLog> run_backtest(const Policy& policy, const PriceSeries& series,
                                                 const BacktestConfig& config);

Policy sit_policy(int warmup = 0);
Policy buy_and_hold_policy();
Policy dual_thrust_policy(const DualThrustParams& params);
Policy random_policy(uint64_t seed, int warmup);
// Greedy argmax over the model's Q-values; warmup is the model's window size.
Policy greedy_policy(const NetworkParams& params);

// Deterministic episode environment shared by training and pre-population.
// Decisions run at bars window..T-2; each step trades at the current close and
// marks to market at the next close.
class TradingEnv {
  public:
    TradingEnv(const PriceSeries& series, int window, double commission_rate, double reward_clip,
               double initial_cash = 1.0);

    void reset();
    bool done() const { return bar_ + 1 >= series_->size(); }
    int current_bar() const { return bar_; }
    int steps_per_episode() const { return series_->size() - window_ - 1; }
    const FeatureWindow& state() const { return state_; }
    const Portfolio& portfolio() const { return portfolio_; }

    struct StepResult {
        double reward = 0.0;
        bool done = false;
        Action executed = Action::Sit;
    };
    StepResult step(Action action);

  private:
    const PriceSeries* series_;
    int window_;
    double commission_;
    double reward_clip_;
    double initial_cash_;
    int bar_ = 0;
    Portfolio portfolio_;
    FeatureWindow state_;
};

// CSV: "bar,date,action,price,units,commission".
void write_trade_csv(const TradeLog& log, const std::string& path);
TradeLog load_trade_csv(const std::string& path);

// JSON report with the Table-style metric keys; optional config echo.
std::string report_to_json(const BacktestReport& report, const std::string& config_echo_json);

}  // namespace qtrader
