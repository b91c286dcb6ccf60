#include "qtrader/backtest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "qtrader/errors.hpp"

#include "json.hpp"

#include "qtrader/rng.hpp"

namespace qtrader {

Action step(Portfolio& portfolio, Action action, double price, double commission_rate,
            double* commission_paid) {
    if (price <= 0.0) throw std::invalid_argument("step: price must be positive");
    if (commission_rate < 0.0 || commission_rate >= 1.0) {
        throw std::invalid_argument("step: commission rate must be in [0, 1)");
    }
    double paid = 0.0;
    Action executed = Action::Sit;
    if (action == Action::Buy && !portfolio.is_long() && portfolio.cash > 0.0) {
        paid = portfolio.cash * commission_rate;
        portfolio.units = portfolio.cash * (1.0 - commission_rate) / price;
        portfolio.cash = 0.0;
        executed = Action::Buy;
    } else if (action == Action::Sell && portfolio.is_long()) {
        const double proceeds = portfolio.units * price;
        paid = proceeds * commission_rate;
        portfolio.cash += proceeds * (1.0 - commission_rate);
        portfolio.units = 0.0;
        executed = Action::Sell;
    }
    if (commission_paid) *commission_paid = paid;
    return executed;
}

double reward_log_return(double prev_equity, double equity, double clip) {
    if (prev_equity <= 0.0 || equity <= 0.0) {
        throw std::invalid_argument("reward: equities must be positive");
    }
    return std::clamp(std::log(equity / prev_equity), -clip, clip);
}

double max_drawdown(std::span<const double> equity_curve) {
    if (equity_curve.empty()) {
        throw std::invalid_argument("max_drawdown: empty equity curve");
    }
    double peak = equity_curve[0];
    double worst = 0.0;
    for (double e : equity_curve) {
        peak = std::max(peak, e);
        worst = std::max(worst, (peak - e) / peak);
    }
    return worst;
}

std::optional<double> sharpe_ratio(std::span<const double> returns, double periods_per_year,
                                   std::string* note) {
    if (returns.size() < 2) {
        if (note) *note = "needs at least 2 returns";
        return std::nullopt;
    }
    double mean = 0.0;
    for (double r : returns) mean += r;
    mean /= static_cast<double>(returns.size());
    double ss = 0.0;
    for (double r : returns) ss += (r - mean) * (r - mean);
    const double stddev = std::sqrt(ss / static_cast<double>(returns.size() - 1));
    if (stddev == 0.0) {
        if (note) *note = "zero variance";
        return std::nullopt;
    }
    return mean / stddev * std::sqrt(periods_per_year);
}

std::optional<double> sortino_ratio(std::span<const double> returns, double periods_per_year,
                                    std::string* note) {
    if (returns.empty()) {
        if (note) *note = "no returns";
        return std::nullopt;
    }
    double mean = 0.0;
    double downside_ss = 0.0;
    for (double r : returns) {
        mean += r;
        if (r < 0.0) downside_ss += r * r;
    }
    mean /= static_cast<double>(returns.size());
    const double downside = std::sqrt(downside_ss / static_cast<double>(returns.size()));
    if (downside == 0.0) {
        if (note) *note = "no negative returns";
        return std::nullopt;
    }
    return mean / downside * std::sqrt(periods_per_year);
}

std::pair<BacktestReport, TradeLog> run_backtest(const Policy& policy, const PriceSeries& series,
                                                 const BacktestConfig& config) {
    const int total = series.size();
    if (total < policy.warmup + 2) {
        throw DataError("series too short: " + std::to_string(total) +
                                 " bars, policy needs " + std::to_string(policy.warmup + 2));
    }

    Portfolio portfolio;
    portfolio.cash = config.initial_cash;
    TradeLog log;
    BacktestReport report;
    report.equity_curve.push_back(portfolio.cash);

    for (int t = policy.warmup; t < total; ++t) {
        const double price = series.bars[t].close;
        Action wanted = Action::Sit;
        if (t < total - 1) {
            wanted = policy.decide(series, t, portfolio.is_long());
        } else if (portfolio.is_long()) {
            wanted = Action::Sell;  // final liquidation
        }
        const double units_before = portfolio.units;
        double paid = 0.0;
        const Action executed = step(portfolio, wanted, price, config.commission, &paid);
        if (executed != Action::Sit) {
            TradeRecord rec;
            rec.bar = t;
            rec.date = series.bars[t].date;
            rec.action = executed;
            rec.price = price;
            rec.units = executed == Action::Buy ? portfolio.units : units_before;
            rec.commission = paid;
            log.push_back(rec);
        }
        report.equity_curve.push_back(portfolio.equity(price));
    }

    const auto& curve = report.equity_curve;
    report.return_pct = (curve.back() / curve.front() - 1.0) * 100.0;
    report.max_drawdown_pct = max_drawdown(curve) * 100.0;
    report.trades = static_cast<int>(log.size());

    std::vector<double> returns(curve.size() - 1);
    for (size_t i = 0; i + 1 < curve.size(); ++i) {
        returns[i] = curve[i + 1] / curve[i] - 1.0;
    }
    report.sharpe = sharpe_ratio(returns, config.periods_per_year, &report.sharpe_note);
    report.sortino = sortino_ratio(returns, config.periods_per_year, &report.sortino_note);
    return {std::move(report), std::move(log)};
}

Policy sit_policy(int warmup) {
    return {warmup, [](const PriceSeries&, int, bool) { return Action::Sit; }};
}

Policy buy_and_hold_policy() {
    return {0, [](const PriceSeries&, int, bool is_long) {
                return is_long ? Action::Sit : Action::Buy;
            }};
}

Policy dual_thrust_policy(const DualThrustParams& params) {
    return {params.lookback, [params](const PriceSeries& series, int t, bool is_long) {
                return dual_thrust_decide(series, t, is_long, params);
            }};
}

Policy random_policy(uint64_t seed, int warmup) {
    auto rng = std::make_shared<Rng>(seed);
    return {warmup, [rng](const PriceSeries&, int, bool) {
                return static_cast<Action>(rng->below(3));
            }};
}

Policy greedy_policy(const NetworkParams& params) {
    auto shared = std::make_shared<NetworkParams>(params);
    auto spec = std::make_shared<CircuitSpec>(circuit_for(params.cfg));
    return {params.cfg.window, [shared, spec](const PriceSeries& series, int t, bool) {
                const FeatureWindow w = feature_window(series, t, shared->cfg.window);
                const QValues q = forward_values(*shared, w, *spec);
                int best = 0;
                for (int a = 1; a < kActionCount; ++a) {
                    if (q[a] > q[best]) best = a;
                }
                return static_cast<Action>(best);
            }};
}

TradingEnv::TradingEnv(const PriceSeries& series, int window, double commission_rate,
                       double reward_clip, double initial_cash)
    : series_(&series),
      window_(window),
      commission_(commission_rate),
      reward_clip_(reward_clip),
      initial_cash_(initial_cash) {
    if (series.size() < window + 2) {
        throw DataError("series too short for one window plus one step: " +
                                 std::to_string(series.size()) + " bars, need " +
                                 std::to_string(window + 2));
    }
    reset();
}

void TradingEnv::reset() {
    bar_ = window_;
    portfolio_ = Portfolio{initial_cash_, 0.0};
    state_ = feature_window(*series_, bar_, window_);
}

TradingEnv::StepResult TradingEnv::step(Action action) {
    if (done()) throw std::logic_error("TradingEnv::step called on a finished episode");
    const double price = series_->bars[bar_].close;
    const double next_price = series_->bars[bar_ + 1].close;
    const double prev_equity = portfolio_.equity(price);
    StepResult result;
    result.executed = qtrader::step(portfolio_, action, price, commission_);
    result.reward = reward_log_return(prev_equity, portfolio_.equity(next_price), reward_clip_);
    ++bar_;
    state_ = feature_window(*series_, bar_, window_);
    result.done = done();
    return result;
}

void write_trade_csv(const TradeLog& log, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open trade log for writing: " + path);
    out << "bar,date,action,price,units,commission\n";
    char buf[32];
    auto fmt = [&buf](double v) {
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
        (void)ec;
        return std::string(buf, ptr);
    };
    for (const TradeRecord& rec : log) {
        out << rec.bar << ',' << rec.date.to_string() << ',' << to_string(rec.action) << ','
            << fmt(rec.price) << ',' << fmt(rec.units) << ',' << fmt(rec.commission) << '\n';
    }
    if (!out) throw DataError("write failed: " + path);
}

TradeLog load_trade_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open trade log: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty trade log: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "bar,date,action,price,units,commission") {
        throw DataError("bad trade log header in " + path);
    }
    TradeLog log;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::string cur;
        for (char c : line) {
            if (c == ',') {
                fields.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        fields.push_back(cur);
        if (fields.size() != 6) {
            throw DataError("malformed trade row at line " + std::to_string(line_no));
        }
        TradeRecord rec;
        rec.bar = std::stoi(fields[0]);
        rec.date = Date::parse(fields[1]);
        rec.action = action_from_string(fields[2]);
        rec.price = std::stod(fields[3]);
        rec.units = std::stod(fields[4]);
        rec.commission = std::stod(fields[5]);
        log.push_back(rec);
    }
    return log;
}

std::string report_to_json(const BacktestReport& report, const std::string& config_echo_json) {
    nlohmann::json j;
    j["return_pct"] = report.return_pct;
    if (report.sharpe) {
        j["sharpe"] = *report.sharpe;
    } else {
        j["sharpe"] = nullptr;
        j["sharpe_note"] = report.sharpe_note;
    }
    if (report.sortino) {
        j["sortino"] = *report.sortino;
    } else {
        j["sortino"] = nullptr;
        j["sortino_note"] = report.sortino_note;
    }
    j["max_drawdown_pct"] = report.max_drawdown_pct;
    j["trades"] = report.trades;
    if (!config_echo_json.empty()) {
        j["config"] = nlohmann::json::parse(config_echo_json);
    }
    return j.dump(2);
}

}  // namespace qtrader
