#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "qtrader/backtest.hpp"
#include "qtrader/config.hpp"
#include "qtrader/errors.hpp"
#include "qtrader/gradcheck.hpp"
#include "qtrader/market_data.hpp"
#include "qtrader/network.hpp"
#include "qtrader/plot.hpp"
#include "qtrader/training.hpp"

namespace {

using namespace qtrader;

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

PriceSeries slice_series(const PriceSeries& series, const std::string& from,
                         const std::string& to) {
    if (from.empty() && to.empty()) return series;
    std::optional<Date> lo, hi;
    if (!from.empty()) lo = Date::parse(from);
    if (!to.empty()) hi = Date::parse(to);
    PriceSeries out;
    out.symbol = series.symbol;
    for (const OhlcBar& bar : series.bars) {
        if (lo && bar.date < *lo) continue;
        if (hi && bar.date > *hi) continue;
        out.bars.push_back(bar);
    }
    if (out.bars.empty()) {
        throw DataError("date range [" + (from.empty() ? "..." : from) + ", " +
                        (to.empty() ? "..." : to) + "] selects no bars");
    }
    return out;
}

void check_model_matches_config(const NetworkParams& model, const RunConfig& config) {
    const NetConfig& a = model.cfg;
    const NetConfig& b = config.train.net;
    if (a.window != b.window || a.qubits != b.qubits || a.heads != b.heads ||
        a.layers != b.layers || a.lstm_hidden != b.lstm_hidden) {
        throw ConfigError("model/config mismatch: model is window=" + std::to_string(a.window) +
                          " qubits=" + std::to_string(a.qubits) + " heads=" +
                          std::to_string(a.heads) + " layers=" + std::to_string(a.layers) +
                          ", config says window=" + std::to_string(b.window) + " qubits=" +
                          std::to_string(b.qubits) + " heads=" + std::to_string(b.heads) +
                          " layers=" + std::to_string(b.layers));
    }
}

std::string metric_cell(const std::optional<double>& v, const std::string& note) {
    if (v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%10.4f", *v);
        return buf;
    }
    return "n/a (" + note + ")";
}

void print_report_row(const std::string& name, const BacktestReport& report) {
    std::printf("%-12s  return %9.4f%%  sharpe %s  sortino %s  max_dd %8.4f%%  trades %d\n",
                name.c_str(), report.return_pct,
                metric_cell(report.sharpe, report.sharpe_note).c_str(),
                metric_cell(report.sortino, report.sortino_note).c_str(),
                report.max_drawdown_pct, report.trades);
}

nlohmann::json report_json(const BacktestReport& report) {
    return nlohmann::json::parse(report_to_json(report, ""));
}

int cmd_synth(const std::string& kind, int bars, uint64_t seed, double s0, double mu, double sigma,
              double dt, double amplitude, int period, const std::string& out) {
    PriceSeries series;
    if (kind == "gbm") {
        series = gbm_series(s0, mu, sigma, dt, bars, seed);
    } else if (kind == "sinusoid") {
        series = sinusoid_series(s0, amplitude, period, bars);
    } else {
        throw ConfigError("unknown synthetic kind '" + kind + "' (expected gbm or sinusoid)");
    }
    write_csv(series, out);
    std::printf("wrote %d bars to %s\n", series.size(), out.c_str());
    return 0;
}

int cmd_train(const RunConfig& config, const std::string& data_path, const std::string& model_out,
              const std::string& log_out) {
    const PriceSeries series = load_csv(data_path);
    const TrainResult result = train(series, config.train);

    save_model(result.params, config.train.seed, config_to_json_text(config), model_out);
    if (!log_out.empty()) {
        write_episode_log_csv(result.log, log_out);
    }

    if (result.log.empty()) {
        std::printf("trained 0 episodes; wrote initialized model to %s\n", model_out.c_str());
    } else {
        const EpisodeLog& last = result.log.back();
        std::printf("episode %d: cum_reward %.6f mean_loss %.6f steps %d\n", last.episode,
                    last.cum_reward, last.mean_loss, last.steps);
        std::printf("wrote model to %s\n", model_out.c_str());
    }
    return 0;
}

int cmd_backtest(const std::string& model_path, const std::string& data_path, double commission,
                 double periods_per_year, const std::string& from, const std::string& to,
                 const std::string& report_out, const std::string& trades_out) {
    const NetworkParams model = load_model(model_path);
    const PriceSeries series = slice_series(load_csv(data_path), from, to);

    BacktestConfig cfg;
    cfg.commission = commission;
    cfg.periods_per_year = periods_per_year;
    const auto [report, trades] = run_backtest(greedy_policy(model), series, cfg);

    nlohmann::json echo;
    echo["model"] = model_path;
    echo["data"] = data_path;
    echo["commission"] = commission;
    echo["from"] = from;
    echo["to"] = to;
    echo["window"] = model.cfg.window;
    echo["qubits"] = model.cfg.qubits;
    const std::string json_text = report_to_json(report, echo.dump());

    if (report_out.empty()) {
        std::printf("%s\n", json_text.c_str());
    } else {
        std::ofstream out(report_out);
        if (!out) throw DataError("cannot open report output: " + report_out);
        out << json_text << '\n';
        print_report_row("model", report);
    }
    if (!trades_out.empty()) {
        write_trade_csv(trades, trades_out);
    }
    return 0;
}

int cmd_compare(const std::string& model_path, const std::string& data_path,
                const RunConfig& config, double commission, const std::string& from,
                const std::string& to, const std::string& out_path) {
    const NetworkParams model = load_model(model_path);
    const PriceSeries series = slice_series(load_csv(data_path), from, to);

    BacktestConfig cfg;
    cfg.commission = commission;
    cfg.periods_per_year = config.periods_per_year;

    struct Row {
        std::string name;
        Policy policy;
    };
    const std::vector<Row> rows = {
        {"agent", greedy_policy(model)},
        {"dual_thrust", dual_thrust_policy(config.train.dual_thrust)},
        {"buy_hold", buy_and_hold_policy()},
    };

    nlohmann::json out = nlohmann::json::object();
    for (const Row& row : rows) {
        try {
            const auto [report, trades] = run_backtest(row.policy, series, cfg);
            print_report_row(row.name, report);
            out[row.name] = report_json(report);
        } catch (const DataError& e) {
            std::printf("%-12s  n/a (%s)\n", row.name.c_str(), e.what());
            out[row.name] = {{"error", e.what()}};
        }
    }
    if (!out_path.empty()) {
        std::ofstream file(out_path);
        if (!file) throw DataError("cannot open comparison output: " + out_path);
        file << out.dump(2) << '\n';
    }
    return 0;
}

int cmd_plot(const std::string& data_path, const std::string& trades_path,
             const std::string& out_path) {
    const PriceSeries series = load_csv(data_path);
    const TradeLog trades = load_trade_csv(trades_path);
    write_trade_svg(series, trades, out_path);
    std::printf("wrote %s\n", out_path.c_str());
    return 0;
}

int cmd_gradcheck(double ps_tol, double net_tol, uint64_t seed) {
    const GradCheckReport report = run_gradcheck(ps_tol, net_tol, seed);
    std::printf("%s", report.to_string().c_str());
    return report.passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hybrid quantum-classical deep Q-learning trading agent"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "JSON config file")->expected(1);

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic OHLC CSV fixture");
    std::string synth_kind = "gbm", synth_out = "synthetic.csv";
    int synth_bars = 500, synth_period = 50;
    uint64_t synth_seed = 42;
    double synth_s0 = 100.0, synth_mu = 0.05, synth_sigma = 0.2, synth_dt = 1.0 / 252.0;
    double synth_amplitude = 20.0;
    synth->add_option("--kind", synth_kind, "gbm or sinusoid");
    synth->add_option("--bars", synth_bars, "number of bars");
    synth->add_option("--seed", synth_seed, "rng seed (gbm)");
    synth->add_option("--s0", synth_s0, "initial price");
    synth->add_option("--mu", synth_mu, "drift per year (gbm)");
    synth->add_option("--sigma", synth_sigma, "volatility per sqrt-year (gbm)");
    synth->add_option("--dt", synth_dt, "years per bar (gbm)");
    synth->add_option("--amplitude", synth_amplitude, "wave amplitude (sinusoid)");
    synth->add_option("--period", synth_period, "wave period in bars (sinusoid)");
    synth->add_option("--out", synth_out, "output CSV path");

    // train
    auto* train_cmd = app.add_subcommand("train", "Train a model on an OHLC CSV");
    std::string train_data, train_out = "model.json", train_log;
    int train_episodes = -1;
    int train_threads = 0;
    uint64_t train_seed = 0;
    bool train_seed_set = false, train_episodes_set = false, train_threads_set = false;
    train_cmd->add_option("--data", train_data, "training data CSV")->required();
    train_cmd->add_option("--out", train_out, "model output path");
    train_cmd->add_option("--log", train_log, "episode log CSV path");
    train_cmd->add_option("--episodes", train_episodes, "override episode count")
        ->each([&](const std::string&) { train_episodes_set = true; });
    train_cmd->add_option("--seed", train_seed, "override rng seed")
        ->each([&](const std::string&) { train_seed_set = true; });
    train_cmd->add_option("--threads", train_threads, "batch workers")
        ->each([&](const std::string&) { train_threads_set = true; });

    // backtest
    auto* bt = app.add_subcommand("backtest", "Run the greedy policy of a model over a CSV");
    std::string bt_model, bt_data, bt_from, bt_to, bt_out, bt_trades;
    double bt_commission = 0.002;
    bt->add_option("--model", bt_model, "model JSON")->required();
    bt->add_option("--data", bt_data, "data CSV")->required();
    bt->add_option("--commission", bt_commission, "commission rate per trade");
    bt->add_option("--from", bt_from, "first date (YYYY-MM-DD)");
    bt->add_option("--to", bt_to, "last date (YYYY-MM-DD)");
    bt->add_option("--out", bt_out, "report JSON path (default: stdout)");
    bt->add_option("--trades", bt_trades, "trade log CSV path");

    // compare
    auto* cmp = app.add_subcommand("compare", "Model vs Dual Thrust vs Buy & Hold");
    std::string cmp_model, cmp_data, cmp_from, cmp_to, cmp_out;
    double cmp_commission = 0.002;
    cmp->add_option("--model", cmp_model, "model JSON")->required();
    cmp->add_option("--data", cmp_data, "data CSV")->required();
    cmp->add_option("--commission", cmp_commission, "commission rate per trade");
    cmp->add_option("--from", cmp_from, "first date (YYYY-MM-DD)");
    cmp->add_option("--to", cmp_to, "last date (YYYY-MM-DD)");
    cmp->add_option("--out", cmp_out, "comparison JSON path");

    // plot
    auto* plot = app.add_subcommand("plot", "Render a trade chart as SVG");
    std::string plot_data, plot_trades, plot_out = "trades.svg";
    plot->add_option("--data", plot_data, "data CSV")->required();
    plot->add_option("--trades", plot_trades, "trade log CSV")->required();
    plot->add_option("--out", plot_out, "SVG output path");

    // gradcheck
    auto* gc = app.add_subcommand("gradcheck", "Verify analytic gradients vs finite differences");
    double gc_tolerance = -1.0, gc_ps_tol = 1e-6, gc_net_tol = 1e-3;
    uint64_t gc_seed = 42;
    gc->add_option("--tolerance", gc_tolerance, "override both tolerances");
    gc->add_option("--ps-tolerance", gc_ps_tol, "parameter-shift vs fd tolerance");
    gc->add_option("--net-tolerance", gc_net_tol, "full-network vs fd tolerance");
    gc->add_option("--seed", gc_seed, "rng seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        RunConfig config = config_path.empty() ? default_config() : load_config(config_path);

        if (synth->parsed()) {
            return cmd_synth(synth_kind, synth_bars, synth_seed, synth_s0, synth_mu, synth_sigma,
                             synth_dt, synth_amplitude, synth_period, synth_out);
        }
        if (train_cmd->parsed()) {
            if (train_episodes_set) config.train.episodes = train_episodes;
            if (train_seed_set) config.train.seed = train_seed;
            if (train_threads_set) config.train.threads = train_threads;
            validate(config);
            return cmd_train(config, train_data, train_out, train_log);
        }
        if (bt->parsed()) {
            if (!config_path.empty()) {
                check_model_matches_config(load_model(bt_model), config);
                if (bt->count("--commission") == 0) bt_commission = config.train.commission;
            }
            return cmd_backtest(bt_model, bt_data, bt_commission, config.periods_per_year,
                                bt_from, bt_to, bt_out, bt_trades);
        }
        if (cmp->parsed()) {
            if (!config_path.empty()) {
                check_model_matches_config(load_model(cmp_model), config);
                if (cmp->count("--commission") == 0) cmp_commission = config.train.commission;
            }
            return cmd_compare(cmp_model, cmp_data, config, cmp_commission, cmp_from, cmp_to,
                               cmp_out);
        }
        if (plot->parsed()) {
            return cmd_plot(plot_data, plot_trades, plot_out);
        }
        if (gc->parsed()) {
            if (gc_tolerance >= 0.0) {
                gc_ps_tol = gc_tolerance;
                gc_net_tol = gc_tolerance;
            }
            return cmd_gradcheck(gc_ps_tol, gc_net_tol, gc_seed);
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kExitData;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNumeric;
    }
    return 0;
}
