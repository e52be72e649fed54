#pragma once

// Grid search for theta and gamma on a stratified training subset. Every grid
// point repairs the same subset model and is scored by a composite objective
// over accuracy and the three fairness metrics; trials are independent and
// carry their own derived seeds, so serial and parallel runs agree exactly.
//
// Protocol: one stratified (S x Y) subset of subset_fraction is drawn from
// the training set with the master seed, then divided 80/20 (stratified the
// same way) into a repair-train part and an eval part; each trial repairs on
// the train part and is scored on the eval part.

#include "fairneuron/dataset.hpp"
#include "fairneuron/metrics.hpp"
#include "fairneuron/repair.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace fairneuron {

inline std::vector<double> default_theta_grid() {
    std::vector<double> grid;
    for (int i = 0; i < 9; ++i) grid.push_back(std::pow(10.0, -4.0 + 0.5 * i));
    return grid;
}

inline std::vector<double> default_gamma_grid() {
    return {0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
}

struct GridSpec {
    std::vector<double> theta_grid = default_theta_grid();
    std::vector<double> gamma_grid = default_gamma_grid();
    double subset_fraction = 0.10;
    double w_acc = 1.0;
    double w_dp = 1.0;
    double w_eo = 1.0;
    double w_dpr = 1.0;

    void validate() const {
        if (theta_grid.empty() || gamma_grid.empty()) throw ConfigError("grids must be nonempty");
        for (double t : theta_grid)
            if (!(t > 0.0 && t <= 1.0)) throw ConfigError("theta grid points must lie in (0, 1]");
        for (double g : gamma_grid)
            if (!(g > 0.0 && g <= 1.0)) throw ConfigError("gamma grid points must lie in (0, 1]");
        if (!(subset_fraction > 0.0 && subset_fraction <= 1.0))
            throw ConfigError("subset_fraction must lie in (0, 1]");
        for (double w : {w_acc, w_dp, w_eo, w_dpr})
            if (w < 0.0) throw ConfigError("objective weights must be nonnegative");
    }
};

struct TrialResult {
    int grid_index = 0;
    double theta = 0.0;
    double gamma = 0.0;
    double score = 0.0;
    double wall_seconds = 0.0;
    FairnessReport report;  // eval-part report after repair
    bool failed = false;
    std::string error;
};

struct TuningResult {
    double best_theta = 0.0;
    double best_gamma = 0.0;
    double best_score = 0.0;
    std::vector<TrialResult> trials;  // grid order: theta-major, gamma-minor
};

/// Stratified draw: shuffle each (S, Y) cell with the shared rng and keep a
/// `fraction` share (at least one row from every nonempty cell). Returned
/// indices are ascending.
inline std::vector<int> stratified_subset_indices(const EncodedDataset& data, double fraction,
                                                  Rng& rng) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("fraction must lie in (0, 1]");
    std::vector<int> picked;
    for (int s = 0; s < 2; ++s)
        for (int y = 0; y < 2; ++y) {
            std::vector<int> cell;
            for (int i = 0; i < data.n_rows(); ++i)
                if (data.s[static_cast<std::size_t>(i)] == s && data.y[static_cast<std::size_t>(i)] == y)
                    cell.push_back(i);
            if (cell.empty()) continue;
            const auto order = shuffled_indices(cell.size(), rng);
            const auto take = std::min<std::size_t>(
                cell.size(),
                std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(
                                             fraction * static_cast<double>(cell.size())))));
            for (std::size_t k = 0; k < take; ++k)
                picked.push_back(cell[static_cast<std::size_t>(order[k])]);
        }
    std::sort(picked.begin(), picked.end());
    return picked;
}

/// Composite objective: w_acc*(1-acc) + w_dp*DP + w_eo*EO + w_dpr*(1-fold)
/// where fold = min(DPR, 1/DPR). Undefined or infinite metrics score their
/// term at the worst value 1, so one degenerate trial cannot win or poison
/// the comparison.
inline double tuning_objective(const FairnessReport& report, const GridSpec& grid) {
    const double acc_term = 1.0 - report.acc;
    const double dp_term = report.dp ? *report.dp : 1.0;
    const double eo_term = report.eo ? *report.eo : 1.0;
    double fold = 0.0;
    if (report.dpr && !report.dpr->is_inf && report.dpr->value > 0.0)
        fold = std::min(report.dpr->value, 1.0 / report.dpr->value);
    return grid.w_acc * acc_term + grid.w_dp * dp_term + grid.w_eo * eo_term +
           grid.w_dpr * (1.0 - fold);
}

/// Argmin over successful trials with the deterministic tie-break: smaller
/// score, then smaller theta, then smaller gamma. Throws TuningError listing
/// every per-trial failure when no trial succeeded.
inline const TrialResult& select_best_trial(const std::vector<TrialResult>& trials) {
    const TrialResult* best = nullptr;
    std::vector<std::string> failures;
    for (const TrialResult& trial : trials) {
        if (trial.failed) {
            std::ostringstream label;
            label << "theta=" << trial.theta << " gamma=" << trial.gamma << ": " << trial.error;
            failures.push_back(label.str());
            continue;
        }
        if (!best || trial.score < best->score ||
            (trial.score == best->score &&
             (trial.theta < best->theta ||
              (trial.theta == best->theta && trial.gamma < best->gamma))))
            best = &trial;
    }
    if (!best)
        throw TuningError("all " + std::to_string(trials.size()) + " tuning trials failed",
                          std::move(failures));
    return *best;
}

inline TuningResult tune(const Network& net, const EncodedDataset& train_data, const GridSpec& grid,
                         const RepairConfig& base = RepairConfig{}, std::uint64_t master_seed = 0,
                         int n_workers = 1) {
    grid.validate();
    base.validate();
    if (n_workers < 1) throw ConfigError("n_workers must be at least 1");

    Rng subset_rng(master_seed);
    const std::vector<int> subset_ids = stratified_subset_indices(train_data, grid.subset_fraction,
                                                                  subset_rng);
    if (subset_ids.size() < 50)
        throw DataError("tuning subset has " + std::to_string(subset_ids.size()) +
                        " samples; need at least 50");
    const EncodedDataset subset = train_data.subset(subset_ids);

    // split the subset 80/20 stratified with the same rng stream; the train
    // side is drawn so singleton cells stay available for repair training
    const std::vector<int> train_ids = stratified_subset_indices(subset, 0.8, subset_rng);
    std::vector<int> eval_ids;
    {
        std::vector<char> in_train(static_cast<std::size_t>(subset.n_rows()), 0);
        for (int id : train_ids) in_train[static_cast<std::size_t>(id)] = 1;
        for (int i = 0; i < subset.n_rows(); ++i)
            if (!in_train[static_cast<std::size_t>(i)]) eval_ids.push_back(i);
    }
    if (train_ids.empty() || eval_ids.empty())
        throw DataError("tuning subset too small to divide into train and eval parts");
    const EncodedDataset repair_train = subset.subset(train_ids);
    const EncodedDataset repair_eval = subset.subset(eval_ids);

    std::vector<double> thetas = grid.theta_grid;
    std::vector<double> gammas = grid.gamma_grid;
    std::sort(thetas.begin(), thetas.end());
    std::sort(gammas.begin(), gammas.end());

    const int n_trials = static_cast<int>(thetas.size() * gammas.size());
    std::vector<TrialResult> trials(static_cast<std::size_t>(n_trials));

    const auto run_trial = [&](int index) {
        TrialResult& trial = trials[static_cast<std::size_t>(index)];
        trial.grid_index = index;
        trial.theta = thetas[static_cast<std::size_t>(index) / gammas.size()];
        trial.gamma = gammas[static_cast<std::size_t>(index) % gammas.size()];
        const auto t0 = std::chrono::steady_clock::now();
        try {
            RepairConfig cfg = base;
            cfg.theta = trial.theta;
            cfg.gamma = trial.gamma;
            Network trial_net = net;
            trial_net.rng.seed(master_seed + static_cast<std::uint64_t>(index));
            const RepairOutcome outcome = fairneuron_repair(trial_net, repair_train, repair_eval, cfg);
            trial.report = outcome.after;
            trial.score = tuning_objective(outcome.after, grid);
        } catch (const std::exception& e) {
            trial.failed = true;
            trial.error = e.what();
        }
        trial.wall_seconds = detail::seconds_since(t0);
    };

    if (n_workers == 1) {
        for (int i = 0; i < n_trials; ++i) run_trial(i);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        const int workers = std::min(n_workers, n_trials);
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (int i = next.fetch_add(1); i < n_trials; i = next.fetch_add(1)) run_trial(i);
            });
        for (auto& t : pool) t.join();
    }

    TuningResult result;
    result.trials = std::move(trials);
    const TrialResult& best = select_best_trial(result.trials);
    result.best_theta = best.theta;
    result.best_gamma = best.gamma;
    result.best_score = best.score;
    return result;
}

inline nlohmann::json tuning_to_json(const TuningResult& result) {
    nlohmann::json trials = nlohmann::json::array();
    for (const TrialResult& t : result.trials) {
        nlohmann::json j{
            {"grid_index", t.grid_index},
            {"theta", t.theta},
            {"gamma", t.gamma},
            {"wall_seconds", t.wall_seconds},
        };
        if (t.failed) {
            j["failed"] = true;
            j["error"] = t.error;
        } else {
            j["score"] = t.score;
            j["report"] = t.report.to_json();
        }
        trials.push_back(std::move(j));
    }
    return nlohmann::json{
        {"best", {{"theta", result.best_theta}, {"gamma", result.best_gamma}, {"score", result.best_score}}},
        {"trials", std::move(trials)},
    };
}

/// theta x gamma score surface as CSV for plotting.
inline void export_score_surface(const TuningResult& result, std::ostream& out) {
    out << "theta,gamma,score,accuracy,dp,eo,wall_seconds,failed\n";
    for (const TrialResult& t : result.trials) {
        out << t.theta << ',' << t.gamma << ',';
        if (t.failed) {
            out << ",,,," << t.wall_seconds << ",1\n";
            continue;
        }
        out << t.score << ',' << t.report.acc << ',';
        if (t.report.dp) out << *t.report.dp;
        out << ',';
        if (t.report.eo) out << *t.report.eo;
        out << ',' << t.wall_seconds << ",0\n";
    }
}

inline void export_score_surface(const TuningResult& result, const std::string& file) {
    std::ofstream out(file);
    if (!out) throw Error("cannot open " + file + " for writing");
    export_score_surface(result, out);
    if (!out) throw Error("write failed for " + file);
}

}  // namespace fairneuron
