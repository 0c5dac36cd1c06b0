#pragma once

// Score-space calibration: temperature scaling and score averaging for
// Monte Carlo dropout sub-runs and ensembles, with their grid-search
// parameter selection.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "calib/error.hpp"
#include "calib/metrics.hpp"
#include "calib/score_model.hpp"

namespace calib {

/// Scores are clamped to [kLogitEpsilon, 1 - kLogitEpsilon] before the logit.
inline constexpr double kLogitEpsilon = 1e-12;

inline double logit(double p) noexcept {
    p = std::clamp(p, kLogitEpsilon, 1.0 - kLogitEpsilon);
    return std::log(p / (1.0 - p));
}

inline double sigmoid(double z) noexcept {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

/// sigmoid(logit(p) / temperature).
inline double temperature_scale(double p, double temperature) {
    if (!(temperature > 0.0) || !std::isfinite(temperature))
        throw DomainError(fmt::format("temperature {} must be positive and finite", temperature));
    if (temperature == 1.0) return p;
    const double q = sigmoid(logit(p) / temperature);
    // Keep scores strictly below the 0.5 threshold on the same side; the
    // exact result can round to 0.5 when logit(p) / T is below 1e-17.
    if (p < 0.5 && q >= 0.5) return std::nextafter(0.5, 0.0);
    return q;
}

inline ScoreSet temperature_apply(const ScoreSet& set, double temperature) {
    std::vector<double> scaled;
    scaled.reserve(set.size());
    for (const auto& r : set) scaled.push_back(temperature_scale(r.score, temperature));
    return set.with_scores(scaled, fmt::format("{}|T={}", set.provenance(), temperature));
}

/// `start, start+step, ..., stop` with each value rounded to 12 significant
/// digits so decimal grids come out clean (0.3, not 0.30000000000000004).
inline std::vector<double> make_grid(double start, double stop, double step) {
    if (!(step > 0.0) || !(stop >= start) || !std::isfinite(start) || !std::isfinite(stop))
        throw DomainError(fmt::format("invalid grid {}:{}:{}", start, step, stop));
    const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    std::vector<double> grid;
    grid.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
        grid.push_back(std::stod(fmt::format("{:.12g}", start + static_cast<double>(i) * step)));
    return grid;
}

/// {0.1, 0.2, ..., 10.0}
inline std::vector<double> default_temperature_grid() { return make_grid(0.1, 10.0, 0.1); }

/// {0.05, 0.10, ..., 0.95}
inline std::vector<double> default_dropout_grid() { return make_grid(0.05, 0.95, 0.05); }

struct TemperatureFit {
    double temperature = 1.0;
    double validation_ece = 0.0;
    std::vector<double> grid;
    std::vector<double> per_grid_ece;
};

inline double ece_of(const ScoreSet& set) { return ece(bin_scores(set)); }

/// Grid search for the temperature minimising validation ECE; the first
/// minimum in grid order wins ties.
inline TemperatureFit temperature_fit(const ScoreSet& validation,
                                      std::vector<double> grid = default_temperature_grid()) {
    if (validation.empty()) throw EmptyInputError("validation set is empty");
    if (grid.empty()) throw DomainError("temperature grid is empty");
    for (double t : grid)
        if (!(t > 0.0)) throw DomainError(fmt::format("grid temperature {} must be positive", t));
    // Scaling is monotone, so presorting once keeps every scaled copy sorted
    // and spares the binning step a sort per grid point.
    auto records = validation.records();
    std::stable_sort(records.begin(), records.end(),
                     [](const PredictionRecord& a, const PredictionRecord& b) { return a.score < b.score; });
    const ScoreSet sorted(std::move(records), validation.provenance());
    TemperatureFit fit;
    fit.per_grid_ece.reserve(grid.size());
    std::size_t best = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        fit.per_grid_ece.push_back(ece_of(temperature_apply(sorted, grid[i])));
        if (fit.per_grid_ece[i] < fit.per_grid_ece[best]) best = i;
    }
    fit.temperature = grid[best];
    fit.validation_ece = fit.per_grid_ece[best];
    fit.grid = std::move(grid);
    return fit;
}

inline nlohmann::json to_json(const TemperatureFit& fit) {
    return {{"temperature", fit.temperature},
            {"validation_ece", fit.validation_ece},
            {"grid", fit.grid},
            {"per_grid_ece", fit.per_grid_ece}};
}

/// Position-wise arithmetic mean of aligned score sets. Ids, labels and
/// tags come from the first set.
inline ScoreSet mean_combine(const std::vector<ScoreSet>& sets, std::string provenance = "mean") {
    if (sets.empty()) throw AlignmentError("no score sets to combine");
    const auto& first = sets.front();
    for (std::size_t k = 1; k < sets.size(); ++k) {
        if (sets[k].size() != first.size())
            throw AlignmentError(fmt::format("set {} has {} records, expected {}", k, sets[k].size(),
                                             first.size()));
        for (std::size_t i = 0; i < first.size(); ++i)
            if (sets[k][i].label != first[i].label)
                throw AlignmentError(fmt::format("label mismatch at position {} in set {}", i, k));
    }
    std::vector<double> mean(first.size(), 0.0);
    for (std::size_t i = 0; i < first.size(); ++i) {
        double acc = 0.0;
        double lo = 1.0, hi = 0.0;
        for (const auto& s : sets) {
            acc += s[i].score;
            lo = std::min(lo, s[i].score);
            hi = std::max(hi, s[i].score);
        }
        mean[i] = std::clamp(acc / static_cast<double>(sets.size()), lo, hi);
    }
    return first.with_scores(mean, std::move(provenance));
}

inline constexpr std::size_t kEnsembleSize = 5;

inline ScoreSet ensemble_combine(const std::vector<ScoreSet>& runs) {
    if (runs.size() != kEnsembleSize)
        throw AlignmentError(
            fmt::format("ensemble needs {} runs, got {}", kEnsembleSize, runs.size()));
    return mean_combine(runs, "ensemble");
}

struct DropoutCandidate {
    double probability = 0.0;
    double validation_ece = 0.0;
    double validation_f1 = 0.0;
    bool admissible = false;
};

struct DropoutSelection {
    double probability = 0.0;  // 0.0 when no candidate keeps the baseline F1
    double baseline_f1 = 0.0;
    std::vector<DropoutCandidate> per_candidate;  // ascending p
};

/// Picks the dropout probability with the smallest validation ECE among
/// candidates whose F1 at 0.5 is not lower than the baseline F1. Each
/// candidate set is the mean over its sub-runs.
inline DropoutSelection dropout_select(const std::map<double, ScoreSet>& candidates,
                                       const ScoreSet& baseline) {
    if (candidates.empty()) throw DomainError("no dropout candidates");
    if (baseline.empty()) throw EmptyInputError("baseline validation set is empty");
    DropoutSelection sel;
    sel.baseline_f1 = prf1(baseline).f1;
    const DropoutCandidate* best = nullptr;
    sel.per_candidate.reserve(candidates.size());
    for (const auto& [p, set] : candidates) {
        if (!(p > 0.0 && p < 1.0))
            throw DomainError(fmt::format("dropout probability {} outside (0,1)", p));
        if (set.size() != baseline.size())
            throw AlignmentError(fmt::format("candidate p={} has {} records, baseline {}", p,
                                             set.size(), baseline.size()));
        for (std::size_t i = 0; i < set.size(); ++i)
            if (set[i].label != baseline[i].label)
                throw AlignmentError(fmt::format("candidate p={} label mismatch at {}", p, i));
        DropoutCandidate c;
        c.probability = p;
        c.validation_ece = ece_of(set);
        c.validation_f1 = prf1(set).f1;
        c.admissible = c.validation_f1 >= sel.baseline_f1;
        sel.per_candidate.push_back(c);
    }
    for (const auto& c : sel.per_candidate)
        if (c.admissible && (!best || c.validation_ece < best->validation_ece)) best = &c;
    sel.probability = best ? best->probability : 0.0;
    return sel;
}

inline nlohmann::json to_json(const DropoutSelection& sel) {
    nlohmann::json cands = nlohmann::json::array();
    for (const auto& c : sel.per_candidate)
        cands.push_back({{"p", c.probability},
                         {"validation_ece", c.validation_ece},
                         {"validation_f1", c.validation_f1},
                         {"admissible", c.admissible}});
    return {{"probability", sel.probability},
            {"baseline_f1", sel.baseline_f1},
            {"per_candidate", cands}};
}

}  // namespace calib
