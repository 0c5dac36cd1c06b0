#pragma once

// Equal-width binned calibration metrics and binary classification metrics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "calib/csv.hpp"
#include "calib/error.hpp"
#include "calib/score_model.hpp"

namespace calib {

/// floor(sqrt(n)), the default number of bins for a set of n scores.
inline std::size_t bin_count_for(std::size_t n) {
    if (n == 0) throw EmptyInputError("bin count requested for zero records");
    auto r = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
    while (r * r > n) --r;
    while ((r + 1) * (r + 1) <= n) ++r;
    return std::max<std::size_t>(r, 1);
}

/// Index of the equal-width bin holding `score`; 1.0 lands in the last bin.
inline std::size_t bin_index(double score, std::size_t bin_count) noexcept {
    auto idx = static_cast<std::size_t>(score * static_cast<double>(bin_count));
    return std::min(idx, bin_count - 1);
}

struct Bin {
    double lower = 0.0;
    double upper = 0.0;
    std::size_t count = 0;
    std::optional<double> mean_confidence;  // absent when count == 0
    std::optional<double> positive_rate;    // absent when count == 0

    /// |positive_rate - mean_confidence|, only for non-empty bins.
    double gap() const { return std::abs(*positive_rate - *mean_confidence); }
};

struct BinnedCalibration {
    std::vector<Bin> bins;
    std::size_t total = 0;

    std::size_t bin_count() const noexcept { return bins.size(); }
};

inline BinnedCalibration bin_scores(const ScoreSet& set, std::size_t bin_count) {
    if (set.empty()) throw EmptyInputError("cannot bin an empty score set");
    if (bin_count == 0) throw DomainError("bin count must be positive");
    std::vector<double> conf_sum(bin_count, 0.0);
    std::vector<std::size_t> positives(bin_count, 0);
    BinnedCalibration out;
    out.total = set.size();
    out.bins.resize(bin_count);
    for (const auto& r : set) {
        const auto b = bin_index(r.score, bin_count);
        ++out.bins[b].count;
        positives[b] += static_cast<std::size_t>(r.label);
    }
    // accumulate confidences in sorted order so record order cannot change a bit
    auto scores = set.scores();
    if (!std::is_sorted(scores.begin(), scores.end())) std::sort(scores.begin(), scores.end());
    for (double s : scores) conf_sum[bin_index(s, bin_count)] += s;
    const double width = static_cast<double>(bin_count);
    for (std::size_t b = 0; b < bin_count; ++b) {
        auto& bin = out.bins[b];
        bin.lower = static_cast<double>(b) / width;
        bin.upper = b + 1 == bin_count ? 1.0 : static_cast<double>(b + 1) / width;
        if (bin.count) {
            const auto c = static_cast<double>(bin.count);
            bin.mean_confidence = conf_sum[b] / c;
            bin.positive_rate = static_cast<double>(positives[b]) / c;
        }
    }
    return out;
}

inline BinnedCalibration bin_scores(const ScoreSet& set) {
    if (set.empty()) throw EmptyInputError("cannot bin an empty score set");
    return bin_scores(set, bin_count_for(set.size()));
}

namespace detail {

inline void require_records(const BinnedCalibration& b) {
    if (b.total == 0) throw EmptyInputError("binned calibration holds no records");
}

inline double mce_raw(const BinnedCalibration& b) {
    double worst = 0.0;
    for (const auto& bin : b.bins)
        if (bin.count) worst = std::max(worst, bin.gap());
    return worst;
}

inline double ece_raw(const BinnedCalibration& b) {
    double acc = 0.0;
    for (const auto& bin : b.bins)
        if (bin.count) acc += static_cast<double>(bin.count) * bin.gap();
    return acc / static_cast<double>(b.total);
}

inline double rmsce_raw(const BinnedCalibration& b) {
    double acc = 0.0;
    for (const auto& bin : b.bins)
        if (bin.count) acc += static_cast<double>(bin.count) * bin.gap() * bin.gap();
    return std::sqrt(acc / static_cast<double>(b.total));
}

}  // namespace detail

// The weighted mean, weighted RMS and max of the same gaps satisfy
// ece <= rmsce <= mce exactly; the clamps below remove last-ulp rounding
// that would otherwise break that ordering when all gaps are equal.

/// Count-weighted mean absolute gap over non-empty bins.
inline double ece(const BinnedCalibration& b) {
    detail::require_records(b);
    return std::min(detail::ece_raw(b), detail::mce_raw(b));
}

/// Largest gap over non-empty bins.
inline double mce(const BinnedCalibration& b) {
    detail::require_records(b);
    return detail::mce_raw(b);
}

/// Square root of the count-weighted mean squared gap over non-empty bins.
inline double rmsce(const BinnedCalibration& b) {
    detail::require_records(b);
    const double hi = detail::mce_raw(b);
    const double lo = std::min(detail::ece_raw(b), hi);
    return std::clamp(detail::rmsce_raw(b), lo, hi);
}

struct CalibrationSummary {
    std::size_t bin_count = 0;
    double ece = 0.0;
    double mce = 0.0;
    double rmsce = 0.0;
};

inline CalibrationSummary summarize(const BinnedCalibration& b) {
    return {b.bin_count(), ece(b), mce(b), rmsce(b)};
}

inline void check_threshold(double threshold) {
    if (!(threshold >= 0.0 && threshold <= 1.0))
        throw DomainError(fmt::format("threshold {} outside [0,1]", threshold));
}

/// 1 iff score >= threshold.
inline std::vector<int> classify(const ScoreSet& set, double threshold = 0.5) {
    check_threshold(threshold);
    std::vector<int> out;
    out.reserve(set.size());
    for (const auto& r : set) out.push_back(r.score >= threshold ? 1 : 0);
    return out;
}

struct ClassificationCounts {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

    std::size_t total() const noexcept { return tp + fp + fn + tn; }
};

inline ClassificationCounts count_outcomes(std::span<const int> pred, std::span<const int> truth) {
    if (pred.size() != truth.size())
        throw AlignmentError(fmt::format("prediction/label length mismatch ({} vs {})",
                                         pred.size(), truth.size()));
    ClassificationCounts c;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i]) (truth[i] ? c.tp : c.fp)++;
        else (truth[i] ? c.fn : c.tn)++;
    }
    return c;
}

/// Precision, recall and F1 as fractions. A zero denominator yields 0 and
/// sets the matching flag instead of failing.
struct PRF1 {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool precision_undefined = false;
    bool recall_undefined = false;

    bool degenerate() const noexcept { return precision_undefined || recall_undefined; }
};

inline PRF1 prf1(const ClassificationCounts& c) {
    PRF1 out;
    if (c.tp + c.fp == 0) out.precision_undefined = true;
    else out.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    if (c.tp + c.fn == 0) out.recall_undefined = true;
    else out.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    if (out.precision + out.recall > 0.0)
        out.f1 = 2.0 * out.precision * out.recall / (out.precision + out.recall);
    return out;
}

inline PRF1 prf1(std::span<const int> pred, std::span<const int> truth) {
    return prf1(count_outcomes(pred, truth));
}

/// F1 at `threshold` directly from a score set.
inline PRF1 prf1(const ScoreSet& set, double threshold = 0.5) {
    const auto pred = classify(set, threshold);
    const auto truth = set.labels();
    return prf1(pred, truth);
}

struct HistogramData {
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<std::size_t> correct;
    std::vector<std::size_t> incorrect;
    std::vector<double> correct_pct;    // percent of all records
    std::vector<double> incorrect_pct;
};

/// Confidence histogram on the bin_scores grid, split by whether the
/// prediction at 0.5 matches the label.
inline HistogramData histogram_data(const ScoreSet& set, std::size_t bin_count) {
    if (set.empty()) throw EmptyInputError("cannot build a histogram of an empty score set");
    if (bin_count == 0) throw DomainError("bin count must be positive");
    HistogramData h;
    h.correct.assign(bin_count, 0);
    h.incorrect.assign(bin_count, 0);
    for (const auto& r : set) {
        const auto b = bin_index(r.score, bin_count);
        const int pred = r.score >= 0.5 ? 1 : 0;
        (pred == r.label ? h.correct : h.incorrect)[b]++;
    }
    const auto n = static_cast<double>(set.size());
    for (std::size_t b = 0; b < bin_count; ++b) {
        h.lower.push_back(static_cast<double>(b) / static_cast<double>(bin_count));
        h.upper.push_back(b + 1 == bin_count ? 1.0
                                             : static_cast<double>(b + 1) / static_cast<double>(bin_count));
        h.correct_pct.push_back(100.0 * static_cast<double>(h.correct[b]) / n);
        h.incorrect_pct.push_back(100.0 * static_cast<double>(h.incorrect[b]) / n);
    }
    return h;
}

inline HistogramData histogram_data(const ScoreSet& set) {
    if (set.empty()) throw EmptyInputError("cannot build a histogram of an empty score set");
    return histogram_data(set, bin_count_for(set.size()));
}

struct ReliabilityPoint {
    double lower = 0.0;
    double upper = 0.0;
    std::size_t count = 0;
    double mean_confidence = 0.0;
    double positive_rate = 0.0;
};

/// One point per non-empty bin; empty bins are omitted.
inline std::vector<ReliabilityPoint> reliability_data(const BinnedCalibration& b) {
    std::vector<ReliabilityPoint> out;
    for (const auto& bin : b.bins)
        if (bin.count)
            out.push_back({bin.lower, bin.upper, bin.count, *bin.mean_confidence, *bin.positive_rate});
    return out;
}

inline std::string full_precision(double v) { return fmt::format("{:.17g}", v); }

inline std::string reliability_csv(const std::vector<ReliabilityPoint>& points) {
    std::string out = "bin_lower,bin_upper,count,mean_confidence,positive_rate\n";
    for (const auto& p : points)
        out += fmt::format("{},{},{},{},{}\n", full_precision(p.lower), full_precision(p.upper),
                           p.count, full_precision(p.mean_confidence), full_precision(p.positive_rate));
    return out;
}

inline std::string histogram_csv(const HistogramData& h) {
    std::string out = "bin_lower,bin_upper,count,correct_pct,incorrect_pct\n";
    for (std::size_t b = 0; b < h.correct.size(); ++b)
        out += fmt::format("{},{},{},{},{}\n", full_precision(h.lower[b]), full_precision(h.upper[b]),
                           h.correct[b] + h.incorrect[b], full_precision(h.correct_pct[b]),
                           full_precision(h.incorrect_pct[b]));
    return out;
}

}  // namespace calib
