#pragma once

// Run aggregation, percent change and two-tailed t-tests.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "calib/error.hpp"

namespace calib {

inline constexpr double kSignificanceLevel = 0.05;

struct RunAggregate {
    std::vector<double> values;
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation (n - 1)
};

namespace detail {

// Summing in sorted order makes every statistic independent of value order.
inline double sorted_sum(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return std::accumulate(v.begin(), v.end(), 0.0);
}

inline bool all_equal(std::span<const double> v) {
    return std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>{}) == v.end();
}

}  // namespace detail

inline double mean_of(std::span<const double> v) {
    if (!v.empty() && detail::all_equal(v)) return v.front();
    return detail::sorted_sum({v.begin(), v.end()}) / static_cast<double>(v.size());
}

inline double sample_variance(std::span<const double> v, double mean) {
    if (detail::all_equal(v)) return 0.0;
    std::vector<double> sq;
    sq.reserve(v.size());
    for (double x : v) sq.push_back((x - mean) * (x - mean));
    return detail::sorted_sum(std::move(sq)) / static_cast<double>(v.size() - 1);
}

inline RunAggregate aggregate(std::vector<double> values) {
    if (values.size() < 2)
        throw InsufficientDataError(fmt::format("need at least 2 runs, got {}", values.size()));
    RunAggregate out;
    out.mean = mean_of(values);
    out.std = std::sqrt(sample_variance(values, out.mean));
    out.values = std::move(values);
    return out;
}

/// 100 * (baseline - treated) / baseline; positive means a reduction.
inline double pct_change(double baseline, double treated) {
    if (baseline == 0.0) throw DomainError("percent change against a zero baseline");
    return 100.0 * (baseline - treated) / baseline;
}

namespace detail {

// Continued fraction for the incomplete beta function (modified Lentz).
inline double beta_continued_fraction(double a, double b, double x) {
    constexpr int kMaxIterations = 10000;
    constexpr double kTolerance = 1e-15;
    constexpr double kTiny = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIterations; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kTolerance) return h;
    }
    return h;
}

}  // namespace detail

/// Regularized incomplete beta function I_x(a, b) for a, b > 0.
inline double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0 && b > 0.0)) throw DomainError("incomplete beta needs a, b > 0");
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("incomplete beta needs x in [0,1]");
    if (x == 0.0 || x == 1.0) return x;
    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                             a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

/// P(|T| >= |t|) for Student's t with `df` degrees of freedom.
inline double student_t_two_tailed(double t, double df) {
    if (!(df > 0.0)) throw DomainError("degrees of freedom must be positive");
    if (std::isinf(t)) return 0.0;
    if (t == 0.0) return 1.0;
    return std::clamp(incomplete_beta(0.5 * df, 0.5, df / (df + t * t)), 0.0, 1.0);
}

/// Student's t cumulative distribution function.
inline double student_t_cdf(double t, double df) {
    const double tail = 0.5 * student_t_two_tailed(t, df);
    return t < 0.0 ? tail : 1.0 - tail;
}

enum class Direction { increase, decrease, none };

inline std::string_view to_string(Direction d) noexcept {
    switch (d) {
        case Direction::increase: return "increase";
        case Direction::decrease: return "decrease";
        case Direction::none: return "none";
    }
    return "none";
}

enum class Degeneracy {
    none,
    zero_variance,  // no spread but the means differ: p = 0
    no_difference,  // no spread and equal means: p = 1
};

inline std::string_view to_string(Degeneracy d) noexcept {
    switch (d) {
        case Degeneracy::none: return "none";
        case Degeneracy::zero_variance: return "zero_variance";
        case Degeneracy::no_difference: return "no_difference";
    }
    return "none";
}

/// Two-tailed test at alpha = 0.05. `direction` is the sign of mean(a) - mean(b).
struct TTestResult {
    double statistic = 0.0;
    double degrees_of_freedom = 0.0;
    double p_value = 1.0;
    bool significant = false;
    Direction direction = Direction::none;
    Degeneracy degeneracy = Degeneracy::none;
};

namespace detail {

inline Direction direction_of(double diff) {
    return diff > 0.0 ? Direction::increase : diff < 0.0 ? Direction::decrease : Direction::none;
}

inline TTestResult finish(double diff, double se, double df) {
    TTestResult r;
    r.degrees_of_freedom = df;
    r.direction = direction_of(diff);
    if (se == 0.0) {
        if (diff == 0.0) {
            r.degeneracy = Degeneracy::no_difference;
            r.statistic = 0.0;
            r.p_value = 1.0;
        } else {
            r.degeneracy = Degeneracy::zero_variance;
            r.statistic = std::copysign(std::numeric_limits<double>::infinity(), diff);
            r.p_value = 0.0;
        }
    } else {
        r.statistic = diff / se;
        r.p_value = student_t_two_tailed(r.statistic, df);
    }
    r.significant = r.p_value < kSignificanceLevel;
    return r;
}

}  // namespace detail

inline TTestResult paired_ttest(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw AlignmentError(fmt::format("paired t-test needs equal lengths ({} vs {})", a.size(), b.size()));
    if (a.size() < 2) throw InsufficientDataError("paired t-test needs at least 2 pairs");
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    const double md = mean_of(d);
    const auto n = static_cast<double>(d.size());
    const double se = std::sqrt(sample_variance(d, md) / n);
    return detail::finish(md, se, n - 1.0);
}

/// Welch's unequal-variance test with Welch-Satterthwaite degrees of freedom.
inline TTestResult unpaired_ttest(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2)
        throw InsufficientDataError("unpaired t-test needs at least 2 values per group");
    const double ma = mean_of(a), mb = mean_of(b);
    const auto na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    const double va = sample_variance(a, ma) / na;
    const double vb = sample_variance(b, mb) / nb;
    const double se2 = va + vb;
    double df = na + nb - 2.0;
    if (se2 > 0.0) df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    return detail::finish(ma - mb, std::sqrt(se2), df);
}

inline nlohmann::json to_json(const TTestResult& r) {
    auto num = [](double v) -> nlohmann::json {
        if (std::isfinite(v)) return v;
        return v > 0 ? "inf" : "-inf";
    };
    return {{"statistic", num(r.statistic)},
            {"degrees_of_freedom", r.degrees_of_freedom},
            {"p_value", r.p_value},
            {"significant", r.significant},
            {"direction", std::string(to_string(r.direction))},
            {"degenerate", std::string(to_string(r.degeneracy))}};
}

inline nlohmann::json to_json(const RunAggregate& a) {
    return {{"values", a.values}, {"mean", a.mean}, {"std", a.std}};
}

}  // namespace calib
