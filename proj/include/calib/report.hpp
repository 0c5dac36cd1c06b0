#pragma once

// Benchmark tables and SVG plots. Every renderer is a pure function of its
// inputs: no clocks, no locale, fixed number formatting.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "calib/csv.hpp"
#include "calib/error.hpp"
#include "calib/metrics.hpp"
#include "calib/stats.hpp"

namespace calib {

enum class Method { baseline, temperature, dropout, ensemble };

inline std::string_view to_string(Method m) noexcept {
    switch (m) {
        case Method::baseline: return "baseline";
        case Method::temperature: return "temperature";
        case Method::dropout: return "dropout";
        case Method::ensemble: return "ensemble";
    }
    return "baseline";
}

inline std::optional<Method> method_from_string(std::string_view s) noexcept {
    for (auto m : {Method::baseline, Method::temperature, Method::dropout, Method::ensemble})
        if (to_string(m) == s) return m;
    return std::nullopt;
}

enum class Metric { ece, f1, mce, rmsce };

inline constexpr std::array<Metric, 4> kMetrics = {Metric::ece, Metric::f1, Metric::mce, Metric::rmsce};

inline std::string_view to_string(Metric m) noexcept {
    switch (m) {
        case Metric::ece: return "ece";
        case Metric::f1: return "f1";
        case Metric::mce: return "mce";
        case Metric::rmsce: return "rmsce";
    }
    return "ece";
}

inline std::optional<Metric> metric_from_string(std::string_view s) noexcept {
    for (auto m : kMetrics)
        if (to_string(m) == s) return m;
    return std::nullopt;
}

/// F1 is the only metric where higher is better.
constexpr bool higher_is_better(Metric m) noexcept { return m == Metric::f1; }

/// Metric of one score set; F1 at threshold 0.5 as a fraction.
inline double metric_value(const ScoreSet& set, Metric m) {
    if (m == Metric::f1) return prf1(set).f1;
    const auto b = bin_scores(set);
    switch (m) {
        case Metric::ece: return ece(b);
        case Metric::mce: return mce(b);
        case Metric::rmsce: return rmsce(b);
        case Metric::f1: break;
    }
    return 0.0;
}

inline std::vector<double> metric_per_run(const std::vector<ScoreSet>& runs, Metric m) {
    std::vector<double> out;
    out.reserve(runs.size());
    for (const auto& r : runs) out.push_back(metric_value(r, m));
    return out;
}

struct Comparison {
    Direction delta_sign = Direction::none;  // treated relative to baseline
    bool significant = false;
    double p_value = 1.0;
    double pct_change = 0.0;  // reduction relative to baseline, percent
};

struct ReportRow {
    std::string dataset;
    Method method = Method::baseline;
    RunAggregate ece, f1, mce, rmsce;
    std::array<std::optional<Comparison>, 4> vs_baseline;  // indexed like kMetrics

    const RunAggregate& metric(Metric m) const {
        switch (m) {
            case Metric::ece: return ece;
            case Metric::f1: return f1;
            case Metric::mce: return mce;
            case Metric::rmsce: return rmsce;
        }
        return ece;
    }
    RunAggregate& metric(Metric m) { return const_cast<RunAggregate&>(std::as_const(*this).metric(m)); }
};

inline ReportRow make_row(std::string dataset, Method method, const std::vector<ScoreSet>& runs) {
    ReportRow row;
    row.dataset = std::move(dataset);
    row.method = method;
    for (auto m : kMetrics) row.metric(m) = aggregate(metric_per_run(runs, m));
    return row;
}

/// Fills `treated.vs_baseline`: paired tests for temperature scaling and
/// dropout (runs matched by order), Welch's test for ensembles.
inline void compare_to_baseline(ReportRow& treated, const ReportRow& baseline) {
    for (std::size_t k = 0; k < kMetrics.size(); ++k) {
        const auto m = kMetrics[k];
        const auto& t = treated.metric(m).values;
        const auto& b = baseline.metric(m).values;
        const TTestResult r =
            treated.method == Method::ensemble ? unpaired_ttest(t, b) : paired_ttest(t, b);
        Comparison c;
        c.delta_sign = r.direction;
        c.significant = r.significant;
        c.p_value = r.p_value;
        const double base_mean = baseline.metric(m).mean;
        c.pct_change = base_mean != 0.0 ? pct_change(base_mean, treated.metric(m).mean) : 0.0;
        treated.vs_baseline[k] = c;
    }
}

namespace detail {

inline std::size_t display_width(std::string_view s) {
    std::size_t w = 0;
    for (unsigned char c : s)
        if ((c & 0xC0) != 0x80) ++w;
    return w;
}

inline std::string pad(std::string s, std::size_t width) {
    const auto w = display_width(s);
    if (w < width) s.append(width - w, ' ');
    return s;
}

}  // namespace detail

/// Mean ± std; F1 as a percentage with two decimals, the rest with four.
inline std::string format_cell(const RunAggregate& a, Metric m) {
    if (m == Metric::f1) return fmt::format("{:.2f} ± {:.2f}", 100.0 * a.mean, 100.0 * a.std);
    return fmt::format("{:.4f} ± {:.4f}", a.mean, a.std);
}

/// "v"/"^" for lower/higher than baseline, then "+" when significantly
/// better or "-" when significantly worse.
inline std::string comparison_marker(const Comparison& c, Metric m) {
    std::string out;
    if (c.delta_sign == Direction::decrease) out += 'v';
    else if (c.delta_sign == Direction::increase) out += '^';
    else out += '=';
    if (c.significant && c.delta_sign != Direction::none) {
        const bool better = (c.delta_sign == Direction::increase) == higher_is_better(m);
        out += better ? '+' : '-';
    }
    return out;
}

inline std::string format_pct(double pct) { return fmt::format("{:.2f}%", pct); }

namespace detail {

inline std::vector<const ReportRow*> order_rows(const std::vector<ReportRow>& rows) {
    std::vector<std::string> datasets;
    for (const auto& r : rows)
        if (std::find(datasets.begin(), datasets.end(), r.dataset) == datasets.end())
            datasets.push_back(r.dataset);
    std::vector<const ReportRow*> out;
    for (const auto& d : datasets) {
        bool has_baseline = false;
        for (const auto& r : rows)
            if (r.dataset == d && r.method == Method::baseline) has_baseline = true;
        if (!has_baseline) throw ReportError(fmt::format("dataset '{}' has no baseline row", d));
        for (auto m : {Method::baseline, Method::temperature, Method::dropout, Method::ensemble})
            for (const auto& r : rows)
                if (r.dataset == d && r.method == m) out.push_back(&r);
    }
    return out;
}

}  // namespace detail

struct RenderedReport {
    std::string table;
    std::string csv;
};

inline RenderedReport render_report(const std::vector<ReportRow>& rows) {
    if (rows.empty()) throw ReportError("no report rows");
    const auto ordered = detail::order_rows(rows);

    std::vector<std::vector<std::string>> cells;
    cells.push_back({"Dataset", "Method", "ECE", "F1", "MCE", "RMSCE", "ECE reduction"});
    bool any_comparison = false;
    for (const ReportRow* r : ordered) {
        std::vector<std::string> line = {r->dataset, std::string(to_string(r->method))};
        for (std::size_t k = 0; k < kMetrics.size(); ++k) {
            std::string cell = format_cell(r->metric(kMetrics[k]), kMetrics[k]);
            if (r->vs_baseline[k]) {
                any_comparison = true;
                cell += " " + comparison_marker(*r->vs_baseline[k], kMetrics[k]);
            }
            line.push_back(std::move(cell));
        }
        line.push_back(r->vs_baseline[0] ? format_pct(r->vs_baseline[0]->pct_change) : "");
        cells.push_back(std::move(line));
    }
    std::vector<std::size_t> widths(cells.front().size(), 0);
    for (const auto& line : cells)
        for (std::size_t c = 0; c < line.size(); ++c)
            widths[c] = std::max(widths[c], detail::display_width(line[c]));

    RenderedReport out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        std::string text;
        for (std::size_t c = 0; c < cells[i].size(); ++c) {
            if (c) text += "  ";
            text += detail::pad(cells[i][c], widths[c]);
        }
        while (!text.empty() && text.back() == ' ') text.pop_back();
        out.table += text + "\n";
        if (i == 0) {
            std::size_t total = 0;
            for (auto w : widths) total += w;
            out.table += std::string(total + 2 * (widths.size() - 1), '-') + "\n";
        }
    }
    if (any_comparison)
        out.table +=
            "\nv/^ lower/higher than baseline; + significantly better, - significantly worse "
            "(two-tailed t-test, alpha = 0.05)\n";

    out.csv = "dataset,method,metric,mean,std,values,direction,significant,p_value,pct_change\n";
    for (const ReportRow* r : ordered) {
        for (std::size_t k = 0; k < kMetrics.size(); ++k) {
            const auto& a = r->metric(kMetrics[k]);
            std::string values;
            for (std::size_t v = 0; v < a.values.size(); ++v)
                values += (v ? ";" : "") + full_precision(a.values[v]);
            std::vector<std::string> f = {r->dataset, std::string(to_string(r->method)),
                                          std::string(to_string(kMetrics[k])), full_precision(a.mean),
                                          full_precision(a.std), values};
            if (const auto& c = r->vs_baseline[k]) {
                f.push_back(std::string(to_string(c->delta_sign)));
                f.push_back(c->significant ? "1" : "0");
                f.push_back(full_precision(c->p_value));
                f.push_back(full_precision(c->pct_change));
            } else {
                f.insert(f.end(), {"", "", "", ""});
            }
            out.csv += csv::join(f) + "\n";
        }
    }
    return out;
}

namespace svg {

inline constexpr double kLeft = 60.0, kTop = 20.0, kSize = 400.0;
inline constexpr double kWidth = 480.0, kHeight = 480.0;

inline std::string num(double v) { return fmt::format("{:.2f}", v); }
inline double x_of(double u) { return kLeft + kSize * u; }
inline double y_of(double u) { return kTop + kSize * (1.0 - u); }

inline std::string header() {
    return fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
        "font-family=\"sans-serif\" font-size=\"12\">\n"
        "<rect x=\"0\" y=\"0\" width=\"{0}\" height=\"{1}\" fill=\"white\"/>\n",
        num(kWidth), num(kHeight));
}

inline std::string frame(std::string_view x_title, std::string_view y_title) {
    std::string s = fmt::format(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
        num(kLeft), num(kTop), num(kSize), num(kSize));
    for (int i = 0; i <= 5; ++i) {
        const double u = i / 5.0;
        s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{:.1f}</text>\n", num(x_of(u)),
                         num(kTop + kSize + 16.0), u);
    }
    s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", num(kLeft + kSize / 2),
                     num(kHeight - 12.0), x_title);
    s += fmt::format(
        "<text x=\"16\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {0})\">{1}</text>\n",
        num(kTop + kSize / 2), y_title);
    return s;
}

}  // namespace svg

/// Reliability diagram: diagonal, one dot per non-empty bin, metrics in the
/// upper-left corner.
inline std::string render_reliability_svg(const std::vector<ReliabilityPoint>& points,
                                          const CalibrationSummary& metrics) {
    if (points.empty()) throw RenderError("no reliability points to plot");
    using namespace svg;
    std::string s = header();
    s += frame("Predicted probability", "Empirical probability");
    for (int i = 0; i <= 5; ++i) {
        const double u = i / 5.0;
        s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.1f}</text>\n", num(kLeft - 6.0),
                         num(y_of(u) + 4.0), u);
    }
    s += fmt::format(
        "<line class=\"diagonal\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"gray\" "
        "stroke-dasharray=\"4 4\"/>\n",
        num(x_of(0)), num(y_of(0)), num(x_of(1)), num(y_of(1)));
    for (const auto& p : points)
        s += fmt::format("<circle class=\"bin\" cx=\"{}\" cy=\"{}\" r=\"4\" fill=\"#1f77b4\"/>\n",
                         num(x_of(p.mean_confidence)), num(y_of(p.positive_rate)));
    const std::array<std::pair<std::string_view, double>, 3> labels = {
        {{"ECE", metrics.ece}, {"MCE", metrics.mce}, {"RMSCE", metrics.rmsce}}};
    for (std::size_t i = 0; i < labels.size(); ++i)
        s += fmt::format("<text x=\"{}\" y=\"{}\">{} {:.4f}</text>\n", num(kLeft + 8.0),
                         num(kTop + 18.0 + 16.0 * static_cast<double>(i)), labels[i].first,
                         labels[i].second);
    s += "</svg>\n";
    return s;
}

/// Confidence histogram of correct (green) and incorrect (red) predictions
/// as percentages of all records. On a log axis zero cells are not drawn.
inline std::string render_histogram_svg(const std::vector<std::size_t>& correct,
                                        const std::vector<std::size_t>& incorrect, bool log_scale) {
    if (correct.size() != incorrect.size()) throw RenderError("histogram series differ in length");
    if (correct.empty()) throw RenderError("histogram has no bins");
    std::size_t total = 0;
    for (std::size_t b = 0; b < correct.size(); ++b) total += correct[b] + incorrect[b];
    if (total == 0) throw RenderError("histogram counts are all zero");

    const auto n = static_cast<double>(total);
    double max_pct = 0.0, min_pct = 100.0;
    for (std::size_t b = 0; b < correct.size(); ++b)
        for (auto c : {correct[b], incorrect[b]}) {
            if (!c) continue;
            const double pct = 100.0 * static_cast<double>(c) / n;
            max_pct = std::max(max_pct, pct);
            min_pct = std::min(min_pct, pct);
        }
    double lo = 0.0, hi = 0.0;
    if (log_scale) {
        lo = std::floor(std::log10(min_pct) - 1e-9);
        hi = std::ceil(std::log10(max_pct));
        if (hi <= lo) hi = lo + 1.0;
    } else {
        hi = std::min(100.0, std::ceil(max_pct / 10.0) * 10.0);
    }
    auto to_unit = [&](double pct) {
        return log_scale ? (std::log10(pct) - lo) / (hi - lo) : pct / hi;
    };

    using namespace svg;
    std::string s = header();
    s += frame("Predicted probability", log_scale ? "Occurrences (%, log scale)" : "Occurrences (%)");
    if (log_scale) {
        for (double e = lo; e <= hi; e += 1.0)
            s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:g}</text>\n", num(kLeft - 6.0),
                             num(y_of(to_unit(std::pow(10.0, e))) + 4.0), std::pow(10.0, e));
    } else {
        for (int i = 0; i <= 5; ++i)
            s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:g}</text>\n", num(kLeft - 6.0),
                             num(y_of(i / 5.0) + 4.0), hi * i / 5.0);
    }
    const double bar = kSize / static_cast<double>(correct.size());
    auto series = [&](const std::vector<std::size_t>& counts, std::string_view cls, std::string_view color) {
        for (std::size_t b = 0; b < counts.size(); ++b) {
            if (!counts[b]) continue;
            const double top = y_of(to_unit(100.0 * static_cast<double>(counts[b]) / n));
            s += fmt::format(
                "<rect class=\"{}\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\" "
                "fill-opacity=\"0.6\"/>\n",
                cls, num(kLeft + bar * static_cast<double>(b)), num(top), num(bar), num(kTop + kSize - top),
                color);
        }
    };
    series(correct, "correct", "#2ca02c");
    series(incorrect, "incorrect", "#d62728");
    s += fmt::format("<text x=\"{}\" y=\"{}\" fill=\"#2ca02c\">correct</text>\n", num(kLeft + kSize - 80.0),
                     num(kTop + 18.0));
    s += fmt::format("<text x=\"{}\" y=\"{}\" fill=\"#d62728\">incorrect</text>\n",
                     num(kLeft + kSize - 80.0), num(kTop + 34.0));
    s += "</svg>\n";
    return s;
}

}  // namespace calib
