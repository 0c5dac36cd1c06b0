#include "calib/report.hpp"

#include <gtest/gtest.h>

#include <regex>

#include "calib/synthetic.hpp"

namespace calib {
namespace {

ReportRow row(std::string dataset, Method m, std::vector<double> ece, std::vector<double> f1) {
    ReportRow r;
    r.dataset = std::move(dataset);
    r.method = m;
    r.ece = aggregate(ece);
    r.f1 = aggregate(f1);
    r.mce = aggregate({0.9, 0.95, 0.92});
    r.rmsce = aggregate({0.05, 0.06, 0.055});
    return r;
}

TEST(RenderReport, BaselineOnlyHasNoMarkers) {
    const auto out = render_report({row("Abt-Buy", Method::baseline, {0.019, 0.021, 0.018}, {0.9, 0.91, 0.92})});
    EXPECT_EQ(out.table.find(" v"), std::string::npos);
    EXPECT_EQ(out.table.find("significantly"), std::string::npos);
    EXPECT_NE(out.table.find("0.0193 ± 0.0015"), std::string::npos) << out.table;
    EXPECT_NE(out.table.find("91.00 ± 1.00"), std::string::npos) << out.table;
}

TEST(RenderReport, SignificantImprovementMarker) {
    auto base = row("Abt-Buy", Method::baseline, {0.0190, 0.0195, 0.0194}, {0.9, 0.91, 0.92});
    auto ts = row("Abt-Buy", Method::temperature, {0.0145, 0.0149, 0.0147}, {0.9, 0.91, 0.92});
    compare_to_baseline(ts, base);
    ASSERT_TRUE(ts.vs_baseline[0]);
    EXPECT_TRUE(ts.vs_baseline[0]->significant);
    EXPECT_EQ(comparison_marker(*ts.vs_baseline[0], Metric::ece), "v+");
    EXPECT_EQ(comparison_marker({Direction::increase, true, 0.01, -5}, Metric::ece), "^-");
    EXPECT_EQ(comparison_marker({Direction::increase, true, 0.01, -5}, Metric::f1), "^+");
    EXPECT_EQ(comparison_marker({Direction::increase, false, 0.3, -5}, Metric::ece), "^");
    const auto out = render_report({base, ts});
    EXPECT_NE(out.table.find("0.0147 ± 0.0002 v+"), std::string::npos) << out.table;
}

TEST(RenderReport, PublishedAbtBuyReduction) {
    auto base = row("Abt-Buy", Method::baseline, {0.0193, 0.0193}, {0.9081, 0.9081});
    auto ts = row("Abt-Buy", Method::temperature, {0.0147, 0.0147}, {0.9081, 0.9081});
    compare_to_baseline(ts, base);
    const auto out = render_report({ts, base});
    EXPECT_NE(out.table.find("23.83%"), std::string::npos) << out.table;
    // baseline printed first regardless of input order
    EXPECT_LT(out.table.find("baseline"), out.table.find("temperature"));
}

TEST(RenderReport, MissingBaselineIsAnError) {
    EXPECT_THROW(render_report({row("X", Method::dropout, {0.1, 0.2}, {0.5, 0.6})}), ReportError);
    EXPECT_THROW(render_report({}), ReportError);
}

TEST(RenderReport, EnsembleUsesWelch) {
    auto base = row("D", Method::baseline, {0.05, 0.06, 0.055}, {0.8, 0.81, 0.82});
    auto ens = row("D", Method::ensemble, {0.04, 0.041}, {0.8, 0.81});  // unequal run count is fine unpaired
    EXPECT_NO_THROW(compare_to_baseline(ens, base));
    auto ts = row("D", Method::temperature, {0.04, 0.041}, {0.8, 0.81});
    EXPECT_THROW(compare_to_baseline(ts, base), AlignmentError);
}

TEST(RenderReport, CsvTwinRoundTrips) {
    auto base = row("Abt-Buy", Method::baseline, {0.0190123456789, 0.0195, 0.0194}, {0.9, 0.91, 0.92});
    auto ts = row("Abt-Buy", Method::temperature, {0.0145, 0.0149, 0.0147}, {0.9, 0.91, 0.925});
    compare_to_baseline(ts, base);
    const std::vector<ReportRow> rows = {base, ts};
    const auto out = render_report(rows);
    const auto parsed = csv::read(out.csv);
    ASSERT_EQ(parsed.size(), 1 + 2 * 4);
    for (std::size_t k = 1; k < parsed.size(); ++k) {
        const auto& f = parsed[k].fields;
        const auto& r = rows[(k - 1) / 4];
        const auto metric = *metric_from_string(f[2]);
        const auto& agg = r.metric(metric);
        EXPECT_NEAR(std::stod(f[3]), agg.mean, 1e-12);
        EXPECT_NEAR(std::stod(f[4]), agg.std, 1e-12);
        std::stringstream vs(f[5]);
        std::string v;
        std::size_t i = 0;
        while (std::getline(vs, v, ';')) EXPECT_NEAR(std::stod(v), agg.values[i++], 1e-12);
        EXPECT_EQ(i, agg.values.size());
        if (const auto& c = r.vs_baseline[(k - 1) % 4]) { EXPECT_NEAR(std::stod(f[8]), c->p_value, 1e-12); }
    }
}

TEST(RenderReport, DeterministicBytes) {
    auto base = row("A", Method::baseline, {0.02, 0.03}, {0.9, 0.91});
    auto d = row("A", Method::dropout, {0.025, 0.028}, {0.9, 0.92});
    compare_to_baseline(d, base);
    const auto a = render_report({base, d}), b = render_report({base, d});
    EXPECT_EQ(a.table, b.table);
    EXPECT_EQ(a.csv, b.csv);
}

std::vector<std::pair<double, double>> circles(const std::string& svg) {
    std::vector<std::pair<double, double>> out;
    const std::regex re(R"re(<circle class="bin" cx="([0-9.]+)" cy="([0-9.]+)")re");
    for (auto it = std::sregex_iterator(svg.begin(), svg.end(), re); it != std::sregex_iterator(); ++it)
        out.emplace_back(std::stod((*it)[1]), std::stod((*it)[2]));
    return out;
}

TEST(ReliabilitySvg, CalibratedDotsHugTheDiagonal) {
    SyntheticSpec spec{50000, 4};
    spec.base = UniformBase{};
    const auto binned = bin_scores(generate(spec), 20);
    const auto svg = render_reliability_svg(reliability_data(binned), summarize(binned));
    const auto dots = circles(svg);
    ASSERT_EQ(dots.size(), 20u);
    for (auto [cx, cy] : dots) {
        const double conf = (cx - svg::kLeft) / svg::kSize;
        const double rate = 1.0 - (cy - svg::kTop) / svg::kSize;
        EXPECT_NEAR(conf, rate, 0.05);
    }
    EXPECT_NE(svg.find("class=\"diagonal\""), std::string::npos);
    EXPECT_NE(svg.find("ECE "), std::string::npos);
    EXPECT_EQ(svg, render_reliability_svg(reliability_data(binned), summarize(binned)));
}

TEST(ReliabilitySvg, MissingBinsLeaveGaps) {
    std::vector<PredictionRecord> recs;
    for (int i = 0; i < 16; ++i) recs.push_back({"r" + std::to_string(i), 0.8 + 0.01 * i, i % 2, 0, 0, Split::test});
    const auto b = bin_scores(ScoreSet(recs));
    const auto dots = circles(render_reliability_svg(reliability_data(b), summarize(b)));
    EXPECT_LT(dots.size(), b.bin_count());
    EXPECT_THROW(render_reliability_svg({}, {}), RenderError);
}

TEST(ReliabilitySvg, MetricsAnnotatedToFourPlaces) {
    const std::vector<ReliabilityPoint> pts = {{0, 0.5, 2, 0.3, 0.5}};
    const auto svg = render_reliability_svg(pts, {2, 0.225, 0.25, 0.2263846284534354});
    EXPECT_NE(svg.find(">ECE 0.2250<"), std::string::npos);
    EXPECT_NE(svg.find(">MCE 0.2500<"), std::string::npos);
    EXPECT_NE(svg.find(">RMSCE 0.2264<"), std::string::npos);
}

std::size_t count(const std::string& s, const std::string& needle) {
    std::size_t n = 0;
    for (auto p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++n;
    return n;
}

TEST(HistogramSvg, SeriesAndLogRule) {
    const auto all_correct = render_histogram_svg({5, 0, 3}, {0, 0, 0}, false);
    EXPECT_EQ(count(all_correct, "class=\"incorrect\""), 0u);
    EXPECT_EQ(count(all_correct, "class=\"correct\""), 2u);
    const auto log = render_histogram_svg({100, 0, 1}, {0, 7, 0}, true);
    EXPECT_EQ(count(log, "<rect class="), 3u);
    EXPECT_EQ(log.find("nan"), std::string::npos);
    EXPECT_EQ(log.find("inf"), std::string::npos);
    EXPECT_EQ(log, render_histogram_svg({100, 0, 1}, {0, 7, 0}, true));
    EXPECT_THROW(render_histogram_svg({0, 0}, {0, 0}, false), RenderError);
    EXPECT_THROW(render_histogram_svg({1}, {0, 0}, false), RenderError);
}

TEST(MakeRow, FromRuns) {
    std::vector<ScoreSet> runs;
    for (std::uint64_t s = 0; s < 5; ++s) runs.push_back(generate({400, s}));
    const auto r = make_row("synthetic", Method::baseline, runs);
    EXPECT_EQ(r.ece.values.size(), 5u);
    EXPECT_EQ(r.f1.values[2], prf1(runs[2]).f1);
    EXPECT_EQ(r.ece.values[1], ece(bin_scores(runs[1])));
}

}  // namespace
}  // namespace calib
