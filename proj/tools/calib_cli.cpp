// calib: command-line front end for the calibration toolkit.
//
// Exit codes: 0 success, 2 input/domain error, 3 alignment error.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "calib/calib.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitAlignment = 3;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw calib::Error(fmt::format("cannot open '{}'", path));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw calib::Error(fmt::format("cannot write '{}'", path));
    out << data;
    if (!out) throw calib::Error(fmt::format("write to '{}' failed", path));
}

calib::ScoreFormat format_for(const std::string& path, const std::string& explicit_format) {
    if (explicit_format == "csv") return calib::ScoreFormat::csv;
    if (explicit_format == "jsonl") return calib::ScoreFormat::jsonl;
    return fs::path(path).extension() == ".csv" ? calib::ScoreFormat::csv : calib::ScoreFormat::jsonl;
}

calib::ScoreSet load_scores(const std::string& path, const std::string& explicit_format = {}) {
    try {
        return calib::parse_scores(read_file(path), format_for(path, explicit_format), path);
    } catch (const calib::ParseError& e) {
        throw calib::ParseError(0, fmt::format("{}: {}", path, e.what()));
    } catch (const calib::DomainError& e) {
        throw calib::DomainError(fmt::format("{}: {}", path, e.what()));
    }
}

void print_json(const json& j) { std::cout << j.dump(2) << "\n"; }

json classification_json(const calib::PRF1& m) {
    return {{"precision", m.precision},
            {"recall", m.recall},
            {"f1", m.f1},
            {"precision_undefined", m.precision_undefined},
            {"recall_undefined", m.recall_undefined}};
}

std::vector<calib::ScoreSet> runs_of(const calib::ScoreSet& set) {
    std::vector<calib::ScoreSet> out;
    for (auto& [run, part] : calib::split_runs(set)) out.push_back(std::move(part));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Post-hoc confidence calibration toolkit for binary classifiers"};
    app.require_subcommand(1);

    // metrics
    std::string m_scores, m_format, m_out_csv, m_out_hist;
    std::size_t m_bins = 0;
    auto* metrics = app.add_subcommand("metrics", "ECE/MCE/RMSCE and precision/recall/F1 of a score file");
    metrics->add_option("--scores", m_scores, "Score file")->required();
    metrics->add_option("--format", m_format, "jsonl or csv (default: by extension)")
        ->check(CLI::IsMember({"jsonl", "csv"}));
    metrics->add_option("--bins", m_bins, "Number of bins (default floor(sqrt(n)))")->check(CLI::PositiveNumber);
    metrics->add_option("--out-csv", m_out_csv, "Write reliability data as CSV");
    metrics->add_option("--out-histogram-csv", m_out_hist, "Write confidence histogram data as CSV");

    // validate
    std::string v_scores, v_format;
    auto* validate = app.add_subcommand("validate", "Check a score file and report every violation");
    validate->add_option("--scores", v_scores, "Score file")->required();
    validate->add_option("--format", v_format, "jsonl or csv")->check(CLI::IsMember({"jsonl", "csv"}));

    // calibrate temperature
    std::string c_val, c_test, c_out, c_out_scores;
    double grid_start = 0.1, grid_stop = 10.0, grid_step = 0.1;
    auto* calibrate = app.add_subcommand("calibrate", "Fit a calibration method");
    calibrate->require_subcommand(1);
    auto* temperature = calibrate->add_subcommand("temperature", "Temperature scaling by validation-ECE grid search");
    temperature->add_option("--val", c_val, "Validation score file")->required();
    temperature->add_option("--test", c_test, "Test score file")->required();
    temperature->add_option("--grid-start", grid_start, "First grid temperature")->capture_default_str();
    temperature->add_option("--grid-stop", grid_stop, "Last grid temperature (inclusive)")->capture_default_str();
    temperature->add_option("--grid-step", grid_step, "Grid spacing")->capture_default_str();
    temperature->add_option("--out", c_out, "Fit result (JSON)")->required();
    temperature->add_option("--out-scores", c_out_scores, "Calibrated test scores (.jsonl or .csv)");

    // combine
    std::vector<std::string> cb_inputs;
    std::string cb_out;
    bool cb_ensemble = false;
    auto* combine = app.add_subcommand("combine", "Average aligned score files position by position");
    combine->add_option("--inputs", cb_inputs, "Score files")->required()->expected(1, -1);
    combine->add_option("--out", cb_out, "Combined scores (.jsonl or .csv)")->required();
    combine->add_flag("--ensemble", cb_ensemble, "Require exactly five runs");

    // select-dropout
    std::string sd_baseline, sd_dir, sd_out;
    auto* select = app.add_subcommand("select-dropout", "Pick the Monte Carlo dropout probability");
    select->add_option("--baseline", sd_baseline, "Validation scores without dropout")->required();
    select->add_option("--candidates", sd_dir, "Directory of p=<value>.jsonl files")->required();
    select->add_option("--out", sd_out, "Selection result (JSON)")->required();

    // ttest
    std::string t_a, t_b, t_metric = "ece";
    bool t_paired = false;
    auto* ttest = app.add_subcommand("ttest", "t-test of a per-run metric between two multi-run score files");
    ttest->add_option("--a", t_a, "Score file, one group of records per run")->required();
    ttest->add_option("--b", t_b, "Score file, one group of records per run")->required();
    ttest->add_flag("--paired", t_paired, "Paired test (runs matched by order)");
    ttest->add_option("--metric", t_metric)->check(CLI::IsMember({"ece", "f1", "mce", "rmsce"}))->required();

    // report
    std::string r_dir, r_out, r_out_csv;
    auto* report = app.add_subcommand("report", "Benchmark table from <dir>/<dataset>/<method>.jsonl");
    report->add_option("--runs", r_dir, "Runs directory")->required();
    report->add_option("--out", r_out, "Text table")->required();
    report->add_option("--out-csv", r_out_csv, "CSV twin")->required();

    // plot
    std::string p_scores, p_out;
    std::size_t p_bins = 0;
    bool p_log = false;
    auto* plot = app.add_subcommand("plot", "Render an SVG plot");
    plot->require_subcommand(1);
    auto* plot_rel = plot->add_subcommand("reliability", "Reliability diagram");
    auto* plot_hist = plot->add_subcommand("histogram", "Confidence histogram split by correctness");
    for (auto* sub : {plot_rel, plot_hist}) {
        sub->add_option("--scores", p_scores, "Score file")->required();
        sub->add_option("--out", p_out, "SVG output")->required();
        sub->add_option("--bins", p_bins, "Number of bins (default floor(sqrt(n)))")->check(CLI::PositiveNumber);
    }
    plot_hist->add_flag("--log", p_log, "Logarithmic y-axis");

    // simulate
    std::size_t s_n = 0;
    std::uint64_t s_seed = 0;
    std::string s_distortion = "identity", s_base = "uniform", s_split = "test", s_out;
    auto* simulate = app.add_subcommand("simulate", "Generate synthetic scores with planted calibration");
    simulate->add_option("--n", s_n, "Number of records")->required()->check(CLI::PositiveNumber);
    simulate->add_option("--seed", s_seed, "Generator seed")->required();
    simulate->add_option("--distortion", s_distortion, "identity | temperature:T")->capture_default_str();
    simulate->add_option("--base", s_base, "uniform | bimodal:ALPHA")->capture_default_str();
    simulate->add_option("--split", s_split, "Split tag written on every record")->check(CLI::IsMember({"train", "val", "test"}))->capture_default_str();
    simulate->add_option("--out", s_out, "Output score file (.jsonl or .csv)")->required();

    // serialize
    std::string z_left, z_right, z_pairs, z_out;
    bool z_dirty = false;
    std::uint64_t z_seed = 0;
    auto* serialize = app.add_subcommand("serialize", "Serialize entity pairs to [COL]/[VAL] text");
    serialize->add_option("--left", z_left, "Left entity CSV (with id column)")->required();
    serialize->add_option("--right", z_right, "Right entity CSV (with id column)")->required();
    serialize->add_option("--pairs", z_pairs, "Pairs CSV: left_id,right_id,label")->required();
    serialize->add_option("--out", z_out, "One serialized pair per line; ids go to <out>.ids.csv")->required();
    serialize->add_flag("--dirty", z_dirty, "Apply the dirty attribute-shuffle corruption");
    serialize->add_option("--seed", z_seed, "Seed for --dirty");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitInput;
    }

    try {
        if (*metrics) {
            const auto set = load_scores(m_scores, m_format);
            const std::size_t bins = m_bins ? m_bins : calib::bin_count_for(set.size());
            const auto binned = calib::bin_scores(set, bins);
            const auto summary = calib::summarize(binned);
            const auto report = calib::validate(set);
            print_json({{"records", set.size()},
                        {"positive_fraction", report.positive_fraction},
                        {"bins", bins},
                        {"ece", summary.ece},
                        {"mce", summary.mce},
                        {"rmsce", summary.rmsce},
                        {"classification", classification_json(calib::prf1(set))}});
            if (!m_out_csv.empty()) write_file(m_out_csv, calib::reliability_csv(calib::reliability_data(binned)));
            if (!m_out_hist.empty())
                write_file(m_out_hist, calib::histogram_csv(calib::histogram_data(set, bins)));
        } else if (*validate) {
            const auto report = calib::validate_text(read_file(v_scores), format_for(v_scores, v_format));
            json violations = json::array();
            for (const auto& v : report.violations) violations.push_back({{"line", v.line}, {"reason", v.reason}});
            print_json({{"record_count", report.record_count},
                        {"positive_fraction", report.positive_fraction},
                        {"accepted", report.accepted()},
                        {"violations", violations}});
            return report.accepted() ? 0 : kExitInput;
        } else if (*temperature) {
            const auto val = load_scores(c_val);
            const auto test = load_scores(c_test);
            const auto fit = calib::temperature_fit(val, calib::make_grid(grid_start, grid_stop, grid_step));
            const auto calibrated = calib::temperature_apply(test, fit.temperature);
            auto out = calib::to_json(fit);
            out["test_ece_before"] = calib::ece_of(test);
            out["test_ece_after"] = calib::ece_of(calibrated);
            write_file(c_out, out.dump(2) + "\n");
            if (!c_out_scores.empty())
                write_file(c_out_scores, calib::write_scores(calibrated, format_for(c_out_scores, "")));
            print_json({{"temperature", fit.temperature},
                        {"validation_ece", fit.validation_ece},
                        {"test_ece_before", out["test_ece_before"]},
                        {"test_ece_after", out["test_ece_after"]}});
        } else if (*combine) {
            std::vector<calib::ScoreSet> sets;
            for (const auto& path : cb_inputs) sets.push_back(load_scores(path));
            const auto combined = cb_ensemble ? calib::ensemble_combine(sets) : calib::mean_combine(sets);
            write_file(cb_out, calib::write_scores(combined, format_for(cb_out, "")));
        } else if (*select) {
            const std::regex name(R"(p=([0-9]*\.?[0-9]+)\.(jsonl|csv))");
            std::map<double, calib::ScoreSet> candidates;
            for (const auto& entry : fs::directory_iterator(sd_dir)) {
                std::smatch m;
                const std::string file = entry.path().filename().string();
                if (!entry.is_regular_file() || !std::regex_match(file, m, name)) continue;
                const double p = std::stod(m[1].str());
                if (candidates.count(p))
                    throw calib::DomainError(fmt::format("duplicate candidate p={}", p));
                candidates.emplace(p, load_scores(entry.path().string()));
            }
            const auto baseline = load_scores(sd_baseline);
            const auto sel = calib::dropout_select(candidates, baseline);
            write_file(sd_out, calib::to_json(sel).dump(2) + "\n");
            print_json({{"probability", sel.probability}, {"baseline_f1", sel.baseline_f1}});
        } else if (*ttest) {
            const auto metric = *calib::metric_from_string(t_metric);
            const auto a = calib::metric_per_run(runs_of(load_scores(t_a)), metric);
            const auto b = calib::metric_per_run(runs_of(load_scores(t_b)), metric);
            const auto result = t_paired ? calib::paired_ttest(a, b) : calib::unpaired_ttest(a, b);
            auto out = calib::to_json(result);
            out["test"] = t_paired ? "paired" : "welch";
            out["metric"] = t_metric;
            out["a"] = a;
            out["b"] = b;
            print_json(out);
        } else if (*report) {
            std::vector<fs::path> datasets;
            for (const auto& entry : fs::directory_iterator(r_dir))
                if (entry.is_directory()) datasets.push_back(entry.path());
            std::sort(datasets.begin(), datasets.end());
            std::vector<calib::ReportRow> rows;
            for (const auto& dir : datasets) {
                const std::string dataset = dir.filename().string();
                std::optional<calib::ReportRow> baseline;
                std::vector<calib::ReportRow> treated;
                for (auto method : {calib::Method::baseline, calib::Method::temperature, calib::Method::dropout,
                                    calib::Method::ensemble}) {
                    fs::path file;
                    for (const char* ext : {".jsonl", ".csv"}) {
                        const auto candidate = dir / (std::string(calib::to_string(method)) + ext);
                        if (fs::exists(candidate)) file = candidate;
                    }
                    if (file.empty()) continue;
                    auto row = calib::make_row(dataset, method, runs_of(load_scores(file.string())));
                    if (method == calib::Method::baseline) baseline = std::move(row);
                    else treated.push_back(std::move(row));
                }
                if (!baseline && treated.empty()) continue;
                if (!baseline) throw calib::ReportError(fmt::format("dataset '{}' has no baseline", dataset));
                for (auto& row : treated) calib::compare_to_baseline(row, *baseline);
                rows.push_back(std::move(*baseline));
                for (auto& row : treated) rows.push_back(std::move(row));
            }
            const auto rendered = calib::render_report(rows);
            write_file(r_out, rendered.table);
            write_file(r_out_csv, rendered.csv);
            std::cout << rendered.table;
        } else if (*plot_rel || *plot_hist) {
            const auto set = load_scores(p_scores);
            const std::size_t bins = p_bins ? p_bins : calib::bin_count_for(set.size());
            if (*plot_rel) {
                const auto binned = calib::bin_scores(set, bins);
                write_file(p_out, calib::render_reliability_svg(calib::reliability_data(binned),
                                                                calib::summarize(binned)));
            } else {
                const auto h = calib::histogram_data(set, bins);
                write_file(p_out, calib::render_histogram_svg(h.correct, h.incorrect, p_log));
            }
        } else if (*simulate) {
            calib::SyntheticSpec spec;
            spec.n = s_n;
            spec.seed = s_seed;
            spec.split = *calib::split_from_string(s_split);
            auto parameter = [](const std::string& text, const std::string& prefix) {
                try {
                    std::size_t used = 0;
                    const double v = std::stod(text.substr(prefix.size()), &used);
                    if (used + prefix.size() != text.size()) throw std::invalid_argument(text);
                    return v;
                } catch (const std::logic_error&) {
                    throw calib::DomainError(fmt::format("cannot parse '{}'", text));
                }
            };
            if (s_distortion.rfind("temperature:", 0) == 0)
                spec.distortion = calib::TemperatureDistortion{parameter(s_distortion, "temperature:")};
            else if (s_distortion != "identity")
                throw calib::DomainError(fmt::format("unknown distortion '{}'", s_distortion));
            if (s_base.rfind("bimodal:", 0) == 0) spec.base = calib::BimodalBase{parameter(s_base, "bimodal:")};
            else if (s_base == "uniform") spec.base = calib::UniformBase{};
            else throw calib::DomainError(fmt::format("unknown base distribution '{}'", s_base));
            write_file(s_out, calib::write_scores(calib::generate(spec), format_for(s_out, "")));
        } else if (*serialize) {
            const auto left = calib::parse_entity_table(read_file(z_left));
            const auto right = calib::parse_entity_table(read_file(z_right));
            const auto pairs = calib::parse_pairs(read_file(z_pairs));
            const auto out = calib::serialize_pairs(left, right, pairs,
                                                    z_dirty ? std::optional<std::uint64_t>(z_seed) : std::nullopt);
            write_file(z_out, out.text);
            write_file(z_out + ".ids.csv", out.sidecar);
        }
    } catch (const calib::AlignmentError& e) {
        std::cerr << "alignment error: " << e.what() << "\n";
        return kExitAlignment;
    } catch (const calib::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return 0;
}
