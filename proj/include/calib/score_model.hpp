#pragma once

// Prediction scores and their JSONL / CSV file formats.
//
// JSONL: one object per line with keys
//   "id" (string, required), "score" (number in [0,1], required),
//   "label" (0|1, required), "run", "subrun" (integers >= 0, default 0),
//   "split" ("train"|"val"|"test", default "test").
// Unknown keys are rejected.
//
// CSV: header `id,score,label,run,subrun,split`; empty optional cells take
// the JSONL defaults.
//
// Scores are written with 17 significant digits so that a write/parse
// round-trip reproduces every double exactly.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "calib/csv.hpp"
#include "calib/error.hpp"

namespace calib {

enum class Split { train, val, test };

inline std::string_view to_string(Split s) noexcept {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "test";
}

inline std::optional<Split> split_from_string(std::string_view s) noexcept {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "test") return Split::test;
    return std::nullopt;
}

enum class ScoreFormat { jsonl, csv };

/// One prediction: the positive-class ("match") probability and its label.
struct PredictionRecord {
    std::string id;
    double score = 0.0;
    int label = 0;
    std::uint64_t run = 0;
    std::uint64_t subrun = 0;
    Split split = Split::test;

    friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

/// Throws DomainError unless `r` satisfies the record invariants.
inline void check_record(const PredictionRecord& r) {
    if (r.id.empty()) throw DomainError("empty id");
    if (!std::isfinite(r.score)) throw DomainError("score is not finite");
    if (r.score < 0.0 || r.score > 1.0)
        throw DomainError(fmt::format("score {} outside [0,1]", r.score));
    if (r.label != 0 && r.label != 1)
        throw DomainError(fmt::format("label {} not in {{0,1}}", r.label));
}

/// Ordered, immutable collection of predictions from one evaluation.
class ScoreSet {
public:
    ScoreSet() = default;
    explicit ScoreSet(std::vector<PredictionRecord> records, std::string provenance = {})
        : records_(std::move(records)), provenance_(std::move(provenance)) {
        for (const auto& r : records_) check_record(r);
    }

    const std::vector<PredictionRecord>& records() const noexcept { return records_; }
    const std::string& provenance() const noexcept { return provenance_; }
    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }
    const PredictionRecord& operator[](std::size_t i) const { return records_[i]; }
    auto begin() const noexcept { return records_.begin(); }
    auto end() const noexcept { return records_.end(); }

    std::vector<double> scores() const {
        std::vector<double> out;
        out.reserve(records_.size());
        for (const auto& r : records_) out.push_back(r.score);
        return out;
    }

    std::vector<int> labels() const {
        std::vector<int> out;
        out.reserve(records_.size());
        for (const auto& r : records_) out.push_back(r.label);
        return out;
    }

    /// Same records and labels with replaced scores.
    ScoreSet with_scores(const std::vector<double>& scores, std::string provenance) const {
        if (scores.size() != records_.size())
            throw AlignmentError("score vector length differs from record count");
        std::vector<PredictionRecord> out = records_;
        for (std::size_t i = 0; i < out.size(); ++i) out[i].score = scores[i];
        return ScoreSet(std::move(out), std::move(provenance));
    }

    friend bool operator==(const ScoreSet& a, const ScoreSet& b) { return a.records_ == b.records_; }

private:
    std::vector<PredictionRecord> records_;
    std::string provenance_;
};

struct Violation {
    std::size_t line = 0;
    std::string reason;
};

struct ValidationReport {
    std::size_t record_count = 0;
    double positive_fraction = 0.0;
    std::vector<Violation> violations;

    bool accepted() const noexcept { return violations.empty(); }
};

namespace detail {

inline std::uint64_t parse_uint(std::string_view s, std::size_t line, std::string_view what) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || s.empty())
        throw ParseError(line, fmt::format("{} '{}' is not a non-negative integer", what, s));
    return v;
}

inline double parse_double(std::string_view s, std::size_t line) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc::result_out_of_range)
        throw DomainError(fmt::format("line {}: score '{}' out of range", line, s));
    if (ec != std::errc() || p != s.data() + s.size() || s.empty())
        throw ParseError(line, fmt::format("score '{}' is not a number", s));
    return v;
}

inline void check_at(const PredictionRecord& r, std::size_t line) {
    try {
        check_record(r);
    } catch (const DomainError& e) {
        throw DomainError(fmt::format("line {}: {}", line, e.what()));
    }
}

inline PredictionRecord parse_jsonl_line(std::string_view text, std::size_t line) {
    using nlohmann::json;
    json obj;
    try {
        obj = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(line, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ParseError(line, "expected a JSON object");
    for (const auto& [key, _] : obj.items()) {
        if (key != "id" && key != "score" && key != "label" && key != "run" && key != "subrun" &&
            key != "split")
            throw ParseError(line, fmt::format("unknown key '{}'", key));
    }
    PredictionRecord r;
    if (!obj.contains("id") || !obj["id"].is_string()) throw ParseError(line, "missing string 'id'");
    r.id = obj["id"].get<std::string>();
    if (!obj.contains("score") || !obj["score"].is_number())
        throw ParseError(line, "missing numeric 'score'");
    r.score = obj["score"].get<double>();
    if (!obj.contains("label") || !obj["label"].is_number_integer())
        throw ParseError(line, "missing integer 'label'");
    const auto label = obj["label"].get<std::int64_t>();
    if (label != 0 && label != 1)
        throw DomainError(fmt::format("line {}: label {} not in {{0,1}}", line, label));
    r.label = static_cast<int>(label);
    for (const char* key : {"run", "subrun"}) {
        if (!obj.contains(key)) continue;
        const auto& v = obj[key];
        if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
            throw ParseError(line, fmt::format("'{}' must be a non-negative integer", key));
        (std::string_view(key) == "run" ? r.run : r.subrun) = v.get<std::uint64_t>();
    }
    if (obj.contains("split")) {
        if (!obj["split"].is_string()) throw ParseError(line, "'split' must be a string");
        auto s = split_from_string(obj["split"].get<std::string>());
        if (!s) throw ParseError(line, "'split' must be train, val or test");
        r.split = *s;
    }
    check_at(r, line);
    return r;
}

constexpr std::string_view kCsvHeader = "id,score,label,run,subrun,split";

inline PredictionRecord parse_csv_row(const csv::Row& row) {
    const std::size_t line = row.line;
    if (row.fields.size() != 6)
        throw ParseError(line, fmt::format("expected 6 fields, found {}", row.fields.size()));
    const auto& f = row.fields;
    PredictionRecord r;
    r.id = f[0];
    r.score = parse_double(f[1], line);
    if (f[2] == "0" || f[2] == "1") {
        r.label = f[2] == "1";
    } else if (!f[2].empty() && f[2].find_first_not_of("-0123456789") == std::string::npos) {
        throw DomainError(fmt::format("line {}: label {} not in {{0,1}}", line, f[2]));
    } else {
        throw ParseError(line, fmt::format("label '{}' is not an integer", f[2]));
    }
    if (!f[3].empty()) r.run = parse_uint(f[3], line, "run");
    if (!f[4].empty()) r.subrun = parse_uint(f[4], line, "subrun");
    if (!f[5].empty()) {
        auto s = split_from_string(f[5]);
        if (!s) throw ParseError(line, "split must be train, val or test");
        r.split = *s;
    }
    check_at(r, line);
    return r;
}

/// Calls `each(line_number, text)` for every JSONL line. Only a single
/// trailing newline is tolerated; empty lines elsewhere are reported.
template <typename F>
void for_each_line(std::string_view raw, F&& each) {
    std::size_t line = 0;
    std::size_t pos = 0;
    while (pos < raw.size()) {
        ++line;
        std::size_t nl = raw.find('\n', pos);
        std::string_view text =
            raw.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        if (!text.empty() && text.back() == '\r') text.remove_suffix(1);
        each(line, text);
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
}

// `on_error` is always called from within a catch block.
template <typename OnRecord, typename OnError>
void scan(std::string_view raw, ScoreFormat format, OnRecord&& on_record, OnError&& on_error) {
    if (format == ScoreFormat::jsonl) {
        for_each_line(raw, [&](std::size_t line, std::string_view text) {
            try {
                if (text.empty()) throw ParseError(line, "empty line");
                on_record(parse_jsonl_line(text, line));
            } catch (const Error& e) {
                on_error(line, e);
            }
        });
        return;
    }
    std::vector<csv::Row> rows;
    try {
        rows = csv::read(raw);
    } catch (const ParseError& e) {
        on_error(e.line(), e);
        return;
    }
    try {
        if (rows.empty() || csv::join(rows.front().fields) != kCsvHeader)
            throw ParseError(1, fmt::format("expected header '{}'", kCsvHeader));
    } catch (const ParseError& e) {
        on_error(1, e);
        return;
    }
    for (std::size_t k = 1; k < rows.size(); ++k) {
        try {
            on_record(parse_csv_row(rows[k]));
        } catch (const Error& e) {
            on_error(rows[k].line, e);
        }
    }
}

}  // namespace detail

/// Parses a whole score file. The first offending line raises ParseError
/// (malformed) or DomainError (out-of-domain value); both name the line.
inline ScoreSet parse_scores(std::string_view raw, ScoreFormat format, std::string provenance = {}) {
    std::vector<PredictionRecord> records;
    detail::scan(
        raw, format, [&](PredictionRecord r) { records.push_back(std::move(r)); },
        // always invoked from inside a handler; rethrow the original
        [](std::size_t, const Error&) { throw; });
    return ScoreSet(std::move(records), std::move(provenance));
}

/// Like parse_scores but collects every violation instead of stopping.
inline ValidationReport validate_text(std::string_view raw, ScoreFormat format) {
    ValidationReport report;
    std::size_t positives = 0;
    detail::scan(
        raw, format,
        [&](const PredictionRecord& r) {
            ++report.record_count;
            positives += static_cast<std::size_t>(r.label);
        },
        [&](std::size_t line, const Error& e) { report.violations.push_back({line, e.what()}); });
    if (report.record_count == 0 && report.violations.empty())
        report.violations.push_back({0, "no records"});
    if (report.record_count)
        report.positive_fraction =
            static_cast<double>(positives) / static_cast<double>(report.record_count);
    return report;
}

/// Counts and positive fraction of a parsed set. Mixed split tags are
/// reported as a violation on line 0.
inline ValidationReport validate(const ScoreSet& set) {
    if (set.empty()) throw EmptyInputError("score set is empty");
    ValidationReport report;
    report.record_count = set.size();
    std::size_t positives = 0;
    for (const auto& r : set) positives += static_cast<std::size_t>(r.label);
    report.positive_fraction = static_cast<double>(positives) / static_cast<double>(set.size());
    const Split first = set[0].split;
    if (std::any_of(set.begin(), set.end(), [&](const auto& r) { return r.split != first; }))
        report.violations.push_back({0, "records carry more than one split"});
    return report;
}

inline ScoreSet filter_split(const ScoreSet& set, Split split) {
    std::vector<PredictionRecord> out;
    for (const auto& r : set)
        if (r.split == split) out.push_back(r);
    if (out.empty())
        throw EmptyInputError(fmt::format("no records with split '{}'", to_string(split)));
    std::string prov = set.provenance().empty() ? std::string(to_string(split))
                                                : set.provenance() + "/" + std::string(to_string(split));
    return ScoreSet(std::move(out), std::move(prov));
}

inline std::string format_score(double score) { return fmt::format("{:.17g}", score); }

inline std::string write_scores(const ScoreSet& set, ScoreFormat format) {
    if (set.empty()) throw EmptyInputError("cannot write an empty score set");
    std::string out;
    if (format == ScoreFormat::csv) {
        out += detail::kCsvHeader;
        out += '\n';
        for (const auto& r : set) {
            out += csv::join({r.id, format_score(r.score), std::to_string(r.label),
                              std::to_string(r.run), std::to_string(r.subrun),
                              std::string(to_string(r.split))});
            out += '\n';
        }
        return out;
    }
    for (const auto& r : set) {
        std::string id;
        try {
            id = nlohmann::json(r.id).dump();
        } catch (const nlohmann::json::type_error&) {
            throw SerializationError("record id is not valid UTF-8");
        }
        out += fmt::format(R"({{"id":{},"score":{},"label":{},"run":{},"subrun":{},"split":"{}"}})", id,
                           format_score(r.score), r.label, r.run, r.subrun, to_string(r.split));
        out += '\n';
    }
    return out;
}

/// Splits a multi-run file into one set per `run` tag, ascending by run.
inline std::vector<std::pair<std::uint64_t, ScoreSet>> split_runs(const ScoreSet& set) {
    std::vector<std::uint64_t> runs;
    for (const auto& r : set) runs.push_back(r.run);
    std::sort(runs.begin(), runs.end());
    runs.erase(std::unique(runs.begin(), runs.end()), runs.end());
    std::vector<std::pair<std::uint64_t, ScoreSet>> out;
    for (auto run : runs) {
        std::vector<PredictionRecord> part;
        for (const auto& r : set)
            if (r.run == run) part.push_back(r);
        out.emplace_back(run, ScoreSet(std::move(part), set.provenance() + "/run" + std::to_string(run)));
    }
    return out;
}

}  // namespace calib
