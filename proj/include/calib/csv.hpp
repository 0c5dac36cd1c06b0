#pragma once

// Minimal RFC 4180 reader/writer shared by the score and entity formats.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "calib/error.hpp"

namespace calib::csv {

struct Row {
    std::size_t line = 0;  // 1-based line on which the row starts
    std::vector<std::string> fields;
};

/// Splits `text` into rows. Quoted fields may contain commas, doubled quotes
/// and newlines. A trailing newline does not produce an empty row; blank
/// lines elsewhere come back as rows with one empty field.
inline std::vector<Row> read(std::string_view text) {
    std::vector<Row> rows;
    std::size_t line = 1;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        Row row;
        row.line = line;
        std::string field;
        bool done = false;
        while (!done) {
            field.clear();
            if (i < n && text[i] == '"') {
                const std::size_t open_line = line;
                ++i;
                bool closed = false;
                while (i < n) {
                    const char c = text[i++];
                    if (c == '"') {
                        if (i < n && text[i] == '"') {
                            field += '"';
                            ++i;
                        } else {
                            closed = true;
                            break;
                        }
                    } else {
                        if (c == '\n') ++line;
                        field += c;
                    }
                }
                if (!closed) throw ParseError(open_line, "unterminated quoted field");
                if (i < n && text[i] != ',' && text[i] != '\n' && text[i] != '\r')
                    throw ParseError(line, "unexpected character after closing quote");
            } else {
                while (i < n && text[i] != ',' && text[i] != '\n' && text[i] != '\r') {
                    if (text[i] == '"') throw ParseError(line, "quote inside unquoted field");
                    field += text[i++];
                }
            }
            row.fields.push_back(field);
            if (i >= n) {
                done = true;
            } else if (text[i] == ',') {
                ++i;
            } else {
                if (text[i] == '\r') ++i;
                if (i < n && text[i] == '\n') ++i;
                ++line;
                done = true;
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::string escape(std::string_view field) {
    if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline std::string join(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t k = 0; k < fields.size(); ++k) {
        if (k) out += ',';
        out += escape(fields[k]);
    }
    return out;
}

}  // namespace calib::csv
