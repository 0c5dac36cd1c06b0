#pragma once

// Entity-record serialization for pair-matching models, and the "dirty"
// attribute-shuffle corruption.
//
// Grammar:
//   entry := field (" " field)*
//   field := "[COL] " name " [VAL]" [" " value]    (value omitted when empty)
//   pair  := entry " [SEP] " entry
//
// Inside names and values a backslash is written "\\", newline "\n",
// carriage return "\r", and any literal "[COL]", "[VAL]" or "[SEP]" is
// prefixed with a backslash. Unescaped markers only ever appear as markers.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "calib/csv.hpp"
#include "calib/error.hpp"
#include "calib/rng.hpp"

namespace calib {

struct Attribute {
    std::string name;
    std::string value;

    friend bool operator==(const Attribute&, const Attribute&) = default;
};

struct EntityRecord {
    std::vector<Attribute> attributes;

    friend bool operator==(const EntityRecord&, const EntityRecord&) = default;
};

struct EntityPair {
    EntityRecord left;
    EntityRecord right;
    std::optional<int> label;
};

inline constexpr std::string_view kCol = "[COL]";
inline constexpr std::string_view kVal = "[VAL]";
inline constexpr std::string_view kSep = "[SEP]";

namespace detail {

inline bool starts_with_marker(std::string_view s, std::size_t i) {
    const auto rest = s.substr(i);
    return rest.starts_with(kCol) || rest.starts_with(kVal) || rest.starts_with(kSep);
}

inline std::string escape_text(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (c == '\\') out += "\\\\";
        else if (c == '\n') out += "\\n";
        else if (c == '\r') out += "\\r";
        else {
            if (c == '[' && starts_with_marker(s, i)) out += '\\';
            out += c;
        }
    }
    return out;
}

enum class TokenKind { text, col, val, sep };

struct Token {
    TokenKind kind;
    std::string text;    // decoded, for text tokens
    std::size_t offset;  // byte offset in the serialized string
};

// Splits serialized text into decoded text runs and unescaped markers.
inline std::vector<Token> tokenize(std::string_view s) {
    std::vector<Token> tokens;
    std::string run;
    std::size_t run_start = 0;
    auto flush = [&](std::size_t at) {
        if (!run.empty()) tokens.push_back({TokenKind::text, std::move(run), run_start});
        run.clear();
        run_start = at;
    };
    std::size_t i = 0;
    while (i < s.size()) {
        const char c = s[i];
        if (c == '\\') {
            if (i + 1 >= s.size()) throw ParseError(0, fmt::format("dangling escape at offset {}", i));
            const char e = s[i + 1];
            if (e == '\\') run += '\\';
            else if (e == 'n') run += '\n';
            else if (e == 'r') run += '\r';
            else if (e == '[' && starts_with_marker(s, i + 1)) run += '[';
            else throw ParseError(0, fmt::format("invalid escape at offset {}", i));
            i += 2;
            continue;
        }
        if (c == '[' && starts_with_marker(s, i)) {
            flush(i);
            const auto rest = s.substr(i);
            const TokenKind k = rest.starts_with(kCol) ? TokenKind::col
                                : rest.starts_with(kVal) ? TokenKind::val
                                                         : TokenKind::sep;
            tokens.push_back({k, {}, i});
            i += 5;
            run_start = i;
            continue;
        }
        run += c;
        ++i;
    }
    flush(s.size());
    return tokens;
}

inline EntityRecord parse_tokens(const std::vector<Token>& tokens, std::size_t begin, std::size_t end,
                                 std::size_t base_offset) {
    EntityRecord r;
    auto fail = [&](std::size_t offset, std::string_view why) {
        throw ParseError(0, fmt::format("{} at offset {}", why, offset + base_offset));
    };
    std::size_t k = begin;
    if (k == end) fail(0, "empty entry");
    while (k < end) {
        if (tokens[k].kind != TokenKind::col) fail(tokens[k].offset, "expected [COL]");
        const std::size_t col_at = tokens[k].offset;
        ++k;
        if (k >= end || tokens[k].kind != TokenKind::text) fail(col_at, "missing attribute name");
        const std::string& name_run = tokens[k].text;
        // name_run = " " name " "
        if (name_run.size() < 3 || name_run.front() != ' ' || name_run.back() != ' ')
            fail(tokens[k].offset, "malformed attribute name");
        Attribute a;
        a.name = name_run.substr(1, name_run.size() - 2);
        ++k;
        if (k >= end || tokens[k].kind != TokenKind::val) fail(col_at, "expected [VAL]");
        const std::size_t val_at = tokens[k].offset;
        ++k;
        const bool last = [&] {
            std::size_t j = k;
            if (j < end && tokens[j].kind == TokenKind::text) ++j;
            return j >= end;
        }();
        if (k < end && tokens[k].kind == TokenKind::text) {
            const std::string& v = tokens[k].text;
            // v = " " value [" "]  (trailing separator unless last field)
            if (v.empty() || v.front() != ' ') fail(tokens[k].offset, "missing space after [VAL]");
            if (last) {
                if (v.size() < 2) fail(val_at, "dangling space after [VAL]");
                a.value = v.substr(1);
            } else {
                if (v.size() == 1) {
                    a.value.clear();
                } else {
                    if (v.size() < 3 || v.back() != ' ') fail(tokens[k].offset, "missing space before [COL]");
                    a.value = v.substr(1, v.size() - 2);
                }
            }
            ++k;
        } else if (!last) {
            fail(val_at, "missing space before [COL]");
        }
        r.attributes.push_back(std::move(a));
    }
    return r;
}

}  // namespace detail

inline std::string serialize_entry(const EntityRecord& r) {
    if (r.attributes.empty()) throw SerializationError("record has no attributes");
    std::string out;
    for (std::size_t i = 0; i < r.attributes.size(); ++i) {
        const auto& a = r.attributes[i];
        if (a.name.empty()) throw SerializationError(fmt::format("attribute {} has an empty name", i));
        if (i) out += ' ';
        out += kCol;
        out += ' ';
        out += detail::escape_text(a.name);
        out += ' ';
        out += kVal;
        if (!a.value.empty()) {
            out += ' ';
            out += detail::escape_text(a.value);
        }
    }
    return out;
}

inline std::string serialize_pair(const EntityPair& p) {
    return serialize_entry(p.left) + " " + std::string(kSep) + " " + serialize_entry(p.right);
}

/// Inverse of serialize_entry. Errors carry the byte offset in their message.
inline EntityRecord parse_entry(std::string_view s) {
    const auto tokens = detail::tokenize(s);
    for (const auto& t : tokens)
        if (t.kind == detail::TokenKind::sep)
            throw ParseError(0, fmt::format("unexpected [SEP] at offset {}", t.offset));
    return detail::parse_tokens(tokens, 0, tokens.size(), 0);
}

inline std::pair<EntityRecord, EntityRecord> parse_pair(std::string_view s) {
    auto tokens = detail::tokenize(s);
    std::size_t sep = tokens.size();
    for (std::size_t k = 0; k < tokens.size(); ++k) {
        if (tokens[k].kind != detail::TokenKind::sep) continue;
        if (sep != tokens.size()) throw ParseError(0, fmt::format("second [SEP] at offset {}", tokens[k].offset));
        sep = k;
    }
    if (sep == tokens.size()) throw ParseError(0, "missing [SEP]");
    // the separator's surrounding spaces belong to the neighbouring text runs
    auto trim_edge = [&](std::size_t k, bool trailing) {
        auto& t = tokens[k].text;
        if (tokens[k].kind != detail::TokenKind::text || t.empty() ||
            (trailing ? t.back() : t.front()) != ' ')
            throw ParseError(0, fmt::format("[SEP] must be surrounded by spaces (offset {})", tokens[sep].offset));
        if (trailing) t.pop_back();
        else t.erase(0, 1);
    };
    if (sep == 0 || sep + 1 >= tokens.size()) throw ParseError(0, "empty side around [SEP]");
    trim_edge(sep - 1, true);
    trim_edge(sep + 1, false);
    auto drop_empty = [&](std::size_t k) { return tokens[k].kind == detail::TokenKind::text && tokens[k].text.empty(); };
    const std::size_t left_end = drop_empty(sep - 1) ? sep - 1 : sep;
    const std::size_t right_begin = drop_empty(sep + 1) ? sep + 2 : sep + 1;
    return {detail::parse_tokens(tokens, 0, left_end, 0),
            detail::parse_tokens(tokens, right_begin, tokens.size(), 0)};
}

/// Whitespace-separated tokens of every value, in attribute order.
inline std::vector<std::string> value_tokens(const EntityRecord& r) {
    std::vector<std::string> out;
    for (const auto& a : r.attributes) {
        std::istringstream in(a.value);
        std::string tok;
        while (in >> tok) out.push_back(tok);
    }
    return out;
}

struct ValueMove {
    std::size_t from = 0;
    std::size_t to = 0;
};

struct CorruptionResult {
    EntityRecord record;
    std::vector<ValueMove> moves;
    bool skipped = false;  // fewer than two attributes: returned unchanged
};

/// Dirty-dataset corruption. For each attribute i in order the generator
/// draws u = uniform(); if u < move_probability it draws the target
/// j = below(n - 1), skipping i, and the original value of i is appended
/// (single-space joined) to attribute j, leaving slot i empty. Appends land
/// in source order after any retained content. Empty values consume the
/// same draws but move nothing.
inline CorruptionResult dirty_corrupt(const EntityRecord& r, std::uint64_t seed,
                                      double move_probability = 0.5) {
    if (!(move_probability >= 0.0 && move_probability <= 1.0))
        throw DomainError(fmt::format("move probability {} outside [0,1]", move_probability));
    CorruptionResult out;
    const std::size_t n = r.attributes.size();
    if (n < 2) {
        out.record = r;
        out.skipped = true;
        return out;
    }
    SplitMix64 rng(seed);
    std::vector<bool> moved(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(rng.uniform() < move_probability)) continue;
        auto j = static_cast<std::size_t>(rng.below(n - 1));
        if (j >= i) ++j;
        if (r.attributes[i].value.empty()) continue;
        moved[i] = true;
        out.moves.push_back({i, j});
    }
    out.record = r;
    for (std::size_t i = 0; i < n; ++i)
        if (moved[i]) out.record.attributes[i].value.clear();
    for (const auto& m : out.moves) {
        auto& dst = out.record.attributes[m.to].value;
        if (!dst.empty()) dst += ' ';
        dst += r.attributes[m.from].value;
    }
    return out;
}

/// Entity table: CSV with an `id` column; every other column is an
/// attribute, in header order.
struct EntityTable {
    std::vector<std::string> ids;
    std::vector<EntityRecord> records;

    std::optional<std::size_t> find(std::string_view id) const {
        for (std::size_t i = 0; i < ids.size(); ++i)
            if (ids[i] == id) return i;
        return std::nullopt;
    }
};

inline EntityTable parse_entity_table(std::string_view raw) {
    const auto rows = csv::read(raw);
    if (rows.empty()) throw ParseError(1, "entity table has no header");
    const auto& header = rows.front().fields;
    std::size_t id_col = header.size();
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == "id") {
            if (id_col != header.size()) throw ParseError(1, "duplicate 'id' column");
            id_col = c;
        } else if (header[c].empty()) {
            throw ParseError(1, fmt::format("column {} has an empty name", c + 1));
        }
    }
    if (id_col == header.size()) throw ParseError(1, "entity table needs an 'id' column");
    if (header.size() < 2) throw ParseError(1, "entity table has no attribute columns");
    EntityTable t;
    for (std::size_t k = 1; k < rows.size(); ++k) {
        const auto& f = rows[k].fields;
        if (f.size() != header.size())
            throw ParseError(rows[k].line, fmt::format("expected {} fields, found {}", header.size(), f.size()));
        if (f[id_col].empty()) throw ParseError(rows[k].line, "empty id");
        EntityRecord r;
        for (std::size_t c = 0; c < f.size(); ++c)
            if (c != id_col) r.attributes.push_back({header[c], f[c]});
        t.ids.push_back(f[id_col]);
        t.records.push_back(std::move(r));
    }
    return t;
}

struct PairRef {
    std::string left_id;
    std::string right_id;
    std::optional<int> label;
};

/// Pairs CSV: header `left_id,right_id,label`; label may be empty.
inline std::vector<PairRef> parse_pairs(std::string_view raw) {
    const auto rows = csv::read(raw);
    if (rows.empty() || csv::join(rows.front().fields) != "left_id,right_id,label")
        throw ParseError(1, "expected header 'left_id,right_id,label'");
    std::vector<PairRef> out;
    for (std::size_t k = 1; k < rows.size(); ++k) {
        const auto& f = rows[k].fields;
        if (f.size() != 3) throw ParseError(rows[k].line, fmt::format("expected 3 fields, found {}", f.size()));
        PairRef p{f[0], f[1], std::nullopt};
        if (f[2] == "0" || f[2] == "1") p.label = f[2] == "1";
        else if (!f[2].empty()) throw DomainError(fmt::format("line {}: label '{}' not in {{0,1}}", rows[k].line, f[2]));
        out.push_back(std::move(p));
    }
    return out;
}

struct SerializedPairs {
    std::string text;     // one serialized pair per line
    std::string sidecar;  // CSV `id,label`, id = left_id|right_id
};

/// Serializes every pair in order. With `dirty_seed`, each table row is
/// corrupted once with seed derive_seed(seed, 2 * row) for the left table
/// and derive_seed(seed, 2 * row + 1) for the right.
inline SerializedPairs serialize_pairs(const EntityTable& left, const EntityTable& right,
                                       const std::vector<PairRef>& pairs,
                                       std::optional<std::uint64_t> dirty_seed = std::nullopt) {
    auto maybe_dirty = [&](const EntityTable& t, std::uint64_t side) {
        std::vector<EntityRecord> recs = t.records;
        if (dirty_seed)
            for (std::size_t i = 0; i < recs.size(); ++i)
                recs[i] = dirty_corrupt(recs[i], derive_seed(*dirty_seed, 2 * i + side)).record;
        return recs;
    };
    const auto lrec = maybe_dirty(left, 0);
    const auto rrec = maybe_dirty(right, 1);
    SerializedPairs out;
    out.sidecar = "id,label\n";
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const auto& p = pairs[k];
        const auto li = left.find(p.left_id);
        const auto ri = right.find(p.right_id);
        if (!li) throw AlignmentError(fmt::format("pair {}: unknown left id '{}'", k + 1, p.left_id));
        if (!ri) throw AlignmentError(fmt::format("pair {}: unknown right id '{}'", k + 1, p.right_id));
        out.text += serialize_pair({lrec[*li], rrec[*ri], p.label});
        out.text += '\n';
        out.sidecar += csv::join({p.left_id + "|" + p.right_id, p.label ? std::to_string(*p.label) : ""});
        out.sidecar += '\n';
    }
    return out;
}

}  // namespace calib
