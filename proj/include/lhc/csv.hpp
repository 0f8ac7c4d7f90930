#pragma once
// Minimal RFC-4180 reader/writer. Quoted fields may span lines; the reader
// reports the physical line and column of the first byte of each field so
// higher layers can raise precise ParseErrors.

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "lhc/error.hpp"

namespace lhc::csv {

struct Field {
    std::string value;
    std::size_t line = 0;
    std::size_t column = 0;
};

struct Record {
    std::vector<Field> fields;
    std::size_t line = 0;  // line on which the record starts

    std::size_t size() const { return fields.size(); }
    const std::string& operator[](std::size_t i) const { return fields[i].value; }
};

class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    // Returns nullopt at end of input. Blank lines are skipped.
    std::optional<Record> next() {
        while (true) {
            if (in_.peek() == std::char_traits<char>::eof()) return std::nullopt;
            Record rec;
            rec.line = line_;
            bool blank = read_record(rec);
            if (!blank) return rec;
        }
    }

private:
    int get() {
        int c = in_.get();
        if (c == '\n') {
            ++line_;
            column_ = 1;
        } else if (c != std::char_traits<char>::eof()) {
            ++column_;
        }
        return c;
    }

    // Returns true when the physical line was empty.
    bool read_record(Record& rec) {
        constexpr int eof = std::char_traits<char>::eof();
        Field field{{}, line_, column_};
        bool any = false;
        while (true) {
            int c = get();
            if (c == eof || c == '\n') {
                if (!field.value.empty() && field.value.back() == '\r') field.value.pop_back();
                if (!any && field.value.empty()) return true;
                rec.fields.push_back(std::move(field));
                return false;
            }
            any = true;
            if (c == ',') {
                rec.fields.push_back(std::move(field));
                field = Field{{}, line_, column_};
                continue;
            }
            if (c == '"' && field.value.empty()) {
                read_quoted(field);
                continue;
            }
            field.value.push_back(static_cast<char>(c));
        }
    }

    void read_quoted(Field& field) {
        constexpr int eof = std::char_traits<char>::eof();
        while (true) {
            int c = get();
            if (c == eof) throw ParseError(field.line, field.column, "unterminated quoted field");
            if (c == '"') {
                if (in_.peek() == '"') {
                    get();
                    field.value.push_back('"');
                    continue;
                }
                int n = in_.peek();
                if (n != ',' && n != '\n' && n != '\r' && n != eof)
                    throw ParseError(line_, column_, "unexpected character after closing quote");
                return;
            }
            field.value.push_back(static_cast<char>(c));
        }
    }

    std::istream& in_;
    std::size_t line_ = 1;
    std::size_t column_ = 1;
};

inline std::string quote(std::string_view v) {
    bool needs = v.find_first_of(",\"\r\n") != std::string_view::npos ||
                 (!v.empty() && (v.front() == ' ' || v.back() == ' '));
    if (!needs) return std::string(v);
    std::string out = "\"";
    for (char c : v) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

inline void write_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << ',';
        out << quote(fields[i]);
    }
    out << '\n';
}

// Reads the header record and checks it matches `expected` exactly.
inline void expect_header(Reader& reader, const std::vector<std::string>& expected) {
    auto header = reader.next();
    if (!header) throw ParseError(1, 1, "missing header");
    if (header->size() != expected.size())
        throw ParseError(header->line, 1, "unexpected header");
    for (std::size_t i = 0; i < expected.size(); ++i)
        if ((*header)[i] != expected[i])
            throw ParseError(header->line, header->fields[i].column,
                             "expected header field '" + expected[i] + "'");
}

}  // namespace lhc::csv
