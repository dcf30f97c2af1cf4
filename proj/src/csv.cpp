#include "csv.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace metatrace {

std::string num_shortest(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string num17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;  // have we consumed anything for this record?

    auto end_field = [&] {
        record.push_back(field);
        field.clear();
    };
    auto end_record = [&] {
        end_field();
        records.push_back(record);
        record.clear();
        field_started = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        switch (c) {
            case '"':
                in_quotes = true;
                field_started = true;
                break;
            case ',':
                end_field();
                field_started = true;
                break;
            case '\r':
                if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
                end_record();
                break;
            case '\n':
                end_record();
                break;
            default:
                field += c;
                field_started = true;
                break;
        }
    }
    if (in_quotes) throw input_error("unterminated quoted field at end of input");
    if (field_started || !field.empty() || !record.empty()) end_record();
    return records;
}

namespace {

std::string trimmed(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

std::string lowered(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

double parse_number(const std::string& field, std::size_t row, const std::string& column) {
    const std::string t = trimmed(field);
    const char* begin = t.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (t.empty() || end != begin + t.size())
        throw input_error("row " + std::to_string(row) + ": '" + field + "' in column '" +
                          column + "' is not a number");
    return v;
}

}  // namespace

Dataset ingest_dataset(const std::string& text) {
    // Peel off leading comment lines before CSV parsing proper.
    std::string source;
    std::size_t pos = 0;
    while (pos < text.size() && text[pos] == '#') {
        std::size_t eol = text.find('\n', pos);
        std::string line = text.substr(pos, eol == std::string::npos ? eol : eol - pos);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string body = trimmed(line.substr(1));
        if (lowered(body).rfind("source:", 0) == 0) source = trimmed(body.substr(7));
        pos = (eol == std::string::npos) ? text.size() : eol + 1;
    }

    auto rows = parse_csv(text.substr(pos));
    if (rows.empty()) throw input_error("empty input: expected a header row label,y,se[,...]");

    const auto& header = rows.front();
    if (header.size() < 3 || lowered(trimmed(header[0])) != "label" ||
        lowered(trimmed(header[1])) != "y" || lowered(trimmed(header[2])) != "se")
        throw input_error("header must start with columns label,y,se");

    Dataset data;
    data.source = source;
    for (std::size_t j = 3; j < header.size(); ++j) {
        std::string name = trimmed(header[j]);
        if (name.empty())
            throw input_error("covariate column " + std::to_string(j + 1) + " has an empty name");
        if (data.has_covariate(name)) throw input_error("duplicate covariate column '" + name + "'");
        data.covariate_names.push_back(name);
        data.covariate_columns.emplace_back();
    }

    if (rows.size() < 2) throw input_error("no data rows after the header");
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() == 1 && trimmed(row[0]).empty()) continue;  // stray blank line
        if (row.size() != header.size())
            throw input_error("row " + std::to_string(r) + " has " + std::to_string(row.size()) +
                              " fields, expected " + std::to_string(header.size()));
        std::string label = trimmed(row[0]);
        if (label.empty()) throw input_error("row " + std::to_string(r) + ": empty study label");
        for (const auto& seen : data.labels)
            if (seen == label)
                throw input_error("row " + std::to_string(r) + ": duplicate label '" + label + "'");
        data.labels.push_back(label);
        data.y.push_back(parse_number(row[1], r, "y"));
        double se = parse_number(row[2], r, "se");
        if (!(se > 0.0))
            throw input_error("row " + std::to_string(r) + ": se must be positive (got " +
                              num_shortest(se) + ")");
        data.se.push_back(se);
        for (std::size_t j = 0; j < data.covariate_names.size(); ++j)
            data.covariate_columns[j].push_back(
                parse_number(row[3 + j], r, data.covariate_names[j]));
    }

    data.validate();
    return data;
}

std::string write_dataset_csv(const Dataset& data) {
    data.validate();
    std::string out;
    if (!data.source.empty()) out += "# source: " + data.source + "\n";
    out += "label,y,se";
    for (const auto& name : data.covariate_names) out += "," + csv_escape(name);
    out += '\n';
    for (std::size_t i = 0; i < data.size(); ++i) {
        out += csv_escape(data.labels[i]);
        out += ',' + num_shortest(data.y[i]);
        out += ',' + num_shortest(data.se[i]);
        for (const auto& col : data.covariate_columns) out += ',' + num_shortest(col[i]);
        out += '\n';
    }
    return out;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot read file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw io_error("error while reading file: " + path);
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open file for writing: " + path);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) throw io_error("error while writing file: " + path);
}

}  // namespace metatrace
