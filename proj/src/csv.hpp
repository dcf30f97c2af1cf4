#pragma once

#include <string>
#include <vector>

#include "types.hpp"

namespace metatrace {

// Shortest decimal representation that parses back to the same double.
std::string num_shortest(double v);

// Fixed 17-significant-digit representation (also round-trip exact); used by
// the machine-readable report and trace exports.
std::string num17(double v);

// Quotes the field iff it contains a comma, a quote or a line break
// (RFC 4180); embedded quotes are doubled.
std::string csv_escape(const std::string& field);

// RFC 4180 parser: LF or CRLF record ends, quoted fields, doubled quotes.
// Returns one vector of fields per record; a trailing newline does not
// produce an empty record.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

// Reads a dataset from CSV text. Expected header: label,y,se followed by any
// number of covariate columns. Leading lines starting with '#' are treated as
// comments; a '# source: ...' line feeds Dataset::source. Diagnostics cite
// 1-based data row numbers. Throws input_error.
Dataset ingest_dataset(const std::string& text);

// Inverse of ingest_dataset: emits a '# source:' comment when set, then
// header and rows with shortest round-trip numbers. LF line endings.
std::string write_dataset_csv(const Dataset& data);

// Whole-file helpers; failures throw io_error naming the path.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace metatrace
