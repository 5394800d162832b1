#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace permdet::util {

struct MalformedRow : std::runtime_error {
    size_t line;
    explicit MalformedRow(size_t line_no, const std::string& what)
        : std::runtime_error("line " + std::to_string(line_no) + ": " + what),
          line(line_no) {}
};

// RFC 4180: fields containing comma, quote, CR or LF are quoted; embedded
// quotes are doubled.
std::string csv_escape(const std::string& field);

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

// Reads one record (which may span physical lines when fields contain
// newlines). Returns false at end of input. line_no tracks the physical line
// the record started on, for error reporting.
bool read_csv_row(std::istream& in, std::vector<std::string>& fields, size_t& line_no);

}  // namespace permdet::util
