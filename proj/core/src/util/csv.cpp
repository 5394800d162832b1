#include "permdet/util/csv.hpp"

#include <istream>
#include <ostream>

namespace permdet::util {

std::string csv_escape(const std::string& field) {
    bool needs_quote = field.find_first_of(",\"\r\n") != std::string::npos;
    if (!needs_quote) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (size_t i = 0; i < fields.size(); ++i) {
        if (i) out << ',';
        out << csv_escape(fields[i]);
    }
    out << '\n';
}

bool read_csv_row(std::istream& in, std::vector<std::string>& fields, size_t& line_no) {
    fields.clear();
    int c = in.get();
    // Skip a bare empty trailing line.
    while (c == '\n') {
        ++line_no;
        c = in.get();
    }
    if (c == EOF) return false;

    std::string field;
    bool in_quotes = false;
    size_t start_line = line_no;
    while (true) {
        if (c == EOF) {
            if (in_quotes) throw MalformedRow(start_line, "unterminated quoted field");
            fields.push_back(field);
            return true;
        }
        char ch = static_cast<char>(c);
        if (in_quotes) {
            if (ch == '"') {
                int next = in.peek();
                if (next == '"') {
                    in.get();
                    field += '"';
                } else {
                    in_quotes = false;
                }
            } else {
                if (ch == '\n') ++line_no;
                field += ch;
            }
        } else {
            if (ch == '"') {
                if (!field.empty())
                    throw MalformedRow(start_line, "quote inside unquoted field");
                in_quotes = true;
            } else if (ch == ',') {
                fields.push_back(field);
                field.clear();
            } else if (ch == '\r') {
                // swallow; CRLF handled at the LF
            } else if (ch == '\n') {
                ++line_no;
                fields.push_back(field);
                return true;
            } else {
                field += ch;
            }
        }
        c = in.get();
    }
}

}  // namespace permdet::util
