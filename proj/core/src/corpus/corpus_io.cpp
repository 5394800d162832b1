#include "permdet/corpus/corpus_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "permdet/util/csv.hpp"

namespace permdet::corpus {

namespace {

using util::MalformedRow;

int parse_int_field(const std::string& s, size_t line) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw MalformedRow(line, "not an integer: '" + s + "'");
    return v;
}

Label parse_label_field(const std::string& s, size_t line) {
    if (s.empty()) return Label::Unlabeled;
    int v = parse_int_field(s, line);
    if (v != 0 && v != 1) throw MalformedRow(line, "label must be 0 or 1");
    return v == 0 ? Label::Benign : Label::Malware;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw OutputUnwritable("cannot write " + path.string());
    return out;
}

}  // namespace

Records read_corpus(std::istream& in) {
    std::vector<std::string> fields;
    size_t line = 1;
    if (!util::read_csv_row(in, fields, line)) return {};
    bool extended = fields.size() == 5;
    if (!extended && fields.size() != 3)
        throw MalformedRow(1, "header must be id,text,label[,vt_flags,year]");

    Records records;
    size_t row_line = line;
    while (util::read_csv_row(in, fields, line)) {
        if (fields.size() != (extended ? 5u : 3u))
            throw MalformedRow(row_line, "expected " +
                                                 std::to_string(extended ? 5 : 3) +
                                                 " fields, got " +
                                                 std::to_string(fields.size()));
        CorpusRecord rec;
        rec.id = fields[0];
        rec.text = fields[1];
        rec.label = parse_label_field(fields[2], row_line);
        if (extended) {
            if (!fields[3].empty()) rec.vt_flags = parse_int_field(fields[3], row_line);
            if (!fields[4].empty()) rec.year = parse_int_field(fields[4], row_line);
        }
        records.push_back(std::move(rec));
        row_line = line;
    }
    return records;
}

Records read_corpus(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return read_corpus(in);
}

void write_corpus(std::ostream& out, const Records& records) {
    bool extended = false;
    for (const auto& r : records)
        if (r.vt_flags || r.year) extended = true;

    std::vector<std::string> fields;
    if (extended)
        fields = {"id", "text", "label", "vt_flags", "year"};
    else
        fields = {"id", "text", "label"};
    util::write_csv_row(out, fields);

    for (const auto& r : records) {
        fields.clear();
        fields.push_back(r.id);
        fields.push_back(r.text);
        fields.push_back(r.label == Label::Unlabeled
                             ? ""
                             : std::to_string(label_value(r.label)));
        if (extended) {
            fields.push_back(r.vt_flags ? std::to_string(*r.vt_flags) : "");
            fields.push_back(r.year ? std::to_string(*r.year) : "");
        }
        util::write_csv_row(out, fields);
    }
}

void write_corpus(const std::filesystem::path& path, const Records& records) {
    auto out = open_out(path);
    write_corpus(out, records);
}

Records read_flag_index(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<std::string> fields;
    size_t line = 1;
    if (!util::read_csv_row(in, fields, line)) return {};
    if (fields.size() < 4)
        throw MalformedRow(1, "header must be sha256,year,market,vt_detection");

    Records records;
    size_t row_line = line;
    while (util::read_csv_row(in, fields, line)) {
        if (fields.size() < 4)
            throw MalformedRow(row_line, "expected 4 fields");
        CorpusRecord rec;
        rec.id = fields[0];
        if (!fields[1].empty()) rec.year = parse_int_field(fields[1], row_line);
        if (!fields[3].empty()) rec.vt_flags = parse_int_field(fields[3], row_line);
        records.push_back(std::move(rec));
        row_line = line;
    }
    return records;
}

void write_flag_index(const std::filesystem::path& path, const Records& records) {
    auto out = open_out(path);
    util::write_csv_row(out, {"sha256", "year", "market", "vt_detection"});
    for (const auto& r : records) {
        util::write_csv_row(out, {r.id, r.year ? std::to_string(*r.year) : "",
                                  "play.google.com",
                                  r.vt_flags ? std::to_string(*r.vt_flags) : ""});
    }
}

}  // namespace permdet::corpus
