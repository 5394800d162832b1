#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>

#include "permdet/corpus/record.hpp"

namespace permdet::corpus {

struct OutputUnwritable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// CSV schema: header `id,text,label` or `id,text,label,vt_flags,year`;
// RFC 4180 quoting, UTF-8. Label and the optional columns round-trip
// losslessly (empty field = absent).
Records read_corpus(const std::filesystem::path& path);
Records read_corpus(std::istream& in);
void write_corpus(const std::filesystem::path& path, const Records& records);
void write_corpus(std::ostream& out, const Records& records);

// AndroZoo-style flag index: `sha256,year,market,vt_detection`. Returns
// records with vt_flags/year populated and empty text.
Records read_flag_index(const std::filesystem::path& path);
void write_flag_index(const std::filesystem::path& path, const Records& records);

}  // namespace permdet::corpus
