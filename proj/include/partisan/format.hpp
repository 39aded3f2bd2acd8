#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace partisan {

// Fixed-point rendering of the exact binary value, ties to even, C locale.
// "-0.00" is normalized to "0.00".
std::string format_fixed(double v, int decimals);

// Shortest decimal string that round-trips to `v`.
std::string format_shortest(double v);

// RFC 4180 field quoting.
std::string csv_field(std::string_view s);
std::string csv_row(const std::vector<std::string>& fields);

std::string sha256_hex(std::string_view data);
// Throws IoError if the file cannot be read.
std::string sha256_file(const std::string& path);

}  // namespace partisan
