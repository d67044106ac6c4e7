#pragma once

#include "bergman/polynomial.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace bergman {

/// Shortest round-trip decimal form, '.' separator regardless of locale.
std::string format_double(double v);
std::string format_complex(cplx z);

/// Two-column or three-column CSV of (n, value) rows.
std::string sequence_to_csv(const std::vector<int>& n, const std::vector<cplx>& values, bool complex_values);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

} // namespace bergman
