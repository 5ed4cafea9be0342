#pragma once

#include <string>

#include "regulus/types.hpp"

namespace regulus {

// Plain-text CSV interchange: one row per line, comma separated,
// '.' decimal point, no header, 17 significant digits.

void write_matrix_csv(const std::string& path, const Matrix& m);
Matrix read_matrix_csv(const std::string& path);

void write_vector_csv(const std::string& path, const Vector& v);
Vector read_vector_csv(const std::string& path);

/// Round-trip decimal formatting of one value (17 significant digits).
std::string format_full(double v);

}  // namespace regulus
