#pragma once

#include <string>

namespace kgen {

/// Appends the shortest decimal representation that parses back to the same double.
void append_real(std::string& out, double value);
std::string format_real(double value);

}  // namespace kgen
