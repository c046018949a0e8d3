#include "kgen/format.hpp"

#include <array>
#include <charconv>

namespace kgen {

void append_real(std::string& out, double value) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  out.append(buf.data(), ptr);
}

std::string format_real(double value) {
  std::string s;
  append_real(s, value);
  return s;
}

}  // namespace kgen
