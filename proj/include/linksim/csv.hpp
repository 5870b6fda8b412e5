#pragma once

#include <string>

namespace linksim {

// Shortest round-trippable decimal, stable across runs ("%.10g"); integral
// values print with no fractional part.
std::string format_double(double value);

// Creates parent directories as needed; throws config_error on I/O failure.
void write_text_file(const std::string& path, const std::string& content);

} // namespace linksim
