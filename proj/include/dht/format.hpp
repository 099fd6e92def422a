#pragma once

#include <string>

namespace dht {

// Shortest "%.10g" rendering; every numeric field in CSV, key=value and JSON output goes through here.
std::string format_number(double v);

} // namespace dht
