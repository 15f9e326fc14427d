#pragma once

#include <string>

namespace dialogcore {

// Renders a value with 6 significant digits in plain positional notation
// (never exponent form), trailing zeros trimmed. Locale independent.
// Non-finite values render as "nan", "inf", "-inf".
std::string format_number(double value);

}  // namespace dialogcore
