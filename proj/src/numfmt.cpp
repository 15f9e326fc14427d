#include "dialogcore/numfmt.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <system_error>

namespace dialogcore {

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    if (value == 0.0) return "0";

    // d.ddddde[+-]x : rounding to 6 significant digits is done by to_chars.
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::scientific, 5);
    if (ec != std::errc{}) return "nan";
    std::string sci(buf, end);

    const bool negative = sci.front() == '-';
    if (negative) sci.erase(0, 1);
    const auto e_pos = sci.find('e');
    const int exponent = std::atoi(sci.c_str() + e_pos + 1);
    std::string digits;
    for (std::size_t i = 0; i < e_pos; ++i)
        if (sci[i] != '.') digits.push_back(sci[i]);

    // value = 0.d1d2...d6 * 10^(exponent + 1)
    const int point = exponent + 1;
    std::string out;
    if (point <= 0) {
        out = "0." + std::string(static_cast<std::size_t>(-point), '0') + digits;
    } else if (static_cast<std::size_t>(point) >= digits.size()) {
        out = digits + std::string(static_cast<std::size_t>(point) - digits.size(), '0');
    } else {
        out = digits.substr(0, static_cast<std::size_t>(point)) + "." + digits.substr(static_cast<std::size_t>(point));
    }
    if (out.find('.') != std::string::npos) {
        while (out.back() == '0') out.pop_back();
        if (out.back() == '.') out.pop_back();
    }
    return negative ? "-" + out : out;
}

}  // namespace dialogcore
