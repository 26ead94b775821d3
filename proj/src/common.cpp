#include "coresat/common.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>

#include <fmt/format.h>

namespace coresat {

namespace {

bool parse_int(std::string_view text, int& out)
{
    if (text.empty())
        return false;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, out);
    return ec == std::errc{} && ptr == end;
}

constexpr std::array<std::string_view, 7> kWeekdayNames = {
    "sunday", "monday", "tuesday", "wednesday", "thursday", "friday", "saturday"};

} // namespace

Date parse_date(std::string_view text)
{
    const std::string s = trim(text);
    if (s.size() != 10 || s[4] != '-' || s[7] != '-')
        throw Error("malformed date '" + s + "', expected YYYY-MM-DD");
    int y = 0, m = 0, d = 0;
    if (!parse_int(std::string_view(s).substr(0, 4), y) ||
        !parse_int(std::string_view(s).substr(5, 2), m) ||
        !parse_int(std::string_view(s).substr(8, 2), d))
        throw Error("malformed date '" + s + "', expected YYYY-MM-DD");
    const std::chrono::year_month_day ymd{std::chrono::year{y},
                                          std::chrono::month{static_cast<unsigned>(m)},
                                          std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok())
        throw Error("invalid calendar date '" + s + "'");
    return Date{ymd};
}

std::string format_date(Date date)
{
    const std::chrono::year_month_day ymd{date};
    return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(ymd.year()),
                       static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
}

int year_of(Date date)
{
    return static_cast<int>(std::chrono::year_month_day{date}.year());
}

std::chrono::weekday parse_weekday(std::string_view text)
{
    const std::string name = to_lower(trim(text));
    for (unsigned i = 0; i < kWeekdayNames.size(); ++i) {
        const auto full = kWeekdayNames[i];
        if (name == full || (name.size() == 3 && full.substr(0, 3) == name))
            return std::chrono::weekday{i};
    }
    throw ConfigError("unknown weekday '" + std::string(text) + "'");
}

std::string weekday_name(std::chrono::weekday day)
{
    return std::string(kWeekdayNames[day.c_encoding()]);
}

std::string format_double(double value)
{
    return fmt::format("{}", value);
}

std::string trim(std::string_view text)
{
    auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos)
        return {};
    auto last = text.find_last_not_of(" \t\r\n");
    return std::string(text.substr(first, last - first + 1));
}

std::string to_lower(std::string_view text)
{
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

} // namespace coresat
