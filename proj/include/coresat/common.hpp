#pragma once

#include <chrono>
#include <stdexcept>
#include <string>
#include <string_view>

namespace coresat {

/// Base exception for every recoverable pipeline failure.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised for invalid configuration before any computation starts.
class ConfigError : public Error {
public:
    using Error::Error;
};

using Date = std::chrono::sys_days;

/// Parses an ISO-8601 calendar date (YYYY-MM-DD). Throws Error on malformed input.
Date parse_date(std::string_view text);

std::string format_date(Date date);

int year_of(Date date);

/// Parses a weekday name ("sunday", "mon", ...), case-insensitive.
std::chrono::weekday parse_weekday(std::string_view text);

std::string weekday_name(std::chrono::weekday day);

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double value);

std::string trim(std::string_view text);

std::string to_lower(std::string_view text);

} // namespace coresat
