#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace coforge::text {

std::string to_lower_ascii(std::string_view s);
std::string_view trim(std::string_view s);

/// Lowercased runs of ASCII alphanumerics. Every other byte separates tokens.
std::vector<std::string> tokenize(std::string_view s);

/// Largest index <= pos that does not split a UTF-8 sequence.
std::size_t utf8_floor(std::string_view s, std::size_t pos);
/// Smallest index >= pos that does not split a UTF-8 sequence.
std::size_t utf8_ceil(std::string_view s, std::size_t pos);

bool contains_icase(std::string_view haystack, std::string_view needle);

}  // namespace coforge::text
