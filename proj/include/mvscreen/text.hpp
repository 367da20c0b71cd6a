#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace mvscreen::text {

/// Lowercases ASCII letters and splits on every run of non-alphanumeric
/// ASCII bytes. Bytes >= 0x80 are kept inside words so multi-byte UTF-8
/// letters never introduce a word boundary.
std::vector<std::string> tokenize(std::string_view input);

std::string to_lower_ascii(std::string_view input);

}  // namespace mvscreen::text
