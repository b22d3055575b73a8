#pragma once

#include <string>
#include <string_view>

namespace subguard::detail {

/// Decodes UTF-8; malformed bytes are kept as single symbols.
std::u32string to_code_points(std::string_view s);
std::string to_utf8(std::u32string_view s);

}  // namespace subguard::detail
