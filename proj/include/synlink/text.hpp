#pragma once

#include <string>
#include <string_view>

namespace synlink {

/// ASCII lowercase, trim both ends, collapse internal whitespace runs to one space.
std::string normalize_name(std::string_view raw);

/// Lowercase and collapse whitespace runs to a single space without trimming.
std::string collapse_whitespace_lower(std::string_view raw);

}  // namespace synlink
