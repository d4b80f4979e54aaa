#include "synlink/text.hpp"

#include <cctype>

namespace synlink {

namespace {

bool is_space(char c) {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}

char to_lower(char c) {
    return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

}  // namespace

std::string collapse_whitespace_lower(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    bool in_space = false;
    for (char c : raw) {
        if (is_space(c)) {
            if (!in_space) {
                out.push_back(' ');
            }
            in_space = true;
        } else {
            out.push_back(to_lower(c));
            in_space = false;
        }
    }
    return out;
}

std::string normalize_name(std::string_view raw) {
    std::string out = collapse_whitespace_lower(raw);
    const auto first = out.find_first_not_of(' ');
    if (first == std::string::npos) {
        return {};
    }
    const auto last = out.find_last_not_of(' ');
    return out.substr(first, last - first + 1);
}

}  // namespace synlink
