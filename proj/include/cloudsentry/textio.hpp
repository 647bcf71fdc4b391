#pragma once

#include <charconv>
#include <filesystem>
#include <string>
#include <string_view>

namespace cloudsentry {

/// Shortest decimal text that parses back to exactly `x`.
inline std::string format_double(double x) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, ptr);
}

/// Parses the whole of `text` as a double; false on any trailing garbage.
inline bool parse_double(std::string_view text, double& out) {
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc{} && ptr == text.data() + text.size();
}

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace cloudsentry
