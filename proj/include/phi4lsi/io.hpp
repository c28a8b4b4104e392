#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace phi4 {
namespace io {

/** shortest repeatable decimal form (%.17g) */
std::string format_double(double v);

std::string join_row(const std::vector<std::string>& cells);

/** writes to <path>.tmp in the same directory, then renames over path */
void write_text_atomic(const std::string& path, const std::string& content);

std::string read_text(const std::string& path);

std::uint64_t fnv1a(const void* data, std::size_t size);

/** "fnv1a:" + 16 hex digits of the byte content */
std::string content_digest(const std::string& bytes);

}  // namespace io
}  // namespace phi4
