#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string_view>

namespace hgrl {

/// Writes through a sibling temp file and renames it over `path`, so readers
/// never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, const std::function<void(std::ostream&)>& fill);
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace hgrl
