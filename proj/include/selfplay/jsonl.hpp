#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace selfplay::jsonl {

// Drops a trailing line without its terminating newline (a record cut short
// by a crash). Returns the number of bytes removed; a missing file is a no-op.
std::uintmax_t truncate_partial_tail(const std::filesystem::path& path);

// Complete lines only, without the newline.
std::vector<std::string> read_lines(const std::filesystem::path& path);

// Appends one line per record and flushes. On failure the file is cut back to
// its previous length and std::runtime_error names the path.
void append_lines(const std::filesystem::path& path, std::span<const std::string> lines);

// Creates the file when missing without changing existing content.
void touch(const std::filesystem::path& path);

// Writes through a temporary file and renames it into place.
void write_atomically(const std::filesystem::path& path, const std::string& content);

}  // namespace selfplay::jsonl
