#include "selfplay/jsonl.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace selfplay::jsonl {

namespace fs = std::filesystem;

std::uintmax_t truncate_partial_tail(const fs::path& path) {
  std::error_code ec;
  if (!fs::exists(path, ec)) return 0;
  const std::uintmax_t size = fs::file_size(path);
  if (size == 0) return 0;

  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  // Scan backwards for the last newline.
  std::uintmax_t keep = 0;
  constexpr std::uintmax_t kChunk = 4096;
  std::uintmax_t end = size;
  std::string buf;
  while (end > 0) {
    const std::uintmax_t begin = end > kChunk ? end - kChunk : 0;
    buf.resize(static_cast<std::size_t>(end - begin));
    in.seekg(static_cast<std::streamoff>(begin));
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    const auto nl = buf.rfind('\n');
    if (nl != std::string::npos) {
      keep = begin + nl + 1;
      break;
    }
    end = begin;
  }
  in.close();
  if (keep == size) return 0;
  fs::resize_file(path, keep);
  return size - keep;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string content = ss.str();

  std::vector<std::string> lines;
  std::size_t start = 0;
  while (true) {
    const auto nl = content.find('\n', start);
    if (nl == std::string::npos) break;
    lines.emplace_back(content, start, nl - start);
    start = nl + 1;
  }
  return lines;
}

void append_lines(const fs::path& path, std::span<const std::string> lines) {
  std::error_code ec;
  const std::uintmax_t before = fs::exists(path, ec) ? fs::file_size(path) : 0;
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for append");
  for (const auto& line : lines) {
    out.write(line.data(), static_cast<std::streamsize>(line.size()));
    out.put('\n');
  }
  out.flush();
  const bool ok = static_cast<bool>(out);
  out.close();
  if (!ok) {
    fs::resize_file(path, before, ec);
    throw std::runtime_error("write failed for " + path.string());
  }
}

void touch(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw std::runtime_error("cannot create " + path.string());
}

void write_atomically(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace selfplay::jsonl
