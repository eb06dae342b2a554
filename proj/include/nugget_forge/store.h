#pragma once
// JSONL stores and run configuration.

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "nugget_forge/errors.h"
#include "nugget_forge/types.h"

namespace nf {

/// One object per line, UTF-8, field order as declared by the type.
template <typename T>
void write_jsonl(const std::filesystem::path& path, const std::vector<T>& items) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  for (const auto& item : items) out << json(item).dump() << '\n';
}

template <typename T>
std::vector<T> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  std::vector<T> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line).get<T>());
    } catch (const json::exception& e) {
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// Append-free search log entry used for held-out mining.
struct QueryRecord {
  std::string query_id;
  std::string text;
  std::string customer_id;
  bool operator==(const QueryRecord&) const = default;
};
void to_json(json& j, const QueryRecord& v);
void from_json(const json& j, QueryRecord& v);

/// Exclusive ownership of an output directory for one command process.
class DirLock {
 public:
  explicit DirLock(const std::filesystem::path& dir);
  ~DirLock();
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  std::filesystem::path lock_path_;
};

}  // namespace nf
