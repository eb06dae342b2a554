#include "nugget_forge/store.h"

#include <fcntl.h>
#include <unistd.h>

#include <sstream>

namespace nf {

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void to_json(json& j, const QueryRecord& v) {
  j = json{{"query_id", v.query_id}, {"text", v.text}, {"customer_id", v.customer_id}};
}

void from_json(const json& j, QueryRecord& v) {
  j.at("query_id").get_to(v.query_id);
  j.at("text").get_to(v.text);
  v.customer_id = j.value("customer_id", std::string{});
}

DirLock::DirLock(const std::filesystem::path& dir) : lock_path_(dir / ".lock") {
  std::filesystem::create_directories(dir);
  int fd = ::open(lock_path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) throw IntegrityError("output directory is locked by another process: " + lock_path_.string());
  auto pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

DirLock::~DirLock() {
  std::error_code ec;
  std::filesystem::remove(lock_path_, ec);
}

}  // namespace nf
