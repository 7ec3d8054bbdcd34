#include "core/user_state_store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include "core/encoding.hpp"
#include "core/errors.hpp"

namespace dpage {

namespace fs = std::filesystem;

fs::path default_state_dir() {
  if (const char* xdg = std::getenv("XDG_DATA_HOME"); xdg && *xdg) return fs::path(xdg) / "dpage" / "state";
  if (const char* home = std::getenv("HOME"); home && *home) {
    return fs::path(home) / ".local" / "share" / "dpage" / "state";
  }
  return fs::temp_directory_path() / "dpage-state";
}

fs::path state_path(const fs::path& dir, std::string_view key) {
  if (key.empty()) throw Error(ErrorCode::invalid_argument, "state key is empty");
  // Percent-encode anything that could leave the directory or clash on disk.
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string name;
  for (const char ch : key) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c == '-' || c == '_' || (c == '.' && !name.empty())) {
      name.push_back(ch);
    } else {
      name += {'%', kHex[c >> 4], kHex[c & 15]};
    }
  }
  return dir / (name + std::string(kStateExtension));
}

namespace detail {

fs::path write_temp(const UserState& state, const fs::path& dir, std::string_view key) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io, "cannot create state directory " + dir.string() + ": " + ec.message());
  const fs::path final_path = state_path(dir, key);
  const fs::path temp = final_path.string() + ".tmp-" + random_hex(6);
  const std::string bytes =
      user_state_to_json(state).dump(2, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";

  const int fd = ::open(temp.c_str(), O_WRONLY | O_CREAT | O_EXCL | O_CLOEXEC, 0600);
  if (fd < 0) throw Error(ErrorCode::io, "cannot create " + temp.string() + ": " + std::strerror(errno));
  std::size_t written = 0;
  while (written < bytes.size()) {
    const ssize_t n = ::write(fd, bytes.data() + written, bytes.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      const int err = errno;
      ::close(fd);
      fs::remove(temp, ec);
      throw Error(ErrorCode::io, "write to " + temp.string() + " failed: " + std::strerror(err));
    }
    written += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0 || ::close(fd) != 0) {
    fs::remove(temp, ec);
    throw Error(ErrorCode::io, "cannot flush " + temp.string());
  }
  return temp;
}

void commit(const fs::path& temp, const fs::path& final_path) {
  std::error_code ec;
  fs::rename(temp, final_path, ec);
  if (ec) {
    fs::remove(temp, ec);
    throw Error(ErrorCode::io, "cannot commit state file " + final_path.string() + ": " + ec.message());
  }
  const int dfd = ::open(final_path.parent_path().c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
  if (dfd >= 0) {
    ::fsync(dfd);
    ::close(dfd);
  }
}

}  // namespace detail

void save_state(const UserState& state, const fs::path& dir, std::string_view key) {
  const std::string_view k = key.empty() ? std::string_view(state.page_id) : key;
  const fs::path temp = detail::write_temp(state, dir, k);
  detail::commit(temp, state_path(dir, k));
}

std::optional<UserState> load_state(std::string_view key, const fs::path& dir) {
  const fs::path path = state_path(dir, key);
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    if (!fs::exists(path)) return std::nullopt;
    throw Error(ErrorCode::io, "cannot read " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  in.close();
  try {
    const auto doc = nlohmann::json::parse(buf.str());
    return user_state_from_json(doc);
  } catch (const std::exception& e) {
    fs::path recovery = path.string() + ".corrupt";
    for (int n = 1; fs::exists(recovery); ++n) recovery = path.string() + ".corrupt-" + std::to_string(n);
    std::error_code ec;
    fs::rename(path, recovery, ec);
    throw Error(ErrorCode::corrupt_state, "state file " + path.string() + " is corrupt (" + e.what() +
                                              "); preserved as " + recovery.string());
  }
}

}  // namespace dpage
