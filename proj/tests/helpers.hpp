#pragma once

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "uesentry/codec.hpp"

namespace test_helpers {

inline std::string source_dir() { return UESENTRY_SOURCE_DIR; }
inline std::string data_path(const std::string& rel) { return source_dir() + "/data/" + rel; }
inline std::string cli_bin() { return UESENTRY_CLI_BIN; }

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

/// Runs a command, captures stdout, returns the process exit code.
struct CommandResult {
  int exit_code = -1;
  std::string output;
};

inline CommandResult run_command(const std::string& cmd) {
  CommandResult result;
  FILE* pipe = popen((cmd + " 2>/dev/null").c_str(), "r");
  if (!pipe) return result;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) result.output.append(buf, n);
  const int rc = pclose(pipe);
  result.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  return result;
}

/// Catalog-valid random message: random layer/type/protection plus 0..5
/// random IEs whose total block stays within bounds.
inline uesentry::CpMessage random_valid_message(std::mt19937_64& rng) {
  using namespace uesentry;
  std::uniform_int_distribution<int> coin(0, 1);
  std::vector<const MessageInfo*> pool;
  for (const auto& m : catalog::kMessages) pool.push_back(&m);
  const MessageInfo* info = pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];

  CpMessage msg;
  msg.layer = info->layer;
  msg.msg_type = info->code;
  const std::array<Protection, 3> prots = {Protection::None, Protection::IntegrityOnly,
                                           Protection::IntegrityAndCiphering};
  msg.protection = prots[std::uniform_int_distribution<std::size_t>(0, 2)(rng)];

  const std::size_t ie_count = std::uniform_int_distribution<std::size_t>(0, 5)(rng);
  for (std::size_t i = 0; i < ie_count; ++i) {
    const auto& ie_info =
        catalog::kIes[std::uniform_int_distribution<std::size_t>(0, catalog::kIes.size() - 1)(rng)];
    InformationElement ie;
    ie.tag = ie_info.tag;
    const std::size_t len = std::uniform_int_distribution<std::size_t>(0, 300)(rng);
    ie.value.resize(len);
    for (auto& b : ie.value) b = static_cast<std::uint8_t>(rng());
    msg.ies.push_back(std::move(ie));
  }
  (void)coin;
  return msg;
}

inline uesentry::Bytes random_bytes(std::mt19937_64& rng, std::size_t max_len) {
  uesentry::Bytes out(std::uniform_int_distribution<std::size_t>(0, max_len)(rng));
  for (auto& b : out) b = static_cast<std::uint8_t>(rng());
  return out;
}

/// Temporary directory that cleans up after itself.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("uesentry-" + tag + "-" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string str() const { return path_.string(); }
  std::filesystem::path path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace test_helpers
