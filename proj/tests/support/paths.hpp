#pragma once

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <sys/wait.h>

#include "fairdiv/io.hpp"

namespace testsupport {

inline std::string golden_dir() { return FAIRDIV_TEST_GOLDEN_DIR; }

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline std::string golden(const std::string& name) { return read_file(golden_dir() + "/" + name); }

inline fairdiv::json golden_json(const std::string& name) { return fairdiv::json::parse(golden(name)); }

struct CommandResult {
  int status = -1;
  std::string output;
};

// Runs a shell command and captures stdout and stderr together.
inline CommandResult run_command(const std::string& cmd) {
  CommandResult r;
  FILE* p = popen((cmd + " 2>&1").c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf{};
  size_t got;
  while ((got = fread(buf.data(), 1, buf.size(), p)) > 0) r.output.append(buf.data(), got);
  int st = pclose(p);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

inline std::string cli_path() { return FAIRDIV_CLI_PATH; }

}  // namespace testsupport
