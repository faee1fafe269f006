#pragma once

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <string>

#ifndef ICL_CLI_PATH
#error "ICL_CLI_PATH must name the icl_cli binary"
#endif

namespace icl::test {

namespace fs = std::filesystem;

// Runs the CLI with `args`, output discarded; returns its exit status.
inline int run_cli(const std::string& args, const std::string& log = "/dev/null") {
  const std::string cmd = std::string(ICL_CLI_PATH) + " " + args + " >" + log + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Relative path -> contents for every regular file below `root`.
inline std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
  return out;
}

inline fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("icl_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

inline void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

// A configuration small enough to run the whole CLI chain in seconds.
inline std::string tiny_config_json() {
  return R"({
  "sem": {"d": 4, "n": 120, "s": 1.5, "mechanism": "nonlinear1", "noise": "gaussian"},
  "missing": {"mechanism": "mcar", "rate": 0.2},
  "seeds": [3, 4],
  "missing_rates": [0.2],
  "imputer": {"batch_size": 64},
  "structure": {"max_outer": 2, "inner_steps": 20, "batch_size": 64},
  "direction": {"steps": 20, "eval_samples": 2}
})";
}

}  // namespace icl::test
