#pragma once

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "saved/rng.hpp"
#include "saved/types.hpp"

namespace saved::test {

inline Image random_image(Eigen::Index h, Eigen::Index w, CounterRng& rng) {
  Image img(h, w);
  for (Eigen::Index i = 0; i < img.size(); ++i) img.data()[i] = rng.uniform();
  return img;
}

inline Clip random_clip(std::size_t n, Eigen::Index h, Eigen::Index w, std::uint64_t seed) {
  CounterRng rng(seed, 99);
  std::vector<Frame> frames;
  for (std::size_t i = 0; i < n; ++i) frames.emplace_back(random_image(h, w, rng));
  return Clip(std::move(frames));
}

// Fresh, empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("saved_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr interleaved
};

// Runs `program args...` through the shell with every argument single-quoted.
inline RunResult run(const std::string& program, const std::vector<std::string>& args,
                     const std::filesystem::path& log) {
  auto quote = [](const std::string& s) {
    std::string q = "'";
    for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
    return q + "'";
  };
  std::string cmd = quote(program);
  for (const std::string& a : args) cmd += " " + quote(a);
  cmd += " > " + quote(log.string()) + " 2>&1";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.output = read_file(log);
  return r;
}

}  // namespace saved::test
