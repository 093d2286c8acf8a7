// simulate / correct / eval front-ends. Each returns a process exit code:
// 0 ok, 1 compute error, 2 I/O or configuration error.
#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace mar {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCompute = 1;
inline constexpr int kExitIo = 2;

struct SimulateOptions {
  std::filesystem::path config;  // empty: defaults
  std::filesystem::path out;
  bool suite = false;            // write the bundled ten-case suite into out/<case_id>
  bool previews = true;
  int jobs = 1;
};

struct CorrectOptions {
  std::string method;
  std::filesystem::path input;   // case directory or suite directory
  std::filesystem::path config;  // empty: input/config.ini when present, else defaults
  std::filesystem::path out;
  bool previews = true;
  int jobs = 1;
};

struct EvalOptions {
  std::filesystem::path gt;
  std::vector<std::filesystem::path> results;
  std::filesystem::path out_csv;
  std::string grouping = "pairwise";  // pairwise | none
  bool include_input = false;          // also score the uncorrected x_ma
};

int cmd_simulate(const SimulateOptions& opts, std::ostream& out, std::ostream& err);
int cmd_correct(const CorrectOptions& opts, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalOptions& opts, std::ostream& out, std::ostream& err);

/// `key = value` lines.
std::map<std::string, std::string> read_meta(const std::filesystem::path& path);

}  // namespace mar
