#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace anc::cli {

// Everything a config-driven command needs beyond the config file itself.
struct RunManifest {
  std::filesystem::path config_file;
  std::filesystem::path out_dir = ".";
  std::optional<std::uint64_t> seed_override;
  bool quiet = false;
};

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDivergence = 3;
inline constexpr int kExitIo = 4;

int cmd_meta_train(const RunManifest& m);
int cmd_run(const RunManifest& m);
int cmd_diversity(const RunManifest& m);

struct PathsSynthArgs {
  std::filesystem::path out_dir = ".";
  std::uint64_t seed = 1;
  std::size_t taps = 128;
  double decay = 0.9;
  std::size_t delay = 8;
  std::size_t count = 1;
  std::string prefix = "ir";
  bool quiet = false;
};
int cmd_paths_synth(const PathsSynthArgs& a);

struct PathsInspectArgs {
  std::filesystem::path file;
  double f_min = 100.0;
  double f_max = 2000.0;
  std::size_t points = 64;
};
int cmd_paths_inspect(const PathsInspectArgs& a);

// Maps an in-flight exception to the documented exit code and prints the
// message to stderr. Call from a catch-all.
int exit_code_for_current_exception();

}  // namespace anc::cli
