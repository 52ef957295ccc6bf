#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "detlab/io.hpp"

namespace detlab::cmd {

inline constexpr int kOk = 0;
inline constexpr int kConfigError = 2;
inline constexpr int kRuntimeError = 3;

// Shared command-line surface; unset fields fall back to the config file,
// then to built-in defaults. Same config + seed means same output bytes.
struct Options {
  std::optional<std::filesystem::path> config_path;
  std::optional<uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> regime;
  std::optional<int> jobs;
};

int cmd_assign(const Options& opts, const std::filesystem::path& candidates,
               const std::filesystem::path& objects);
int cmd_perceptron(const Options& opts);
int cmd_train(const Options& opts);
int cmd_crowd(const Options& opts);
int cmd_eval(const Options& opts, const std::filesystem::path& detections,
             const std::filesystem::path& ground_truth);
int cmd_nms(const Options& opts, const std::filesystem::path& detections);

}  // namespace detlab::cmd
