#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "jcapt/model/model.hpp"
#include "jcapt/training/trainer.hpp"

namespace jcapt::data {

struct DataPaths {
  std::filesystem::path train;
  std::filesystem::path test;
  std::filesystem::path model;
  std::filesystem::path loss_log;
};

// INI-style file with [model], [train] and [data] sections. Keys omitted
// keep their defaults; unknown sections or keys are errors.
struct RunConfig {
  model::ModelConfig model;
  training::TrainConfig train;
  DataPaths data;

  void validate() const;
};

// Throws ConfigError naming the source and key.
RunConfig parse_run_config(std::string_view text, std::string_view source = "<config>");
RunConfig load_run_config(const std::filesystem::path& path);
// Every key with its current value, in a form parse_run_config accepts.
std::string format_run_config(const RunConfig& c);

}  // namespace jcapt::data
