#pragma once

#include "cdckg/trainer.hpp"

#include <string>
#include <vector>

namespace cdckg {

// Named per-dataset hyperparameter sets. Model kind and file paths are not
// part of a preset; they stay caller-controlled.
TrainConfig preset_config(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace cdckg
