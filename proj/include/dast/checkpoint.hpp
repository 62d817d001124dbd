#pragma once

#include <string>

#include "dast/model.hpp"

namespace dast {

struct Checkpoint {
    DastConfig config;
    ModelParams params;
};

void save_checkpoint(const DastConfig& config, const ModelParams& params,
                     const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

} // namespace dast
