#pragma once

#include <filesystem>

#include "daml/nn/param.hpp"

namespace daml::nn {

// Binary parameter blob: magic, version, then for each parameter its name,
// shape, values and momentum (little-endian doubles as laid out in memory).
void write_param_blob(const ParamRefs& params, const std::filesystem::path& path);

// Loads into `params`; names and shapes must match exactly, else IoError.
void read_param_blob(const ParamRefs& params, const std::filesystem::path& path);

}  // namespace daml::nn
