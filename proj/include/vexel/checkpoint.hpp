#pragma once

#include "vexel/nn.hpp"

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace vexel::ckpt {

struct Checkpoint {
    std::string config_json;
    std::map<std::string, nn::Tensor> tensors;
};

/// Container format "VXC1": length-prefixed UTF-8 config text, then one
/// record per tensor (name, dims, f32 little-endian data) in the given order.
void save_checkpoint(const std::string& path, const std::string& config_json,
                     const std::vector<std::pair<std::string, const nn::Tensor*>>& tensors);

Checkpoint load_checkpoint(const std::string& path);

std::vector<std::pair<std::string, const nn::Tensor*>> named_tensors(const nn::ParamStore& ps);

/// Rounds a tensor through f32, matching what a save/load round trip yields.
nn::Tensor round_f32(const nn::Tensor& t);

} // namespace vexel::ckpt
