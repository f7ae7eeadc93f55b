#pragma once

#include <memory>
#include <string>

#include "protochange/features.hpp"

namespace protochange::detail {

std::unique_ptr<FeatureExtractor> make_onnx_extractor(const std::string& model_path, int expected_dim);

}  // namespace protochange::detail
