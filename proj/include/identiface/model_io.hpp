#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "identiface/model.hpp"
#include "identiface/svm.hpp"

namespace identiface {

// Model file layout (little-endian):
//   "IDFC"                 4-byte magic
//   version                uint32 (currently 1)
//   header_length          uint32
//   header                 UTF-8 JSON: kind ("cnn" | "svm"), spec, label_map,
//                          preprocess, tensor table, history, provenance
//   payload                float32 tensors, declaration order, no padding

inline constexpr std::uint32_t kModelFormatVersion = 1;

std::vector<std::uint8_t> serialize_model(const TrainedModel& model);
TrainedModel deserialize_model(std::span<const std::uint8_t> bytes);
void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

std::vector<std::uint8_t> serialize_svm(const SvmModel& model);
SvmModel deserialize_svm(std::span<const std::uint8_t> bytes);
void save_svm(const SvmModel& model, const std::filesystem::path& path);
SvmModel load_svm(const std::filesystem::path& path);

/// "cnn" or "svm", from the header alone.
std::string model_kind(std::span<const std::uint8_t> bytes);

/// 16-hex-digit FNV-1a digest of the file bytes.
std::string model_version(std::span<const std::uint8_t> bytes);

nlohmann::json spec_to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const nlohmann::json& doc);
nlohmann::json preprocess_to_json(const PreprocessSpec& spec);
PreprocessSpec preprocess_from_json(const nlohmann::json& doc);

}  // namespace identiface
