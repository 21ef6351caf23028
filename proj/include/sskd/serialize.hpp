#pragma once

#include <json.hpp>

#include "sskd/augment.hpp"
#include "sskd/dataset.hpp"
#include "sskd/model.hpp"
#include "sskd/optimizer.hpp"
#include "sskd/trainer.hpp"

namespace sskd {

// JSON bindings for the configuration types. Absent keys fall back to the
// type's default value; unknown keys are rejected nowhere (forward
// compatibility is the caller's problem).

void to_json(nlohmann::json& j, const AdamHyper& h);
void from_json(const nlohmann::json& j, AdamHyper& h);

void to_json(nlohmann::json& j, const ModelSpec& spec);
void from_json(const nlohmann::json& j, ModelSpec& spec);

void to_json(nlohmann::json& j, const NormalizationStats& s);
void from_json(const nlohmann::json& j, NormalizationStats& s);

void to_json(nlohmann::json& j, const AugmentationPolicy& p);
void from_json(const nlohmann::json& j, AugmentationPolicy& p);

void to_json(nlohmann::json& j, const TrainConfig& cfg);
void from_json(const nlohmann::json& j, TrainConfig& cfg);

void to_json(nlohmann::json& j, const SyntheticSpec& s);
void from_json(const nlohmann::json& j, SyntheticSpec& s);

/// Stable 64-bit FNV-1a hash of a canonically serialized JSON document,
/// rendered as 16 hex digits.
std::string config_hash(const nlohmann::json& j);

}  // namespace sskd
