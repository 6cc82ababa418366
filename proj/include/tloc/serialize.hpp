#pragma once

#include <json.hpp>

#include "tloc/baseline.hpp"
#include "tloc/data.hpp"
#include "tloc/trainer.hpp"

namespace tloc {

// JSON round trips for configs and records.  All *_from_json parsers treat
// unknown keys as errors and absent keys as defaults, so config files cannot
// drift silently.

nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SynthConfig& cfg);
SynthConfig synth_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ScanConfig& cfg);
ScanConfig scan_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ModelDims& dims);
ModelDims dims_from_json(const nlohmann::json& j);

nlohmann::json to_json(const EpochRecord& rec);
EpochRecord epoch_record_from_json(const nlohmann::json& j);

nlohmann::json load_json_file(const std::string& path);

}  // namespace tloc
