#pragma once

#include <string>

#include "json.hpp"
#include "toric/qnet.hpp"

namespace toric {

nlohmann::json config_to_json(const QNetworkConfig& cfg);
QNetworkConfig config_from_json(const nlohmann::json& j);

struct Checkpoint {
  QNetworkParams params;
  AdamState adam;
  nlohmann::json extra;  // trainer-owned state: schedule cursor, counters
};

// Self-describing binary file: magic, format version, a JSON header with the
// network config, Adam hyperparameters, array sizes and the extra blob, then
// raw little-endian float64 arrays theta, m, v. Identical state serializes
// to identical bytes, so round trips are byte-stable.
void save_checkpoint(const std::string& path, const QNetworkParams& params, const AdamState& adam,
                     const nlohmann::json& extra);

// Throws std::runtime_error with a diagnostic on unreadable, truncated, or
// mismatched files.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace toric
