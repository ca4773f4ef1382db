#pragma once

#include <filesystem>

#include <json.hpp>

#include "survbeta/ensemble.hpp"
#include "survbeta/fit.hpp"

namespace survbeta {

inline constexpr int kModelFormatVersion = 1;

/// Everything needed to rebuild the model: standardizer, model-space training
/// records, subsamples and attention parameters. Doubles are written with
/// round-trip precision, so a reloaded model predicts bit-for-bit the same.
nlohmann::json model_to_json(const EnsembleModel& model);

/// Throws DataError on a malformed document or unsupported version.
EnsembleModel model_from_json(const nlohmann::json& doc);

void save_model(const EnsembleModel& model, const std::filesystem::path& path);
EnsembleModel load_model(const std::filesystem::path& path);

nlohmann::json report_to_json(const FitReport& report);

}  // namespace survbeta
