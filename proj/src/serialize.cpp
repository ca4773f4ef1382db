#include "survbeta/serialize.hpp"

#include <fstream>

#include "survbeta/error.hpp"

namespace survbeta {

using nlohmann::json;

json model_to_json(const EnsembleModel& model) {
  const Dataset& train = model.train();
  json records = json::array();
  for (const auto& r : train) records.push_back({{"x", r.features}, {"time", r.time}, {"event", r.event}});
  json subsamples = json::array();
  for (const auto& s : model.subsamples()) {
    subsamples.push_back({{"indices", s.indices},
                          {"kernel", std::string(to_string(s.kernel.family()))},
                          {"tau", s.kernel.bandwidth()},
                          {"eta", s.eta}});
  }
  return {{"format", "survbeta-model"},
          {"version", kModelFormatVersion},
          {"standardizer", {{"mean", model.standardizer().mean}, {"scale", model.standardizer().scale}}},
          {"train", records},
          {"subsamples", subsamples},
          {"w", model.w()},
          {"epsilon", model.epsilon()},
          {"v", model.v()},
          {"prototype_mode", std::string(to_string(model.prototype_mode()))}};
}

EnsembleModel model_from_json(const json& doc) {
  try {
    if (doc.at("format").get<std::string>() != "survbeta-model") throw DataError("not a model document");
    if (doc.at("version").get<int>() != kModelFormatVersion) throw DataError("unsupported model format version");
    std::vector<SurvivalRecord> records;
    for (const auto& r : doc.at("train")) {
      records.push_back({r.at("x").get<Vector>(), r.at("time").get<double>(), r.at("event").get<bool>()});
    }
    std::vector<Subsample> subsamples;
    for (const auto& s : doc.at("subsamples")) {
      const auto family = parse_kernel_family(s.at("kernel").get<std::string>());
      if (!family) throw DataError("unknown kernel family in model document");
      subsamples.push_back(Subsample{s.at("indices").get<std::vector<std::size_t>>(),
                                     Kernel(*family, s.at("tau").get<double>()), s.at("eta").get<double>()});
    }
    Standardizer standardizer{doc.at("standardizer").at("mean").get<Vector>(),
                              doc.at("standardizer").at("scale").get<Vector>()};
    const std::string mode_name = doc.at("prototype_mode").get<std::string>();
    PrototypeMode mode;
    if (mode_name == to_string(PrototypeMode::Mean)) {
      mode = PrototypeMode::Mean;
    } else if (mode_name == to_string(PrototypeMode::NadarayaWatson)) {
      mode = PrototypeMode::NadarayaWatson;
    } else {
      throw DataError("unknown prototype mode in model document");
    }
    return EnsembleModel(Dataset(std::move(records)), std::move(subsamples), doc.at("w").get<double>(),
                         doc.at("epsilon").get<double>(), doc.at("v").get<Vector>(), mode, std::move(standardizer));
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model document: ") + e.what());
  } catch (const InvalidInput& e) {
    throw DataError(std::string("invalid model document: ") + e.what());
  }
}

void save_model(const EnsembleModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << model_to_json(model).dump(1) << '\n';
}

EnsembleModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return model_from_json(doc);
}

json report_to_json(const FitReport& report) {
  json grid = json::array();
  for (const auto& g : report.grid) {
    json point = {{"w", g.w},
                  {"epsilon", g.epsilon},
                  {"v", g.v},
                  {"train_cindex", g.train_cindex},
                  {"val_cindex", g.val_cindex},
                  {"objective", g.objective},
                  {"dual_gap", g.dual_gap},
                  {"solver_iterations", g.iterations},
                  {"seconds", g.seconds}};
    point["tau"] = g.tau;
    grid.push_back(std::move(point));
  }
  return {{"variant", std::string(to_string(report.variant))},
          {"grid", grid},
          {"chosen", report.chosen},
          {"validation_fallback", report.validation_fallback},
          {"n_train", report.n_train},
          {"n_val", report.n_val},
          {"n_pairs", report.n_pairs},
          {"wall_seconds", report.wall_seconds}};
}

}  // namespace survbeta
