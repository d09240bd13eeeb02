#include "otimpute/model_io.hpp"

#include <fstream>

#include "otimpute/error.hpp"

namespace otimpute {

namespace {

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

template <typename T>
T field(const nlohmann::json& doc, const char* key) {
  if (!doc.contains(key)) throw Error(ErrorKind::Parse, std::string("model is missing '") + key + "'");
  try {
    return doc.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("model field '") + key + "': " + e.what());
  }
}

}  // namespace

nlohmann::json model_to_json(const RoundRobinModel& model) {
  nlohmann::json doc;
  doc["schema_version"] = kModelSchemaVersion;
  doc["kind"] = std::string(to_string(model.kind));
  doc["d"] = model.dim();
  doc["means"] = to_std(model.means);
  doc["order"] = model.order;
  doc["cycles"] = model.cycles;
  doc["epsilon"] = model.epsilon;
  doc["params"] = nlohmann::json::array();
  for (const ColumnParams& p : model.params) doc["params"].push_back(to_std(flatten(p)));
  return doc;
}

RoundRobinModel model_from_json(const nlohmann::json& doc) {
  const int version = field<int>(doc, "schema_version");
  if (version != kModelSchemaVersion) {
    throw Error(ErrorKind::Parse, "unsupported model schema_version " + std::to_string(version));
  }
  RoundRobinModel model;
  model.kind = parse_model_kind(field<std::string>(doc, "kind"));
  const auto d = field<Index>(doc, "d");
  model.means = to_eigen(field<std::vector<double>>(doc, "means"));
  model.order = field<IndexList>(doc, "order");
  model.cycles = field<int>(doc, "cycles");
  model.epsilon = field<double>(doc, "epsilon");
  const auto flats = field<std::vector<std::vector<double>>>(doc, "params");
  if (d < 2 || model.means.size() != d || static_cast<Index>(model.order.size()) != d ||
      static_cast<Index>(flats.size()) != d) {
    throw Error(ErrorKind::Parse, "model arrays do not match d = " + std::to_string(d));
  }
  std::vector<bool> seen(static_cast<std::size_t>(d), false);
  for (Index j : model.order) {
    if (j < 0 || j >= d || seen[static_cast<std::size_t>(j)]) {
      throw Error(ErrorKind::Parse, "model visit order is not a permutation");
    }
    seen[static_cast<std::size_t>(j)] = true;
  }
  Rng unused(0);
  for (const auto& flat : flats) {
    ColumnParams p = model.kind == ModelKind::Linear
                         ? ColumnParams(make_linear(d - 1, 0.0))
                         : ColumnParams(make_mlp(d - 1, 0.0, unused));
    if (static_cast<Index>(flat.size()) != parameter_count(p)) {
      throw Error(ErrorKind::Parse, "parameter block has " + std::to_string(flat.size()) +
                                        " values, expected " +
                                        std::to_string(parameter_count(p)));
    }
    assign_flat(p, to_eigen(flat));
    model.params.push_back(std::move(p));
  }
  return model;
}

void save_model(const std::string& path, const RoundRobinModel& model) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  out << model_to_json(model).dump(2) << '\n';
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path);
}

RoundRobinModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, path + ": " + e.what());
  }
  return model_from_json(doc);
}

}  // namespace otimpute
