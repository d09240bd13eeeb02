#include "otimpute/bench.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "otimpute/csv.hpp"
#include "otimpute/error.hpp"
#include "otimpute/synthetic.hpp"

namespace otimpute {

namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Method parameters
// ---------------------------------------------------------------------------

/// Reads hyperparameters and rejects keys nobody asked for.
class ParamReader {
 public:
  ParamReader(const json& params, std::string method)
      : params_(params), method_(std::move(method)) {
    if (!params_.is_object()) {
      throw Error(ErrorKind::InvalidConfig, method_ + ": params must be an object");
    }
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    used_.insert(key);
    if (!params_.contains(key)) return fallback;
    try {
      return params_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw Error(ErrorKind::InvalidConfig, method_ + "." + key + ": " + e.what());
    }
  }

  bool has(const std::string& key) const { return params_.contains(key); }

  void finish() const {
    for (const auto& item : params_.items()) {
      if (!used_.count(item.key())) {
        throw Error(ErrorKind::InvalidConfig,
                    method_ + ": unknown parameter '" + item.key() + "'");
      }
    }
  }

 private:
  const json& params_;
  std::string method_;
  std::set<std::string> used_;
};

SinkhornConfig read_sinkhorn(ParamReader& r) {
  SinkhornConfig s = imputation_sinkhorn_defaults();
  if (r.has("epsilon")) {
    s.rule = EpsilonRule::Absolute;
    s.epsilon = r.get("epsilon", s.epsilon);
  }
  s.median_fraction = r.get("median_fraction", s.median_fraction);
  s.tol = r.get("tol", s.tol);
  s.max_iters = r.get("max_iters", s.max_iters);
  s.validate();
  return s;
}

IceConfig ice_config(const json& params) {
  ParamReader r(params, "ice");
  IceConfig c;
  c.max_cycles = r.get("max_cycles", c.max_cycles);
  c.ridge = r.get("ridge", c.ridge);
  c.tol = r.get("tol", c.tol);
  r.finish();
  return c;
}

struct SoftImputeSettings {
  SoftImputeConfig cfg;
  int grid_size = 15;
};

SoftImputeSettings softimpute_config(const json& params) {
  ParamReader r(params, "softimpute");
  SoftImputeSettings s;
  s.grid_size = r.get("grid_size", s.grid_size);
  s.cfg.cv_fraction = r.get("cv_fraction", s.cfg.cv_fraction);
  s.cfg.max_iters = r.get("max_iters", s.cfg.max_iters);
  s.cfg.tol = r.get("tol", s.cfg.tol);
  r.finish();
  if (s.grid_size < 1) throw Error(ErrorKind::InvalidConfig, "softimpute.grid_size must be >= 1");
  return s;
}

SinkhornImputerConfig direct_config(const json& params) {
  ParamReader r(params, "sinkhorn_direct");
  SinkhornImputerConfig c;
  c.iterations = r.get("iterations", c.iterations);
  c.batch_size = r.get("batch_size", c.batch_size);
  c.n_pairs = r.get("n_pairs", c.n_pairs);
  c.optimizer.step_size = r.get("lr", c.optimizer.step_size);
  c.eta = r.get("eta", c.eta);
  c.monitor.fraction = r.get("monitor_fraction", c.monitor.fraction);
  c.sinkhorn = read_sinkhorn(r);
  r.finish();
  if (c.iterations < 0 || c.n_pairs < 1 || c.batch_size < 0) {
    throw Error(ErrorKind::InvalidConfig, "sinkhorn_direct: iterations, n_pairs or batch_size out of range");
  }
  return c;
}

RoundRobinConfig rr_config(const json& params, ModelKind kind, Mechanism mechanism) {
  const std::string label = kind == ModelKind::Linear ? "linear_rr" : "mlp_rr";
  ParamReader r(params, label);
  RoundRobinConfig c;
  c.kind = kind;
  c.cycles = r.get("cycles", c.cycles);
  c.inner_steps = r.get("inner_steps", c.inner_steps);
  c.batch_size = r.get("batch_size", c.batch_size);
  c.n_pairs = r.get("n_pairs", c.n_pairs);
  c.optimizer.step_size = r.get("lr", c.optimizer.step_size);
  c.optimizer.weight_decay = r.get("weight_decay", c.optimizer.weight_decay);
  c.eta = r.get("eta", c.eta);
  c.monitor.fraction = r.get("monitor_fraction", c.monitor.fraction);
  const json stratify = r.get("stratify", json(false));
  if (stratify.is_boolean()) {
    c.mcar = stratify.get<bool>();
  } else if (stratify == "auto") {
    c.mcar = mechanism == Mechanism::Mcar;
  } else {
    throw Error(ErrorKind::InvalidConfig, label + ".stratify must be true, false or \"auto\"");
  }
  c.sinkhorn = read_sinkhorn(r);
  r.finish();
  if (c.cycles < 1 || c.inner_steps < 1 || c.n_pairs < 1 || c.batch_size < 0) {
    throw Error(ErrorKind::InvalidConfig, label + ": cycles, inner_steps, n_pairs or batch_size out of range");
  }
  return c;
}

void check_method(const MethodSpec& m) {
  const auto& names = method_names();
  if (std::find(names.begin(), names.end(), m.name) == names.end()) {
    throw Error(ErrorKind::InvalidConfig, "unknown method '" + m.name + "'");
  }
  if (m.name == "mean") {
    ParamReader(m.params, "mean").finish();
  } else if (m.name == "ice") {
    ice_config(m.params);
  } else if (m.name == "softimpute") {
    softimpute_config(m.params);
  } else if (m.name == "sinkhorn_direct") {
    direct_config(m.params);
  } else {
    rr_config(m.params, m.name == "linear_rr" ? ModelKind::Linear : ModelKind::Mlp,
              Mechanism::Mcar);
  }
}

// ---------------------------------------------------------------------------
// CSV helpers
// ---------------------------------------------------------------------------

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string clean(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ';';
  return s;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

const char* kResultHeader =
    "dataset,mechanism,split,method,draw,seed,ok,mae,rmse,w2,w2_scaled,m0,m1,"
    "w2_skipped,seconds,epsilon,nonconverged_steps,final_loss,error";

std::string result_line(const RunResult& r) {
  std::ostringstream s;
  s << clean(r.dataset) << ',' << clean(r.mechanism) << ',' << r.split << ',' << r.method
    << ',' << r.draw << ',' << r.seed << ',' << (r.ok ? 1 : 0) << ',' << fmt(r.metrics.mae)
    << ',' << fmt(r.metrics.rmse) << ',' << fmt(r.metrics.w2) << ',' << fmt(r.w2_scaled)
    << ',' << r.metrics.m0 << ',' << r.metrics.m1 << ',' << (r.metrics.w2_skipped ? 1 : 0)
    << ',' << fmt(r.seconds) << ',' << fmt(r.epsilon) << ',' << r.nonconverged_steps << ','
    << fmt(r.final_loss) << ',' << clean(r.error.empty() ? r.metrics.w2_skip_reason : r.error);
  return s.str();
}

double parse_double(const std::string& s) { return std::strtod(s.c_str(), nullptr); }

// ---------------------------------------------------------------------------
// Experiment plumbing
// ---------------------------------------------------------------------------

std::string dataset_label(const DatasetSpec& d) {
  if (!d.name.empty()) return d.name;
  if (!d.synthetic.empty()) return d.synthetic;
  return std::filesystem::path(d.path).stem().string();
}

std::string mechanism_label(const MaskSpec& m) {
  return std::string(to_string(m.mechanism)) + "@" + fmt(m.rate);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

RunResult failed_row(RunResult r, const std::string& why) {
  r.ok = false;
  r.error = why;
  r.metrics.mae = r.metrics.rmse = r.metrics.w2 = std::nan("");
  return r;
}

void score(RunResult& r, const Matrix& truth, const Matrix& imputed, const Mask& mask,
           Index cap) {
  try {
    r.metrics = evaluate(truth, imputed, mask, cap);
  } catch (const std::exception& e) {
    r = failed_row(r, e.what());
  }
}

void emit(std::vector<RunResult>& out, ResultAppender* sink, RunResult r) {
  if (sink != nullptr) sink->append(r);
  out.push_back(std::move(r));
}

struct Moments {
  double mean = std::nan("");
  double std = std::nan("");
};

Moments moments(const std::vector<double>& v) {
  Moments m;
  if (v.empty()) return m;
  double s = 0.0;
  for (double x : v) s += x;
  m.mean = s / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m.mean) * (x - m.mean);
  m.std = std::sqrt(ss / static_cast<double>(v.size()));
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

const std::vector<DatasetInfo>& dataset_registry() {
  static const std::vector<DatasetInfo> registry = {
      {"airfoil_self_noise", 1503, 5},        {"blood_transfusion", 748, 4},
      {"breast_cancer_diagnostic", 569, 30},  {"california", 20640, 8},
      {"climate_model_crashes", 540, 18},     {"concrete_compression", 1030, 7},
      {"concrete_slump", 103, 7},             {"connectionist_bench_sonar", 208, 60},
      {"connectionist_bench_vowel", 990, 10}, {"ecoli", 336, 7},
      {"glass", 214, 9},                      {"ionosphere", 351, 34},
      {"iris", 150, 4},                       {"libras", 360, 90},
      {"parkinsons", 195, 23},                {"planning_relax", 182, 12},
      {"qsar_biodegradation", 1055, 41},      {"seeds", 210, 7},
      {"wine", 178, 13},                      {"wine_quality_red", 1599, 10},
      {"wine_quality_white", 4898, 11},       {"yacht_hydrodynamics", 308, 6},
      {"yeast", 1484, 8},
  };
  return registry;
}

const DatasetInfo* find_registered(std::string_view name) {
  for (const auto& info : dataset_registry())
    if (info.name == name) return &info;
  return nullptr;
}

LoadedDataset load_dataset(const std::string& path, const std::string& registry_name) {
  const CsvTable table = read_csv(path);
  if (!registry_name.empty()) {
    const DatasetInfo* info = find_registered(registry_name);
    if (info == nullptr) {
      throw Error(ErrorKind::RegistryMismatch, "'" + registry_name + "' is not a registered dataset");
    }
    if (table.values.rows() != info->n || table.values.cols() != info->d) {
      throw Error(ErrorKind::RegistryMismatch,
                  registry_name + ": expected " + std::to_string(info->n) + "x" +
                      std::to_string(info->d) + ", found " +
                      std::to_string(table.values.rows()) + "x" +
                      std::to_string(table.values.cols()));
    }
  }
  LoadedDataset out{registry_name.empty() ? std::filesystem::path(path).stem().string()
                                          : registry_name,
                    IncompleteMatrix::from_nan(table.values, table.header),
                    {}};
  out.standardized = standardize(out.raw);
  return out;
}

Matrix materialize(const DatasetSpec& spec) {
  if (!spec.synthetic.empty()) {
    Rng rng(spec.seed);
    return make_synthetic(spec.synthetic, spec.n, spec.d, rng);
  }
  if (spec.path.empty()) {
    throw Error(ErrorKind::InvalidConfig, "dataset needs either a path or a synthetic generator");
  }
  const std::string check = find_registered(spec.name) != nullptr ? spec.name : "";
  const LoadedDataset data = load_dataset(spec.path, check);
  if (data.raw.missing_count() > 0) {
    throw Error(ErrorKind::InvalidConfig,
                spec.path + " has missing cells; benchmarks need complete ground truth");
  }
  return data.raw.values();
}

// ---------------------------------------------------------------------------
// Methods
// ---------------------------------------------------------------------------

const std::vector<std::string>& method_names() {
  static const std::vector<std::string> names = {"mean",           "ice",       "softimpute",
                                                 "sinkhorn_direct", "linear_rr", "mlp_rr"};
  return names;
}

bool supports_oos(std::string_view method) {
  return method == "mean" || method == "ice" || method == "linear_rr" || method == "mlp_rr";
}

MethodOutput run_method(const MethodSpec& method, const IncompleteMatrix& data,
                        std::uint64_t seed, Mechanism mechanism) {
  check_method(method);
  MethodOutput out;
  if (method.name == "mean") {
    out.imputed = impute_mean(data);
  } else if (method.name == "ice") {
    out.imputed = impute_ice(data, ice_config(method.params));
  } else if (method.name == "softimpute") {
    SoftImputeSettings s = softimpute_config(method.params);
    s.cfg.seed = seed;
    out.imputed =
        impute_softimpute(data, default_lambda_grid(data, s.grid_size), s.cfg).imputed;
  } else if (method.name == "sinkhorn_direct") {
    SinkhornImputerConfig c = direct_config(method.params);
    c.seed = seed;
    SinkhornImputeResult r = impute_sinkhorn_direct(data, c);
    out.imputed = std::move(r.imputed);
    out.epsilon = r.epsilon;
    out.nonconverged_steps = r.nonconverged_steps;
    out.final_loss = r.losses.empty() ? 0.0 : r.losses.back();
  } else {
    RoundRobinConfig c = rr_config(
        method.params, method.name == "linear_rr" ? ModelKind::Linear : ModelKind::Mlp,
        mechanism);
    c.seed = seed;
    RoundRobinFit r = rr_fit(data, c);
    out.imputed = std::move(r.imputed);
    out.epsilon = r.model.epsilon;
    out.nonconverged_steps = r.nonconverged_steps;
    out.final_loss = r.cycle_losses.empty() ? 0.0 : r.cycle_losses.back();
  }
  return out;
}

ModelFit fit_model(const MethodSpec& method, const IncompleteMatrix& data,
                   std::uint64_t seed, Mechanism mechanism) {
  check_method(method);
  ModelFit out;
  if (method.name == "ice") {
    out.train.imputed = ice_fit(data, ice_config(method.params), &out.model).imputed;
  } else if (method.name == "linear_rr" || method.name == "mlp_rr") {
    RoundRobinConfig c = rr_config(
        method.params, method.name == "linear_rr" ? ModelKind::Linear : ModelKind::Mlp,
        mechanism);
    c.seed = seed;
    RoundRobinFit r = rr_fit(data, c);
    out.train.imputed = std::move(r.imputed);
    out.train.epsilon = r.model.epsilon;
    out.train.nonconverged_steps = r.nonconverged_steps;
    out.train.final_loss = r.cycle_losses.empty() ? 0.0 : r.cycle_losses.back();
    out.model = std::move(r.model);
  } else {
    throw Error(ErrorKind::InvalidConfig, method.name + " has no reusable model");
  }
  return out;
}

OosOutput run_method_oos(const MethodSpec& method, const IncompleteMatrix& train,
                         const IncompleteMatrix& test, std::uint64_t seed,
                         Mechanism mechanism) {
  check_method(method);
  if (!supports_oos(method.name)) {
    throw Error(ErrorKind::InvalidConfig, method.name + " cannot be applied out of sample");
  }
  OosOutput out;
  if (method.name == "mean") {
    out.train.imputed = impute_mean(train);
    out.test_imputed = fill_with(test, train.observed_means());
  } else {
    ModelFit fit = fit_model(method, train, seed, mechanism);
    out.test_imputed = rr_transform(fit.model, test);
    out.train = std::move(fit.train);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

void ExperimentConfig::validate(bool oos) const {
  if (schema_version != kConfigSchemaVersion) {
    throw Error(ErrorKind::InvalidConfig,
                "unsupported schema_version " + std::to_string(schema_version));
  }
  if (n_draws < 1) throw Error(ErrorKind::InvalidConfig, "n_draws must be >= 1");
  if (w2_cap < 1) throw Error(ErrorKind::InvalidConfig, "w2_cap must be >= 1");
  if (dataset.synthetic.empty() && dataset.path.empty()) {
    throw Error(ErrorKind::InvalidConfig, "dataset needs either a path or a synthetic generator");
  }
  if (masks.empty()) throw Error(ErrorKind::InvalidConfig, "at least one mask spec is required");
  for (const MaskSpec& m : masks) {
    try {
      m.validate();
    } catch (const Error& e) {
      throw Error(ErrorKind::InvalidConfig, std::string("mask: ") + e.what());
    }
  }
  if (methods.empty()) throw Error(ErrorKind::InvalidConfig, "at least one method is required");
  std::set<std::string> seen;
  for (const MethodSpec& m : methods) {
    if (!seen.insert(m.name).second) {
      throw Error(ErrorKind::InvalidConfig, "method '" + m.name + "' listed twice");
    }
    check_method(m);
    if (oos && !supports_oos(m.name)) {
      throw Error(ErrorKind::InvalidConfig,
                  m.name + " is not out-of-sample capable (use mean, ice, linear_rr, mlp_rr)");
    }
  }
  if (oos && !(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(ErrorKind::InvalidConfig, "train_fraction must lie strictly between 0 and 1");
  }
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  json doc;
  doc["schema_version"] = cfg.schema_version;
  doc["dataset"] = {{"name", cfg.dataset.name},         {"path", cfg.dataset.path},
                    {"synthetic", cfg.dataset.synthetic}, {"n", cfg.dataset.n},
                    {"d", cfg.dataset.d},               {"seed", cfg.dataset.seed}};
  doc["masks"] = json::array();
  for (const MaskSpec& m : cfg.masks) {
    doc["masks"].push_back({{"mechanism", std::string(to_string(m.mechanism))},
                            {"rate", m.rate},
                            {"input_fraction", m.input_fraction},
                            {"quantile", m.quantile}});
  }
  doc["methods"] = json::array();
  for (const MethodSpec& m : cfg.methods) doc["methods"].push_back({{"name", m.name}, {"params", m.params}});
  doc["n_draws"] = cfg.n_draws;
  doc["seed"] = cfg.seed;
  doc["train_fraction"] = cfg.train_fraction;
  doc["output_dir"] = cfg.output_dir;
  doc["w2_cap"] = cfg.w2_cap;
  return doc;
}

ExperimentConfig config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error(ErrorKind::InvalidConfig, "config must be a JSON object");
  static const std::set<std::string> known = {"schema_version", "dataset", "masks",
                                              "methods",        "n_draws", "seed",
                                              "train_fraction", "output_dir", "w2_cap"};
  for (const auto& item : doc.items()) {
    if (!known.count(item.key())) {
      throw Error(ErrorKind::InvalidConfig, "unknown config key '" + item.key() + "'");
    }
  }
  ExperimentConfig cfg;
  try {
    cfg.schema_version = doc.value("schema_version", 0);
    if (doc.contains("dataset")) {
      const json& d = doc.at("dataset");
      cfg.dataset.name = d.value("name", cfg.dataset.name);
      cfg.dataset.path = d.value("path", cfg.dataset.path);
      cfg.dataset.synthetic = d.value("synthetic", cfg.dataset.synthetic);
      cfg.dataset.n = d.value("n", cfg.dataset.n);
      cfg.dataset.d = d.value("d", cfg.dataset.d);
      cfg.dataset.seed = d.value("seed", cfg.dataset.seed);
    }
    if (doc.contains("masks")) {
      cfg.masks.clear();
      for (const json& m : doc.at("masks")) {
        MaskSpec spec;
        spec.mechanism = parse_mechanism(m.value("mechanism", std::string("mcar")));
        spec.rate = m.value("rate", spec.rate);
        spec.input_fraction = m.value("input_fraction", spec.input_fraction);
        spec.quantile = m.value("quantile", spec.quantile);
        cfg.masks.push_back(spec);
      }
    }
    if (doc.contains("methods")) {
      for (const json& m : doc.at("methods")) {
        MethodSpec spec;
        if (m.is_string()) {
          spec.name = m.get<std::string>();
        } else {
          spec.name = m.at("name").get<std::string>();
          if (m.contains("params")) spec.params = m.at("params");
        }
        cfg.methods.push_back(std::move(spec));
      }
    }
    cfg.n_draws = doc.value("n_draws", cfg.n_draws);
    cfg.seed = doc.value("seed", cfg.seed);
    cfg.train_fraction = doc.value("train_fraction", cfg.train_fraction);
    cfg.output_dir = doc.value("output_dir", cfg.output_dir);
    cfg.w2_cap = doc.value("w2_cap", cfg.w2_cap);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, path + ": " + e.what());
  }
  return config_from_json(doc);
}

std::uint64_t child_seed(std::uint64_t base, std::string_view dataset,
                         std::string_view mechanism, int draw, std::string_view method) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](unsigned char c) {
    h ^= c;
    h *= 0x100000001b3ULL;
  };
  for (int k = 0; k < 8; ++k) mix(static_cast<unsigned char>(base >> (8 * k)));
  for (std::string_view part : {dataset, mechanism, method}) {
    mix('|');
    for (char c : part) mix(static_cast<unsigned char>(c));
  }
  for (int k = 0; k < 4; ++k) mix(static_cast<unsigned char>(static_cast<unsigned>(draw) >> (8 * k)));
  h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
  h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
  return h ^ (h >> 31);
}

// ---------------------------------------------------------------------------
// Runs
// ---------------------------------------------------------------------------

ResultAppender::ResultAppender(const std::string& path) : out_(path) {
  if (!out_) throw Error(ErrorKind::Io, "cannot write " + path);
  out_ << kResultHeader << '\n' << std::flush;
}

void ResultAppender::append(const RunResult& r) {
  out_ << result_line(r) << '\n' << std::flush;
  if (!out_) throw Error(ErrorKind::Io, "failed appending a result row");
}

std::vector<RunResult> run_experiment(const ExperimentConfig& cfg, ResultAppender* sink) {
  cfg.validate(false);
  const Matrix truth_raw = materialize(cfg.dataset);
  const std::string label = dataset_label(cfg.dataset);
  std::vector<RunResult> out;

  for (const MaskSpec& spec : cfg.masks) {
    const std::string mech = mechanism_label(spec);
    for (int draw = 0; draw < cfg.n_draws; ++draw) {
      RunResult base;
      base.dataset = label;
      base.mechanism = mech;
      base.draw = draw;

      Mask mask;
      std::optional<StandardizeResult> st;
      std::string setup_error;
      try {
        Rng rng(child_seed(cfg.seed, label, mech, draw, "mask"));
        mask = generate_mask(truth_raw, spec, rng);
        st = standardize(IncompleteMatrix(truth_raw, mask));
      } catch (const std::exception& e) {
        setup_error = e.what();
      }

      for (const MethodSpec& method : cfg.methods) {
        RunResult r = base;
        r.method = method.name;
        r.seed = child_seed(cfg.seed, label, mech, draw, method.name);
        if (!st) {
          emit(out, sink, failed_row(r, setup_error));
          continue;
        }
        const auto t0 = std::chrono::steady_clock::now();
        try {
          const MethodOutput m = run_method(method, st->data, r.seed, spec.mechanism);
          r.seconds = seconds_since(t0);
          r.epsilon = m.epsilon;
          r.nonconverged_steps = m.nonconverged_steps;
          r.final_loss = m.final_loss;
          score(r, st->transform.apply(truth_raw), m.imputed, mask, cfg.w2_cap);
        } catch (const std::exception& e) {
          r.seconds = seconds_since(t0);
          r = failed_row(r, e.what());
        }
        emit(out, sink, std::move(r));
      }
    }
  }
  return out;
}

std::vector<RunResult> run_oos_experiment(const ExperimentConfig& cfg, ResultAppender* sink) {
  cfg.validate(true);
  const Matrix truth_raw = materialize(cfg.dataset);
  const std::string label = dataset_label(cfg.dataset);
  const Index n = truth_raw.rows();
  const Index n_train = std::clamp<Index>(
      static_cast<Index>(std::llround(cfg.train_fraction * static_cast<double>(n))), 2, n - 1);
  if (n - n_train < 1 || n < 3) {
    throw Error(ErrorKind::InvalidConfig, "dataset too small for a train/test split");
  }
  std::vector<RunResult> out;

  for (const MaskSpec& spec : cfg.masks) {
    const std::string mech = mechanism_label(spec);
    for (int draw = 0; draw < cfg.n_draws; ++draw) {
      RunResult base;
      base.dataset = label;
      base.mechanism = mech;
      base.draw = draw;

      Mask mask;
      IndexList train_rows;
      IndexList test_rows;
      std::optional<StandardizeResult> train_st;
      std::optional<IncompleteMatrix> test_data;
      Matrix train_truth;
      Matrix test_truth;
      std::string setup_error;
      try {
        Rng mask_rng(child_seed(cfg.seed, label, mech, draw, "mask"));
        mask = generate_mask(truth_raw, spec, mask_rng);
        Rng split_rng(child_seed(cfg.seed, label, mech, draw, "split"));
        IndexList perm = sample_without_replacement(n, n, split_rng);
        train_rows.assign(perm.begin(), perm.begin() + n_train);
        test_rows.assign(perm.begin() + n_train, perm.end());
        std::sort(train_rows.begin(), train_rows.end());
        std::sort(test_rows.begin(), test_rows.end());
        auto rows_of = [&](const IndexList& rows) {
          Mask sub(static_cast<Index>(rows.size()), mask.cols());
          for (std::size_t k = 0; k < rows.size(); ++k) sub.row(static_cast<Index>(k)) = mask.row(rows[k]);
          return sub;
        };
        const Matrix train_raw = gather_rows(truth_raw, train_rows);
        const Matrix test_raw = gather_rows(truth_raw, test_rows);
        train_st = standardize(IncompleteMatrix(train_raw, rows_of(train_rows)));
        test_data = standardize_with(IncompleteMatrix(test_raw, rows_of(test_rows)),
                                     train_st->transform);
        train_truth = train_st->transform.apply(train_raw);
        test_truth = train_st->transform.apply(test_raw);
      } catch (const std::exception& e) {
        setup_error = e.what();
      }

      for (const MethodSpec& method : cfg.methods) {
        RunResult train = base;
        train.method = method.name;
        train.seed = child_seed(cfg.seed, label, mech, draw, method.name);
        train.split = "train";
        RunResult test = train;
        test.split = "test";
        if (!train_st || !test_data) {
          emit(out, sink, failed_row(train, setup_error));
          emit(out, sink, failed_row(test, setup_error));
          continue;
        }
        const auto t0 = std::chrono::steady_clock::now();
        try {
          const OosOutput o =
              run_method_oos(method, train_st->data, *test_data, train.seed, spec.mechanism);
          train.seconds = test.seconds = seconds_since(t0);
          train.epsilon = test.epsilon = o.train.epsilon;
          train.nonconverged_steps = test.nonconverged_steps = o.train.nonconverged_steps;
          train.final_loss = test.final_loss = o.train.final_loss;
          score(train, train_truth, o.train.imputed, train_st->data.mask(), cfg.w2_cap);
          score(test, test_truth, o.test_imputed, test_data->mask(), cfg.w2_cap);
        } catch (const std::exception& e) {
          train = failed_row(train, e.what());
          test = failed_row(test, e.what());
        }
        emit(out, sink, std::move(train));
        emit(out, sink, std::move(test));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

void scale_w2(std::vector<RunResult>& results) {
  using Group = std::tuple<std::string, std::string, std::string>;
  std::map<Group, std::map<std::string, std::vector<double>>> w2s;
  for (const RunResult& r : results)
    if (r.ok && std::isfinite(r.metrics.w2))
      w2s[{r.dataset, r.mechanism, r.split}][r.method].push_back(r.metrics.w2);
  std::map<Group, double> worst;
  for (const auto& [group, by_method] : w2s) {
    double top = 0.0;
    for (const auto& [method, values] : by_method) top = std::max(top, moments(values).mean);
    worst[group] = top;
  }
  for (RunResult& r : results) {
    const auto it = worst.find({r.dataset, r.mechanism, r.split});
    const bool usable = r.ok && std::isfinite(r.metrics.w2) && it != worst.end() && it->second > 0.0;
    r.w2_scaled = usable ? r.metrics.w2 / it->second : std::nan("");
  }
}

std::vector<SummaryRow> summarize(const std::vector<RunResult>& results) {
  std::vector<SummaryRow> rows;
  std::vector<std::array<std::vector<double>, 4>> values;
  for (const RunResult& r : results) {
    auto it = std::find_if(rows.begin(), rows.end(), [&](const SummaryRow& s) {
      return s.dataset == r.dataset && s.mechanism == r.mechanism && s.split == r.split &&
             s.method == r.method;
    });
    if (it == rows.end()) {
      rows.push_back({r.dataset, r.mechanism, r.split, r.method});
      values.emplace_back();
      it = rows.end() - 1;
    }
    const auto k = static_cast<std::size_t>(it - rows.begin());
    ++it->runs;
    if (!r.ok) {
      ++it->failed;
      continue;
    }
    const double v[4] = {r.metrics.mae, r.metrics.rmse, r.metrics.w2, r.w2_scaled};
    for (int m = 0; m < 4; ++m)
      if (std::isfinite(v[m])) values[k][static_cast<std::size_t>(m)].push_back(v[m]);
  }
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const Moments a = moments(values[k][0]), b = moments(values[k][1]),
                  c = moments(values[k][2]), d = moments(values[k][3]);
    rows[k].mae_mean = a.mean;
    rows[k].mae_std = a.std;
    rows[k].rmse_mean = b.mean;
    rows[k].rmse_std = b.std;
    rows[k].w2_mean = c.mean;
    rows[k].w2_std = c.std;
    rows[k].w2_scaled_mean = d.mean;
    rows[k].w2_scaled_std = d.std;
  }
  return rows;
}

void write_results_csv(const std::string& path, const std::vector<RunResult>& results) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  out << kResultHeader << '\n';
  for (const RunResult& r : results) out << result_line(r) << '\n';
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path);
}

std::vector<RunResult> read_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path);
  std::string line;
  if (!std::getline(in, line) || line != kResultHeader) {
    throw Error(ErrorKind::Parse, path + ": unexpected result header");
  }
  std::vector<RunResult> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto c = split_line(line);
    if (c.size() != 19) {
      throw Error(ErrorKind::Parse, path + ":" + std::to_string(lineno) + ": expected 19 fields");
    }
    RunResult r;
    r.dataset = c[0];
    r.mechanism = c[1];
    r.split = c[2];
    r.method = c[3];
    r.draw = std::atoi(c[4].c_str());
    r.seed = std::strtoull(c[5].c_str(), nullptr, 10);
    r.ok = c[6] == "1";
    r.metrics.mae = parse_double(c[7]);
    r.metrics.rmse = parse_double(c[8]);
    r.metrics.w2 = parse_double(c[9]);
    r.w2_scaled = parse_double(c[10]);
    r.metrics.m0 = std::atoll(c[11].c_str());
    r.metrics.m1 = std::atoll(c[12].c_str());
    r.metrics.w2_skipped = c[13] == "1";
    r.seconds = parse_double(c[14]);
    r.epsilon = parse_double(c[15]);
    r.nonconverged_steps = std::atoi(c[16].c_str());
    r.final_loss = parse_double(c[17]);
    (r.ok ? r.metrics.w2_skip_reason : r.error) = c[18];
    out.push_back(std::move(r));
  }
  return out;
}

void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  out << "dataset,mechanism,split,method,runs,failed,mae_mean,mae_std,rmse_mean,rmse_std,"
         "w2_mean,w2_std,w2_scaled_mean,w2_scaled_std\n";
  for (const SummaryRow& s : rows) {
    out << clean(s.dataset) << ',' << clean(s.mechanism) << ',' << s.split << ',' << s.method
        << ',' << s.runs << ',' << s.failed << ',' << fmt(s.mae_mean) << ',' << fmt(s.mae_std)
        << ',' << fmt(s.rmse_mean) << ',' << fmt(s.rmse_std) << ',' << fmt(s.w2_mean) << ','
        << fmt(s.w2_std) << ',' << fmt(s.w2_scaled_mean) << ',' << fmt(s.w2_scaled_std) << '\n';
  }
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path);
}

void export_results(std::vector<RunResult> results, const std::string& dir) {
  if (results.empty()) throw Error(ErrorKind::InvalidArgument, "no results to export");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + dir + ": " + ec.message());
  scale_w2(results);
  const std::filesystem::path root(dir);
  write_results_csv((root / "results.csv").string(), results);
  write_summary_csv((root / "summary.csv").string(), summarize(results));
}

}  // namespace otimpute
