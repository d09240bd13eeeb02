// otimpute: command-line front end for imputation, benchmarks and mask audits.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "otimpute/bench.hpp"
#include "otimpute/csv.hpp"
#include "otimpute/error.hpp"
#include "otimpute/masking.hpp"
#include "otimpute/model_io.hpp"
#include "otimpute/selfcheck.hpp"
#include "otimpute/synthetic.hpp"

namespace fs = std::filesystem;
using namespace otimpute;
using nlohmann::json;

namespace {

json parse_params(const std::string& text) {
  if (text.empty()) return json::object();
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, std::string("--params: ") + e.what());
  }
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + dir + ": " + ec.message());
}

// --- impute -----------------------------------------------------------------

struct ImputeArgs {
  std::string input;
  std::string method = "sinkhorn_direct";
  std::string params;
  std::string registry;
  std::string out;
  std::string model_out;
  std::string model_in;
  std::uint64_t seed = 0;
};

int run_impute(const ImputeArgs& a) {
  if (!a.model_in.empty()) {
    std::ifstream in(a.model_in);
    if (!in) throw Error(ErrorKind::Io, "cannot read " + a.model_in);
    json doc;
    in >> doc;
    const RoundRobinModel model = model_from_json(doc.at("model"));
    const Standardization t{
        Eigen::Map<const Vector>(doc.at("data_means").get<std::vector<double>>().data(), model.dim()),
        Eigen::Map<const Vector>(doc.at("data_stds").get<std::vector<double>>().data(), model.dim())};
    const LoadedDataset data = load_dataset(a.input, a.registry);
    const Matrix z = rr_transform(model, standardize_with(data.raw, t));
    write_csv(a.out, t.invert(z), data.raw.column_names());
    std::cerr << "imputed " << data.raw.missing_count() << " entries with frozen model\n";
    return 0;
  }

  const LoadedDataset data = load_dataset(a.input, a.registry);
  std::cerr << data.name << ": n=" << data.raw.rows() << " d=" << data.raw.cols()
            << " missing fraction=" << data.raw.missing_fraction() << '\n';
  const MethodSpec spec{a.method, parse_params(a.params)};
  const Standardization& t = data.standardized.transform;

  if (!a.model_out.empty()) {
    const ModelFit fit = fit_model(spec, data.standardized.data, a.seed);
    json doc = {{"model", model_to_json(fit.model)},
                {"data_means", std::vector<double>(t.means.data(), t.means.data() + t.means.size())},
                {"data_stds", std::vector<double>(t.stds.data(), t.stds.data() + t.stds.size())}};
    std::ofstream out(a.model_out);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + a.model_out);
    out << doc.dump(2) << '\n';
    write_csv(a.out, t.invert(fit.train.imputed), data.raw.column_names());
    return 0;
  }

  const MethodOutput result = run_method(spec, data.standardized.data, a.seed);
  write_csv(a.out, t.invert(result.imputed), data.raw.column_names());
  if (result.epsilon > 0.0) std::cerr << "epsilon=" << result.epsilon << '\n';
  if (result.nonconverged_steps > 0) {
    std::cerr << "warning: " << result.nonconverged_steps
              << " steps hit the Sinkhorn iteration cap\n";
  }
  return 0;
}

// --- bench / oos ------------------------------------------------------------

struct BenchArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> draws;
};

int run_bench(const BenchArgs& a, bool oos) {
  ExperimentConfig cfg = load_config(a.config);
  if (a.seed) cfg.seed = *a.seed;
  if (a.draws) cfg.n_draws = *a.draws;
  if (!a.out.empty()) cfg.output_dir = a.out;
  cfg.validate(oos);
  ensure_dir(cfg.output_dir);
  {
    std::ofstream meta(fs::path(cfg.output_dir) / "config.json");
    meta << config_to_json(cfg).dump(2) << '\n';
  }
  ResultAppender sink((fs::path(cfg.output_dir) / "results.partial.csv").string());
  const std::vector<RunResult> results =
      oos ? run_oos_experiment(cfg, &sink) : run_experiment(cfg, &sink);
  export_results(results, cfg.output_dir);

  int failed = 0;
  for (const RunResult& r : results) failed += r.ok ? 0 : 1;
  for (const SummaryRow& s : summarize(results)) {
    std::cout << s.dataset << ' ' << s.mechanism << ' ' << s.split << ' ' << s.method
              << "  mae=" << s.mae_mean << "±" << s.mae_std << "  rmse=" << s.rmse_mean
              << "±" << s.rmse_std << "  w2=" << s.w2_mean << "±" << s.w2_std << '\n';
  }
  std::cout << results.size() << " runs, " << failed << " failed; results in "
            << cfg.output_dir << '\n';
  return 0;
}

// --- maskgen ----------------------------------------------------------------

struct MaskArgs {
  std::string input;
  std::string synthetic;
  Index n = 500;
  Index d = 10;
  std::string mechanism = "mcar";
  double rate = 0.3;
  double input_fraction = 0.3;
  double quantile = 0.25;
  std::uint64_t seed = 0;
  std::string out;
};

int run_maskgen(const MaskArgs& a) {
  Matrix x;
  std::vector<std::string> header;
  if (!a.input.empty()) {
    const CsvTable t = read_csv(a.input);
    x = t.values;
    header = t.header;
    if (x.hasNaN()) throw Error(ErrorKind::InvalidArgument, "maskgen needs a complete matrix");
  } else if (!a.synthetic.empty()) {
    Rng rng(a.seed);
    x = make_synthetic(a.synthetic, a.n, a.d, rng);
    header = default_header(x.cols());
  } else {
    throw Error(ErrorKind::InvalidArgument, "give --input or --synthetic");
  }
  MaskSpec spec;
  spec.mechanism = parse_mechanism(a.mechanism);
  spec.rate = a.rate;
  spec.input_fraction = a.input_fraction;
  spec.quantile = a.quantile;
  Rng rng(a.seed);
  const Mask mask = generate_mask(x, spec, rng);
  write_mask_csv(a.out, mask, header);
  const double missing = 1.0 - mask.cast<double>().mean();
  std::cerr << "mask " << mask.rows() << "x" << mask.cols() << ", missing fraction " << missing
            << '\n';
  return 0;
}

// --- check ------------------------------------------------------------------

int run_check(std::uint64_t seed) {
  int failed = 0;
  for (const CheckResult& c : run_self_checks(seed)) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name;
    if (!c.detail.empty()) std::cout << " (" << c.detail << ')';
    std::cout << '\n';
    failed += c.passed ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Missing-value imputation with minibatch Sinkhorn divergences"};
  app.require_subcommand(1);

  ImputeArgs ia;
  auto* impute = app.add_subcommand("impute", "Impute one CSV with one method");
  impute->add_option("--input", ia.input, "CSV with a header row; empty or NA cells are missing")
      ->required();
  impute->add_option("--method", ia.method, "mean, ice, softimpute, sinkhorn_direct, linear_rr, mlp_rr");
  impute->add_option("--params", ia.params, "Method hyperparameters as a JSON object");
  impute->add_option("--registry", ia.registry, "Check the shape against a registered dataset");
  impute->add_option("--seed", ia.seed, "Random seed");
  impute->add_option("--out", ia.out, "Completed CSV (original units)")->required();
  impute->add_option("--model-out", ia.model_out, "Save the fitted model (ice, linear_rr, mlp_rr)");
  impute->add_option("--model", ia.model_in, "Apply a saved model instead of fitting");

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "Run a benchmark from a JSON config");
  bench->add_option("--config", ba.config, "Experiment config (JSON)")->required();
  bench->add_option("--seed", ba.seed, "Base seed")->required();
  bench->add_option("--out", ba.out, "Output directory")->required();
  bench->add_option("--draws", ba.draws, "Override the number of mask draws");

  BenchArgs oa;
  auto* oos = app.add_subcommand("oos", "Train/test split protocol from a JSON config");
  oos->add_option("--config", oa.config, "Experiment config (JSON)")->required();
  oos->add_option("--seed", oa.seed, "Base seed");
  oos->add_option("--out", oa.out, "Output directory");
  oos->add_option("--draws", oa.draws, "Override the number of mask draws");

  MaskArgs ma;
  auto* maskgen = app.add_subcommand("maskgen", "Write a 0/1 missingness mask for audit");
  maskgen->add_option("--input", ma.input, "Complete CSV to mask");
  maskgen->add_option("--synthetic", ma.synthetic, "half_moons, s_shape, circles, gaussian, low_rank");
  maskgen->add_option("--n", ma.n, "Rows for synthetic data");
  maskgen->add_option("--d", ma.d, "Columns for synthetic data");
  maskgen->add_option("--mechanism", ma.mechanism, "mcar, mar, mnar_logistic, mnar_quantile");
  maskgen->add_option("--rate", ma.rate, "Target missing rate");
  maskgen->add_option("--input-fraction", ma.input_fraction, "Logistic inputs / censored columns fraction");
  maskgen->add_option("--quantile", ma.quantile, "Tail quantile for mnar_quantile");
  maskgen->add_option("--seed", ma.seed, "Random seed");
  maskgen->add_option("--out", ma.out, "Mask CSV (1 = observed)")->required();

  std::uint64_t check_seed = 0;
  auto* check = app.add_subcommand("check", "Run the invariant self-checks");
  check->add_option("--seed", check_seed, "Random seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*impute) return run_impute(ia);
    if (*bench) return run_bench(ba, false);
    if (*oos) return run_bench(oa, true);
    if (*maskgen) return run_maskgen(ma);
    if (*check) return run_check(check_seed);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
