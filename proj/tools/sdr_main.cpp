// Command-line front end: dataset generation, model fitting, projection
// of unseen points, the GP pipeline, and parameter sweeps.

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sdr/datasets.hpp"
#include "sdr/driver.hpp"
#include "sdr/gp.hpp"
#include "sdr/io.hpp"
#include "sdr/metrics.hpp"
#include "sdr/model_io.hpp"
#include "sdr/pipeline.hpp"

namespace {

using namespace sdr;

std::vector<std::string> split_names(const std::string& csv) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : csv) {
    if (ch == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

struct LoadedTable {
  Matrix X;
  Matrix Y;
  std::vector<std::string> feature_names;
  std::vector<std::string> target_names;
};

LoadedTable load_features_targets(const std::string& path,
                                  const std::string& targets_csv) {
  CsvTable table = load_csv(path);
  LoadedTable out;
  out.target_names = split_names(targets_csv);
  if (out.target_names.empty())
    throw data_error("no target columns were named");
  std::vector<Index> target_cols = resolve_columns(table, out.target_names);
  std::set<Index> target_set(target_cols.begin(), target_cols.end());

  std::vector<Index> feature_cols;
  for (Index c = 0; c < Index(table.header.size()); ++c) {
    if (!target_set.count(c)) {
      feature_cols.push_back(c);
      out.feature_names.push_back(table.header[c]);
    }
  }
  if (feature_cols.empty())
    throw data_error("no feature columns remain after removing targets");

  out.X.resize(table.values.rows(), feature_cols.size());
  for (size_t c = 0; c < feature_cols.size(); ++c)
    out.X.col(c) = table.values.col(feature_cols[c]);
  out.Y.resize(table.values.rows(), target_cols.size());
  for (size_t c = 0; c < target_cols.size(); ++c)
    out.Y.col(c) = table.values.col(target_cols[c]);
  return out;
}

bool integer_label_column(const Matrix& Y) {
  if (Y.cols() != 1) return false;
  for (Index i = 0; i < Y.rows(); ++i)
    if (std::abs(Y(i, 0) - std::llround(Y(i, 0))) > 1e-9) return false;
  return true;
}

std::vector<int> to_int_labels(const Matrix& Y) {
  std::vector<int> out(Y.rows());
  for (Index i = 0; i < Y.rows(); ++i)
    out[i] = static_cast<int>(std::llround(Y(i, 0)));
  return out;
}

// Shared fit-style flags for the fit, gp, and sweep commands.
struct FitFlags {
  std::string in;
  std::string targets = "y";
  std::string out_prefix;
  long long m = 0;
  long long p = 2;
  double alpha = 0.2;
  double eta = 1000.0;
  double perplexity = 20.0;
  std::string loss = "squared";
  std::string similarity = "affinity";
  std::string init = "spectral";
  long long outer_max = 30;
  long long inner_max = 1000;
  double outer_tol = 1e-6;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  bool no_standardize = false;
  bool oos = false;
  double lambda_l = 1e-2;
  double beta = 0.5;
  long long beta_ramp_final = 0;
  bool raw_plan = false;
  double oos_lengthscale = 0.0;  // 0 = median heuristic
};

void add_fit_flags(CLI::App* cmd, FitFlags& f, bool with_m) {
  cmd->add_option("--in", f.in, "Input CSV with a header row")->required();
  cmd->add_option("--targets", f.targets,
                  "Comma-separated target column names");
  if (with_m)
    cmd->add_option("--m", f.m, "Number of prototypes")->required();
  cmd->add_option("--p", f.p, "Embedding dimension");
  cmd->add_option("--alpha", f.alpha, "Geometric-term weight in [0,1]");
  cmd->add_option("--eta", f.eta, "Alignment-term weight");
  cmd->add_option("--perplexity", f.perplexity, "Input affinity perplexity");
  cmd->add_option("--loss", f.loss, "Supervised loss")
      ->check(CLI::IsMember({"squared", "cross_entropy"}));
  cmd->add_option("--similarity", f.similarity, "Pairwise structure kind")
      ->check(CLI::IsMember({"affinity", "sq_dist"}));
  cmd->add_option("--init", f.init, "Plan initialization")
      ->check(CLI::IsMember({"spectral", "random"}));
  cmd->add_option("--outer-max", f.outer_max, "Outer iteration cap");
  cmd->add_option("--inner-max", f.inner_max, "Inner iteration cap");
  cmd->add_option("--outer-tol", f.outer_tol, "Outer relative tolerance");
  cmd->add_option("--lr", f.lr, "Embedding step learning rate");
  cmd->add_option("--seed", f.seed, "Master seed");
  cmd->add_flag("--no-standardize", f.no_standardize,
                "Skip per-column input standardization");
  cmd->add_flag("--oos", f.oos, "Fit the out-of-sample kernel map");
  cmd->add_option("--lambda-l", f.lambda_l, "Kernel map ridge strength");
  cmd->add_option("--beta", f.beta, "Soft-update strength in [0,1]");
  cmd->add_option("--beta-ramp-final", f.beta_ramp_final,
                  "Ramp beta to 1 over the final N outer iterations");
  cmd->add_flag("--raw-plan", f.raw_plan,
                "Use the raw plan instead of row-normalized in the map");
  cmd->add_option("--oos-lengthscale", f.oos_lengthscale,
                  "Kernel map lengthscale (0 = median heuristic)");
}

SDRConfig make_config(const FitFlags& f) {
  SDRConfig cfg;
  cfg.alpha = f.alpha;
  cfg.eta = f.eta;
  cfg.m = f.m;
  cfg.p = f.p;
  cfg.perplexity = f.perplexity;
  cfg.loss = f.loss == "squared" ? SupervisedLossKind::squared
                                 : SupervisedLossKind::modified_cross_entropy;
  cfg.similarity = f.similarity == "affinity" ? SimilarityMode::affinity
                                              : SimilarityMode::sq_dist;
  cfg.init = f.init == "spectral" ? InitMode::spectral : InitMode::random;
  cfg.outer_max = static_cast<int>(f.outer_max);
  cfg.inner_max = static_cast<int>(f.inner_max);
  cfg.outer_tol = f.outer_tol;
  cfg.lr = f.lr;
  cfg.standardize_x = !f.no_standardize;
  cfg.seed = f.seed;
  if (f.oos) {
    OOSConfig o;
    o.lambda = f.lambda_l;
    o.beta = f.beta;
    o.beta_ramp_final = static_cast<int>(f.beta_ramp_final);
    o.normalize_plan = !f.raw_plan;
    if (f.oos_lengthscale > 0.0) {
      o.lengthscale_auto = false;
      o.kernel.lengthscales = Vector::Constant(1, f.oos_lengthscale);
    }
    cfg.oos = o;
  }
  return cfg;
}

// Hard cluster assignment per sample: the plan column holding the row's
// largest mass, ties toward the smaller column.
std::vector<int> hard_assignment(const Matrix& T) {
  std::vector<int> out(T.rows());
  for (Index i = 0; i < T.rows(); ++i) {
    Index best = 0;
    for (Index j = 1; j < T.cols(); ++j)
      if (T(i, j) > T(i, best)) best = j;
    out[i] = static_cast<int>(best);
  }
  return out;
}

Json fit_metrics(const SDRModel& model, const Matrix& Y) {
  Json metrics;
  metrics["final_objective"] = model.outer_objective.back();
  if (!model.cka_trace.empty()) metrics["final_cka"] = model.cka_trace.back();
  metrics["outer_iterations"] = model.cka_trace.size();
  metrics["t_step_rejections"] = model.t_step_rejections;

  if (integer_label_column(Y)) {
    std::vector<int> y = to_int_labels(Y);
    std::set<int> classes(y.begin(), y.end());
    metrics["homogeneity"] = homogeneity(y, hard_assignment(model.coupling.T));
    PrototypeLabelResult proto = prototype_labels(model.coupling, y);
    if (classes.size() >= 2 && model.Z.rows() >= Index(classes.size())) {
      KMeansResult km = kmeans(model.Z, static_cast<int>(classes.size()), 10,
                               model.config.seed);
      metrics["kmeans_nmi"] = nmi(km.labels, proto.labels);
    }
    std::set<int> proto_classes(proto.labels.begin(), proto.labels.end());
    if (proto_classes.size() >= 2)
      metrics["silhouette"] = silhouette(model.Z, proto.labels);
  }
  return metrics;
}

void write_fit_artifacts(const std::string& prefix, const SDRModel& model,
                         const Matrix& Y) {
  save_model(prefix + ".model.json", model);

  std::vector<std::string> zcols;
  for (Index c = 0; c < model.Z.cols(); ++c)
    zcols.push_back("z" + std::to_string(c + 1));
  save_csv(prefix + ".embeddings.csv", zcols, model.Z);

  std::vector<std::string> tcols;
  for (Index c = 0; c < model.coupling.T.cols(); ++c)
    tcols.push_back("t" + std::to_string(c + 1));
  save_csv(prefix + ".coupling.csv", tcols, model.coupling.T);

  save_csv(prefix + ".hz.csv", {"h_z"}, model.h_Z);

  Matrix obj(model.outer_objective.size(), 2);
  for (size_t i = 0; i < model.outer_objective.size(); ++i) {
    obj(i, 0) = double(i);
    obj(i, 1) = model.outer_objective[i];
  }
  save_csv(prefix + ".trace.csv", {"iter", "objective"}, obj);

  Matrix ck(model.cka_trace.size(), 2);
  for (size_t i = 0; i < model.cka_trace.size(); ++i) {
    ck(i, 0) = double(i + 1);
    ck(i, 1) = model.cka_trace[i];
  }
  save_csv(prefix + ".cka_trace.csv", {"iter", "cka"}, ck);

  Json metrics = fit_metrics(model, Y);
  metrics["config"] = config_to_json(model.config);
  save_json(prefix + ".metrics.json", metrics);
}

int run_gen(const std::string& dataset, long long n, double noise,
            std::uint64_t seed, const std::string& out) {
  double resolved = noise;
  if (resolved < 0.0) resolved = dataset == "friedman" ? 1.0 : 0.05;

  Dataset d;
  if (dataset == "scurve")
    d = gen_scurve(n, resolved, seed);
  else if (dataset == "swissroll")
    d = gen_swissroll(n, resolved, seed);
  else if (dataset == "friedman")
    d = gen_friedman(n, resolved, seed);
  else
    d = gen_piecewise(n, resolved, seed);

  std::vector<std::string> header;
  for (Index c = 0; c < d.X.cols(); ++c)
    header.push_back("x" + std::to_string(c + 1));
  header.push_back("y");
  Matrix table(d.X.rows(), d.X.cols() + 1);
  table.leftCols(d.X.cols()) = d.X;
  table.col(d.X.cols()) = d.y;
  save_csv(out, header, table);
  return 0;
}

int run_fit(const FitFlags& f) {
  LoadedTable data = load_features_targets(f.in, f.targets);
  SDRConfig cfg = make_config(f);
  SDRModel model = fit(data.X, data.Y, cfg);
  model.feature_names = data.feature_names;
  model.target_names = data.target_names;
  write_fit_artifacts(f.out_prefix, model, data.Y);
  return 0;
}

int run_project(const std::string& model_path, const std::string& in,
                const std::string& out) {
  SDRModel model = load_model(model_path);
  if (!model.oos)
    throw data_error(
        "model has no out-of-sample map; refit with --oos to project new "
        "points");
  CsvTable table = load_csv(in);
  Matrix X;
  if (!model.feature_names.empty()) {
    std::vector<Index> cols = resolve_columns(table, model.feature_names);
    X.resize(table.values.rows(), cols.size());
    for (size_t c = 0; c < cols.size(); ++c)
      X.col(c) = table.values.col(cols[c]);
  } else {
    X = table.values;
  }
  Matrix Z = project(model, X);
  std::vector<std::string> header;
  for (Index c = 0; c < Z.cols(); ++c)
    header.push_back("z" + std::to_string(c + 1));
  save_csv(out, header, Z);
  return 0;
}

int run_gp(const FitFlags& f, double test_fraction, long long gp_steps,
           double gp_lr, bool baseline) {  // baseline: also fit a raw-x GP
  LoadedTable data = load_features_targets(f.in, f.targets);
  if (data.Y.cols() != 1)
    throw data_error("gp command expects a single target column");

  TrainTestSplit split =
      train_test_split(data.X, data.Y, test_fraction, f.seed);

  FitFlags ff = f;
  ff.oos = true;
  ff.m = split.X_train.rows();
  SDRConfig cfg = make_config(ff);

  GPOptions gp_opts;
  gp_opts.lr = gp_lr;
  gp_opts.max_steps = static_cast<int>(gp_steps);

  GpPipelineResult res =
      sdr_gp_pipeline(split.X_train, split.Y_train.col(0), split.X_test,
                      split.Y_test.col(0), cfg, gp_opts);

  Vector y_test = split.Y_test.col(0);
  Matrix pred(y_test.size(), 3);
  pred.col(0) = y_test;
  pred.col(1) = res.mean;
  pred.col(2) = res.std;
  save_csv(f.out_prefix + ".predictions.csv", {"y_true", "mean", "std"},
           pred);

  auto [levels, coverages] = calibration_curve(res.mean, res.std, y_test, 99);
  Matrix cal(levels.size(), 2);
  cal.col(0) = levels;
  cal.col(1) = coverages;
  save_csv(f.out_prefix + ".calibration.csv", {"level", "coverage"}, cal);

  Json metrics;
  metrics["test_mll"] = res.test_mll;
  metrics["test_mse"] = res.test_mse;
  metrics["test_r2"] = r2(y_test, res.mean);
  metrics["mace"] = mace(levels, coverages);
  metrics["train_lml"] = res.train_lml;
  if (baseline) {
    GpBaselineResult base = raw_gp_baseline(
        split.X_train, split.Y_train.col(0), split.X_test, y_test, gp_opts);
    metrics["baseline_mll"] = base.test_mll;
    metrics["baseline_mse"] = base.test_mse;
  }
  metrics["config"] = config_to_json(cfg);
  save_json(f.out_prefix + ".metrics.json", metrics);
  return 0;
}

int run_sweep(const FitFlags& f, const std::string& param,
              const std::vector<double>& values,
              const std::vector<std::uint64_t>& seeds,
              const std::string& out) {
  if (values.empty()) throw data_error("sweep: the value grid is empty");
  if (seeds.empty()) throw data_error("sweep: no seeds given");

  LoadedTable data = load_features_targets(f.in, f.targets);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  std::vector<std::string> header = {param,
                                     "seed",
                                     "final_objective",
                                     "final_cka",
                                     "outer_iterations",
                                     "homogeneity",
                                     "kmeans_nmi",
                                     "silhouette"};
  Matrix rows(values.size() * seeds.size(), header.size());
  Index r = 0;
  for (double value : values) {
    for (std::uint64_t seed : seeds) {
      FitFlags ff = f;
      ff.seed = seed;
      if (param == "eta") {
        ff.eta = value;
      } else {
        ff.oos = true;
        ff.beta = value;
      }
      SDRModel model = fit(data.X, data.Y, make_config(ff));
      Json metrics = fit_metrics(model, data.Y);
      rows(r, 0) = value;
      rows(r, 1) = double(seed);
      rows(r, 2) = metrics["final_objective"].get<double>();
      rows(r, 3) = metrics.contains("final_cka")
                       ? metrics["final_cka"].get<double>()
                       : nan;
      rows(r, 4) = metrics["outer_iterations"].get<double>();
      rows(r, 5) = metrics.contains("homogeneity")
                       ? metrics["homogeneity"].get<double>()
                       : nan;
      rows(r, 6) = metrics.contains("kmeans_nmi")
                       ? metrics["kmeans_nmi"].get<double>()
                       : nan;
      rows(r, 7) = metrics.contains("silhouette")
                       ? metrics["silhouette"].get<double>()
                       : nan;
      ++r;
    }
  }
  save_csv(out, header, rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Supervised distributional reduction toolkit"};
  app.set_config("--config", "",
                 "Read options from a key=value config file (flags given on "
                 "the command line win)");
  app.failure_message([](const CLI::App*, const CLI::Error& e) {
    return std::string("error: ") + e.what() + "\n";
  });
  app.require_subcommand(1);

  int threads = 1;
  if (const char* env = std::getenv("SDR_THREADS")) {
    int parsed = std::atoi(env);
    if (parsed > 0) threads = parsed;
  }
  app.add_option("--threads", threads,
                 "Worker thread count (also env SDR_THREADS)");
  bool dump_config = false;
  app.add_flag("--dump-config", dump_config,
               "Echo the fully resolved configuration before running");

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset CSV");
  std::string g_dataset, g_out;
  long long g_n = 100;
  double g_noise = -1.0;
  std::uint64_t g_seed = 0;
  gen->add_option("--dataset", g_dataset, "Generator name")
      ->required()
      ->check(CLI::IsMember({"scurve", "swissroll", "friedman", "piecewise"}));
  gen->add_option("--n", g_n, "Sample count");
  gen->add_option("--noise", g_noise,
                  "Noise level (negative = generator default)");
  gen->add_option("--seed", g_seed, "Master seed");
  gen->add_option("--out", g_out, "Output CSV path")->required();

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "Fit a reduction model");
  FitFlags fit_flags;
  add_fit_flags(fit_cmd, fit_flags, true);
  fit_cmd->add_option("--out-prefix", fit_flags.out_prefix,
                      "Prefix for every output artifact")
      ->required();

  // project
  auto* project_cmd =
      app.add_subcommand("project", "Project new points through a model");
  std::string pr_model, pr_in, pr_out;
  project_cmd->add_option("--model", pr_model, "Model file")->required();
  project_cmd->add_option("--in", pr_in, "Input CSV")->required();
  project_cmd->add_option("--out", pr_out, "Output embeddings CSV")
      ->required();

  // gp
  auto* gp_cmd = app.add_subcommand(
      "gp", "Reduction + GP regression pipeline with a train/test split");
  FitFlags gp_flags;
  add_fit_flags(gp_cmd, gp_flags, false);
  double gp_test_fraction = 0.2;
  long long gp_steps = 100;
  double gp_lr = 0.1;
  std::string gp_baseline;
  gp_cmd->add_option("--test-fraction", gp_test_fraction,
                     "Held-out fraction in (0,1)");
  gp_cmd->add_option("--gp-steps", gp_steps, "GP hyperparameter steps");
  gp_cmd->add_option("--gp-lr", gp_lr, "GP hyperparameter learning rate");
  gp_cmd->add_option("--baseline", gp_baseline,
                     "Also score a comparison model (raw-gp: plain GP on "
                     "the raw inputs)")
      ->check(CLI::IsMember({"raw-gp"}));
  gp_cmd->add_option("--out-prefix", gp_flags.out_prefix,
                     "Prefix for every output artifact")
      ->required();

  // sweep
  auto* sweep_cmd =
      app.add_subcommand("sweep", "Refit across a parameter grid and seeds");
  FitFlags sweep_flags;
  add_fit_flags(sweep_cmd, sweep_flags, true);
  std::string sw_param = "eta", sw_out;
  std::vector<double> sw_values;
  std::vector<std::uint64_t> sw_seeds;
  sweep_cmd->add_option("--param", sw_param, "Swept parameter")
      ->check(CLI::IsMember({"eta", "beta"}));
  sweep_cmd->add_option("--values", sw_values, "Grid values")
      ->required()
      ->delimiter(',');
  sweep_cmd->add_option("--seeds", sw_seeds, "Seeds, one run per value")
      ->required()
      ->delimiter(',');
  sweep_cmd->add_option("--out", sw_out, "Sweep table CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  Eigen::setNbThreads(threads);
  if (dump_config) std::cout << app.config_to_str(true, true);

  try {
    if (app.got_subcommand(gen))
      return run_gen(g_dataset, g_n, g_noise, g_seed, g_out);
    if (app.got_subcommand(fit_cmd)) return run_fit(fit_flags);
    if (app.got_subcommand(project_cmd))
      return run_project(pr_model, pr_in, pr_out);
    if (app.got_subcommand(gp_cmd))
      return run_gp(gp_flags, gp_test_fraction, gp_steps, gp_lr,
                    gp_baseline == "raw-gp");
    if (app.got_subcommand(sweep_cmd))
      return run_sweep(sweep_flags, sw_param, sw_values, sw_seeds, sw_out);
    throw data_error("no subcommand selected");
  } catch (const data_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const numerical_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
