#include "sdr/model_io.hpp"

namespace sdr {

namespace {

std::string kernel_kind_name(KernelKind k) {
  switch (k) {
    case KernelKind::rbf: return "rbf";
    case KernelKind::ard_rbf: return "ard_rbf";
    case KernelKind::rational_quadratic: return "rational_quadratic";
    case KernelKind::delta: return "delta";
  }
  throw data_error("unknown kernel kind");
}

KernelKind kernel_kind_from(const std::string& s) {
  if (s == "rbf") return KernelKind::rbf;
  if (s == "ard_rbf") return KernelKind::ard_rbf;
  if (s == "rational_quadratic") return KernelKind::rational_quadratic;
  if (s == "delta") return KernelKind::delta;
  throw data_error("unknown kernel kind: " + s);
}

std::string loss_name(SupervisedLossKind k) {
  return k == SupervisedLossKind::squared ? "squared" : "cross_entropy";
}

SupervisedLossKind loss_from(const std::string& s) {
  if (s == "squared") return SupervisedLossKind::squared;
  if (s == "cross_entropy") return SupervisedLossKind::modified_cross_entropy;
  throw data_error("unknown loss kind: " + s);
}

std::string similarity_name(SimilarityMode m) {
  return m == SimilarityMode::affinity ? "affinity" : "sq_dist";
}

SimilarityMode similarity_from(const std::string& s) {
  if (s == "affinity") return SimilarityMode::affinity;
  if (s == "sq_dist") return SimilarityMode::sq_dist;
  throw data_error("unknown similarity mode: " + s);
}

std::string init_name(InitMode m) {
  return m == InitMode::spectral ? "spectral" : "random";
}

InitMode init_from(const std::string& s) {
  if (s == "spectral") return InitMode::spectral;
  if (s == "random") return InitMode::random;
  throw data_error("unknown init mode: " + s);
}

Json traces_to_json(const std::vector<std::vector<double>>& traces) {
  Json out = Json::array();
  for (const auto& t : traces) out.push_back(t);
  return out;
}

std::vector<std::vector<double>> traces_from_json(const Json& j) {
  std::vector<std::vector<double>> out;
  for (const auto& t : j) out.push_back(t.get<std::vector<double>>());
  return out;
}

}  // namespace

Json kernel_to_json(const KernelSpec& spec) {
  Json j;
  j["kind"] = kernel_kind_name(spec.kind);
  j["lengthscales"] = vector_to_json(spec.lengthscales);
  j["rq_alpha"] = spec.rq_alpha;
  j["signal_variance"] = spec.signal_variance;
  return j;
}

KernelSpec kernel_from_json(const Json& j) {
  KernelSpec spec;
  spec.kind = kernel_kind_from(j.at("kind").get<std::string>());
  spec.lengthscales = vector_from_json(j.at("lengthscales"));
  spec.rq_alpha = j.at("rq_alpha").get<double>();
  spec.signal_variance = j.at("signal_variance").get<double>();
  return spec;
}

Json config_to_json(const SDRConfig& cfg) {
  Json j;
  j["alpha"] = cfg.alpha;
  j["eta"] = cfg.eta;
  j["m"] = cfg.m;
  j["p"] = cfg.p;
  j["perplexity"] = cfg.perplexity;
  j["loss"] = loss_name(cfg.loss);
  j["similarity"] = similarity_name(cfg.similarity);
  j["z_kernel"] = kernel_to_json(cfg.z_kernel);
  j["y_kernel"] = kernel_to_json(cfg.y_kernel);
  j["y_kernel_auto"] = cfg.y_kernel_auto;
  j["init"] = init_name(cfg.init);
  j["outer_max"] = cfg.outer_max;
  j["inner_max"] = cfg.inner_max;
  j["outer_tol"] = cfg.outer_tol;
  j["lr"] = cfg.lr;
  j["standardize_x"] = cfg.standardize_x;
  if (cfg.oos) {
    Json o;
    o["lambda"] = cfg.oos->lambda;
    o["mu"] = cfg.oos->mu;
    o["beta"] = cfg.oos->beta;
    o["kernel"] = kernel_to_json(cfg.oos->kernel);
    o["lengthscale_auto"] = cfg.oos->lengthscale_auto;
    o["beta_ramp_final"] = cfg.oos->beta_ramp_final;
    o["normalize_plan"] = cfg.oos->normalize_plan;
    j["oos"] = std::move(o);
  } else {
    j["oos"] = nullptr;
  }
  j["seed"] = cfg.seed;
  return j;
}

SDRConfig config_from_json(const Json& j) {
  SDRConfig cfg;
  cfg.alpha = j.at("alpha").get<double>();
  cfg.eta = j.at("eta").get<double>();
  cfg.m = j.at("m").get<Index>();
  cfg.p = j.at("p").get<Index>();
  cfg.perplexity = j.at("perplexity").get<double>();
  cfg.loss = loss_from(j.at("loss").get<std::string>());
  cfg.similarity = similarity_from(j.at("similarity").get<std::string>());
  cfg.z_kernel = kernel_from_json(j.at("z_kernel"));
  cfg.y_kernel = kernel_from_json(j.at("y_kernel"));
  cfg.y_kernel_auto = j.at("y_kernel_auto").get<bool>();
  cfg.init = init_from(j.at("init").get<std::string>());
  cfg.outer_max = j.at("outer_max").get<int>();
  cfg.inner_max = j.at("inner_max").get<int>();
  cfg.outer_tol = j.at("outer_tol").get<double>();
  cfg.lr = j.at("lr").get<double>();
  cfg.standardize_x = j.at("standardize_x").get<bool>();
  if (!j.at("oos").is_null()) {
    OOSConfig o;
    const Json& jo = j.at("oos");
    o.lambda = jo.at("lambda").get<double>();
    o.mu = jo.at("mu").get<double>();
    o.beta = jo.at("beta").get<double>();
    o.kernel = kernel_from_json(jo.at("kernel"));
    o.lengthscale_auto = jo.at("lengthscale_auto").get<bool>();
    o.beta_ramp_final = jo.at("beta_ramp_final").get<int>();
    o.normalize_plan = jo.at("normalize_plan").get<bool>();
    cfg.oos = o;
  }
  cfg.seed = j.at("seed").get<std::uint64_t>();
  return cfg;
}

Json model_to_json(const SDRModel& model) {
  Json j;
  j["magic"] = kModelMagic;
  j["config"] = config_to_json(model.config);
  j["y_kernel_used"] = kernel_to_json(model.y_kernel_used);
  j["x_mean"] = vector_to_json(model.x_stats.mean);
  j["x_std"] = vector_to_json(model.x_stats.std);
  j["Z"] = matrix_to_json(model.Z);
  j["T"] = matrix_to_json(model.coupling.T);
  j["h_source"] = vector_to_json(model.coupling.h_source);
  j["h_Z"] = vector_to_json(model.h_Z);
  j["G"] = matrix_to_json(model.G);
  if (model.oos) {
    Json o;
    o["L"] = matrix_to_json(model.oos->L);
    o["X_train"] = matrix_to_json(model.oos->X_train);
    o["kernel"] = kernel_to_json(model.oos->kernel);
    o["lambda"] = model.oos->lambda;
    o["beta"] = model.oos->beta;
    o["mu"] = model.oos->mu;
    j["oos"] = std::move(o);
  } else {
    j["oos"] = nullptr;
  }
  j["outer_objective"] = model.outer_objective;
  j["cka_trace"] = model.cka_trace;
  j["z_traces"] = traces_to_json(model.z_traces);
  j["t_traces"] = traces_to_json(model.t_traces);
  j["t_step_rejections"] = model.t_step_rejections;
  j["feature_names"] = model.feature_names;
  j["target_names"] = model.target_names;
  return j;
}

SDRModel model_from_json(const Json& j) {
  if (!j.contains("magic") || j.at("magic").get<std::string>() != kModelMagic)
    throw data_error(std::string("not a ") + kModelMagic + " model file");
  SDRModel model;
  model.config = config_from_json(j.at("config"));
  model.y_kernel_used = kernel_from_json(j.at("y_kernel_used"));
  model.x_stats.mean = vector_from_json(j.at("x_mean"));
  model.x_stats.std = vector_from_json(j.at("x_std"));
  model.Z = matrix_from_json(j.at("Z"));
  model.coupling.T = matrix_from_json(j.at("T"));
  model.coupling.h_source = vector_from_json(j.at("h_source"));
  model.h_Z = vector_from_json(j.at("h_Z"));
  model.G = matrix_from_json(j.at("G"));
  if (!j.at("oos").is_null()) {
    const Json& o = j.at("oos");
    OOSMap map;
    map.L = matrix_from_json(o.at("L"));
    map.X_train = matrix_from_json(o.at("X_train"));
    map.kernel = kernel_from_json(o.at("kernel"));
    map.lambda = o.at("lambda").get<double>();
    map.beta = o.at("beta").get<double>();
    map.mu = o.at("mu").get<double>();
    model.oos = std::move(map);
  }
  model.outer_objective = j.at("outer_objective").get<std::vector<double>>();
  model.cka_trace = j.at("cka_trace").get<std::vector<double>>();
  model.z_traces = traces_from_json(j.at("z_traces"));
  model.t_traces = traces_from_json(j.at("t_traces"));
  model.t_step_rejections = j.at("t_step_rejections").get<int>();
  model.feature_names =
      j.at("feature_names").get<std::vector<std::string>>();
  model.target_names = j.at("target_names").get<std::vector<std::string>>();
  return model;
}

Json bottleneck_to_json(const BottleneckReport& report) {
  Json j;
  j["cka_grad_norm"] = report.cka_grad_norm;
  j["supervised_grad_norm_fd"] = report.supervised_grad_norm_fd;
  j["directions"] = report.directions;
  j["epsilon"] = report.epsilon;
  return j;
}

BottleneckReport bottleneck_from_json(const Json& j) {
  BottleneckReport report;
  report.cka_grad_norm = j.at("cka_grad_norm").get<double>();
  report.supervised_grad_norm_fd =
      j.at("supervised_grad_norm_fd").get<double>();
  report.directions = j.at("directions").get<int>();
  report.epsilon = j.at("epsilon").get<double>();
  return report;
}

void save_model(const std::string& path, const SDRModel& model) {
  save_json(path, model_to_json(model));
}

SDRModel load_model(const std::string& path) {
  Json j = load_json(path);
  return model_from_json(j);
}

}  // namespace sdr
