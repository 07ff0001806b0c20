#include "seqmix/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "seqmix/errors.hpp"

namespace seqmix {

using nlohmann::json;

std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

namespace {

json real_or_null(double x) {
  if (std::isnan(x)) return nullptr;
  return x;
}

double null_or_real(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return j.get<double>();
}

json lambda_to_json(const PrecisionStructure& p) {
  json out;
  switch (p.kind) {
    case PrecisionStructure::Kind::scalar:
      out["kind"] = "scalar";
      out["values"] = p.values.empty() ? json(nullptr) : json(p.values[0]);
      break;
    case PrecisionStructure::Kind::per_cluster:
      out["kind"] = "perCluster";
      out["values"] = p.values;
      break;
    case PrecisionStructure::Kind::per_time:
      out["kind"] = "perTime";
      out["values"] = p.values;
      break;
    case PrecisionStructure::Kind::per_cluster_time: {
      out["kind"] = "perClusterPerTime";
      json rows = json::array();
      for (int g = 0; g < p.clusters; ++g) {
        rows.push_back(std::vector<double>(p.values.begin() + static_cast<std::ptrdiff_t>(g) * p.T,
                                           p.values.begin() + static_cast<std::ptrdiff_t>(g + 1) * p.T));
      }
      out["values"] = rows;
      break;
    }
  }
  return out;
}

PrecisionStructure lambda_from_json(const json& j, ModelType type, int non_noise, int T) {
  PrecisionStructure p = PrecisionStructure::zeros(type, non_noise, T);
  const json& values = j.at("values");
  switch (p.kind) {
    case PrecisionStructure::Kind::scalar:
      if (!values.is_null()) p.values[0] = values.get<double>();
      break;
    case PrecisionStructure::Kind::per_cluster:
    case PrecisionStructure::Kind::per_time:
      p.values = values.get<std::vector<double>>();
      break;
    case PrecisionStructure::Kind::per_cluster_time: {
      p.values.clear();
      for (const auto& row : values) {
        const auto v = row.get<std::vector<double>>();
        p.values.insert(p.values.end(), v.begin(), v.end());
      }
      break;
    }
  }
  return p;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const int rows = static_cast<int>(j.size());
  if (rows == 0) return {};
  const int cols = static_cast<int>(j.at(0).size());
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int c = 0; c < cols; ++c) m(i, c) = j.at(i).at(c).get<double>();
  return m;
}

}  // namespace

std::string model_to_json(const FittedModel& model) {
  json j;
  j["model"]["type"] = to_string(model.spec.type);
  j["model"]["G"] = model.spec.G;
  j["model"]["gating"]["mode"] = to_string(model.spec.gating.mode);
  j["model"]["gating"]["covariates"] = model.spec.gating.covariates;
  j["model"]["gating"]["noise"] = to_string(model.spec.gating.noise);

  const Control& c = model.spec.control;
  j["control"] = {{"tol", c.tol},           {"max_iter", c.max_iter},
                  {"seed", c.seed},         {"tau0_init", c.tau0_init},
                  {"lambda_max", c.lambda_max}, {"ridge", c.ridge},
                  {"mlr_max_iter", c.mlr_max_iter}, {"threads", c.threads}};

  j["alphabet"] = model.alphabet.labels();
  j["n"] = model.n;
  j["T"] = model.T;

  json thetas = json::array();
  for (const auto& theta : model.components.thetas) {
    json labels = json::array();
    for (std::uint8_t s : theta) labels.push_back(model.alphabet.label(s));
    thetas.push_back(std::move(labels));
  }
  j["theta"] = std::move(thetas);
  j["sps"] = model.sps_labels;
  j["lambda"] = lambda_to_json(model.components.precision);

  json gating;
  gating["mode"] = to_string(model.gating.mode);
  gating["noise"] = to_string(model.gating.noise);
  if (model.gating.mode == GatingMode::covariate) {
    gating["beta"] = matrix_to_json(model.gating.beta);
    gating["coef_names"] = model.gating.coef_names;
    gating["tau0"] = real_or_null(model.gating.tau0);
  } else {
    gating["tau"] = std::vector<double>(model.gating.tau.data(),
                                        model.gating.tau.data() + model.gating.tau.size());
  }
  j["gating"] = std::move(gating);
  j["gating_column_names"] = model.gating_column_names;

  j["loglik_trace"] = model.loglik_trace;
  j["loglik"] = model.loglik;
  j["n_params"] = model.n_params;
  j["bic"] = model.bic;
  j["diagnostics"] = {{"wdbs", real_or_null(model.wdbs)}, {"wasw", real_or_null(model.wasw)}};

  json map = json::array();
  for (int label : model.map_labels) map.push_back(label + 1);
  j["map"] = std::move(map);
  j["iterations"] = model.iterations;
  j["converged"] = model.converged;
  return j.dump(2);
}

FittedModel model_from_json(const std::string& text) {
  const json j = json::parse(text);
  FittedModel model;

  model.spec.type = model_type_from_string(j.at("model").at("type").get<std::string>());
  model.spec.G = j.at("model").at("G").get<int>();
  model.spec.gating.mode =
      gating_mode_from_string(j.at("model").at("gating").at("mode").get<std::string>());
  model.spec.gating.covariates =
      j.at("model").at("gating").at("covariates").get<std::vector<std::string>>();
  model.spec.gating.noise =
      noise_gating_from_string(j.at("model").at("gating").at("noise").get<std::string>());

  const json& c = j.at("control");
  model.spec.control.tol = c.at("tol").get<double>();
  model.spec.control.max_iter = c.at("max_iter").get<int>();
  model.spec.control.seed = c.at("seed").get<std::uint64_t>();
  model.spec.control.tau0_init = c.at("tau0_init").get<double>();
  model.spec.control.lambda_max = c.at("lambda_max").get<double>();
  model.spec.control.ridge = c.at("ridge").get<double>();
  model.spec.control.mlr_max_iter = c.at("mlr_max_iter").get<int>();
  model.spec.control.threads = c.at("threads").get<int>();

  model.alphabet = Alphabet(j.at("alphabet").get<std::vector<std::string>>());
  model.n = j.at("n").get<int>();
  model.T = j.at("T").get<int>();

  for (const auto& row : j.at("theta")) {
    std::vector<std::uint8_t> theta;
    for (const auto& label : row) {
      const auto idx = model.alphabet.index(label.get<std::string>());
      if (!idx) throw input_error("model file: unknown state label");
      theta.push_back(static_cast<std::uint8_t>(*idx));
    }
    model.components.thetas.push_back(std::move(theta));
  }
  model.sps_labels = j.at("sps").get<std::vector<std::string>>();
  model.components.precision = lambda_from_json(j.at("lambda"), model.spec.type,
                                                model.spec.non_noise(), model.T);

  const json& gating = j.at("gating");
  model.gating.mode = gating_mode_from_string(gating.at("mode").get<std::string>());
  model.gating.noise = noise_gating_from_string(gating.at("noise").get<std::string>());
  model.gating.G = model.spec.G;
  model.gating.noise_component = has_noise(model.spec.type);
  if (model.gating.mode == GatingMode::covariate) {
    model.gating.beta = matrix_from_json(gating.at("beta"));
    model.gating.coef_names = gating.at("coef_names").get<std::vector<std::string>>();
    model.gating.tau0 = null_or_real(gating.at("tau0"));
  } else {
    const auto tau = gating.at("tau").get<std::vector<double>>();
    model.gating.tau = Eigen::Map<const Eigen::VectorXd>(tau.data(), static_cast<int>(tau.size()));
  }
  model.gating_column_names = j.at("gating_column_names").get<std::vector<std::string>>();

  model.loglik_trace = j.at("loglik_trace").get<std::vector<double>>();
  model.loglik = j.at("loglik").get<double>();
  model.n_params = j.at("n_params").get<int>();
  model.bic = j.at("bic").get<double>();
  model.wdbs = null_or_real(j.at("diagnostics").at("wdbs"));
  model.wasw = null_or_real(j.at("diagnostics").at("wasw"));

  for (const auto& label : j.at("map")) model.map_labels.push_back(label.get<int>() - 1);
  model.iterations = j.at("iterations").get<int>();
  model.converged = j.at("converged").get<bool>();
  return model;
}

void write_model_json(const FittedModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw input_error("cannot write '" + path + "'");
  out << model_to_json(model) << "\n";
}

FittedModel read_model_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

void write_z_csv(const FittedModel& model, const std::vector<std::string>& ids,
                 const std::string& path) {
  std::ofstream out(path);
  if (!out) throw input_error("cannot write '" + path + "'");
  out << "id";
  for (int g = 0; g < model.spec.G; ++g) out << ",z" << g + 1;
  out << ",map\n";
  for (int i = 0; i < model.Z.rows(); ++i) {
    out << ids[static_cast<std::size_t>(i)];
    for (int g = 0; g < model.Z.cols(); ++g) out << ',' << format_real(model.Z(i, g));
    out << ',' << model.map_labels[static_cast<std::size_t>(i)] + 1 << "\n";
  }
}

ZTable read_z_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw input_error("empty z file");
  int cols = 0;
  for (char ch : line) cols += ch == ',';
  const int G = cols - 1;
  if (G < 1) throw input_error("malformed z file header");

  ZTable table;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string field;
    std::getline(ss, field, ',');
    table.ids.push_back(field);
    std::vector<double> z(static_cast<std::size_t>(G));
    for (int g = 0; g < G; ++g) {
      std::getline(ss, field, ',');
      z[static_cast<std::size_t>(g)] = std::stod(field);
    }
    rows.push_back(std::move(z));
    std::getline(ss, field, ',');
    table.map_labels.push_back(std::stoi(field) - 1);
  }
  table.Z.resize(static_cast<int>(rows.size()), G);
  for (int i = 0; i < table.Z.rows(); ++i)
    for (int g = 0; g < G; ++g) table.Z(i, g) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(g)];
  return table;
}

namespace {

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace

void write_grid_csv(const GridResult& grid, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw input_error("cannot write '" + path + "'");
  out << "type,G,gating,noise_gating,covariates,ok,loglik,k,bic,wdbs,wasw,iterations,converged,error\n";
  for (const auto& e : grid.table) {
    out << to_string(e.spec.type) << ',' << e.spec.G << ',' << to_string(e.spec.gating.mode) << ','
        << to_string(e.spec.gating.noise) << ',' << join(e.spec.gating.covariates, "+") << ','
        << (e.ok ? 1 : 0) << ',';
    if (e.ok) {
      out << format_real(e.loglik) << ',' << e.n_params << ',' << format_real(e.bic_value) << ','
          << format_real(e.wdbs_value) << ',' << format_real(e.wasw_value) << ',' << e.iterations
          << ',' << (e.converged ? 1 : 0) << ",\n";
    } else {
      std::string msg = e.error;
      for (char& ch : msg) {
        if (ch == ',' || ch == '\n') ch = ';';
      }
      out << ",,,,,,," << msg << "\n";
    }
  }
}

void write_stepwise_csv(const StepwiseTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw input_error("cannot write '" + path + "'");
  out << "step,action,G,type,covariates,gating_type,bic,accepted\n";
  for (std::size_t s = 0; s < trace.steps.size(); ++s) {
    const auto& step = trace.steps[s];
    const ModelSpec& spec = step.chosen;
    const std::string gating_type = spec.gating.mode == GatingMode::covariate
                                        ? to_string(spec.gating.noise)
                                        : to_string(spec.gating.mode);
    out << s + 1 << ',' << step.action << ',' << spec.G << ',' << to_string(spec.type) << ','
        << join(spec.gating.covariates, "+") << ',' << gating_type << ','
        << format_real(step.best_bic) << ',' << (step.accepted ? 1 : 0) << "\n";
  }
}

void write_se_csv(const FittedModel& model, const BootstrapResult& boot, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw input_error("cannot write '" + path + "'");
  out << "component,sps,coefficient,estimate,se\n";

  // mirror the bootstrap's coefficient representation: the MLR matrix under
  // covariate gating, intercept-only log(tau_g / tau_1) otherwise
  Eigen::MatrixXd estimate;
  std::vector<std::string> coef_names;
  if (model.gating.mode == GatingMode::covariate) {
    estimate = model.gating.beta;
    coef_names = model.gating.coef_names;
  } else {
    estimate.resize(1, model.spec.G);
    for (int g = 0; g < model.spec.G; ++g) {
      estimate(0, g) = std::log(model.gating.tau[g]) - std::log(model.gating.tau[0]);
    }
    coef_names = {"(Intercept)"};
  }
  for (int g = 1; g < estimate.cols(); ++g) {
    for (int p = 0; p < estimate.rows(); ++p) {
      out << g + 1 << ',' << model.sps_labels[static_cast<std::size_t>(g)] << ','
          << coef_names[static_cast<std::size_t>(p)] << ',' << format_real(estimate(p, g)) << ','
          << format_real(boot.se(p, g)) << "\n";
    }
  }
}

void write_gating_csv(const FittedModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw input_error("cannot write '" + path + "'");
  out << "component,sps,coefficient,estimate\n";
  const auto& beta = model.gating.beta;
  for (int g = 1; g < beta.cols(); ++g) {
    for (int p = 0; p < beta.rows(); ++p) {
      out << g + 1 << ',' << model.sps_labels[static_cast<std::size_t>(g)] << ','
          << model.gating.coef_names[static_cast<std::size_t>(p)] << ','
          << format_real(beta(p, g)) << "\n";
    }
  }
}

void write_table_csv(const std::string& path, const std::vector<std::string>& column_names,
                     const Eigen::MatrixXd& values, const std::string& row_label_name,
                     const std::vector<std::string>& row_labels) {
  std::ofstream out(path);
  if (!out) throw input_error("cannot write '" + path + "'");
  const bool labelled = !row_label_name.empty();
  if (labelled) out << row_label_name;
  for (std::size_t j = 0; j < column_names.size(); ++j) {
    if (labelled || j) out << ',';
    out << column_names[j];
  }
  out << "\n";
  for (int i = 0; i < values.rows(); ++i) {
    if (labelled) out << row_labels[static_cast<std::size_t>(i)];
    for (int j = 0; j < values.cols(); ++j) {
      if (labelled || j) out << ',';
      out << format_real(values(i, j));
    }
    out << "\n";
  }
}

}  // namespace seqmix
