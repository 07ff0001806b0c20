// Command-line front end: summarize | fit | select | bootstrap.
// Exit codes: 0 ok, 2 input error, 3 non-convergence, 4 internal error.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "seqmix/distance.hpp"
#include "seqmix/ecm.hpp"
#include "seqmix/errors.hpp"
#include "seqmix/selection.hpp"
#include "seqmix/serialize.hpp"
#include "seqmix/wlbs.hpp"

namespace fs = std::filesystem;
using namespace seqmix;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNonConvergence = 3;
constexpr int kExitInternal = 4;

struct InputOptions {
  std::string path;
  std::string delimiter = ",";
  std::string id_column;
  std::string weight_column;
  std::string seq_prefix;
  std::vector<std::string> seq_columns;
  std::vector<std::string> covariate_columns;
  int time_first = -1;
  int time_last = -1;
};

struct ControlOptions {
  std::uint64_t seed = 0;
  double tol = 1e-8;
  int max_iter = 1000;
  double tau0_init = 0.05;
  double lambda_max = 1e3;
  double ridge = 1e-8;
  int mlr_max_iter = 100;
  int threads = 1;
};

void add_input_options(CLI::App* cmd, InputOptions* in) {
  cmd->add_option("--input", in->path, "input CSV file")->required();
  cmd->add_option("--delimiter", in->delimiter, "field delimiter (default ',')");
  cmd->add_option("--id-col", in->id_column, "id column name");
  cmd->add_option("--weight-col", in->weight_column, "sampling weight column name");
  cmd->add_option("--seq-prefix", in->seq_prefix, "prefix shared by the sequence columns");
  cmd->add_option("--seq-cols", in->seq_columns, "explicit sequence column names")
      ->delimiter(',');
  cmd->add_option("--covariates", in->covariate_columns, "covariate column names to parse")
      ->delimiter(',');
  cmd->add_option("--time-first", in->time_first, "first time point kept (0-based)");
  cmd->add_option("--time-last", in->time_last, "last time point kept (0-based)");
}

void add_control_options(CLI::App* cmd, ControlOptions* ctl, bool seed_required) {
  auto* seed = cmd->add_option("--seed", ctl->seed, "random seed");
  if (seed_required) seed->required();
  cmd->add_option("--tol", ctl->tol, "Aitken convergence tolerance");
  cmd->add_option("--max-iter", ctl->max_iter, "maximum ECM iterations");
  cmd->add_option("--tau0-init", ctl->tau0_init, "initial noise proportion");
  cmd->add_option("--lambda-max", ctl->lambda_max, "precision ceiling");
  cmd->add_option("--ridge", ctl->ridge, "MLR ridge term");
  cmd->add_option("--mlr-max-iter", ctl->mlr_max_iter, "inner MLR iterations per CM-step");
  cmd->add_option("--threads", ctl->threads, "worker pool size");
}

SequenceDataset load_dataset(const InputOptions& in) {
  CsvSchema schema;
  schema.id_column = in.id_column;
  schema.weight_column = in.weight_column;
  schema.sequence_prefix = in.seq_prefix;
  schema.sequence_columns = in.seq_columns;
  schema.covariate_columns = in.covariate_columns;
  if (in.delimiter.size() != 1) throw input_error("delimiter must be a single character");
  schema.delimiter = in.delimiter[0];
  SequenceDataset ds = parse_csv(in.path, schema);
  if (in.time_first >= 0 || in.time_last >= 0) {
    const int first = in.time_first >= 0 ? in.time_first : 0;
    const int last = in.time_last >= 0 ? in.time_last : ds.length() - 1;
    ds = trim_time_range(ds, first, last);
  }
  return ds;
}

Control to_control(const ControlOptions& ctl) {
  Control out;
  out.seed = ctl.seed;
  out.tol = ctl.tol;
  out.max_iter = ctl.max_iter;
  out.tau0_init = ctl.tau0_init;
  out.lambda_max = ctl.lambda_max;
  out.ridge = ctl.ridge;
  out.mlr_max_iter = ctl.mlr_max_iter;
  out.threads = ctl.threads;
  return out;
}

std::vector<std::string> group_names(const SequenceDataset& ds) {
  std::vector<std::string> names;
  for (const auto& g : ds.covariate_groups()) names.push_back(g.name);
  return names;
}

void write_fit_artifacts(const FittedModel& model, const SequenceDataset& ds, const fs::path& out) {
  write_model_json(model, (out / "model.json").string());
  write_z_csv(model, ds.ids(), (out / "z.csv").string());
  if (model.spec.gating.mode == GatingMode::covariate) {
    write_gating_csv(model, (out / "gating.csv").string());
  }
}

void report_fit(const FittedModel& model) {
  std::cout << "model " << to_string(model.spec.type) << " G=" << model.spec.G
            << "  loglik=" << format_real(model.loglik) << "  k=" << model.n_params
            << "  bic=" << format_real(model.bic) << "\n"
            << "iterations=" << model.iterations << " converged=" << (model.converged ? "yes" : "no");
  if (model.spec.G >= 2) {
    std::cout << "  wDBS=" << format_real(model.wdbs) << "  wASW=" << format_real(model.wasw);
  }
  std::cout << "\n";
}

int cmd_summarize(const InputOptions& in, const std::string& out_dir, bool export_distances) {
  const auto ds = load_dataset(in);
  const fs::path out = fs::path(out_dir) / "summary";
  fs::create_directories(out);

  std::vector<std::string> time_labels(static_cast<std::size_t>(ds.length()));
  for (int t = 0; t < ds.length(); ++t) time_labels[static_cast<std::size_t>(t)] = std::to_string(t + 1);

  write_table_csv((out / "state_distribution.csv").string(), ds.alphabet().labels(),
                  state_distribution(ds), "time", time_labels);
  write_table_csv((out / "entropy.csv").string(), {"entropy"}, transversal_entropy(ds), "time",
                  time_labels);
  {
    // the set of states actually observed at each time point can be smaller
    // than the alphabet; report it rather than restricting the alphabet
    std::ofstream obs(out / "observed_states.csv");
    obs << "time,v_t,states\n";
    for (int t = 0; t < ds.length(); ++t) {
      obs << t + 1 << ',' << ds.observed_states(t).size() << ',';
      bool first = true;
      for (std::uint8_t s : ds.observed_states(t)) {
        if (!first) obs << '+';
        obs << ds.alphabet().label(s);
        first = false;
      }
      obs << "\n";
    }
  }

  const auto [agg, map] = aggregate_duplicates(ds, false);
  {
    std::ofstream dup(out / "duplicates.csv");
    dup << "group,size,weight,first_id,pattern\n";
    std::vector<int> counts(static_cast<std::size_t>(agg.rows()), 0);
    for (int i = 0; i < ds.rows(); ++i) counts[static_cast<std::size_t>(map.unique_of[i])]++;
    for (int u = 0; u < agg.rows(); ++u) {
      dup << u + 1 << ',' << counts[static_cast<std::size_t>(u)] << ','
          << format_real(agg.weights()[u]) << ',' << agg.ids()[static_cast<std::size_t>(u)] << ','
          << sps_encode(agg.row(u), agg.alphabet()) << "\n";
    }
  }
  {
    std::ofstream ws(out / "weights.csv");
    ws << "n,T,v,unique_rows,raw_sum,normalised_sum,min,max\n";
    ws << ds.rows() << ',' << ds.length() << ',' << ds.v() << ',' << agg.rows() << ','
       << format_real(ds.raw_weights().sum()) << ',' << format_real(ds.weights().sum()) << ','
       << format_real(ds.weights().minCoeff()) << ',' << format_real(ds.weights().maxCoeff())
       << "\n";
  }
  if (export_distances) {
    const Eigen::MatrixXi D = pairwise_matrix(ds);
    std::ofstream dist(fs::path(out_dir) / "distances.csv");
    dist << "id";
    for (int j = 0; j < ds.rows(); ++j) dist << ',' << ds.ids()[static_cast<std::size_t>(j)];
    dist << "\n";
    for (int i = 0; i < ds.rows(); ++i) {
      dist << ds.ids()[static_cast<std::size_t>(i)];
      for (int j = 0; j < ds.rows(); ++j) dist << ',' << D(i, j);
      dist << "\n";
    }
  }
  std::cout << "summary written to " << (fs::path(out_dir) / "summary").string() << "\n";
  return kExitOk;
}

int cmd_fit(const InputOptions& in, const ControlOptions& ctl, const std::string& type_name, int G,
            const std::string& gating_name, const std::vector<std::string>& gating_covariates,
            const std::string& noise_gating, const std::string& out_dir) {
  const auto ds = load_dataset(in);
  ModelSpec spec;
  spec.type = model_type_from_string(type_name);
  spec.G = G;
  spec.gating.mode = gating_mode_from_string(gating_name);
  spec.gating.covariates = gating_covariates;
  if (spec.gating.mode == GatingMode::covariate && spec.gating.covariates.empty()) {
    spec.gating.covariates = group_names(ds);
  }
  spec.gating.noise = noise_gating.empty()
                          ? (has_noise(spec.type) && spec.gating.mode == GatingMode::covariate
                                 ? NoiseGating::nongated
                                 : NoiseGating::none)
                          : noise_gating_from_string(noise_gating);
  spec.control = to_control(ctl);

  const auto model = fit(ds, spec);
  fs::create_directories(out_dir);
  write_fit_artifacts(model, ds, out_dir);
  report_fit(model);
  return model.converged ? kExitOk : kExitNonConvergence;
}

int cmd_select(const InputOptions& in, const ControlOptions& ctl,
               const std::vector<std::string>& type_names, int g_min, int g_max,
               const std::string& gating_name, const std::vector<std::string>& gating_covariates,
               const std::string& noise_gating, const std::string& stepwise_direction,
               std::vector<std::string> stepwise_covariates, const std::string& out_dir) {
  const auto ds = load_dataset(in);
  fs::create_directories(out_dir);

  std::vector<ModelType> types;
  if (type_names.empty() || (type_names.size() == 1 && type_names[0] == "all")) {
    types = all_model_types();
  } else {
    for (const auto& name : type_names) types.push_back(model_type_from_string(name));
  }
  if (g_min < 1 || g_max < g_min) throw input_error("invalid G range");
  std::vector<int> g_values;
  for (int g = g_min; g <= g_max; ++g) g_values.push_back(g);

  if (stepwise_covariates.empty()) stepwise_covariates = group_names(ds);

  GatingConfig gating;
  gating.mode = gating_mode_from_string(gating_name);
  gating.covariates = gating_covariates;
  if (gating.mode == GatingMode::covariate && gating.covariates.empty()) {
    gating.covariates = group_names(ds);
  }
  gating.noise = noise_gating.empty() ? NoiseGating::none : noise_gating_from_string(noise_gating);

  // The stepwise start point fixes the gating of the grid stage: forward
  // searches start from the best model with no covariates, backward from the
  // best with every candidate covariate included.
  if (stepwise_direction == "forward") {
    gating.mode = GatingMode::free_proportions;
    gating.covariates.clear();
    gating.noise = NoiseGating::none;
  } else if (stepwise_direction == "backward") {
    gating.mode = GatingMode::covariate;
    gating.covariates = stepwise_covariates;
    if (gating.noise == NoiseGating::none) gating.noise = NoiseGating::nongated;
  } else if (!stepwise_direction.empty() && stepwise_direction != "none") {
    throw input_error("stepwise direction must be forward, backward or none");
  }

  const auto grid = grid_search(ds, types, g_values, gating, to_control(ctl), ctl.threads);
  write_grid_csv(grid, (fs::path(out_dir) / "grid.csv").string());
  if (!grid.best.has_value()) {
    std::cout << "no admissible model could be fitted; see grid.csv\n";
    return kExitNonConvergence;
  }
  std::cout << "grid best: ";
  report_fit(*grid.best);

  FittedModel final_model = *grid.best;
  if (stepwise_direction == "forward" || stepwise_direction == "backward") {
    const auto direction = stepwise_direction == "forward" ? StepDirection::forward
                                                           : StepDirection::backward;
    const auto trace = stepwise(ds, direction, stepwise_covariates, *grid.best, ctl.threads);
    write_stepwise_csv(trace, (fs::path(out_dir) / "stepwise.csv").string());
    if (trace.final_model.has_value()) final_model = *trace.final_model;
    std::cout << "stepwise final: ";
    report_fit(final_model);
  }

  write_fit_artifacts(final_model, ds, out_dir);
  return final_model.converged ? kExitOk : kExitNonConvergence;
}

int cmd_bootstrap(const InputOptions& in, const ControlOptions& ctl, const std::string& model_path,
                  const std::string& z_path, int B, const std::string& out_dir) {
  const auto ds = load_dataset(in);
  if (!fs::exists(model_path)) throw input_error("model file '" + model_path + "' not found");
  FittedModel model = read_model_json(model_path);
  const std::string z_file =
      z_path.empty() ? (fs::path(model_path).parent_path() / "z.csv").string() : z_path;
  if (!fs::exists(z_file)) throw input_error("responsibility file '" + z_file + "' not found");
  const auto z = read_z_csv(z_file);
  if (z.Z.rows() != ds.rows()) throw input_error("z.csv rows do not match the input data");
  model.Z = z.Z;
  model.map_labels = z.map_labels;
  model.spec.control.threads = ctl.threads;

  const auto boot = wlbs_se(model, ds, B, ctl.seed, ctl.threads);
  fs::create_directories(out_dir);
  write_se_csv(model, boot, (fs::path(out_dir) / "se.csv").string());
  std::cout << "bootstrap replicates: " << boot.replicates << "  converged: " << boot.draws.size()
            << "  dropped: " << boot.failed.size() << "\n"
            << "standard errors are approximate under stratified sampling designs\n";
  return kExitOk;
}

}  // namespace

namespace {

// Expands `--config FILE` (plain key=value lines, '#' comments) into ordinary
// flags inserted right after the subcommand, so explicit flags override the
// file via the take-last policy.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  for (std::size_t i = 1; i < args.size(); ++i) {
    std::string file;
    std::size_t erase_count = 0;
    if (args[i] == "--config" && i + 1 < args.size()) {
      file = args[i + 1];
      erase_count = 2;
    } else if (args[i].rfind("--config=", 0) == 0) {
      file = args[i].substr(9);
      erase_count = 1;
    }
    if (erase_count == 0) continue;

    std::ifstream in(file);
    if (!in) throw input_error("cannot open config file '" + file + "'");
    std::vector<std::string> expanded;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw input_error("config line is not key=value: " + line);
      const std::string key = line.substr(0, eq);
      const std::string value = line.substr(eq + 1);
      if (value == "true" || value == "yes") {
        expanded.push_back("--" + key);
      } else {
        expanded.push_back("--" + key);
        expanded.push_back(value);
      }
    }
    args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
               args.begin() + static_cast<std::ptrdiff_t>(i + erase_count));
    // insert after the subcommand token so the config belongs to it
    args.insert(args.begin() + 2, expanded.begin(), expanded.end());
    break;
  }
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"clustering of categorical sequences with exponential-distance mixture models"};
  app.require_subcommand(1);
  app.footer("Every subcommand also accepts --config FILE with key=value lines mirroring the "
             "long flag names; explicit flags override the file.");

  InputOptions in;
  ControlOptions ctl;
  std::string out_dir = ".";
  bool export_distances = false;

  auto* sum = app.add_subcommand("summarize", "state distributions, entropies and weight summary");
  sum->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  add_input_options(sum, &in);
  sum->add_option("--out", out_dir, "output directory");
  sum->add_flag("--distances", export_distances, "also export the pairwise Hamming matrix");

  std::string type_name = "CC", gating_name = "free", noise_gating;
  std::vector<std::string> gating_covariates;
  int G = 1;
  auto* fit_cmd = app.add_subcommand("fit", "fit one model specification");
  fit_cmd->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  add_input_options(fit_cmd, &in);
  add_control_options(fit_cmd, &ctl, true);
  fit_cmd->add_option("--type", type_name, "model type (CC UC CU UU CCN UCN CUN UUN)");
  fit_cmd->add_option("--G", G, "number of components, noise included")->required();
  fit_cmd->add_option("--gating", gating_name, "equal | free | covariate");
  fit_cmd->add_option("--gating-covariates", gating_covariates,
                      "covariates in the gating network (default: all parsed)")
      ->delimiter(',');
  fit_cmd->add_option("--noise-gating", noise_gating, "GN | NGN (noise model types only)");
  fit_cmd->add_option("--out", out_dir, "output directory");

  std::vector<std::string> type_names;
  int g_min = 1, g_max = 6;
  std::string stepwise_direction = "none";
  std::vector<std::string> stepwise_covariates;
  auto* sel = app.add_subcommand("select", "grid search and stepwise covariate/component search");
  sel->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  add_input_options(sel, &in);
  add_control_options(sel, &ctl, true);
  sel->add_option("--types", type_names, "model types, or 'all'")->delimiter(',');
  sel->add_option("--g-min", g_min, "smallest G");
  sel->add_option("--g-max", g_max, "largest G");
  sel->add_option("--gating", gating_name, "gating for the grid stage");
  sel->add_option("--gating-covariates", gating_covariates, "gating covariates for the grid stage")
      ->delimiter(',');
  sel->add_option("--noise-gating", noise_gating, "GN | NGN for noise types with covariates");
  sel->add_option("--stepwise", stepwise_direction, "forward | backward | none");
  sel->add_option("--stepwise-covariates", stepwise_covariates,
                  "candidate covariates (default: all parsed)")
      ->delimiter(',');
  sel->add_option("--out", out_dir, "output directory");

  std::string model_path, z_path;
  int B = 100;
  auto* boot = app.add_subcommand("bootstrap", "weighted likelihood bootstrap standard errors");
  boot->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  add_input_options(boot, &in);
  add_control_options(boot, &ctl, true);
  boot->add_option("--model", model_path, "fitted model.json")->required();
  boot->add_option("--z", z_path, "z.csv of the fitted model (default: next to model.json)");
  boot->add_option("-B,--replicates", B, "bootstrap replicates");
  boot->add_option("--out", out_dir, "output directory");

  std::vector<std::string> args;
  try {
    args = expand_config(argc, argv);
  } catch (const input_error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  }
  try {
    std::vector<const char*> argv2;
    for (const auto& a : args) argv2.push_back(a.c_str());
    app.parse(static_cast<int>(argv2.size()), argv2.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (sum->parsed()) return cmd_summarize(in, out_dir, export_distances);
    if (fit_cmd->parsed()) {
      return cmd_fit(in, ctl, type_name, G, gating_name, gating_covariates, noise_gating, out_dir);
    }
    if (sel->parsed()) {
      return cmd_select(in, ctl, type_names, g_min, g_max, gating_name, gating_covariates,
                        noise_gating, stepwise_direction, stepwise_covariates, out_dir);
    }
    if (boot->parsed()) return cmd_bootstrap(in, ctl, model_path, z_path, B, out_dir);
  } catch (const input_error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const estimation_error& e) {
    std::cerr << "estimation failed: " << e.what() << "\n";
    return kExitNonConvergence;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}
