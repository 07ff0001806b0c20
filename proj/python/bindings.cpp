#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "seqmix/distance.hpp"
#include "seqmix/ecm.hpp"
#include "seqmix/errors.hpp"
#include "seqmix/selection.hpp"
#include "seqmix/serialize.hpp"
#include "seqmix/wlbs.hpp"

namespace py = pybind11;
using namespace seqmix;

namespace {

ModelSpec build_spec(const std::string& type, int G, const std::string& gating,
                     const std::vector<std::string>& covariates, const std::string& noise_gating,
                     std::uint64_t seed, double tol, int max_iter, double tau0_init,
                     double lambda_max, int threads) {
  ModelSpec spec;
  spec.type = model_type_from_string(type);
  spec.G = G;
  spec.gating.mode = gating_mode_from_string(gating);
  spec.gating.covariates = covariates;
  spec.gating.noise = noise_gating.empty()
                          ? (has_noise(spec.type) && spec.gating.mode == GatingMode::covariate
                                 ? NoiseGating::nongated
                                 : NoiseGating::none)
                          : noise_gating_from_string(noise_gating);
  spec.control.seed = seed;
  spec.control.tol = tol;
  spec.control.max_iter = max_iter;
  spec.control.tau0_init = tau0_init;
  spec.control.lambda_max = lambda_max;
  spec.control.threads = threads;
  return spec;
}

std::vector<std::vector<std::string>> theta_labels(const FittedModel& m) {
  std::vector<std::vector<std::string>> out;
  for (const auto& theta : m.components.thetas) {
    std::vector<std::string> row;
    for (std::uint8_t s : theta) row.push_back(m.alphabet.label(s));
    out.push_back(std::move(row));
  }
  return out;
}

Eigen::MatrixXd lambda_matrix(const FittedModel& m) {
  const auto& p = m.components.precision;
  const int gnn = m.spec.non_noise();
  Eigen::MatrixXd out(gnn, m.T);
  for (int g = 0; g < gnn; ++g)
    for (int t = 0; t < m.T; ++t) out(g, t) = p(g, t);
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Clustering of categorical sequences with exponential-distance mixture models";

  py::register_exception<input_error>(m, "InputError", PyExc_ValueError);
  py::register_exception<estimation_error>(m, "EstimationError", PyExc_RuntimeError);

  py::class_<SequenceDataset>(m, "Dataset")
      .def(py::init([](const std::vector<std::vector<std::string>>& rows,
                       std::vector<double> weights,
                       const std::vector<std::pair<std::string, std::vector<double>>>& covariates) {
             return dataset_from_labels(rows, std::move(weights), covariates);
           }),
           py::arg("rows"), py::arg("weights") = std::vector<double>{},
           py::arg("covariates") = std::vector<std::pair<std::string, std::vector<double>>>{})
      .def_property_readonly("n", &SequenceDataset::rows)
      .def_property_readonly("T", &SequenceDataset::length)
      .def_property_readonly("v", &SequenceDataset::v)
      .def_property_readonly("labels",
                             [](const SequenceDataset& ds) { return ds.alphabet().labels(); })
      .def_property_readonly("weights", [](const SequenceDataset& ds) { return ds.weights(); })
      .def_property_readonly("covariate_names", &SequenceDataset::covariate_names)
      .def("row", [](const SequenceDataset& ds, int i) {
        if (i < 0 || i >= ds.rows()) throw input_error("row out of range");
        std::vector<std::string> out;
        for (std::uint8_t s : ds.row(i)) out.push_back(ds.alphabet().label(s));
        return out;
      })
      .def("state_distribution", [](const SequenceDataset& ds) { return state_distribution(ds); })
      .def("transversal_entropy",
           [](const SequenceDataset& ds) { return transversal_entropy(ds); })
      .def("pairwise_hamming", [](const SequenceDataset& ds) { return pairwise_matrix(ds); })
      .def("trim", [](const SequenceDataset& ds, int first, int last) {
        return trim_time_range(ds, first, last);
      })
      .def("aggregate", [](const SequenceDataset& ds, bool include_covariates) {
        auto [agg, map] = aggregate_duplicates(ds, include_covariates);
        return py::make_tuple(agg, map.unique_of);
      }, py::arg("include_covariates") = false)
      .def("__len__", &SequenceDataset::rows);

  m.def("read_csv",
        [](const std::string& path, const std::string& seq_prefix,
           const std::vector<std::string>& seq_columns, const std::string& id_column,
           const std::string& weight_column, const std::vector<std::string>& covariate_columns,
           const std::string& delimiter) {
          CsvSchema schema;
          schema.sequence_prefix = seq_prefix;
          schema.sequence_columns = seq_columns;
          schema.id_column = id_column;
          schema.weight_column = weight_column;
          schema.covariate_columns = covariate_columns;
          if (delimiter.size() != 1) throw input_error("delimiter must be a single character");
          schema.delimiter = delimiter[0];
          return parse_csv(path, schema);
        },
        py::arg("path"), py::arg("seq_prefix") = "", py::arg("seq_columns") = std::vector<std::string>{},
        py::arg("id_column") = "", py::arg("weight_column") = "",
        py::arg("covariate_columns") = std::vector<std::string>{}, py::arg("delimiter") = ",");

  py::class_<FittedModel>(m, "FittedModel")
      .def_property_readonly("type", [](const FittedModel& f) { return to_string(f.spec.type); })
      .def_property_readonly("G", [](const FittedModel& f) { return f.spec.G; })
      .def_property_readonly("z", [](const FittedModel& f) { return f.Z; })
      .def_property_readonly("map_labels", [](const FittedModel& f) { return f.map_labels; })
      .def_property_readonly("theta", &theta_labels)
      .def_property_readonly("sps", [](const FittedModel& f) { return f.sps_labels; })
      .def_property_readonly("lambda_", &lambda_matrix)
      .def_property_readonly("tau", [](const FittedModel& f) { return f.gating.tau; })
      .def_property_readonly("tau0", [](const FittedModel& f) { return f.gating.tau0; })
      .def_property_readonly("beta", [](const FittedModel& f) { return f.gating.beta; })
      .def_property_readonly("coef_names",
                             [](const FittedModel& f) { return f.gating.coef_names; })
      .def_property_readonly("loglik", [](const FittedModel& f) { return f.loglik; })
      .def_property_readonly("loglik_trace", [](const FittedModel& f) { return f.loglik_trace; })
      .def_property_readonly("n_params", [](const FittedModel& f) { return f.n_params; })
      .def_property_readonly("bic", [](const FittedModel& f) { return f.bic; })
      .def_property_readonly("wdbs", [](const FittedModel& f) { return f.wdbs; })
      .def_property_readonly("wasw", [](const FittedModel& f) { return f.wasw; })
      .def_property_readonly("iterations", [](const FittedModel& f) { return f.iterations; })
      .def_property_readonly("converged", [](const FittedModel& f) { return f.converged; })
      .def("to_json", &model_to_json);

  m.def(
      "fit",
      [](const SequenceDataset& ds, const std::string& type, int G, const std::string& gating,
         const std::vector<std::string>& covariates, const std::string& noise_gating,
         std::uint64_t seed, double tol, int max_iter, double tau0_init, double lambda_max,
         int threads) {
        return fit(ds, build_spec(type, G, gating, covariates, noise_gating, seed, tol, max_iter,
                                  tau0_init, lambda_max, threads));
      },
      py::arg("dataset"), py::arg("type") = "CC", py::arg("G") = 1, py::arg("gating") = "free",
      py::arg("covariates") = std::vector<std::string>{}, py::arg("noise_gating") = "",
      py::arg("seed") = 0, py::arg("tol") = 1e-8, py::arg("max_iter") = 1000,
      py::arg("tau0_init") = 0.05, py::arg("lambda_max") = 1e3, py::arg("threads") = 1);

  m.def(
      "grid_search",
      [](const SequenceDataset& ds, const std::vector<std::string>& types,
         const std::vector<int>& g_values, const std::string& gating,
         const std::vector<std::string>& covariates, const std::string& noise_gating,
         std::uint64_t seed, int threads) {
        std::vector<ModelType> ts;
        if (types.empty()) {
          ts = all_model_types();
        } else {
          for (const auto& t : types) ts.push_back(model_type_from_string(t));
        }
        GatingConfig gating_cfg;
        gating_cfg.mode = gating_mode_from_string(gating);
        gating_cfg.covariates = covariates;
        gating_cfg.noise =
            noise_gating.empty() ? NoiseGating::none : noise_gating_from_string(noise_gating);
        Control control;
        control.seed = seed;
        const auto grid = grid_search(ds, ts, g_values, gating_cfg, control, threads);
        py::list table;
        for (const auto& e : grid.table) {
          py::dict row;
          row["type"] = to_string(e.spec.type);
          row["G"] = e.spec.G;
          row["ok"] = e.ok;
          row["bic"] = e.bic_value;
          row["loglik"] = e.loglik;
          row["k"] = e.n_params;
          row["error"] = e.error;
          table.append(std::move(row));
        }
        return py::make_tuple(table, grid.best ? py::cast(*grid.best) : py::none());
      },
      py::arg("dataset"), py::arg("types") = std::vector<std::string>{},
      py::arg("g_values") = std::vector<int>{1, 2, 3}, py::arg("gating") = "free",
      py::arg("covariates") = std::vector<std::string>{}, py::arg("noise_gating") = "",
      py::arg("seed") = 0, py::arg("threads") = 1);

  m.def("dbs", &dbs, py::arg("z"), py::arg("eps") = 1e-100);
  m.def("wdbs", &wdbs, py::arg("z"), py::arg("weights"), py::arg("eps") = 1e-100);
  m.def("wasw", &wasw, py::arg("distances"), py::arg("labels"), py::arg("weights"));

  m.def(
      "wlbs_se",
      [](const FittedModel& model, const SequenceDataset& ds, int B, std::uint64_t seed,
         int threads) {
        const auto boot = wlbs_se(model, ds, B, seed, threads);
        py::dict out;
        out["se"] = boot.se;
        out["replicates"] = boot.replicates;
        out["failed"] = boot.failed;
        return out;
      },
      py::arg("model"), py::arg("dataset"), py::arg("B") = 100, py::arg("seed") = 0,
      py::arg("threads") = 1);

  m.def(
      "two_step_regress",
      [](const FittedModel& model, const SequenceDataset& ds,
         const std::vector<std::string>& covariates, const std::string& kind) {
        const auto table = two_step_regress(
            model, ds, covariates, kind == "map" ? ResponseKind::map : ResponseKind::soft);
        py::dict out;
        out["coef_names"] = table.coef_names;
        out["class_names"] = table.class_names;
        out["beta"] = table.beta;
        return out;
      },
      py::arg("model"), py::arg("dataset"), py::arg("covariates"), py::arg("kind") = "soft");
}
