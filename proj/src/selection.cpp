#include "seqmix/selection.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <thread>

#include "seqmix/errors.hpp"

namespace seqmix {

namespace {

void run_jobs(int count, int threads, const std::function<void(int)>& job) {
  threads = std::max(1, std::min(threads, count));
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) job(i);
    });
  }
  for (auto& th : pool) th.join();
}

int type_order(ModelType t) {
  const auto all = all_model_types();
  return static_cast<int>(std::find(all.begin(), all.end(), t) - all.begin());
}

// BIC descending; ties go to fewer parameters, then smaller G, then type order.
bool better_fit(double bic_a, int k_a, const ModelSpec& a, double bic_b, int k_b,
                const ModelSpec& b) {
  if (bic_a != bic_b) return bic_a > bic_b;
  if (k_a != k_b) return k_a < k_b;
  if (a.G != b.G) return a.G < b.G;
  return type_order(a.type) < type_order(b.type);
}

}  // namespace

int count_params(const ModelSpec& spec, const SequenceDataset& ds) {
  const int T = ds.length();
  const int G = spec.G;
  const int gnn = spec.non_noise();

  int sum_vt = 0;
  for (int t = 0; t < T; ++t) {
    sum_vt += static_cast<int>(ds.observed_states(t).size()) - 1;
  }
  const int central = gnn * sum_vt;

  int precision = 0;
  switch (PrecisionStructure::zeros(spec.type, std::max(gnn, 1), T).kind) {
    case PrecisionStructure::Kind::scalar: precision = gnn >= 1 ? 1 : 0; break;
    case PrecisionStructure::Kind::per_cluster: precision = gnn; break;
    case PrecisionStructure::Kind::per_time: precision = gnn >= 1 ? T : 0; break;
    case PrecisionStructure::Kind::per_cluster_time: precision = gnn * T; break;
  }

  int gating = 0;
  switch (spec.gating.mode) {
    case GatingMode::covariate: {
      const int r = static_cast<int>(ds.design_for(spec.gating.covariates).cols());
      if (has_noise(spec.type) && spec.gating.noise == NoiseGating::nongated) {
        gating = (r + 1) * (G - 2) + 1;
      } else {
        gating = (r + 1) * (G - 1);
      }
      break;
    }
    case GatingMode::free_proportions: gating = G - 1; break;
    case GatingMode::equal_shares: gating = (has_noise(spec.type) && G > 1) ? 1 : 0; break;
  }
  return central + precision + gating;
}

double bic(double loglik, int k, double n) { return 2.0 * loglik - k * std::log(n); }

Eigen::VectorXd dbs(const Eigen::MatrixXd& Z, double eps) {
  const int n = static_cast<int>(Z.rows());
  const int G = static_cast<int>(Z.cols());
  if (G < 2) throw input_error("the density-based silhouette is not defined for G=1");

  Eigen::VectorXd ratio = Eigen::VectorXd::Zero(n);
  std::vector<char> crisp(static_cast<std::size_t>(n), 0);
  double denom = 0.0;
  for (int i = 0; i < n; ++i) {
    int top = 0;
    for (int g = 1; g < G; ++g) {
      if (Z(i, g) > Z(i, top)) top = g;
    }
    double runner = -1.0;
    for (int g = 0; g < G; ++g) {
      if (g != top && Z(i, g) > runner) runner = Z(i, g);
    }
    if (runner < eps) {
      crisp[static_cast<std::size_t>(i)] = 1;
      continue;
    }
    ratio[i] = std::log(Z(i, top)) - std::log(runner);
    denom = std::max(denom, ratio[i]);
  }

  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) {
    if (crisp[static_cast<std::size_t>(i)]) {
      out[i] = 1.0;
    } else {
      out[i] = denom > 0.0 ? ratio[i] / denom : 0.0;
    }
  }
  return out;
}

double wdbs(const Eigen::MatrixXd& Z, const Eigen::VectorXd& w, double eps) {
  const Eigen::VectorXd values = dbs(Z, eps);
  return values.dot(w) / w.sum();
}

double wasw(const Eigen::MatrixXi& D, const std::vector<int>& labels, const Eigen::VectorXd& w) {
  const int n = static_cast<int>(labels.size());
  if (D.rows() != n) throw input_error("wasw: distance matrix does not match labels");
  const int G = *std::max_element(labels.begin(), labels.end()) + 1;

  Eigen::VectorXd cluster_w = Eigen::VectorXd::Zero(G);
  for (int i = 0; i < n; ++i) cluster_w[labels[static_cast<std::size_t>(i)]] += w[i];
  if ((cluster_w.array() > 0.0).count() < 2) {
    throw input_error("wasw needs at least 2 non-empty clusters");
  }

  double acc = 0.0;
  Eigen::VectorXd dist_sum(G);
  for (int i = 0; i < n; ++i) {
    dist_sum.setZero();
    for (int j = 0; j < n; ++j) {
      dist_sum[labels[static_cast<std::size_t>(j)]] += w[j] * D(i, j);
    }
    const int own = labels[static_cast<std::size_t>(i)];
    const double own_w = cluster_w[own] - w[i];
    double s = 0.0;
    if (own_w > 0.0) {
      const double a = dist_sum[own] / own_w;
      double b = std::numeric_limits<double>::infinity();
      for (int c = 0; c < G; ++c) {
        if (c == own || cluster_w[c] <= 0.0) continue;
        b = std::min(b, dist_sum[c] / cluster_w[c]);
      }
      if (std::isfinite(b) && (a > 0.0 || b > 0.0)) {
        s = (b - a) / std::max(a, b);
      }
    }
    acc += w[i] * s;
  }
  return acc / w.sum();
}

namespace {

// Aligns the requested gating with a concrete model type: GN/NGN only exist
// for noise types under covariate gating, and a noise type with covariates
// defaults to NGN when the caller leaves the setting open.
GatingConfig adjust_gating(const GatingConfig& gating, ModelType type) {
  GatingConfig out = gating;
  if (gating.mode != GatingMode::covariate || !has_noise(type)) {
    out.noise = NoiseGating::none;
  } else if (out.noise == NoiseGating::none) {
    out.noise = NoiseGating::nongated;
  }
  return out;
}

}  // namespace

GridResult grid_search(const SequenceDataset& ds, const std::vector<ModelType>& types,
                       const std::vector<int>& g_values, const GatingConfig& gating,
                       const Control& control, int threads) {
  std::vector<ModelSpec> specs;
  for (ModelType type : types) {
    for (int G : g_values) {
      ModelSpec spec;
      spec.type = type;
      spec.G = G;
      spec.gating = adjust_gating(gating, type);
      spec.control = control;
      try {
        validate_spec(spec, ds);
      } catch (const input_error&) {
        continue;  // inadmissible combination
      }
      specs.push_back(spec);
    }
  }

  const int count = static_cast<int>(specs.size());
  std::vector<GridEntry> entries(static_cast<std::size_t>(count));
  std::vector<std::optional<FittedModel>> models(static_cast<std::size_t>(count));
  run_jobs(count, threads, [&](int i) {
    GridEntry& entry = entries[static_cast<std::size_t>(i)];
    entry.spec = specs[static_cast<std::size_t>(i)];
    try {
      FittedModel model = fit(ds, entry.spec);
      entry.ok = true;
      entry.loglik = model.loglik;
      entry.n_params = model.n_params;
      entry.bic_value = model.bic;
      entry.wdbs_value = model.wdbs;
      entry.wasw_value = model.wasw;
      entry.iterations = model.iterations;
      entry.converged = model.converged;
      models[static_cast<std::size_t>(i)] = std::move(model);
    } catch (const std::exception& e) {
      entry.ok = false;
      entry.error = e.what();
    }
  });

  GridResult out;
  out.table = std::move(entries);
  for (int i = 0; i < count; ++i) {
    const GridEntry& entry = out.table[static_cast<std::size_t>(i)];
    if (!entry.ok) continue;
    if (out.best_index < 0 ||
        better_fit(entry.bic_value, entry.n_params, entry.spec,
                   out.table[static_cast<std::size_t>(out.best_index)].bic_value,
                   out.table[static_cast<std::size_t>(out.best_index)].n_params,
                   out.table[static_cast<std::size_t>(out.best_index)].spec)) {
      out.best_index = i;
    }
  }
  if (out.best_index >= 0) out.best = std::move(models[static_cast<std::size_t>(out.best_index)]);
  return out;
}

namespace {

struct Action {
  std::string name;
  std::vector<std::string> covariates;
  int delta_components = 0;
};

}  // namespace

StepwiseTrace stepwise(const SequenceDataset& ds, StepDirection direction,
                       const std::vector<std::string>& candidate_covariates,
                       const FittedModel& start, int threads) {
  StepwiseTrace trace;
  trace.direction = direction;

  ModelSpec current_spec = start.spec;
  double current_bic = start.bic;
  FittedModel current_model = start;

  while (true) {
    const std::vector<std::string>& in_model = current_spec.gating.covariates;

    std::vector<Action> actions;
    for (const auto& cov : candidate_covariates) {
      if (std::find(in_model.begin(), in_model.end(), cov) == in_model.end()) {
        std::vector<std::string> next;
        for (const auto& c : candidate_covariates) {
          if (c == cov || std::find(in_model.begin(), in_model.end(), c) != in_model.end()) {
            next.push_back(c);
          }
        }
        actions.push_back({"Add '" + cov + "'", std::move(next), 0});
      }
    }
    for (const auto& cov : in_model) {
      std::vector<std::string> next;
      for (const auto& c : in_model) {
        if (c != cov) next.push_back(c);
      }
      actions.push_back({"Remove '" + cov + "'", std::move(next), 0});
    }
    actions.push_back({"Add component", in_model, +1});
    if (current_spec.G > 1) actions.push_back({"Remove component", in_model, -1});

    // Each action is evaluated across all model types (and both GN/NGN
    // settings for noise types with covariates); G counts all components.
    std::vector<std::pair<int, ModelSpec>> batch;  // (action index, spec)
    for (int a = 0; a < static_cast<int>(actions.size()); ++a) {
      const Action& action = actions[static_cast<std::size_t>(a)];
      const int G = current_spec.G + action.delta_components;
      if (G < 1) continue;
      for (ModelType type : all_model_types()) {
        std::vector<NoiseGating> settings;
        if (action.covariates.empty()) {
          settings = {NoiseGating::none};
        } else if (has_noise(type)) {
          settings = {NoiseGating::gated, NoiseGating::nongated};
        } else {
          settings = {NoiseGating::none};
        }
        for (NoiseGating setting : settings) {
          ModelSpec spec;
          spec.type = type;
          spec.G = G;
          spec.control = current_spec.control;
          spec.gating.covariates = action.covariates;
          spec.gating.mode =
              action.covariates.empty() ? GatingMode::free_proportions : GatingMode::covariate;
          spec.gating.noise = setting;
          try {
            validate_spec(spec, ds);
          } catch (const input_error&) {
            continue;
          }
          batch.emplace_back(a, spec);
        }
      }
    }

    const int count = static_cast<int>(batch.size());
    std::vector<StepwiseCandidate> fitted(static_cast<std::size_t>(count));
    std::vector<std::optional<FittedModel>> models(static_cast<std::size_t>(count));
    run_jobs(count, threads, [&](int i) {
      StepwiseCandidate& cand = fitted[static_cast<std::size_t>(i)];
      cand.spec = batch[static_cast<std::size_t>(i)].second;
      try {
        FittedModel model = fit(ds, cand.spec);
        cand.ok = true;
        cand.bic_value = model.bic;
        models[static_cast<std::size_t>(i)] = std::move(model);
      } catch (const std::exception& e) {
        cand.ok = false;
        cand.error = e.what();
      }
    });

    // Best candidate within each action, then the best action overall.
    int overall_best = -1;
    std::vector<int> action_best(actions.size(), -1);
    for (int i = 0; i < count; ++i) {
      if (!fitted[static_cast<std::size_t>(i)].ok) continue;
      const int a = batch[static_cast<std::size_t>(i)].first;
      int& slot = action_best[static_cast<std::size_t>(a)];
      if (slot < 0 ||
          better_fit(fitted[static_cast<std::size_t>(i)].bic_value,
                     models[static_cast<std::size_t>(i)]->n_params,
                     fitted[static_cast<std::size_t>(i)].spec,
                     fitted[static_cast<std::size_t>(slot)].bic_value,
                     models[static_cast<std::size_t>(slot)]->n_params,
                     fitted[static_cast<std::size_t>(slot)].spec)) {
        slot = i;
      }
    }
    for (int a = 0; a < static_cast<int>(actions.size()); ++a) {
      const int i = action_best[static_cast<std::size_t>(a)];
      if (i < 0) continue;
      if (overall_best < 0) {
        overall_best = a;
        continue;
      }
      const int j = action_best[static_cast<std::size_t>(overall_best)];
      const double bi = fitted[static_cast<std::size_t>(i)].bic_value;
      const double bj = fitted[static_cast<std::size_t>(j)].bic_value;
      if (bi > bj ||
          (bi == bj && (models[static_cast<std::size_t>(i)]->n_params <
                            models[static_cast<std::size_t>(j)]->n_params ||
                        (models[static_cast<std::size_t>(i)]->n_params ==
                             models[static_cast<std::size_t>(j)]->n_params &&
                         actions[static_cast<std::size_t>(a)].name <
                             actions[static_cast<std::size_t>(overall_best)].name)))) {
        overall_best = a;
      }
    }

    StepwiseStep step;
    for (int i = 0; i < count; ++i) step.candidates.push_back(fitted[static_cast<std::size_t>(i)]);
    if (overall_best >= 0) {
      const int i = action_best[static_cast<std::size_t>(overall_best)];
      step.best_bic = fitted[static_cast<std::size_t>(i)].bic_value;
      if (step.best_bic > current_bic) {
        step.action = actions[static_cast<std::size_t>(overall_best)].name;
        step.accepted = true;
        step.chosen = fitted[static_cast<std::size_t>(i)].spec;
        trace.steps.push_back(std::move(step));
        current_spec = fitted[static_cast<std::size_t>(i)].spec;
        current_bic = fitted[static_cast<std::size_t>(i)].bic_value;
        current_model = std::move(*models[static_cast<std::size_t>(i)]);
        continue;
      }
    }
    step.action = "Stop";
    step.accepted = false;
    step.best_bic = current_bic;
    step.chosen = current_spec;
    trace.steps.push_back(std::move(step));
    break;
  }

  trace.final_spec = current_spec;
  trace.final_bic = current_bic;
  trace.final_model = std::move(current_model);
  return trace;
}

}  // namespace seqmix
