#include "seqmix/ecm.hpp"

#include <algorithm>
#include <cmath>

#include "seqmix/distance.hpp"
#include "seqmix/errors.hpp"
#include "seqmix/selection.hpp"

namespace seqmix {

void validate_spec(const ModelSpec& spec, const SequenceDataset& ds) {
  const ModelType type = spec.type;
  const int G = spec.G;
  if (G < 1) throw input_error("G must be >= 1");
  if (G == 1 && !(type == ModelType::CC || type == ModelType::CU || type == ModelType::CCN)) {
    throw input_error("with G=1 only CC, CU and CCN can be fitted; " + to_string(type) +
                      " adds no structure beyond them for a single component");
  }
  if (G == 2 && (type == ModelType::UCN || type == ModelType::UUN)) {
    throw input_error(to_string(type) + " with G=2 has a single non-noise component and is "
                      "equivalent to " + (type == ModelType::UCN ? std::string("CCN") : "CUN") +
                      "; fit that model instead");
  }

  const auto& gating = spec.gating;
  if (gating.mode == GatingMode::covariate) {
    if (gating.covariates.empty()) {
      throw input_error("covariate gating requested without covariates");
    }
    for (const auto& name : gating.covariates) {
      const auto& groups = ds.covariate_groups();
      if (std::none_of(groups.begin(), groups.end(),
                       [&](const CovariateGroup& g) { return g.name == name; })) {
        throw input_error("unknown covariate '" + name + "'");
      }
    }
    if (has_noise(type)) {
      if (gating.noise == NoiseGating::none) {
        throw input_error("covariate gating with a noise component requires the GN or NGN setting");
      }
      if (gating.noise == NoiseGating::gated && G < 2) {
        throw input_error("GN gating requires G >= 2");
      }
      if (gating.noise == NoiseGating::nongated && spec.non_noise() < 2) {
        throw input_error("NGN gating requires at least 2 non-noise components");
      }
    } else {
      if (gating.noise != NoiseGating::none) {
        throw input_error("GN/NGN settings apply only to models with a noise component");
      }
      if (G < 2) throw input_error("covariate gating requires G >= 2");
    }
  } else if (gating.noise != NoiseGating::none) {
    throw input_error("GN/NGN settings apply only to covariate gating");
  }

  const auto& control = spec.control;
  if (!(control.tol > 0.0)) throw input_error("tol must be positive");
  if (control.max_iter < 1) throw input_error("max_iter must be >= 1");
  if (!(control.tau0_init > 0.0 && control.tau0_init < 1.0)) {
    throw input_error("tau0_init must lie in (0, 1)");
  }
  if (!(control.lambda_max > 0.0)) throw input_error("lambda_max must be positive");
}

EStepResult e_step(const SequenceDataset& ds, const ComponentParams& components,
                   const GatingParams& gating, const Eigen::MatrixXd& X, const ModelSpec& spec) {
  const int n = ds.rows();
  const int G = spec.G;
  const Eigen::MatrixXd L = component_loglik_matrix(ds, components, spec);
  const Eigen::MatrixXd tau = predict_tau(gating, X);

  EStepResult out;
  out.Z.resize(n, G);
  out.loglik = 0.0;
  Eigen::RowVectorXd logpost(G);
  for (int i = 0; i < n; ++i) {
    logpost = L.row(i) + tau.row(i).array().log().matrix();
    const double m = logpost.maxCoeff();
    if (!std::isfinite(m)) {
      throw estimation_error("non-finite density at row " + std::to_string(i + 1));
    }
    const double lse = m + std::log((logpost.array() - m).exp().sum());
    out.Z.row(i) = (logpost.array() - lse).exp();
    out.loglik += ds.weights()[i] * lse;
  }
  if (!std::isfinite(out.loglik)) throw estimation_error("non-finite pseudo log-likelihood");
  return out;
}

namespace {

// Masses below this floor are clamped so Lance-Williams denominators stay
// positive even with zero sampling weights.
constexpr double kMassFloor = 1e-12;

}  // namespace

std::vector<int> ward_labels(const Eigen::MatrixXi& D, const Eigen::VectorXd& w, int k) {
  const int n = static_cast<int>(D.rows());
  if (k < 1 || k > n) throw input_error("ward_labels: k out of range");

  Eigen::MatrixXd d2(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) d2(i, j) = static_cast<double>(D(i, j)) * D(i, j);

  std::vector<char> active(n, 1);
  std::vector<double> mass(n);
  std::vector<int> min_member(n);
  for (int i = 0; i < n; ++i) {
    mass[i] = std::max(w[i], kMassFloor);
    min_member[i] = i;
  }
  std::vector<int> parent(n);
  for (int i = 0; i < n; ++i) parent[i] = i;

  // Cached nearest active neighbour per row, repaired after each merge.
  std::vector<double> best_d(n);
  std::vector<int> best_j(n);
  auto rescan = [&](int i) {
    best_d[i] = std::numeric_limits<double>::infinity();
    best_j[i] = -1;
    for (int j = 0; j < n; ++j) {
      if (j == i || !active[j]) continue;
      if (d2(i, j) < best_d[i]) {
        best_d[i] = d2(i, j);
        best_j[i] = j;
      }
    }
  };
  for (int i = 0; i < n; ++i) rescan(i);

  for (int clusters = n; clusters > k; --clusters) {
    int a = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      if (active[i] && best_j[i] >= 0 && best_d[i] < best) {
        best = best_d[i];
        a = i;
      }
    }
    int b = best_j[a];
    if (b < a) std::swap(a, b);

    const double ma = mass[a], mb = mass[b], dab = d2(a, b);
    for (int j = 0; j < n; ++j) {
      if (!active[j] || j == a || j == b) continue;
      const double mj = mass[j];
      d2(a, j) = d2(j, a) =
          ((ma + mj) * d2(a, j) + (mb + mj) * d2(b, j) - mj * dab) / (ma + mb + mj);
    }
    active[b] = 0;
    mass[a] = ma + mb;
    min_member[a] = std::min(min_member[a], min_member[b]);
    parent[b] = a;

    rescan(a);
    for (int j = 0; j < n; ++j) {
      if (!active[j] || j == a) continue;
      if (best_j[j] == a || best_j[j] == b) {
        rescan(j);
      } else if (d2(j, a) < best_d[j]) {
        best_d[j] = d2(j, a);
        best_j[j] = a;
      }
    }
  }

  // Order surviving clusters by smallest member index.
  std::vector<int> roots;
  for (int i = 0; i < n; ++i)
    if (active[i]) roots.push_back(i);
  std::sort(roots.begin(), roots.end(),
            [&](int x, int y) { return min_member[x] < min_member[y]; });
  std::vector<int> cluster_of(n, -1);
  for (int c = 0; c < static_cast<int>(roots.size()); ++c) cluster_of[roots[c]] = c;

  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) {
    int r = i;
    while (parent[r] != r) r = parent[r];
    labels[i] = cluster_of[r];
  }
  return labels;
}

namespace {

struct NearestMedoids {
  double d1, d2;
  int m1, m2;  // positions in the medoid list
};

NearestMedoids nearest_medoids(const Eigen::MatrixXi& D, const std::vector<int>& medoids, int i) {
  NearestMedoids out{std::numeric_limits<double>::infinity(),
                     std::numeric_limits<double>::infinity(), -1, -1};
  for (int m = 0; m < static_cast<int>(medoids.size()); ++m) {
    const double d = D(i, medoids[m]);
    if (d < out.d1) {
      out.d2 = out.d1;
      out.m2 = out.m1;
      out.d1 = d;
      out.m1 = m;
    } else if (d < out.d2) {
      out.d2 = d;
      out.m2 = m;
    }
  }
  return out;
}

}  // namespace

std::vector<int> init_partition(const Eigen::MatrixXi& D, const Eigen::VectorXd& w, int k,
                                std::uint64_t seed) {
  (void)seed;  // the whole pipeline is deterministic; kept for interface stability
  const int n = static_cast<int>(D.rows());
  if (k < 1 || k > n) throw input_error("init_partition: k out of range");

  const std::vector<int> ward = ward_labels(D, w, k);

  // Medoid of each Ward cluster: the member minimising the weighted distance
  // sum within the cluster, ties to the lowest index.
  std::vector<int> medoids;
  for (int c = 0; c < k; ++c) {
    int best = -1;
    double best_cost = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      if (ward[j] != c) continue;
      double cost = 0.0;
      for (int i = 0; i < n; ++i) {
        if (ward[i] == c) cost += w[i] * D(i, j);
      }
      if (cost < best_cost) {
        best_cost = cost;
        best = j;
      }
    }
    medoids.push_back(best);
  }
  std::sort(medoids.begin(), medoids.end());

  std::vector<NearestMedoids> near(n);
  auto recompute = [&] {
    for (int i = 0; i < n; ++i) near[i] = nearest_medoids(D, medoids, i);
  };
  recompute();

  // PAM swap phase on the weighted objective sum_i w_i d(i, medoid(c(i))).
  std::vector<char> is_medoid(n, 0);
  while (true) {
    std::fill(is_medoid.begin(), is_medoid.end(), 0);
    for (int m : medoids) is_medoid[m] = 1;

    double best_delta = -1e-9;
    int best_m = -1, best_h = -1;
    for (int m = 0; m < k; ++m) {
      for (int h = 0; h < n; ++h) {
        if (is_medoid[h]) continue;
        double delta = 0.0;
        for (int i = 0; i < n; ++i) {
          const double dih = D(i, h);
          if (near[i].m1 == m) {
            delta += w[i] * (std::min(near[i].d2, dih) - near[i].d1);
          } else if (dih < near[i].d1) {
            delta += w[i] * (dih - near[i].d1);
          }
        }
        if (delta < best_delta) {
          best_delta = delta;
          best_m = m;
          best_h = h;
        }
      }
    }
    if (best_m < 0) break;
    medoids[best_m] = best_h;
    std::sort(medoids.begin(), medoids.end());
    recompute();
  }

  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) labels[i] = near[i].m1;
  return labels;
}

Eigen::MatrixXd init_noise(const Eigen::MatrixXd& Z0, double tau0_init) {
  if (!(tau0_init > 0.0 && tau0_init < 1.0)) throw input_error("tau0_init must lie in (0, 1)");
  Eigen::MatrixXd Z(Z0.rows(), Z0.cols() + 1);
  Z.leftCols(Z0.cols()) = (1.0 - tau0_init) * Z0;
  Z.col(Z0.cols()).setConstant(tau0_init);
  return Z;
}

AitkenResult aitken_check(double l_prev2, double l_prev, double l_curr, double tol) {
  const double slack = 1e-12 * (1.0 + std::abs(l_curr));
  if (std::abs(l_curr - l_prev) <= slack && std::abs(l_prev - l_prev2) <= slack) {
    return {true, l_curr};
  }
  const double denom = l_prev - l_prev2;
  if (denom == 0.0) return {false, std::numeric_limits<double>::infinity()};
  const double a = (l_curr - l_prev) / denom;
  if (a >= 1.0) return {false, std::numeric_limits<double>::infinity()};
  const double l_inf = l_prev + (l_curr - l_prev) / (1.0 - a);
  return {std::abs(l_inf - l_curr) < tol, l_inf};
}

namespace {

FittedModel fit_impl(const SequenceDataset& input, const ModelSpec& spec,
                     const Eigen::MatrixXd* z_init) {
  validate_spec(spec, input);
  const bool covariate_mode = spec.gating.mode == GatingMode::covariate;
  auto [ds, amap] = aggregate_duplicates(input, covariate_mode);

  const int nu = ds.rows();
  const int G = spec.G;
  const int gnn = spec.non_noise();
  const bool noise = has_noise(spec.type);

  std::vector<std::string> xcols;
  const Eigen::MatrixXd X =
      covariate_mode ? ds.design_for(spec.gating.covariates, &xcols) : Eigen::MatrixXd(nu, 0);

  Eigen::MatrixXd Z;
  if (z_init) {
    if (z_init->rows() != input.rows() || z_init->cols() != G) {
      throw input_error("initial responsibilities must be n x G");
    }
    std::vector<int> rep(nu, -1);
    for (int i = 0; i < input.rows(); ++i) {
      if (rep[amap.unique_of[i]] < 0) rep[amap.unique_of[i]] = i;
    }
    Z.resize(nu, G);
    for (int u = 0; u < nu; ++u) Z.row(u) = z_init->row(rep[u]);
  } else if (gnn >= 1) {
    if (gnn > nu) {
      throw input_error("cannot form " + std::to_string(gnn) +
                        " clusters from " + std::to_string(nu) + " distinct sequences");
    }
    const Eigen::MatrixXi D = pairwise_matrix(ds);
    const auto labels = init_partition(D, ds.weights(), gnn, spec.control.seed);
    Eigen::MatrixXd Z0 = Eigen::MatrixXd::Zero(nu, gnn);
    for (int i = 0; i < nu; ++i) Z0(i, labels[i]) = 1.0;
    Z = noise ? init_noise(Z0, spec.control.tau0_init) : std::move(Z0);
  } else {
    Z = Eigen::MatrixXd::Ones(nu, 1);  // noise-only model
  }

  const auto tie_rank = theta_tie_rank(spec.control.seed, ds.v());
  const double W = ds.weight_total();

  GatingParams gp;
  gp.mode = spec.gating.mode;
  gp.noise = spec.gating.noise;
  gp.G = G;
  gp.noise_component = noise;
  gp.tau = Eigen::VectorXd::Constant(G, 1.0 / G);
  gp.tau0 = spec.control.tau0_init;
  if (covariate_mode) {
    const int classes = (noise && spec.gating.noise == NoiseGating::nongated) ? G - 1 : G;
    gp.beta = Eigen::MatrixXd::Zero(X.cols() + 1, classes);
    gp.coef_names.push_back("(Intercept)");
    gp.coef_names.insert(gp.coef_names.end(), xcols.begin(), xcols.end());
  }

  std::vector<double> trace;
  ComponentParams comp;
  comp.thetas.resize(static_cast<std::size_t>(gnn));
  double best_ll = -std::numeric_limits<double>::infinity();
  ComponentParams best_comp;
  GatingParams best_gp;
  Eigen::MatrixXd best_Z;
  bool converged = false;

  for (int m = 0; m < spec.control.max_iter; ++m) {
    gp = update_gating(gp, Z, X, ds.weights(), spec);
    for (int g = 0; g < gnn; ++g) {
      comp.thetas[static_cast<std::size_t>(g)] = estimate_theta(ds, Z, g, tie_rank);
    }
    comp.precision = estimate_precision(spec, ds, Z, comp.thetas);

    EStepResult e = e_step(ds, comp, gp, X, spec);
    for (int g = 0; g < G; ++g) {
      if (e.Z.col(g).dot(ds.weights()) < 1e-10 * W) {
        throw estimation_error("component " + std::to_string(g + 1) +
                               " collapsed at iteration " + std::to_string(m + 1));
      }
    }
    trace.push_back(e.loglik);
    if (e.loglik >= best_ll) {
      best_ll = e.loglik;
      best_comp = comp;
      best_gp = gp;
      best_Z = e.Z;
    }
    const std::size_t it = trace.size();
    if (it >= 2 &&
        std::abs(trace[it - 1] - trace[it - 2]) <= 1e-12 * (1.0 + std::abs(trace[it - 1]))) {
      converged = true;
      break;
    }
    if (it >= 3 &&
        aitken_check(trace[it - 3], trace[it - 2], trace[it - 1], spec.control.tol).converged) {
      converged = true;
      break;
    }
    Z = std::move(e.Z);
  }

  FittedModel out;
  out.spec = spec;
  out.alphabet = input.alphabet();
  out.n = input.rows();
  out.T = input.length();
  out.components = std::move(best_comp);
  out.gating = std::move(best_gp);
  out.gating_column_names = std::move(xcols);
  out.loglik_trace = std::move(trace);
  out.loglik = best_ll;
  out.iterations = static_cast<int>(out.loglik_trace.size());
  out.converged = converged;

  out.Z.resize(input.rows(), G);
  for (int i = 0; i < input.rows(); ++i) out.Z.row(i) = best_Z.row(amap.unique_of[i]);
  out.map_labels.resize(static_cast<std::size_t>(input.rows()));
  for (int i = 0; i < input.rows(); ++i) {
    int best_g = 0;
    for (int g = 1; g < G; ++g) {
      if (out.Z(i, g) > out.Z(i, best_g)) best_g = g;
    }
    out.map_labels[static_cast<std::size_t>(i)] = best_g;
  }

  for (int g = 0; g < gnn; ++g) {
    out.sps_labels.push_back(
        sps_encode(out.components.thetas[static_cast<std::size_t>(g)], input.alphabet()));
  }
  if (noise) out.sps_labels.push_back("Noise");

  out.n_params = count_params(spec, input);
  out.bic = bic(out.loglik, out.n_params, input.weight_total());

  if (G >= 2) {
    out.wdbs = wdbs(out.Z, input.weights());
    std::vector<char> seen(static_cast<std::size_t>(G), 0);
    for (int label : out.map_labels) seen[static_cast<std::size_t>(label)] = 1;
    if (std::count(seen.begin(), seen.end(), 1) >= 2) {
      out.wasw = wasw(pairwise_matrix(input), out.map_labels, input.weights());
    }
  }
  return out;
}

}  // namespace

FittedModel fit(const SequenceDataset& ds, const ModelSpec& spec) {
  return fit_impl(ds, spec, nullptr);
}

FittedModel fit_with_init(const SequenceDataset& ds, const ModelSpec& spec,
                          const Eigen::MatrixXd& Z_init) {
  return fit_impl(ds, spec, &Z_init);
}

CoefficientTable two_step_regress(const FittedModel& model, const SequenceDataset& ds,
                                  const std::vector<std::string>& covariates, ResponseKind kind) {
  if (model.Z.rows() != ds.rows()) {
    throw input_error("two_step_regress: dataset does not match the fitted model");
  }
  std::vector<std::string> names;
  const Eigen::MatrixXd X = ds.design_for(covariates, &names);
  auto table = two_step_coefficients(model.Z, X, names, ds.weights(), has_noise(model.spec.type),
                                     kind, model.spec.control.ridge, model.spec.control.mlr_max_iter);
  for (std::size_t g = 0; g < table.class_names.size() && g < model.sps_labels.size(); ++g) {
    table.class_names[g] = model.sps_labels[g];
  }
  return table;
}

}  // namespace seqmix
