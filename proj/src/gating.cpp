#include "seqmix/gating.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "seqmix/errors.hpp"

namespace seqmix {

namespace {

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& X, int n) {
  Eigen::MatrixXd Xt(n, X.cols() + 1);
  Xt.col(0).setOnes();
  if (X.cols() > 0) Xt.rightCols(X.cols()) = X;
  return Xt;
}

// Row-wise softmax of logits, computed against the row maximum.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd P(logits.rows(), logits.cols());
  for (int i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    Eigen::RowVectorXd e = (logits.row(i).array() - m).exp();
    P.row(i) = e / e.sum();
  }
  return P;
}

double objective_impl(const Eigen::MatrixXd& Xt, const Eigen::MatrixXd& R,
                      const Eigen::VectorXd& w, const Eigen::MatrixXd& beta) {
  const Eigen::MatrixXd logits = Xt * beta;
  double obj = 0.0;
  for (int i = 0; i < Xt.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    const double lse = m + std::log((logits.row(i).array() - m).exp().sum());
    for (int g = 0; g < R.cols(); ++g) {
      if (R(i, g) > 0.0) obj += w[i] * R(i, g) * (logits(i, g) - lse);
    }
  }
  return obj;
}

}  // namespace

Eigen::MatrixXd predict_tau(const GatingParams& params, const Eigen::MatrixXd& X) {
  const int G = params.G;
  if (params.mode != GatingMode::covariate) {
    const int n = static_cast<int>(X.rows() > 0 ? X.rows() : 1);
    return params.tau.transpose().replicate(n, 1);
  }

  const int n = static_cast<int>(X.rows());
  const Eigen::MatrixXd Xt = with_intercept(X, n);
  if (Xt.cols() != params.beta.rows()) {
    throw input_error("gating design has " + std::to_string(Xt.cols() - 1) +
                      " covariates, coefficients expect " + std::to_string(params.beta.rows() - 1));
  }
  if (params.noise_component && params.noise == NoiseGating::nongated) {
    Eigen::MatrixXd tau(n, G);
    tau.leftCols(G - 1) = (1.0 - params.tau0) * softmax_rows(Xt * params.beta);
    tau.col(G - 1).setConstant(params.tau0);
    return tau;
  }
  return softmax_rows(Xt * params.beta);
}

double mlr_objective(const Eigen::MatrixXd& X, const Eigen::MatrixXd& R,
                     const Eigen::VectorXd& w, const Eigen::MatrixXd& beta) {
  return objective_impl(with_intercept(X, static_cast<int>(X.rows())), R, w, beta);
}

Eigen::MatrixXd fit_mlr(const Eigen::MatrixXd& X, const Eigen::MatrixXd& R,
                        const Eigen::VectorXd& w, const Eigen::MatrixXd& beta0, double ridge,
                        int max_iter) {
  const int n = static_cast<int>(R.rows());
  const int C = static_cast<int>(R.cols());
  const int p = static_cast<int>(X.cols()) + 1;
  const Eigen::MatrixXd Xt = with_intercept(X, n);

  Eigen::MatrixXd beta = beta0.size() > 0 ? beta0 : Eigen::MatrixXd::Zero(p, C);
  if (beta.rows() != p || beta.cols() != C) throw input_error("fit_mlr: bad warm start shape");
  if (C < 2) return beta;  // single class: nothing to estimate

  if (Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(Xt).rank() < p) {
    throw input_error("gating design is rank-deficient (constant or collinear covariates)");
  }

  const int dim = p * (C - 1);
  double obj = objective_impl(Xt, R, w, beta);

  for (int iter = 0; iter < max_iter; ++iter) {
    const Eigen::MatrixXd P = softmax_rows(Xt * beta);

    Eigen::VectorXd grad = Eigen::VectorXd::Zero(dim);
    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(dim, dim);
    for (int a = 1; a < C; ++a) {
      const int oa = (a - 1) * p;
      for (int i = 0; i < n; ++i) {
        grad.segment(oa, p) += w[i] * (R(i, a) - P(i, a)) * Xt.row(i).transpose();
      }
      for (int b = a; b < C; ++b) {
        const int ob = (b - 1) * p;
        Eigen::MatrixXd block = Eigen::MatrixXd::Zero(p, p);
        for (int i = 0; i < n; ++i) {
          const double s = w[i] * P(i, a) * ((a == b ? 1.0 : 0.0) - P(i, b));
          block += s * (Xt.row(i).transpose() * Xt.row(i));
        }
        hess.block(oa, ob, p, p) = block;
        if (b != a) hess.block(ob, oa, p, p) = block.transpose();
      }
    }
    if (grad.norm() < 1e-10 * (1.0 + std::abs(obj))) break;

    // Newton system: hess is the negated Hessian (positive semidefinite).
    for (int a = 1; a < C; ++a) {
      for (int j = 0; j < p; ++j) {
        const int d = (a - 1) * p + j;
        hess(d, d) += (j == 0 ? 0.0 : ridge) + 1e-12;
      }
    }
    const Eigen::VectorXd step = hess.ldlt().solve(grad);
    if (!step.allFinite()) break;

    double scale = 1.0;
    bool accepted = false;
    for (int half = 0; half < 40; ++half) {
      Eigen::MatrixXd cand = beta;
      for (int a = 1; a < C; ++a) cand.col(a) += scale * step.segment((a - 1) * p, p);
      const double cand_obj = objective_impl(Xt, R, w, cand);
      if (cand_obj >= obj) {
        const bool stalled = cand_obj - obj < 1e-10 * (1.0 + std::abs(obj));
        beta = std::move(cand);
        obj = cand_obj;
        accepted = true;
        if (stalled) return beta;
        break;
      }
      scale *= 0.5;
    }
    if (!accepted) break;
  }
  return beta;
}

Eigen::VectorXd estimate_tau_free(const Eigen::MatrixXd& R, const Eigen::VectorXd& w) {
  Eigen::VectorXd tau = R.transpose() * w;
  return tau / w.sum();
}

GatingParams update_gating(const GatingParams& current, const Eigen::MatrixXd& Z,
                           const Eigen::MatrixXd& X, const Eigen::VectorXd& w,
                           const ModelSpec& spec) {
  const int n = static_cast<int>(Z.rows());
  const int G = spec.G;
  const bool noise = has_noise(spec.type);
  const double W = w.sum();

  GatingParams out = current;
  out.G = G;
  out.noise_component = noise;
  out.mode = spec.gating.mode;
  out.noise = spec.gating.noise;

  switch (spec.gating.mode) {
    case GatingMode::equal_shares: {
      out.tau = Eigen::VectorXd::Constant(G, 1.0 / G);
      if (noise && G > 1) {
        const double tau0 = Z.col(G - 1).dot(w) / W;
        out.tau.head(G - 1).setConstant((1.0 - tau0) / (G - 1));
        out.tau[G - 1] = tau0;
      }
      return out;
    }
    case GatingMode::free_proportions: {
      out.tau = estimate_tau_free(Z, w);
      return out;
    }
    case GatingMode::covariate: break;
  }

  if (noise && spec.gating.noise == NoiseGating::nongated) {
    // tau0 and the non-noise coefficients maximise separate pieces of the
    // gating term, so updating both keeps it non-decreasing.
    const double tau0 = Z.col(G - 1).dot(w) / W;
    Eigen::MatrixXd R(n, G - 1);
    Eigen::VectorXd wr(n);
    for (int i = 0; i < n; ++i) {
      const double non_noise = 1.0 - Z(i, G - 1);
      wr[i] = w[i] * non_noise;
      if (non_noise > 0.0) {
        R.row(i) = Z.row(i).head(G - 1) / non_noise;
      } else {
        R.row(i).setConstant(1.0 / (G - 1));
      }
    }
    out.tau0 = tau0;
    out.beta = fit_mlr(X, R, wr, current.beta, spec.control.ridge, spec.control.mlr_max_iter);
    return out;
  }

  out.beta = fit_mlr(X, Z, w, current.beta, spec.control.ridge, spec.control.mlr_max_iter);
  return out;
}

CoefficientTable two_step_coefficients(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& X,
                                       const std::vector<std::string>& column_names,
                                       const Eigen::VectorXd& w, bool noise_component,
                                       ResponseKind kind, double ridge, int max_iter) {
  const int n = static_cast<int>(Z.rows());
  const int C = static_cast<int>(Z.cols()) - (noise_component ? 1 : 0);
  if (C < 2) throw input_error("two-step regression needs at least 2 non-noise components");

  Eigen::MatrixXd R(n, C);
  for (int i = 0; i < n; ++i) {
    const double mass = Z.row(i).head(C).sum();
    if (mass > 0.0) {
      R.row(i) = Z.row(i).head(C) / mass;
    } else {
      R.row(i).setConstant(1.0 / C);
    }
  }
  if (kind == ResponseKind::map) {
    for (int i = 0; i < n; ++i) {
      int best = 0;
      for (int g = 1; g < C; ++g)
        if (R(i, g) > R(i, best)) best = g;
      R.row(i).setZero();
      R(i, best) = 1.0;
    }
    for (int g = 0; g < C; ++g) {
      if (R.col(g).sum() == 0.0) {
        throw estimation_error("component " + std::to_string(g + 1) +
                               " is empty under the MAP response");
      }
    }
  }

  CoefficientTable table;
  table.coef_names.push_back("(Intercept)");
  table.coef_names.insert(table.coef_names.end(), column_names.begin(), column_names.end());
  for (int g = 0; g < C; ++g) table.class_names.push_back(std::to_string(g + 1));
  table.beta = fit_mlr(X, R, w, {}, ridge, max_iter);
  return table;
}

}  // namespace seqmix
