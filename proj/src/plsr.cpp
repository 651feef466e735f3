#include "f2v/plsr.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace f2v {
namespace {

constexpr Scalar kWeightTolerance = 1e-6;
constexpr int kMaxInnerIterations = 500;

// Squared norm below which a deflated block counts as exhausted, relative
// to its pre-deflation scale.
constexpr Scalar kResidualFloor = 1e-24;

Index largest_variance_column(const Matrix& centered) {
  Index best = 0;
  Scalar best_ss = -1;
  for (Index j = 0; j < centered.cols(); ++j) {
    const Scalar ss = centered.col(j).squaredNorm();
    if (ss > best_ss) {
      best_ss = ss;
      best = j;
    }
  }
  return best;
}

}  // namespace

PlsrModel fit_plsr(const Matrix& inputs, const Matrix& targets, Index components) {
  const Index n = inputs.rows();
  const Index m = inputs.cols();
  const Index k = targets.cols();
  if (n < 2) throw InputError("plsr: need at least 2 rows");
  if (targets.rows() != n)
    throw InputError("plsr: inputs and targets disagree on row count");
  const Index max_p = std::min(n - 1, m);
  if (components < 1 || components > max_p)
    throw InputError("plsr: components must be in [1, " + std::to_string(max_p) + "], got " +
                     std::to_string(components));
  if (!inputs.allFinite() || !targets.allFinite())
    throw InputError("plsr: non-finite training data");

  PlsrModel model;
  model.x_mean = inputs.colwise().mean().transpose();
  model.y_mean = targets.colwise().mean().transpose();

  Matrix x = inputs.rowwise() - model.x_mean.transpose();
  Matrix y = targets.rowwise() - model.y_mean.transpose();
  const Scalar x_floor = kResidualFloor * std::max(Scalar(1), x.squaredNorm());
  const Scalar y_floor = kResidualFloor * std::max(Scalar(1), y.squaredNorm());

  Matrix weights(m, components);
  Matrix x_loadings(m, components);
  Matrix y_loadings(k, components);
  Index fitted = 0;

  for (Index a = 0; a < components; ++a) {
    if (y.squaredNorm() <= y_floor) break;  // targets fully explained
    if (x.squaredNorm() <= x_floor)
      throw Error("plsr: input rank exhausted after " + std::to_string(fitted) +
                  " component(s); requested " + std::to_string(components));

    Vector u = y.col(largest_variance_column(y));
    Vector w = Vector::Zero(m);
    Vector t(n), q(k);
    int performed = 0;
    for (int it = 0; it < kMaxInnerIterations; ++it) {
      ++performed;
      Vector w_new = x.transpose() * u;
      const Scalar w_norm = w_new.norm();
      if (w_norm == Scalar(0))
        throw Error("plsr: degenerate weight vector (targets uncorrelated with inputs)");
      w_new /= w_norm;
      t = x * w_new;
      const Scalar tt = t.squaredNorm();
      if (tt == Scalar(0))
        throw Error("plsr: zero score vector during power iteration");
      q = y.transpose() * t / tt;
      const Scalar qq = q.squaredNorm();

      const Scalar change = (w_new - w).norm();
      w = w_new;
      if (change < kWeightTolerance) break;
      if (qq == Scalar(0)) break;  // component explains nothing further of y
      u = y * q / qq;
    }
    model.inner_iterations.push_back(performed);

    const Scalar tt = t.squaredNorm();
    const Vector p = x.transpose() * t / tt;
    x.noalias() -= t * p.transpose();
    y.noalias() -= t * q.transpose();

    weights.col(a) = w;
    x_loadings.col(a) = p;
    y_loadings.col(a) = q;
    ++fitted;
  }

  model.components = fitted;
  model.x_weights = weights.leftCols(fitted);
  model.x_loadings = x_loadings.leftCols(fitted);
  model.y_loadings = y_loadings.leftCols(fitted);

  if (fitted == 0) {
    model.coefficients = Matrix::Zero(m, k);
  } else {
    // B = W (P^T W)^-1 Q^T collapses the sequential component form.
    const Matrix pw = model.x_loadings.transpose() * model.x_weights;
    model.coefficients =
        model.x_weights * pw.partialPivLu().solve(model.y_loadings.transpose());
  }
  return model;
}

Vector predict(const PlsrModel& model, Eigen::Ref<const Vector> input) {
  if (input.size() != model.x_mean.size())
    throw InputError("plsr predict: input length " + std::to_string(input.size()) +
                     " != " + std::to_string(model.x_mean.size()));
  if (!input.allFinite()) throw InputError("plsr predict: non-finite input");
  return model.coefficients.transpose() * (input - model.x_mean) + model.y_mean;
}

Vector predict_componentwise(const PlsrModel& model, Eigen::Ref<const Vector> input) {
  if (input.size() != model.x_mean.size())
    throw InputError("plsr predict: input length mismatch");
  Vector residual = input - model.x_mean;
  Vector out = model.y_mean;
  for (Index a = 0; a < model.components; ++a) {
    const Scalar score = model.x_weights.col(a).dot(residual);
    residual -= score * model.x_loadings.col(a);
    out += score * model.y_loadings.col(a);
  }
  return out;
}

std::vector<Index> top_k_features_from_prediction(Eigen::Ref<const Vector> prediction,
                                                  Index k) {
  if (k < 0 || k > prediction.size())
    throw InputError("top_k_features_from_prediction: k out of range");
  std::vector<Index> order(static_cast<std::size_t>(prediction.size()));
  std::iota(order.begin(), order.end(), Index(0));
  std::stable_sort(order.begin(), order.end(), [&prediction](Index a, Index b) {
    if (prediction[a] != prediction[b]) return prediction[a] > prediction[b];
    return a < b;
  });
  order.resize(static_cast<std::size_t>(k));
  return order;
}

}  // namespace f2v
