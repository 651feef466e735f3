#pragma once

#include "f2v/types.hpp"

#include <vector>

namespace f2v {

/// Partial-least-squares regression model mapping input (word-vector) rows
/// onto output (production-frequency) rows. Fitted with NIPALS PLS2;
/// coefficients reproduce the component-wise prediction to 1e-10.
struct PlsrModel {
  Index components = 0;   // fitted latent dimension
  Vector x_mean;          // m
  Vector y_mean;          // k
  Matrix x_weights;       // m x p
  Matrix x_loadings;      // m x p
  Matrix y_loadings;      // k x p
  Matrix coefficients;    // m x k

  // Inner power-iteration counts per component; diagnostics only.
  std::vector<int> inner_iterations;
};

/// Fits PLS2 on mean-centered data (no variance scaling). Per component the
/// weight vector is power-iterated to 1e-6 or 500 iterations, starting from
/// the output column with the largest variance (ties: lowest index), then
/// both blocks are deflated. Throws when the input runs out of rank before
/// p components; a fully explained output stops fitting early instead.
PlsrModel fit_plsr(const Matrix& inputs, const Matrix& targets, Index components);

/// (x - x_mean) . B + y_mean.
Vector predict(const PlsrModel& model, Eigen::Ref<const Vector> input);

/// Training predictions computed component-by-component through the weight
/// and loading vectors (no coefficient matrix); used to validate B.
Vector predict_componentwise(const PlsrModel& model, Eigen::Ref<const Vector> input);

/// Indices of the k largest entries, descending, ties by ascending index.
std::vector<Index> top_k_features_from_prediction(Eigen::Ref<const Vector> prediction,
                                                  Index k);

}  // namespace f2v
