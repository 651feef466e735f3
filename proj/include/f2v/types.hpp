#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace f2v {

using Scalar = double;
using Index = Eigen::Index;

// Embedding matrices are row-per-word, so row-major keeps row access contiguous.
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Base error for everything the toolkit throws on its own behalf.
class Error : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bad user input: missing or malformed files, out-of-range arguments.
/// The CLI maps this to exit code 2, everything else to 1.
class InputError : public Error {
  using Error::Error;
};

/// Cosine similarity of two vectors; 0 when either vector has zero norm.
template <typename DerivedA, typename DerivedB>
Scalar cosine_similarity(const Eigen::MatrixBase<DerivedA>& a,
                         const Eigen::MatrixBase<DerivedB>& b) {
  const Scalar denom = a.norm() * b.norm();
  if (denom == Scalar(0)) return Scalar(0);
  return a.dot(b) / denom;
}

}  // namespace f2v
