#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace imbsam {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Dense row-major value carrier for sample features and activations.
// data().size() always equals the product of the shape extents.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<Index> shape) : shape_(std::move(shape)) {
    for (Index e : shape_) {
      if (e <= 0) throw std::invalid_argument("Tensor: extents must be positive");
    }
    data_ = Vector::Zero(count(shape_));
  }

  static Tensor from_matrix(const RowMatrix& m) {
    Tensor t({m.rows(), m.cols()});
    Eigen::Map<RowMatrix>(t.data_.data(), m.rows(), m.cols()) = m;
    return t;
  }

  static Tensor from_vector(const Vector& v) {
    Tensor t({v.size()});
    t.data_ = v;
    return t;
  }

  const std::vector<Index>& shape() const { return shape_; }
  Index rank() const { return static_cast<Index>(shape_.size()); }
  Index size() const { return data_.size(); }

  Vector& data() { return data_; }
  const Vector& data() const { return data_; }

  double& operator()(Index i) { return data_[i]; }
  double operator()(Index i) const { return data_[i]; }
  double& operator()(Index i, Index j) { return data_[i * shape_[1] + j]; }
  double operator()(Index i, Index j) const { return data_[i * shape_[1] + j]; }

  // Rank-2 view; rank-1 tensors are viewed as a single row.
  Eigen::Map<const RowMatrix> mat() const {
    if (rank() == 1) return {data_.data(), 1, shape_[0]};
    if (rank() != 2) throw std::logic_error("Tensor::mat: rank-2 view requested on rank > 2");
    return {data_.data(), shape_[0], shape_[1]};
  }

  Eigen::Map<const Vector> row(Index i) const {
    if (rank() != 2) throw std::logic_error("Tensor::row: requires rank 2");
    return {data_.data() + i * shape_[1], shape_[1]};
  }

  bool all_finite() const { return data_.allFinite(); }

 private:
  static Index count(const std::vector<Index>& s) {
    return std::accumulate(s.begin(), s.end(), Index{1}, std::multiplies<>());
  }

  std::vector<Index> shape_;
  Vector data_;
};

// Loss value and its gradient with respect to the flat parameter vector.
struct LossGrad {
  double loss = 0.0;
  Vector grad;
};

// Re-entrant loss/gradient closure over a fixed sample set.
using Objective = std::function<LossGrad(const Vector&)>;

}  // namespace imbsam
