#pragma once

#include "imbsam/types.hpp"

#include <span>
#include <vector>

namespace imbsam {

struct LayerDims {
  Index in = 0;
  Index out = 0;
  bool operator==(const LayerDims&) const = default;
};

// Maps each layer's weight matrix (out x in, row-major) and bias (out) into a
// flat parameter vector. Segments tile [0, total()) with no gaps or overlaps.
class ParamLayout {
 public:
  ParamLayout() = default;
  explicit ParamLayout(std::vector<LayerDims> layers);

  Index total() const { return total_; }
  Index layer_count() const { return static_cast<Index>(layers_.size()); }
  const LayerDims& dims(Index l) const { return layers_[static_cast<std::size_t>(l)]; }
  Index weight_offset(Index l) const { return weight_offsets_[static_cast<std::size_t>(l)]; }
  Index bias_offset(Index l) const { return bias_offsets_[static_cast<std::size_t>(l)]; }

  Eigen::Map<const RowMatrix> weight(const Vector& flat, Index l) const {
    const auto& d = dims(l);
    return {flat.data() + weight_offset(l), d.out, d.in};
  }
  Eigen::Map<RowMatrix> weight(Vector& flat, Index l) const {
    const auto& d = dims(l);
    return {flat.data() + weight_offset(l), d.out, d.in};
  }
  Eigen::Map<const Vector> bias(const Vector& flat, Index l) const {
    return {flat.data() + bias_offset(l), dims(l).out};
  }
  Eigen::Map<Vector> bias(Vector& flat, Index l) const {
    return {flat.data() + bias_offset(l), dims(l).out};
  }

  bool operator==(const ParamLayout&) const = default;

 private:
  std::vector<LayerDims> layers_;
  std::vector<Index> weight_offsets_;
  std::vector<Index> bias_offsets_;
  Index total_ = 0;
};

// Flat model parameters theta together with their segment layout.
struct ParamVector {
  ParamLayout layout;
  Vector values;
};

// Gradient in the same flat layout as the ParamVector it differentiates.
struct GradVector {
  ParamLayout layout;
  Vector values;
};

struct LinearLayer {
  RowMatrix weight;  // out x in
  Vector bias;       // out
};

// Deterministic flattening; round-trips through unflatten_params losslessly.
ParamVector flatten_params(std::span<const LinearLayer> layers);
std::vector<LinearLayer> unflatten_params(const ParamVector& params);

}  // namespace imbsam
