#include "imbsam/param_vector.hpp"

#include <stdexcept>

namespace imbsam {

ParamLayout::ParamLayout(std::vector<LayerDims> layers) : layers_(std::move(layers)) {
  weight_offsets_.reserve(layers_.size());
  bias_offsets_.reserve(layers_.size());
  Index offset = 0;
  for (const auto& d : layers_) {
    if (d.in <= 0 || d.out <= 0) throw std::invalid_argument("ParamLayout: layer dims must be positive");
    weight_offsets_.push_back(offset);
    offset += d.out * d.in;
    bias_offsets_.push_back(offset);
    offset += d.out;
  }
  total_ = offset;
}

ParamVector flatten_params(std::span<const LinearLayer> layers) {
  std::vector<LayerDims> dims;
  dims.reserve(layers.size());
  for (const auto& l : layers) {
    if (l.bias.size() != l.weight.rows()) {
      throw std::invalid_argument("flatten_params: bias length must match weight rows");
    }
    dims.push_back({l.weight.cols(), l.weight.rows()});
  }
  ParamLayout layout(std::move(dims));
  Vector values = Vector::Zero(layout.total());
  for (Index i = 0; i < layout.layer_count(); ++i) {
    layout.weight(values, i) = layers[static_cast<std::size_t>(i)].weight;
    layout.bias(values, i) = layers[static_cast<std::size_t>(i)].bias;
  }
  return {std::move(layout), std::move(values)};
}

std::vector<LinearLayer> unflatten_params(const ParamVector& params) {
  if (params.values.size() != params.layout.total()) {
    throw std::invalid_argument("unflatten_params: value length does not match layout");
  }
  std::vector<LinearLayer> layers;
  layers.reserve(static_cast<std::size_t>(params.layout.layer_count()));
  for (Index i = 0; i < params.layout.layer_count(); ++i) {
    layers.push_back({params.layout.weight(params.values, i), params.layout.bias(params.values, i)});
  }
  return layers;
}

}  // namespace imbsam
