#include "jcapt/diff/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "jcapt/errors.hpp"

namespace jcapt::diff {

std::string shape_str(const Shape& shape) { return fmt::format("[{}]", fmt::join(shape, "x")); }

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

namespace {
void check_shape(const Shape& shape) {
  if (shape.empty() || shape.size() > 2) {
    throw DimensionError(fmt::format("tensor: rank {} unsupported (shape {})", shape.size(), shape_str(shape)));
  }
  for (auto d : shape) {
    if (d == 0) throw DimensionError(fmt::format("tensor: zero dimension in shape {}", shape_str(shape)));
  }
}
}  // namespace

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  check_shape(shape_);
  data_.assign(shape_size(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  check_shape(shape_);
  if (shape_size(shape_) != data_.size()) {
    throw DimensionError(
        fmt::format("tensor: shape {} needs {} values, got {}", shape_str(shape_), shape_size(shape_), data_.size()));
  }
}

double Tensor::item() const {
  if (data_.size() != 1) throw ContractError(fmt::format("item: tensor of shape {} is not scalar", shape_str(shape_)));
  return data_[0];
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace jcapt::diff
