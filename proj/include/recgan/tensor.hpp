#pragma once

#include <cstddef>
#include <numeric>
#include <vector>

#include "recgan/common.hpp"

namespace recgan {

// Dense row-major tensor. Shape handling is deliberately minimal: the
// network is a fixed composition, so most code works on 2-D
// [batch, features] views.
template <typename T>
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
    data.assign(numel_of(shape), T{0});
  }

  static std::size_t numel_of(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (const auto d : s) n *= d;
    return n;
  }

  std::size_t numel() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t dim(std::size_t i) const { return shape[i]; }

  T& at(std::size_t i) { return data[i]; }
  const T& at(std::size_t i) const { return data[i]; }
  T& at2(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
  const T& at2(std::size_t r, std::size_t c) const {
    return data[r * shape[1] + c];
  }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }

  // Same data, new shape; element count must match.
  Tensor reshaped(std::vector<std::size_t> new_shape) const {
    if (numel_of(new_shape) != numel())
      throw ContractViolation("reshape: element count mismatch");
    Tensor out;
    out.shape = std::move(new_shape);
    out.data = data;
    return out;
  }

  bool operator==(const Tensor&) const = default;
};

}  // namespace recgan
