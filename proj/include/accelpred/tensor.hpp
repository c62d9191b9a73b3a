#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace acp {

// Dense row-major value container, up to 3 axes (sequence x batch x feature).
// Used both for layer parameters and per-step activations.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;

  static Tensor zeros(std::initializer_list<std::size_t> dims) {
    Tensor t;
    t.shape.assign(dims);
    std::size_t n = 1;
    for (auto d : t.shape) n *= d;
    t.data.assign(n, 0.0);
    return t;
  }

  static Tensor from(std::initializer_list<double> values) {
    Tensor t;
    t.shape = {values.size()};
    t.data.assign(values);
    return t;
  }

  std::size_t size() const { return data.size(); }
  std::size_t dim(std::size_t axis) const { return shape.at(axis); }

  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }

  double& at(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * shape[1] + j]; }

  double* row(std::size_t i) { return data.data() + i * shape[1]; }
  const double* row(std::size_t i) const { return data.data() + i * shape[1]; }

  std::span<double> row_span(std::size_t i) {
    return {row(i), shape[1]};
  }
  std::span<const double> row_span(std::size_t i) const {
    return {row(i), shape[1]};
  }

  void fill(double v) { data.assign(data.size(), v); }
};

// Throws NumericError naming `op` if any value is NaN or infinite.
void check_finite(std::span<const double> values, const std::string& op);
void check_finite(const Tensor& t, const std::string& op);

}  // namespace acp
