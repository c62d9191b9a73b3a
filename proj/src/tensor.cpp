#include "accelpred/tensor.hpp"

#include <cmath>

#include "accelpred/common.hpp"

namespace acp {

void check_finite(std::span<const double> values, const std::string& op) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw NumericError(op + ": non-finite value at index " +
                         std::to_string(i));
    }
  }
}

void check_finite(const Tensor& t, const std::string& op) {
  check_finite(std::span<const double>(t.data), op);
}

}  // namespace acp
