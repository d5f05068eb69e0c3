#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace tw {

/// Dense rank-3 array, row-major: index (i, j, k) lives at (i*d1 + j)*d2 + k.
template <typename T>
struct Tensor3 {
  std::size_t d0 = 0, d1 = 0, d2 = 0;
  std::vector<T> data;

  Tensor3() = default;
  Tensor3(std::size_t a, std::size_t b, std::size_t c, T fill = T{}) : d0(a), d1(b), d2(c), data(a * b * c, fill) {}

  std::array<std::size_t, 3> shape() const noexcept { return {d0, d1, d2}; }
  std::size_t size() const noexcept { return data.size(); }

  T& operator()(std::size_t i, std::size_t j, std::size_t k) noexcept { return data[(i * d1 + j) * d2 + k]; }
  const T& operator()(std::size_t i, std::size_t j, std::size_t k) const noexcept {
    return data[(i * d1 + j) * d2 + k];
  }

  bool operator==(const Tensor3&) const = default;
};

using Tensor3f = Tensor3<float>;
using Tensor3d = Tensor3<double>;

}  // namespace tw
