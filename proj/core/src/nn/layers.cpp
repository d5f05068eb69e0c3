#include "tw/nn/layers.hpp"

namespace tw::nn {

Eigen::MatrixXd positional_encoding(Index L, Index d) {
  if (d % 2 != 0) throw Error(Errc::OddWidth, fmt::format("positional encoding width {} is odd", d));
  Eigen::MatrixXd pe(L, d);
  for (Index p = 0; p < L; ++p) {
    for (Index k = 0; 2 * k < d; ++k) {
      const double angle = static_cast<double>(p) / std::pow(10000.0, static_cast<double>(2 * k) / static_cast<double>(d));
      pe(p, 2 * k) = std::sin(angle);
      pe(p, 2 * k + 1) = std::cos(angle);
    }
  }
  return pe;
}

}  // namespace tw::nn
