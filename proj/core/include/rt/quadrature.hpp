#pragma once

#include <vector>

namespace rt {

/// Gauss-Legendre rule on [-1, 1].
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Cached n-point rule; thread safe, entries are immutable once built.
const GaussLegendre& gaussLegendre(int n);

}  // namespace rt
