#include "rt/quadrature.hpp"

#include <map>
#include <memory>
#include <mutex>

#include <boost/math/special_functions/legendre.hpp>

#include "rt/types.hpp"

namespace rt {

const GaussLegendre& gaussLegendre(int n) {
  static std::mutex mtx;
  static std::map<int, std::unique_ptr<GaussLegendre>> cache;
  if (n < 1) throw Error("Gauss-Legendre rule needs at least one node");
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(n);
  if (it != cache.end()) return *it->second;

  auto rule = std::make_unique<GaussLegendre>();
  // Non-negative zeros, ascending; mirror them to get the full rule.
  const auto zeros = boost::math::legendre_p_zeros<double>(n);
  auto weight = [n](double x) {
    const double dp = boost::math::legendre_p_prime<double>(n, x);
    return 2.0 / ((1.0 - x * x) * dp * dp);
  };
  for (auto z = zeros.rbegin(); z != zeros.rend(); ++z) {
    if (*z == 0.0) continue;
    rule->nodes.push_back(-*z);
    rule->weights.push_back(weight(*z));
  }
  for (double z : zeros) {
    rule->nodes.push_back(z);
    rule->weights.push_back(weight(z));
  }
  return *cache.emplace(n, std::move(rule)).first->second;
}

}  // namespace rt
