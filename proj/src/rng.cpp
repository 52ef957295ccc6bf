#include "detlab/rng.hpp"

#include <cmath>

namespace detlab {

double normal(std::mt19937_64& rng) {
  // Box-Muller, one value per call; rejection keeps u1 away from zero.
  double u1 = uniform01(rng);
  while (u1 <= 1e-300) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace detlab
