#include "hyperlab/geometry.hpp"

namespace hyperlab {

// largest r with r + 1 < sqrt(s^2 + r^2)
double slice_support_radius(double s) {
  if (!(s >= 1.0)) throw std::domain_error("slice_support_radius: s < 1, slice misses the cone");
  return 0.5 * (s * s - 1.0);
}

}  // namespace hyperlab
