#include "lrtng/sampling.hpp"

#include <cmath>
#include <random>

#include "lrtng/errors.hpp"

namespace lrtng::sampling {

std::vector<Vector> sample_ellipsoid(const Vector& center, const Vector& radii, std::size_t count,
                                     std::uint64_t seed, std::optional<std::size_t> fixed) {
  if (center.size() != radii.size()) throw UsageError("center and radii differ in length");
  const Eigen::Index n = center.size();
  const Eigen::Index free_dims = fixed ? n - 1 : n;
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform;
  std::vector<Vector> out;
  out.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    Vector dir = Vector::Zero(n);
    double norm = 0.0;
    while (norm == 0.0) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (fixed && static_cast<std::size_t>(j) == *fixed) continue;
        dir[j] = normal(gen);
      }
      norm = dir.norm();
    }
    const double scale = s % 4 == 3 ? 1.0 - 1e-12 : std::pow(uniform(gen), 1.0 / static_cast<double>(free_dims));
    Vector p = center;
    for (Eigen::Index j = 0; j < n; ++j) p[j] += radii[j] * scale * dir[j] / norm;
    out.push_back(p);
  }
  return out;
}

}  // namespace lrtng::sampling
