#pragma once

#include "ssearch/rng.hpp"
#include "ssearch/subspace.hpp"

#include <cstddef>
#include <vector>

namespace ssearch {

/// l2 ball of `radius` around `center`, sampled with isotropic noise `sigma`.
struct TrustRegion {
  Vector center;
  double radius = 0.01;
  double sigma = 0.005;

  void validate() const;
};

/// Euclidean projection of `z` onto the closed ball B(center, radius).
Vector project_ball(const Vector& z, const Vector& center, double radius);

/// `count` draws of center + sigma * eps (eps ~ N(0, I)), each projected onto the
/// region's ball. Normals are drawn coordinate-major per sample, so the output
/// depends only on the rng state.
std::vector<Vector> gaussian_sample(const TrustRegion& region, std::size_t count, Rng& rng);

}  // namespace ssearch
