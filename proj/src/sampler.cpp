#include "ssearch/sampler.hpp"

#include "ssearch/error.hpp"

#include <cmath>
#include <string>

namespace ssearch {

void TrustRegion::validate() const {
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw Error("trust region radius must be positive, got " + std::to_string(radius));
  }
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw Error("sampling sigma must be non-negative, got " + std::to_string(sigma));
  }
  require_finite(center, "trust region center");
}

Vector project_ball(const Vector& z, const Vector& center, double radius) {
  if (z.size() != center.size()) throw DimensionError("project_ball: dimension mismatch");
  const Vector offset = z - center;
  const double norm = offset.norm();
  if (norm <= radius) return z;
  return center + (radius / norm) * offset;
}

std::vector<Vector> gaussian_sample(const TrustRegion& region, std::size_t count, Rng& rng) {
  region.validate();
  const Index dim = region.center.size();
  std::vector<Vector> samples;
  samples.reserve(count);
  Vector draw(dim);
  for (std::size_t p = 0; p < count; ++p) {
    for (Index i = 0; i < dim; ++i) draw[i] = region.center[i] + region.sigma * rng.normal();
    samples.push_back(project_ball(draw, region.center, region.radius));
  }
  return samples;
}

}  // namespace ssearch
