#pragma once

#include "rbc/spectral/field.hpp"

#include <cstdint>

namespace rbc::spectral {

/// Reproducible random field: Gaussian coefficients damped by exp(-decay*(k + j)),
/// rescaled so the H norm equals amplitude. mean_free zeroes the k = 0 shear column.
SpectralField random_field(const DiscretizationPtr& disc, std::uint64_t seed, double amplitude = 1.0,
                           double decay = 0.5, bool mean_free = false);

}  // namespace rbc::spectral
