#pragma once

#include <random>
#include <span>
#include <vector>

namespace dac {

/// Weak/strong transformation set plus the L1 ball radius used by the
/// consistency diagnostics. Defaults target unit-scale synthetic data.
struct AugmentPolicy {
    double sigma_weak = 0.05;
    double sigma_strong = 0.15;
    double dropout_prob = 0.1;
    double scale_jitter = 0.1;
    double radius_r = 0.5;
};

void validate_policy(const AugmentPolicy& p);

/// x plus isotropic Gaussian noise of stddev sigma_weak.
std::vector<double> weak_aug(std::span<const double> x, const AugmentPolicy& p, std::mt19937_64& rng);

/// Gaussian noise (sigma_strong), then independent coordinate dropout, then
/// one multiplicative factor uniform in [1-scale_jitter, 1+scale_jitter].
std::vector<double> strong_aug(std::span<const double> x, const AugmentPolicy& p, std::mt19937_64& rng);

/// Draws A(x) + delta with A picked uniformly from {weak, strong} and
/// ||delta||_1 < radius_r. Diagnostic sampling of the transformation ball.
std::vector<std::vector<double>> sample_ball(std::span<const double> x, const AugmentPolicy& p,
                                             std::mt19937_64& rng, int count);

}  // namespace dac
