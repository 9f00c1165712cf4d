#include "dac/augment.hpp"

#include <stdexcept>

#include "dac/linalg.hpp"

namespace dac {

void validate_policy(const AugmentPolicy& p) {
    if (p.sigma_weak < 0 || p.sigma_strong < 0 || p.sigma_weak > p.sigma_strong)
        throw std::invalid_argument("augment: need 0 <= sigma_weak <= sigma_strong");
    if (p.dropout_prob < 0 || p.dropout_prob > 1)
        throw std::invalid_argument("augment: dropout_prob outside [0,1]");
    if (p.scale_jitter < 0) throw std::invalid_argument("augment: scale_jitter < 0");
    if (p.radius_r <= 0) throw std::invalid_argument("augment: radius_r must be > 0");
}

std::vector<double> weak_aug(std::span<const double> x, const AugmentPolicy& p, std::mt19937_64& rng) {
    std::vector<double> out(x.begin(), x.end());
    if (p.sigma_weak > 0) {
        std::normal_distribution<double> gauss(0.0, p.sigma_weak);
        for (double& v : out) v += gauss(rng);
    }
    return out;
}

std::vector<double> strong_aug(std::span<const double> x, const AugmentPolicy& p, std::mt19937_64& rng) {
    std::vector<double> out(x.begin(), x.end());
    if (p.sigma_strong > 0) {
        std::normal_distribution<double> gauss(0.0, p.sigma_strong);
        for (double& v : out) v += gauss(rng);
    }
    if (p.dropout_prob > 0) {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (double& v : out)
            if (unif(rng) < p.dropout_prob) v = 0.0;
    }
    if (p.scale_jitter > 0) {
        std::uniform_real_distribution<double> scale(1.0 - p.scale_jitter, 1.0 + p.scale_jitter);
        double f = scale(rng);
        for (double& v : out) v *= f;
    }
    return out;
}

std::vector<std::vector<double>> sample_ball(std::span<const double> x, const AugmentPolicy& p,
                                             std::mt19937_64& rng, int count) {
    if (count < 1) throw std::invalid_argument("sample_ball: count must be >= 1");
    std::vector<std::vector<double>> out;
    out.reserve(count);
    std::uniform_int_distribution<int> which(0, 1);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int k = 0; k < count; ++k) {
        std::vector<double> v = which(rng) == 0 ? weak_aug(x, p, rng) : strong_aug(x, p, rng);
        // delta = r * u * (g / ||g||_1) keeps ||delta||_1 = r*u < r and scales
        // linearly with the radius for a fixed draw.
        std::vector<double> g(x.size());
        for (double& gi : g) gi = gauss(rng);
        double n1 = l1_norm(g);
        double u = unif(rng);
        if (n1 > 0) {
            for (size_t j = 0; j < v.size(); ++j) v[j] += p.radius_r * u * g[j] / n1;
        }
        out.push_back(std::move(v));
    }
    return out;
}

}  // namespace dac
