#include <doctest.h>

#include <cmath>

#include "dac/augment.hpp"
#include "dac/linalg.hpp"
#include "dac/rng.hpp"

using namespace dac;

TEST_CASE("weak_aug with zero sigma is the identity") {
    AugmentPolicy p;
    p.sigma_weak = 0.0;
    auto rng = sub_stream(1, "t");
    std::vector<double> x = {0.3, -1.2, 4.0};
    CHECK(weak_aug(x, p, rng) == x);
}

TEST_CASE("weak_aug is deterministic given the stream") {
    AugmentPolicy p;
    std::vector<double> x = {0.5, 0.5};
    auto r1 = sub_stream(9, "aug");
    auto r2 = sub_stream(9, "aug");
    CHECK(weak_aug(x, p, r1) == weak_aug(x, p, r2));
}

TEST_CASE("weak_aug noise is mean preserving with the right spread") {
    AugmentPolicy p;
    p.sigma_weak = 0.07;
    auto rng = sub_stream(12, "mc");
    std::vector<double> x = {1.0, -2.0};
    const int N = 100000;
    double sum = 0.0, sq = 0.0;
    for (int k = 0; k < N; ++k) {
        auto v = weak_aug(x, p, rng);
        for (size_t j = 0; j < x.size(); ++j) {
            double d = v[j] - x[j];
            sum += d;
            sq += d * d;
        }
    }
    const double cnt = 2.0 * N;
    double mean = sum / cnt;
    double sd = std::sqrt(sq / cnt - mean * mean);
    CHECK(std::fabs(sd - p.sigma_weak) < 0.02 * p.sigma_weak);
    // mean within 3 standard errors of zero
    CHECK(std::fabs(mean) < 3.0 * p.sigma_weak / std::sqrt(cnt));
}

TEST_CASE("strong_aug identity when all knobs are zero") {
    AugmentPolicy p;
    p.sigma_strong = 0.0;
    p.dropout_prob = 0.0;
    p.scale_jitter = 0.0;
    auto rng = sub_stream(2, "t");
    std::vector<double> x = {0.1, 0.2, 0.3};
    CHECK(strong_aug(x, p, rng) == x);
}

TEST_CASE("strong_aug dropout one zeroes everything") {
    AugmentPolicy p;
    p.sigma_strong = 0.0;
    p.dropout_prob = 1.0;
    p.scale_jitter = 0.0;
    auto rng = sub_stream(3, "t");
    std::vector<double> x = {5.0, -3.0};
    auto v = strong_aug(x, p, rng);
    CHECK(v == std::vector<double>{0.0, 0.0});
}

TEST_CASE("strong_aug noise spread matches sigma_strong") {
    AugmentPolicy p;
    p.sigma_strong = 0.2;
    p.dropout_prob = 0.0;
    p.scale_jitter = 0.0;
    auto rng = sub_stream(4, "mc");
    std::vector<double> x = {0.0, 0.0, 0.0};
    const int N = 100000;
    double sq = 0.0;
    for (int k = 0; k < N; ++k) {
        auto v = strong_aug(x, p, rng);
        for (double d : v) sq += d * d;
    }
    double sd = std::sqrt(sq / (3.0 * N));
    CHECK(std::fabs(sd - p.sigma_strong) < 0.02 * p.sigma_strong);
}

TEST_CASE("sample_ball shrinks to the anchor as the radius vanishes") {
    AugmentPolicy p;
    p.sigma_weak = 0.0;
    p.sigma_strong = 0.0;
    p.dropout_prob = 0.0;
    p.scale_jitter = 0.0;
    p.radius_r = 0.0;
    auto rng = sub_stream(5, "ball");
    std::vector<double> x = {0.4, -0.7};
    auto pts = sample_ball(x, p, rng, 20);
    REQUIRE(pts.size() == 20);
    for (const auto& v : pts) CHECK(v == x);
}

TEST_CASE("sample_ball respects the L1 radius under zero augmentation noise") {
    AugmentPolicy p;
    p.sigma_weak = 0.0;
    p.sigma_strong = 0.0;
    p.dropout_prob = 0.0;
    p.scale_jitter = 0.0;
    p.radius_r = 0.35;
    auto rng = sub_stream(6, "ball");
    std::vector<double> x = {1.0, 2.0, -1.0};
    auto pts = sample_ball(x, p, rng, 100);
    REQUIRE(pts.size() == 100);
    for (const auto& v : pts) {
        CHECK(v.size() == x.size());
        CHECK(l1_dist(v, x) < p.radius_r);
    }
}

TEST_CASE("policy validation") {
    AugmentPolicy p;
    p.sigma_weak = 0.2;
    p.sigma_strong = 0.1;  // weak must not exceed strong
    CHECK_THROWS_AS(validate_policy(p), std::invalid_argument);
    p = AugmentPolicy{};
    p.dropout_prob = 1.5;
    CHECK_THROWS_AS(validate_policy(p), std::invalid_argument);
    p = AugmentPolicy{};
    p.radius_r = 0.0;
    CHECK_THROWS_AS(validate_policy(p), std::invalid_argument);
    CHECK_NOTHROW(validate_policy(AugmentPolicy{}));
}
