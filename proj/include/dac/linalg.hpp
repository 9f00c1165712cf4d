#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

namespace dac {

/// Dense row-major matrix of doubles. Small helper, not a linear algebra
/// library; everything in this project is desk scale.
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Mat() = default;
    Mat(int r, int c, double fill = 0.0) : rows(r), cols(c), data(static_cast<size_t>(r) * c, fill) {}

    double* row(int i) { return data.data() + static_cast<size_t>(i) * cols; }
    const double* row(int i) const { return data.data() + static_cast<size_t>(i) * cols; }
    std::span<double> row_span(int i) { return {row(i), static_cast<size_t>(cols)}; }
    std::span<const double> row_span(int i) const { return {row(i), static_cast<size_t>(cols)}; }

    double& at(int i, int j) { return data[static_cast<size_t>(i) * cols + j]; }
    double at(int i, int j) const { return data[static_cast<size_t>(i) * cols + j]; }

    bool operator==(const Mat&) const = default;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double l1_norm(std::span<const double> a) {
    double s = 0.0;
    for (double v : a) s += std::fabs(v);
    return s;
}

inline double l2_norm(std::span<const double> a) {
    return std::sqrt(dot(a, a));
}

inline double l1_dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
    return s;
}

// y += c * x
inline void axpy(double c, std::span<const double> x, std::span<double> y) {
    for (size_t i = 0; i < x.size(); ++i) y[i] += c * x[i];
}

/// Normalizes to unit L2 norm in place; a vector with norm below 1e-12 is
/// replaced by the first basis vector so callers always see a unit vector.
inline void normalize_inplace(std::span<double> v) {
    double n = l2_norm(v);
    if (n < 1e-12) {
        std::fill(v.begin(), v.end(), 0.0);
        if (!v.empty()) v[0] = 1.0;
        return;
    }
    for (double& x : v) x /= n;
}

/// argmax with ties broken toward the lowest index.
inline int argmax_lowest(std::span<const double> v) {
    int best = 0;
    for (size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = static_cast<int>(i);
    return best;
}

inline void softmax_inplace(std::span<double> v) {
    double m = *std::max_element(v.begin(), v.end());
    double s = 0.0;
    for (double& x : v) {
        x = std::exp(x - m);
        s += x;
    }
    for (double& x : v) x /= s;
}

inline double log_sum_exp(std::span<const double> v) {
    double m = *std::max_element(v.begin(), v.end());
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

/// log(1 + e^u) without overflow.
inline double softplus(double u) {
    if (u > 0.0) return u + std::log1p(std::exp(-u));
    return std::log1p(std::exp(u));
}

inline double sigmoid(double u) {
    if (u >= 0.0) {
        double e = std::exp(-u);
        return 1.0 / (1.0 + e);
    }
    double e = std::exp(u);
    return e / (1.0 + e);
}

/// log with the project-wide 1e-12 clamp.
inline double safe_log(double p) {
    return std::log(std::max(p, 1e-12));
}

/// 17 significant digits: enough for exact double round trips.
inline std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace dac
