#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dac/linalg.hpp"

namespace dac {

/// Indexed collection of feature vectors with optional class labels and a
/// domain tag. Labels, when present, cover {0..C-1} with no empty class.
struct Dataset {
    Mat features;  // n x d
    std::optional<std::vector<int>> labels;
    std::string domain_tag = "target";
    int C = 0;  // class count; 0 when unlabeled

    int n() const { return features.rows; }
    int d() const { return features.cols; }
    bool labeled() const { return labels.has_value(); }
};

/// Throws std::invalid_argument when the Dataset invariants do not hold.
void validate_dataset(const Dataset& ds);

/// Two interleaved half circles (C=2, d=2): class 0 on the upper arc
/// (cos t, sin t), class 1 on (1-cos t, 0.5-sin t), t in [0,pi]. Gaussian
/// noise is added per coordinate before the whole cloud is rotated about
/// the origin.
Dataset gen_two_moons(int n, double noise, double rotation_deg, uint64_t seed,
                      std::string domain_tag = "source");

/// Rotates all rows of a 2-column matrix about the origin.
void rotate2d_inplace(Mat& pts, double deg);

/// Cluster means used by gen_gauss_blobs: radius-2 circle in the first two
/// dimensions for d >= 2, points 2c on the line for d = 1.
Mat blob_means(int C, int d);

/// C Gaussian clusters on distinct means, optionally translated by `shift`
/// (the covariate-shifted variant). Class sizes differ by at most one.
Dataset gen_gauss_blobs(int n, int C, int d, const std::vector<double>& shift,
                        double spread, uint64_t seed,
                        std::string domain_tag = "source");

/// CSV with header "x0,...,x{d-1},label,domain". Empty label cells mean an
/// unlabeled dataset; features are written with 17 significant digits so
/// save/load round trips are exact.
Dataset load_csv(const std::string& path);
void save_csv(const Dataset& ds, const std::string& path);

/// Parse failures carry the 1-based data row number.
struct CsvError : std::runtime_error {
    int row;
    CsvError(int row_, const std::string& msg)
        : std::runtime_error("row " + std::to_string(row_) + ": " + msg), row(row_) {}
};

}  // namespace dac
