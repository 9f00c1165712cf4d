#pragma once

#include <vector>

#include "dac/dataset.hpp"
#include "dac/linalg.hpp"
#include "dac/model.hpp"

namespace dac {

struct PseudoLabelState {
    Mat centroids;            // C x b
    std::vector<int> labels;  // n
    int epoch = 0;
};

/// Soft-weighted class centroids: c_k = sum_i f_i p_i[k] / sum_i p_i[k].
/// A class with zero total weight falls back to the global feature mean.
Mat init_centroids(const Mat& probs, const Mat& feats);

/// Nearest centroid by cosine similarity, ties to the lowest class. A zero
/// centroid row is never selected unless every row is zero (an error).
std::vector<int> assign_labels(const Mat& feats, const Mat& centroids);

/// Class-conditional means; a class with no assigned samples keeps its row
/// from `prev`.
Mat refine_centroids(const Mat& feats, const std::vector<int>& labels, int C, const Mat& prev);

/// One epoch refresh: predict_all, init_centroids, assign, refine, assign.
PseudoLabelState update_pseudo_labels(const ModelParams& params, const Dataset& ds,
                                      const PseudoLabelState* prev = nullptr);

}  // namespace dac
