#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dac/dataset.hpp"
#include "dac/linalg.hpp"
#include "dac/model.hpp"

namespace dac {

enum class Split : uint8_t { SourceLike, TargetSpecific };

/// Momentum memory bank: one stored unit feature per target sample, the
/// source-like / target-specific division, and the source-like class
/// centroids. Single writer; reads happen between mutations.
struct MemoryBankState {
    Mat Z;                          // n x b, unit rows
    std::vector<Split> split;       // n
    std::vector<int> split_class;   // prediction class (source-like) or pseudo-label
    double momentum = 0.2;
    Mat W;                          // C x b centroids
    bool renorm_bank = true;        // renormalize rows after the momentum blend
    bool renorm_centroids = true;   // renormalize centroid means
    std::vector<uint8_t> centroid_carried;  // per class: W row was carried over

    int n() const { return Z.rows; }
    int C() const { return W.rows; }
    int n_source_like() const;
    int n_target_specific() const { return n() - n_source_like(); }
};

/// Bank from a forward pass of `params` over the whole dataset; division
/// seeded with the top-percent rule, centroids from the seeded division.
MemoryBankState init_bank(const ModelParams& params, const Dataset& ds,
                          const std::vector<int>& pseudo_labels,
                          double momentum = 0.2, bool renorm_bank = true,
                          bool renorm_centroids = true);

/// z_i <- m z_i + (1-m) f, renormalized when renorm_bank is set.
void momentum_update(MemoryBankState& bank, int index, std::span<const double> f);

/// Seeds the division with the N = max(1, floor(0.05 n / C)) highest-probability
/// samples per class. Classes claim candidates in rounds; a sample wanted by
/// several classes at once goes to the class where its probability is higher
/// (ties to the lower class), and losing classes refill from their next
/// candidates. Everything else becomes target-specific under its pseudo-label.
void init_division_top_percent(MemoryBankState& bank, const Mat& probs_w,
                               const std::vector<int>& pseudo_labels);

/// Threshold division: source-like with class argmax_c p[c] iff max >= tau_c,
/// otherwise target-specific under the pseudo-label.
void update_division(MemoryBankState& bank, const Mat& probs_w, double tau_c,
                     const std::vector<int>& pseudo_labels);

/// Same rule applied to a subset of rows (the per-iteration batch update).
void update_division_rows(MemoryBankState& bank, std::span<const int> rows,
                          const Mat& probs_rows, double tau_c,
                          const std::vector<int>& pseudo_labels);

/// Re-tags target-specific rows with fresh pseudo-labels (epoch head).
void refresh_target_specific_classes(MemoryBankState& bank, const std::vector<int>& pseudo_labels);

/// Recomputes W from the source-like rows. A class with no source-like
/// samples (or a degenerate mean) keeps its previous row and is flagged.
void class_centroids(MemoryBankState& bank);

/// Indices of the K bank rows with the largest cosine to f, searched over all
/// rows including the anchor's own; ties to the lower index.
std::vector<int> knn(const MemoryBankState& bank, std::span<const double> f, int K);

}  // namespace dac
