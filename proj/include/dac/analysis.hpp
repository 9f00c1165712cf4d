#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "dac/augment.hpp"
#include "dac/bank.hpp"
#include "dac/dataset.hpp"
#include "dac/model.hpp"
#include "dac/pseudo.hpp"

namespace dac {

/// Empirical estimates of the measurable bound ingredients. The expansion
/// constants and the optimal-model risk have no estimator and are left out;
/// the report puts the measured terms side by side instead of asserting the
/// inequality.
struct BoundReport {
    double consistency_error = 0.0;
    double consistency_error_source_like = 0.0;
    double disagreement = 0.0;  // P[h != h_pl]
    double eps_DS_pl = 0.0;     // pseudo-labeler error on the source-like split
    double eps_DS = 0.0;        // model error on the source-like split
    double eps_DT = 0.0;        // model error on the whole target set
    std::vector<double> proxy_div;  // per class; NaN marks a skipped class
    double lipschitz_hat = 0.0;
    double tau_claim = 0.0;
};

/// Monte-Carlo consistency error: the fraction of samples whose prediction
/// flips for at least one of n_aug draws from the transformation ball. An
/// optional subset restricts which samples are measured; an empty subset of
/// a nonempty dataset means "measure everything".
double consistency_error(const ModelParams& params, const Dataset& ds,
                         const AugmentPolicy& policy, int n_aug, uint64_t seed,
                         std::span<const int> subset = {});

struct SplitErrors {
    double disagreement = 0.0;
    double eps_DS_pl = 0.0;
    double eps_DS = 0.0;
    double eps_DT = 0.0;
};

/// Requires ground-truth labels. Rates over empty splits are reported as 0.
SplitErrors disagreement_and_split_errors(const ModelParams& params,
                                          const PseudoLabelState& pseudo,
                                          const Dataset& ds, const MemoryBankState& bank);

/// Proxy divergence 2(1 - 2 err) in [0,2] from a linear probe separating
/// source-like from target-specific bank features of one class. Returns NaN
/// when either group has fewer than 4 samples.
double proxy_divergence(const MemoryBankState& bank, int cls, uint64_t seed);

/// Max over sampled dataset pairs of ||fn(x)-fn(x')||_1 / ||x-x'||_1. A
/// sampling-based lower bound on the true Lipschitz constant.
double lipschitz_hat(const std::function<std::vector<double>(std::span<const double>)>& fn,
                     const Dataset& ds, int n_pairs, uint64_t seed);

/// L-hat of the probability map x -> probs(x), and the induced threshold
/// tau_claim = min(1 - 1e-6, L r / 4 + 1/2).
std::pair<double, double> lipschitz_and_threshold(const ModelParams& params, const Dataset& ds,
                                                  const AugmentPolicy& policy, int n_pairs,
                                                  uint64_t seed);

BoundReport bound_report(const ModelParams& params, const Dataset& ds,
                         const MemoryBankState& bank, const PseudoLabelState& pseudo,
                         const AugmentPolicy& policy, int n_aug, int n_pairs, uint64_t seed);

/// Flat key,value CSV.
void write_bound_report_csv(std::ostream& out, const BoundReport& rep);

}  // namespace dac
