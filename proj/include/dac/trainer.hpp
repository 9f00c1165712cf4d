#pragma once

#include <cstdint>
#include <iosfwd>

#include "dac/augment.hpp"
#include "dac/bank.hpp"
#include "dac/dataset.hpp"
#include "dac/losses.hpp"
#include "dac/model.hpp"
#include "dac/pseudo.hpp"

namespace dac {

struct AdaptConfig {
    double tau_c = 0.95;
    double alpha = 0.5;
    double beta = 0.5;
    int K = 5;
    double m = 0.2;       // bank momentum
    double tau = 0.05;    // contrastive / EMMD temperature
    double omega = 1.0;   // entropy weight, ramped over the first 10% of iterations
    double lr0 = 0.02;
    double momentum_sgd = 0.9;
    double weight_decay = 5e-4;
    int batch_size = 64;
    int epochs = 30;
    int warmup_epochs = 5;  // self-training-only prefix before dividing
    uint64_t seed = 0;
    Scheme scheme = Scheme::Dac;
    MmdKind mmd_kind = MmdKind::Emmd;
    double lr_exponent = -0.75;
    double lr_factor = 15.0;
    int lr_drop_epoch = 0;  // 0: off; otherwise multiply lr by 0.1 from that epoch on
    bool renorm_bank = true;
    bool renorm_centroids = true;
    AugmentPolicy policy;
};

/// lr0 * (1 + lr_factor * p)^lr_exponent for progress p in [0,1].
double lr_schedule(double lr0, double p, double lr_factor, double lr_exponent);

struct EpochRecord {
    int epoch = 0;
    LossReport losses;  // epoch means of the per-iteration reports
    double acc_target = 0.0;
    double acc_source_like = 0.0;
    double acc_target_specific = 0.0;
    int n_source_like = 0;
};

struct AdaptResult {
    ModelParams params;
    std::vector<EpochRecord> history;
    MemoryBankState bank;
    PseudoLabelState pseudo;
};

/// The full adaptation loop. The first warmup_epochs run self-training only
/// to reach preliminary class-wise adaptation; the bank and division are then
/// re-initialized from the warmed-up extractor and the divide-and-contrast
/// phase begins. Per batch the two augmented views are forwarded, the bank
/// rows momentum-updated, the batch rows re-divided, and one SGD step taken
/// on the extractor only.
AdaptResult adapt(const AdaptConfig& cfg, const ModelParams& source, const Dataset& target);

struct EvalResult {
    double accuracy = 0.0;
    std::vector<double> per_class;
    double acc_source_like = 0.0;     // NaN when the split is empty or no bank given
    double acc_target_specific = 0.0;
};

EvalResult evaluate(const ModelParams& params, const Dataset& ds,
                    const MemoryBankState* bank = nullptr);

/// metrics.csv body, one row per epoch. Stable formatting so identical runs
/// produce identical bytes.
void write_metrics_csv(std::ostream& out, const std::vector<EpochRecord>& history);

/// Per-epoch feature dump: idx, bank row, split, split_class, pseudo_label.
void write_feature_dump(std::ostream& out, const MemoryBankState& bank,
                        const std::vector<int>& pseudo_labels);

}  // namespace dac
