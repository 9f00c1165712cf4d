#pragma once

#include <span>
#include <string>
#include <vector>

#include "dac/bank.hpp"
#include "dac/linalg.hpp"

namespace dac {

enum class MmdKind { Emmd, Lmmd, None };
enum class Scheme { Dac, SchemeS, SchemeT, SelfOnly };

/// One anchor in a training batch: weak/strong view features (unit norm),
/// probabilities, and its current division snapshot. Bank rows, centroids
/// and MMD prototypes are constants under differentiation; gradients flow
/// only through f_w, f_s, p_w, p_s.
struct LossSample {
    int index = -1;               // bank row of the anchor
    std::vector<double> f_w, f_s; // b, unit norm
    std::vector<double> p_w, p_s; // C
    Split split = Split::TargetSpecific;
    int split_class = 0;
    int pseudo_label = 0;
};

struct LossBatch {
    std::vector<LossSample> samples;
};

struct LossOptions {
    double alpha = 0.5;
    double beta = 0.5;
    double omega = 1.0;
    double tau = 0.05;
    int K = 5;
    MmdKind mmd = MmdKind::Emmd;
    Scheme scheme = Scheme::Dac;
};

struct LossReport {
    double total = 0.0, con = 0.0, self = 0.0, mmd = 0.0;
    int n_source_like = 0, n_target_specific = 0;
    std::vector<std::string> degenerate_flags;
};

/// Per-sample gradients in the losses' natural variables (probabilities and
/// normalized features); the model backward converts them to logit space.
struct SampleGrads {
    std::vector<double> d_pw, d_ps;  // C
    std::vector<double> d_fw, d_fs;  // b
};

std::vector<SampleGrads> zero_sample_grads(const LossBatch& batch);

/// Pseudo-label cross entropy on both views, batch diversity KL against the
/// uniform distribution, and omega-weighted mean Shannon entropy.
double self_training_loss(const LossBatch& batch, double omega,
                          std::vector<SampleGrads>* grads = nullptr);

/// Positive prototype and negatives for one anchor. Negative entries point
/// into the bank (rows of Z or W), valid until the bank is next mutated.
struct Prototypes {
    std::vector<double> k_plus;
    std::vector<std::span<const double>> negatives;
    bool kplus_uses_strong = false;  // k+ carries f_s/(K+1), so gradient flows there
};

Prototypes build_prototypes(const LossSample& s, const MemoryBankState& bank, int K,
                            Scheme scheme = Scheme::Dac);

/// Per-sample InfoNCE given the positive logit and negative logits (already
/// divided by tau). Fills softmax weights over [pos, negs] when asked.
double info_nce(double pos_logit, std::span<const double> neg_logits,
                std::vector<double>* softmax_weights = nullptr);

double contrastive_loss(const LossBatch& batch, const MemoryBankState& bank, double tau,
                        int K, Scheme scheme = Scheme::Dac,
                        std::vector<SampleGrads>* grads = nullptr);

/// Cross-split prototype pair for the MMD losses. skipped is set when the
/// opposite split has no samples of the anchor's class.
struct MmdPrototypes {
    bool skipped = true;
    std::vector<double> q_plus, q_minus;
};

MmdPrototypes mmd_prototypes(const LossSample& s, const MemoryBankState& bank);

double lmmd_loss(const LossBatch& batch, const MemoryBankState& bank,
                 std::vector<SampleGrads>* grads = nullptr, int* n_skipped = nullptr);

double emmd_loss(const LossBatch& batch, const MemoryBankState& bank, double tau,
                 std::vector<SampleGrads>* grads = nullptr, int* n_skipped = nullptr);

/// total = con + alpha * self + beta * mmd, with the scheme variants:
/// SchemeS/SchemeT force one contrastive branch for every anchor, SelfOnly
/// drops the contrastive and MMD terms entirely.
LossReport total_loss(const LossBatch& batch, const MemoryBankState& bank,
                      const LossOptions& opt, std::vector<SampleGrads>* grads = nullptr);

}  // namespace dac
