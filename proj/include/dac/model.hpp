#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dac/dataset.hpp"
#include "dac/linalg.hpp"

namespace dac {

struct Dims {
    int d = 2;
    int h = 64;
    int b = 32;
    int C = 2;
};

/// Feature extractor (d -> h ReLU -> b) plus a bias-free linear classifier
/// (b -> C). During adaptation only the extractor is trainable; the
/// classifier stays frozen.
struct ModelParams {
    Dims dims;
    Mat W1;                   // h x d
    std::vector<double> b1;   // h
    Mat W2;                   // b x h
    std::vector<double> b2;   // b
    Mat Wc;                   // C x b, no bias
};

/// One forward evaluation. The classifier and the feature-space losses both
/// read the unit-norm bottleneck direction, so inner products are cosines
/// everywhere and confidence reflects the angular margin; the raw bottleneck
/// is returned alongside.
struct ForwardResult {
    std::vector<double> bottleneck;  // b
    std::vector<double> feat;        // b, unit norm
    std::vector<double> logits;      // C
    std::vector<double> probs;       // C
};

/// Forward pass with everything the backward pass needs.
struct ForwardCache {
    std::vector<double> x;       // input as seen by the net
    std::vector<double> z1, a1;  // hidden pre/post ReLU
    std::vector<double> t;       // bottleneck
    std::vector<double> f;       // normalized bottleneck
    double t_norm = 0.0;
    std::vector<double> logits, probs;
};

/// Gradient (or SGD velocity) container matching ModelParams. The classifier
/// block is only touched by source training.
struct ParamGrads {
    Mat W1;
    std::vector<double> b1;
    Mat W2;
    std::vector<double> b2;
    Mat Wc;
};

ParamGrads zero_grads(const Dims& dims);

/// Uniform fan-in init, biases zero.
ModelParams init_params(const Dims& dims, uint64_t seed);

ForwardResult forward(const ModelParams& p, std::span<const double> x);
std::vector<ForwardResult> forward(const ModelParams& p, const Mat& batch);
ForwardCache forward_cached(const ModelParams& p, std::span<const double> x);

/// Batched forward over a dataset: probs is n x C, feats is n x b (unit rows).
void predict_all(const ModelParams& p, const Dataset& ds, Mat& probs, Mat& feats);

/// argmax of probs, ties to the lowest class index.
int predict_class(std::span<const double> probs);

/// Label-smoothed target: 1-eps+eps/C on the class, eps/C elsewhere.
std::vector<double> smoothed_targets(int label, int C, double eps);

/// d(loss)/d(probs) -> d(loss)/d(logits) through the softmax.
void softmax_vjp(std::span<const double> probs, std::span<const double> d_probs,
                 std::span<double> d_logits_out);

/// Accumulates parameter gradients from upstream gradients in logit space
/// (d_logits, may be null) and on the normalized feature (d_f, may be null).
/// The classifier block is accumulated only when with_classifier is set.
void backward_from(const ModelParams& p, const ForwardCache& cache,
                   const double* d_logits, const double* d_f,
                   bool with_classifier, ParamGrads& g);

struct SourceTrainConfig {
    double lr0 = 0.05;
    int epochs = 50;
    int batch_size = 64;
    double holdout = 0.2;      // held-out fraction for the accuracy floor
    double acc_floor = 0.9;
    double smoothing = 0.1;    // label smoothing eps
    double momentum = 0.9;
    double weight_decay = 5e-4;
    double lr_factor = 15.0;
    double lr_exponent = -0.75;
    int hidden = 64;
    int bottleneck = 32;
};

struct TrainingFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Supervised source training with label smoothing; throws TrainingFailure
/// if the held-out accuracy floor is not reached or the loss goes non-finite.
ModelParams train_source(const SourceTrainConfig& cfg, const Dataset& source, uint64_t seed);

/// Text format: header "d h b C", then W1, b1, W2, b2, Wc row-major with 17
/// significant digits. Round trips are exact.
void save_model(const ModelParams& p, const std::string& path);
ModelParams load_model(const std::string& path);

}  // namespace dac
