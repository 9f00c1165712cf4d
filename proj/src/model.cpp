#include "dac/model.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "dac/rng.hpp"

namespace dac {

ParamGrads zero_grads(const Dims& dims) {
    ParamGrads g;
    g.W1 = Mat(dims.h, dims.d);
    g.b1.assign(dims.h, 0.0);
    g.W2 = Mat(dims.b, dims.h);
    g.b2.assign(dims.b, 0.0);
    g.Wc = Mat(dims.C, dims.b);
    return g;
}

ModelParams init_params(const Dims& dims, uint64_t seed) {
    ModelParams p;
    p.dims = dims;
    p.W1 = Mat(dims.h, dims.d);
    p.b1.assign(dims.h, 0.0);
    p.W2 = Mat(dims.b, dims.h);
    p.b2.assign(dims.b, 0.0);
    p.Wc = Mat(dims.C, dims.b);

    auto rng = sub_stream(seed, "init");
    auto fill = [&rng](Mat& W, int fan_in) {
        double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> unif(-bound, bound);
        for (double& v : W.data) v = unif(rng);
    };
    fill(p.W1, dims.d);
    fill(p.W2, dims.h);
    fill(p.Wc, dims.b);
    return p;
}

ForwardCache forward_cached(const ModelParams& p, std::span<const double> x) {
    const Dims& dm = p.dims;
    if (static_cast<int>(x.size()) != dm.d)
        throw std::invalid_argument("forward: input dimension mismatch");

    ForwardCache c;
    c.x.assign(x.begin(), x.end());
    c.z1.assign(dm.h, 0.0);
    for (int i = 0; i < dm.h; ++i)
        c.z1[i] = p.b1[i] + dot(p.W1.row_span(i), x);
    c.a1 = c.z1;
    for (double& v : c.a1) v = std::max(v, 0.0);

    c.t.assign(dm.b, 0.0);
    for (int i = 0; i < dm.b; ++i)
        c.t[i] = p.b2[i] + dot(p.W2.row_span(i), std::span<const double>(c.a1));

    c.f = c.t;
    c.t_norm = l2_norm(c.t);
    normalize_inplace(c.f);

    // The classifier reads the feature direction, so confidence measures the
    // angular margin against the frozen class vectors rather than the feature
    // norm. This is the role the weight-normalized head plays at full scale.
    c.logits.assign(dm.C, 0.0);
    for (int i = 0; i < dm.C; ++i)
        c.logits[i] = dot(p.Wc.row_span(i), std::span<const double>(c.f));
    c.probs = c.logits;
    softmax_inplace(c.probs);
    return c;
}

ForwardResult forward(const ModelParams& p, std::span<const double> x) {
    ForwardCache c = forward_cached(p, x);
    return {std::move(c.t), std::move(c.f), std::move(c.logits), std::move(c.probs)};
}

std::vector<ForwardResult> forward(const ModelParams& p, const Mat& batch) {
    if (batch.rows == 0) throw std::invalid_argument("forward: empty batch");
    std::vector<ForwardResult> out;
    out.reserve(batch.rows);
    for (int i = 0; i < batch.rows; ++i) out.push_back(forward(p, batch.row_span(i)));
    return out;
}

void predict_all(const ModelParams& p, const Dataset& ds, Mat& probs, Mat& feats) {
    probs = Mat(ds.n(), p.dims.C);
    feats = Mat(ds.n(), p.dims.b);
    for (int i = 0; i < ds.n(); ++i) {
        ForwardResult r = forward(p, ds.features.row_span(i));
        std::copy(r.probs.begin(), r.probs.end(), probs.row(i));
        std::copy(r.feat.begin(), r.feat.end(), feats.row(i));
    }
}

int predict_class(std::span<const double> probs) { return argmax_lowest(probs); }

std::vector<double> smoothed_targets(int label, int C, double eps) {
    std::vector<double> q(C, eps / C);
    q[label] += 1.0 - eps;
    return q;
}

void softmax_vjp(std::span<const double> probs, std::span<const double> d_probs,
                 std::span<double> d_logits_out) {
    double inner = 0.0;
    for (size_t c = 0; c < probs.size(); ++c) inner += d_probs[c] * probs[c];
    for (size_t k = 0; k < probs.size(); ++k)
        d_logits_out[k] = probs[k] * (d_probs[k] - inner);
}

void backward_from(const ModelParams& p, const ForwardCache& cache,
                   const double* d_logits, const double* d_f,
                   bool with_classifier, ParamGrads& g) {
    const Dims& dm = p.dims;

    // Both the classifier and the feature losses sit behind the
    // normalization; collect everything as a gradient on f first.
    std::vector<double> df_total(dm.b, 0.0);
    if (d_logits) {
        for (int c = 0; c < dm.C; ++c) {
            if (with_classifier)
                axpy(d_logits[c], std::span<const double>(cache.f), g.Wc.row_span(c));
            axpy(d_logits[c], p.Wc.row_span(c), std::span<double>(df_total));
        }
    }
    if (d_f) axpy(1.0, std::span<const double>(d_f, dm.b), std::span<double>(df_total));

    std::vector<double> gt(dm.b, 0.0);
    if (cache.t_norm >= 1e-12) {
        // d/dt of t/||t||: (I - f f^T)/||t||
        double fg = dot(std::span<const double>(cache.f), std::span<const double>(df_total));
        for (int i = 0; i < dm.b; ++i)
            gt[i] = (df_total[i] - fg * cache.f[i]) / cache.t_norm;
    }

    for (int i = 0; i < dm.b; ++i) {
        g.b2[i] += gt[i];
        axpy(gt[i], std::span<const double>(cache.a1), g.W2.row_span(i));
    }
    std::vector<double> ga1(dm.h, 0.0);
    for (int i = 0; i < dm.b; ++i)
        for (int j = 0; j < dm.h; ++j) ga1[j] += gt[i] * p.W2.at(i, j);
    for (int j = 0; j < dm.h; ++j) {
        double gz = cache.z1[j] > 0.0 ? ga1[j] : 0.0;
        if (gz == 0.0) continue;
        g.b1[j] += gz;
        axpy(gz, std::span<const double>(cache.x), g.W1.row_span(j));
    }
}

namespace {

double lr_curve(double lr0, double prog, double factor, double expo) {
    return lr0 * std::pow(1.0 + factor * prog, expo);
}

// v <- mu v + (grad + wd * theta); theta <- theta - eta v
void sgd_block(std::span<double> theta, std::span<const double> grad,
               std::span<double> vel, double mu, double wd, double eta) {
    for (size_t i = 0; i < theta.size(); ++i) {
        vel[i] = mu * vel[i] + grad[i] + wd * theta[i];
        theta[i] -= eta * vel[i];
    }
}

}  // namespace

ModelParams train_source(const SourceTrainConfig& cfg, const Dataset& source, uint64_t seed) {
    if (!source.labeled()) throw std::invalid_argument("train_source: dataset has no labels");
    validate_dataset(source);

    Dims dims{source.d(), cfg.hidden, cfg.bottleneck, source.C};
    ModelParams p = init_params(dims, seed);

    // held-out split for the accuracy floor
    std::vector<int> idx(source.n());
    std::iota(idx.begin(), idx.end(), 0);
    auto hrng = sub_stream(seed, "holdout");
    std::shuffle(idx.begin(), idx.end(), hrng);
    int n_hold = static_cast<int>(cfg.holdout * source.n());
    std::vector<int> hold(idx.begin(), idx.begin() + n_hold);
    std::vector<int> train(idx.begin() + n_hold, idx.end());
    if (train.empty()) throw std::invalid_argument("train_source: empty training split");

    ParamGrads vel = zero_grads(dims);
    auto srng = sub_stream(seed, "shuffle");
    const int bs = std::min<int>(cfg.batch_size, static_cast<int>(train.size()));
    const int iters_per_epoch = (static_cast<int>(train.size()) + bs - 1) / bs;
    const long total_iters = static_cast<long>(cfg.epochs) * iters_per_epoch;
    long t = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(train.begin(), train.end(), srng);
        for (int start = 0; start < static_cast<int>(train.size()); start += bs, ++t) {
            int end = std::min<int>(start + bs, static_cast<int>(train.size()));
            int B = end - start;
            ParamGrads grads = zero_grads(dims);
            double loss = 0.0;
            for (int k = start; k < end; ++k) {
                int i = train[k];
                ForwardCache c = forward_cached(p, source.features.row_span(i));
                std::vector<double> q = smoothed_targets((*source.labels)[i], dims.C, cfg.smoothing);
                std::vector<double> d_logits(dims.C);
                for (int cc = 0; cc < dims.C; ++cc) {
                    loss -= q[cc] * safe_log(c.probs[cc]) / B;
                    d_logits[cc] = (c.probs[cc] - q[cc]) / B;
                }
                backward_from(p, c, d_logits.data(), nullptr, true, grads);
            }
            if (!std::isfinite(loss))
                throw TrainingFailure("train_source: non-finite loss at epoch " + std::to_string(epoch));
            double eta = lr_curve(cfg.lr0, total_iters > 0 ? static_cast<double>(t) / total_iters : 0.0,
                                  cfg.lr_factor, cfg.lr_exponent);
            sgd_block(p.W1.data, grads.W1.data, vel.W1.data, cfg.momentum, cfg.weight_decay, eta);
            sgd_block(p.b1, grads.b1, vel.b1, cfg.momentum, cfg.weight_decay, eta);
            sgd_block(p.W2.data, grads.W2.data, vel.W2.data, cfg.momentum, cfg.weight_decay, eta);
            sgd_block(p.b2, grads.b2, vel.b2, cfg.momentum, cfg.weight_decay, eta);
            sgd_block(p.Wc.data, grads.Wc.data, vel.Wc.data, cfg.momentum, cfg.weight_decay, eta);
        }
    }

    if (!hold.empty()) {
        int correct = 0;
        for (int i : hold) {
            ForwardResult r = forward(p, source.features.row_span(i));
            if (predict_class(r.probs) == (*source.labels)[i]) ++correct;
        }
        double acc = static_cast<double>(correct) / hold.size();
        if (acc < cfg.acc_floor)
            throw TrainingFailure("train_source: held-out accuracy " + fmt_g17(acc) +
                                  " below floor " + fmt_g17(cfg.acc_floor));
    }
    return p;
}

namespace {

void write_row(std::ofstream& out, std::span<const double> row) {
    for (size_t j = 0; j < row.size(); ++j) out << (j ? " " : "") << fmt_g17(row[j]);
    out << "\n";
}

}  // namespace

void save_model(const ModelParams& p, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << p.dims.d << " " << p.dims.h << " " << p.dims.b << " " << p.dims.C << "\n";
    for (int i = 0; i < p.dims.h; ++i) write_row(out, p.W1.row_span(i));
    write_row(out, p.b1);
    for (int i = 0; i < p.dims.b; ++i) write_row(out, p.W2.row_span(i));
    write_row(out, p.b2);
    for (int i = 0; i < p.dims.C; ++i) write_row(out, p.Wc.row_span(i));
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

ModelParams load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    Dims dm;
    if (!(in >> dm.d >> dm.h >> dm.b >> dm.C) || dm.d < 1 || dm.h < 1 || dm.b < 1 || dm.C < 1)
        throw std::runtime_error("model file: bad header in '" + path + "'");
    ModelParams p;
    p.dims = dm;
    p.W1 = Mat(dm.h, dm.d);
    p.b1.assign(dm.h, 0.0);
    p.W2 = Mat(dm.b, dm.h);
    p.b2.assign(dm.b, 0.0);
    p.Wc = Mat(dm.C, dm.b);
    auto read_all = [&in, &path](std::span<double> dst) {
        for (double& v : dst)
            if (!(in >> v)) throw std::runtime_error("model file: truncated '" + path + "'");
    };
    read_all(p.W1.data);
    read_all(p.b1);
    read_all(p.W2.data);
    read_all(p.b2);
    read_all(p.Wc.data);
    double extra;
    if (in >> extra) throw std::runtime_error("model file: trailing values in '" + path + "'");
    return p;
}

}  // namespace dac
