#include "dac/trainer.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "dac/rng.hpp"

namespace dac {

double lr_schedule(double lr0, double p, double lr_factor, double lr_exponent) {
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("lr_schedule: p outside [0,1]");
    return lr0 * std::pow(1.0 + lr_factor * p, lr_exponent);
}

namespace {

void sgd_block(std::span<double> theta, std::span<const double> grad,
               std::span<double> vel, double mu, double wd, double eta) {
    for (size_t i = 0; i < theta.size(); ++i) {
        vel[i] = mu * vel[i] + grad[i] + wd * theta[i];
        theta[i] -= eta * vel[i];
    }
}

LossReport mean_report(const std::vector<LossReport>& reports) {
    LossReport m;
    if (reports.empty()) return m;
    for (const auto& r : reports) {
        m.total += r.total;
        m.con += r.con;
        m.self += r.self;
        m.mmd += r.mmd;
        for (const auto& f : r.degenerate_flags)
            if (m.degenerate_flags.empty() || m.degenerate_flags.back() != f)
                m.degenerate_flags.push_back(f);
    }
    double k = static_cast<double>(reports.size());
    m.total /= k;
    m.con /= k;
    m.self /= k;
    m.mmd /= k;
    m.n_source_like = reports.back().n_source_like;
    m.n_target_specific = reports.back().n_target_specific;
    return m;
}

}  // namespace

AdaptResult adapt(const AdaptConfig& cfg, const ModelParams& source, const Dataset& target) {
    const int n = target.n();
    if (cfg.epochs > 0 && cfg.batch_size > n)
        throw std::invalid_argument("adapt: batch_size > n");
    if (cfg.tau_c <= 0.0 || cfg.tau_c >= 1.0)
        throw std::invalid_argument("adapt: tau_c outside (0,1)");
    if (cfg.K < 1 || cfg.K > n) throw std::invalid_argument("adapt: K outside [1,n]");

    AdaptResult res;
    res.params = source;
    if (cfg.epochs == 0) return res;

    const Dims dims = source.dims;
    ModelParams& params = res.params;

    res.pseudo = update_pseudo_labels(params, target);
    res.bank = init_bank(params, target, res.pseudo.labels, cfg.m, cfg.renorm_bank,
                         cfg.renorm_centroids);
    MemoryBankState& bank = res.bank;

    auto shuffle_rng = sub_stream(cfg.seed, "shuffle");
    auto aug_rng = sub_stream(cfg.seed, "augment");

    ParamGrads vel = zero_grads(dims);
    const int iters_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
    const long total_iters = static_cast<long>(cfg.epochs) * iters_per_epoch;
    const long omega_ramp = std::max(1L, total_iters / 10);
    long t = 0;

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);

    const int warmup = std::clamp(cfg.warmup_epochs, 0, cfg.epochs);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (epoch > 0) res.pseudo = update_pseudo_labels(params, target, &res.pseudo);
        const bool in_warmup = cfg.scheme != Scheme::SelfOnly && epoch < warmup;
        if (cfg.scheme != Scheme::SelfOnly && epoch == warmup && warmup > 0) {
            // divide-and-contrast phase: rebuild the bank from the warmed-up
            // extractor, as the initialization does from the source extractor
            bank = init_bank(params, target, res.pseudo.labels, cfg.m, cfg.renorm_bank,
                             cfg.renorm_centroids);
        }
        refresh_target_specific_classes(bank, res.pseudo.labels);
        class_centroids(bank);

        std::shuffle(order.begin(), order.end(), shuffle_rng);
        std::vector<LossReport> reports;
        reports.reserve(iters_per_epoch);

        for (int start = 0; start < n; start += cfg.batch_size, ++t) {
            int end = std::min(start + cfg.batch_size, n);
            int B = end - start;

            LossBatch batch;
            batch.samples.resize(B);
            std::vector<ForwardCache> cache_w(B), cache_s(B);
            for (int k = 0; k < B; ++k) {
                int i = order[start + k];
                auto x = target.features.row_span(i);
                std::vector<double> xw = weak_aug(x, cfg.policy, aug_rng);
                std::vector<double> xs = strong_aug(x, cfg.policy, aug_rng);
                cache_w[k] = forward_cached(params, xw);
                cache_s[k] = forward_cached(params, xs);
                auto& s = batch.samples[k];
                s.index = i;
                s.f_w = cache_w[k].f;
                s.f_s = cache_s[k].f;
                s.p_w = cache_w[k].probs;
                s.p_s = cache_s[k].probs;
                s.pseudo_label = res.pseudo.labels[i];
            }

            // Algorithm order: bank momentum update, then division update,
            // then losses see the refreshed bank.
            Mat batch_probs(B, dims.C);
            std::vector<int> batch_rows(B);
            for (int k = 0; k < B; ++k) {
                batch_rows[k] = batch.samples[k].index;
                momentum_update(bank, batch.samples[k].index, batch.samples[k].f_w);
                std::copy(batch.samples[k].p_w.begin(), batch.samples[k].p_w.end(),
                          batch_probs.row(k));
            }
            update_division_rows(bank, batch_rows, batch_probs, cfg.tau_c, res.pseudo.labels);
            class_centroids(bank);
            for (int k = 0; k < B; ++k) {
                batch.samples[k].split = bank.split[batch.samples[k].index];
                batch.samples[k].split_class = bank.split_class[batch.samples[k].index];
            }

            LossOptions opt;
            opt.alpha = cfg.alpha;
            opt.beta = cfg.beta;
            opt.tau = cfg.tau;
            opt.K = cfg.K;
            opt.mmd = cfg.mmd_kind;
            opt.scheme = in_warmup ? Scheme::SelfOnly : cfg.scheme;
            opt.omega = cfg.omega * std::min(1.0, static_cast<double>(t) / omega_ramp);

            std::vector<SampleGrads> sgrads;
            LossReport rep = total_loss(batch, bank, opt, &sgrads);
            if (!std::isfinite(rep.total))
                throw TrainingFailure("adapt: non-finite loss at epoch " + std::to_string(epoch) +
                                      " iteration " + std::to_string(t));
            reports.push_back(rep);

            ParamGrads grads = zero_grads(dims);
            std::vector<double> d_logits(dims.C);
            for (int k = 0; k < B; ++k) {
                softmax_vjp(cache_w[k].probs, sgrads[k].d_pw, d_logits);
                backward_from(params, cache_w[k], d_logits.data(), sgrads[k].d_fw.data(),
                              false, grads);
                softmax_vjp(cache_s[k].probs, sgrads[k].d_ps, d_logits);
                backward_from(params, cache_s[k], d_logits.data(), sgrads[k].d_fs.data(),
                              false, grads);
            }

            double p = total_iters > 0 ? static_cast<double>(t) / total_iters : 0.0;
            double eta = lr_schedule(cfg.lr0, p, cfg.lr_factor, cfg.lr_exponent);
            if (cfg.lr_drop_epoch > 0 && epoch >= cfg.lr_drop_epoch) eta *= 0.1;
            sgd_block(params.W1.data, grads.W1.data, vel.W1.data, cfg.momentum_sgd,
                      cfg.weight_decay, eta);
            sgd_block(params.b1, grads.b1, vel.b1, cfg.momentum_sgd, cfg.weight_decay, eta);
            sgd_block(params.W2.data, grads.W2.data, vel.W2.data, cfg.momentum_sgd,
                      cfg.weight_decay, eta);
            sgd_block(params.b2, grads.b2, vel.b2, cfg.momentum_sgd, cfg.weight_decay, eta);
        }

        // The threshold division must keep at least the top-percent floor of
        // confident samples per class; below that the class centroids lose
        // their footing, so the division is re-seeded from current
        // predictions and the epoch flagged.
        const int floor_n = dims.C * std::max(1, static_cast<int>(0.05 * n / dims.C));
        if (bank.n_source_like() < floor_n) {
            Mat probs, feats;
            predict_all(params, target, probs, feats);
            init_division_top_percent(bank, probs, res.pseudo.labels);
            class_centroids(bank);
            reports.back().degenerate_flags.push_back("division_reseeded");
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.losses = mean_report(reports);
        rec.n_source_like = bank.n_source_like();
        if (target.labeled()) {
            EvalResult ev = evaluate(params, target, &bank);
            rec.acc_target = ev.accuracy;
            rec.acc_source_like = ev.acc_source_like;
            rec.acc_target_specific = ev.acc_target_specific;
        } else {
            rec.acc_target = rec.acc_source_like = rec.acc_target_specific =
                std::numeric_limits<double>::quiet_NaN();
        }
        res.history.push_back(std::move(rec));
    }
    return res;
}

EvalResult evaluate(const ModelParams& params, const Dataset& ds, const MemoryBankState* bank) {
    if (!ds.labeled()) throw std::invalid_argument("evaluate: dataset has no labels");
    const int C = params.dims.C;
    EvalResult out;
    out.per_class.assign(C, 0.0);
    std::vector<int> class_total(C, 0), class_hit(C, 0);
    int hit = 0, sl_hit = 0, sl_total = 0, ts_hit = 0, ts_total = 0;
    for (int i = 0; i < ds.n(); ++i) {
        ForwardResult r = forward(params, ds.features.row_span(i));
        int pred = predict_class(r.probs);
        int y = (*ds.labels)[i];
        bool ok = pred == y;
        hit += ok;
        class_total[y]++;
        class_hit[y] += ok;
        if (bank) {
            if (bank->split[i] == Split::SourceLike) {
                sl_total++;
                sl_hit += ok;
            } else {
                ts_total++;
                ts_hit += ok;
            }
        }
    }
    out.accuracy = static_cast<double>(hit) / ds.n();
    for (int c = 0; c < C; ++c)
        out.per_class[c] = class_total[c] > 0
                               ? static_cast<double>(class_hit[c]) / class_total[c]
                               : std::numeric_limits<double>::quiet_NaN();
    out.acc_source_like = sl_total > 0 ? static_cast<double>(sl_hit) / sl_total
                                       : std::numeric_limits<double>::quiet_NaN();
    out.acc_target_specific = ts_total > 0 ? static_cast<double>(ts_hit) / ts_total
                                           : std::numeric_limits<double>::quiet_NaN();
    return out;
}

void write_metrics_csv(std::ostream& out, const std::vector<EpochRecord>& history) {
    out << "epoch,acc_target,acc_source_like_split,acc_target_specific_split,"
           "loss_total,loss_con,loss_self,loss_mmd,n_source_like\n";
    for (const auto& r : history) {
        out << r.epoch << "," << fmt_g17(r.acc_target) << "," << fmt_g17(r.acc_source_like)
            << "," << fmt_g17(r.acc_target_specific) << "," << fmt_g17(r.losses.total) << ","
            << fmt_g17(r.losses.con) << "," << fmt_g17(r.losses.self) << ","
            << fmt_g17(r.losses.mmd) << "," << r.n_source_like << "\n";
    }
}

void write_feature_dump(std::ostream& out, const MemoryBankState& bank,
                        const std::vector<int>& pseudo_labels) {
    out << "idx";
    for (int j = 0; j < bank.Z.cols; ++j) out << ",z" << j;
    out << ",split,split_class,pseudo_label\n";
    for (int i = 0; i < bank.n(); ++i) {
        out << i;
        for (int j = 0; j < bank.Z.cols; ++j) out << "," << fmt_g17(bank.Z.at(i, j));
        out << "," << (bank.split[i] == Split::SourceLike ? "source_like" : "target_specific")
            << "," << bank.split_class[i] << "," << pseudo_labels[i] << "\n";
    }
}

}  // namespace dac
