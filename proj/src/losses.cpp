#include "dac/losses.hpp"

#include <stdexcept>

namespace dac {

std::vector<SampleGrads> zero_sample_grads(const LossBatch& batch) {
    std::vector<SampleGrads> g(batch.samples.size());
    for (size_t i = 0; i < batch.samples.size(); ++i) {
        const auto& s = batch.samples[i];
        g[i].d_pw.assign(s.p_w.size(), 0.0);
        g[i].d_ps.assign(s.p_s.size(), 0.0);
        g[i].d_fw.assign(s.f_w.size(), 0.0);
        g[i].d_fs.assign(s.f_s.size(), 0.0);
    }
    return g;
}

double self_training_loss(const LossBatch& batch, double omega,
                          std::vector<SampleGrads>* grads) {
    const int B = static_cast<int>(batch.samples.size());
    if (B == 0) throw std::invalid_argument("self_training_loss: empty batch");
    const int C = static_cast<int>(batch.samples[0].p_w.size());

    // cross entropy against the pseudo one-hot, both views
    double ce = 0.0;
    for (const auto& s : batch.samples)
        ce -= (safe_log(s.p_w[s.pseudo_label]) + safe_log(s.p_s[s.pseudo_label])) / B;

    // batch-mean prediction vs uniform
    std::vector<double> p_bar(C, 0.0);
    for (const auto& s : batch.samples)
        for (int c = 0; c < C; ++c) p_bar[c] += s.p_w[c] / B;
    double kl = 0.0;
    for (int c = 0; c < C; ++c) kl += p_bar[c] * safe_log(C * p_bar[c]);

    // mean Shannon entropy of the weak view
    double ent = 0.0;
    for (const auto& s : batch.samples)
        for (int c = 0; c < C; ++c) ent -= s.p_w[c] * safe_log(s.p_w[c]) / B;

    if (grads) {
        for (int i = 0; i < B; ++i) {
            const auto& s = batch.samples[i];
            auto& g = (*grads)[i];
            int y = s.pseudo_label;
            if (s.p_w[y] > 1e-12) g.d_pw[y] -= 1.0 / (B * s.p_w[y]);
            if (s.p_s[y] > 1e-12) g.d_ps[y] -= 1.0 / (B * s.p_s[y]);
            for (int c = 0; c < C; ++c) {
                g.d_pw[c] += (safe_log(C * p_bar[c]) + 1.0) / B;
                if (s.p_w[c] > 1e-12) g.d_pw[c] -= omega * (safe_log(s.p_w[c]) + 1.0) / B;
            }
        }
    }
    return ce + kl + omega * ent;
}

Prototypes build_prototypes(const LossSample& s, const MemoryBankState& bank, int K,
                            Scheme scheme) {
    const int C = bank.C();
    bool as_source_like;
    int cls;
    switch (scheme) {
        case Scheme::SchemeS:
            as_source_like = true;
            cls = s.pseudo_label;
            break;
        case Scheme::SchemeT:
            as_source_like = false;
            cls = s.pseudo_label;
            break;
        default:
            as_source_like = s.split == Split::SourceLike;
            cls = s.split_class;
            break;
    }

    Prototypes out;
    if (as_source_like) {
        // positive: the class centroid; negatives: other centroids plus every
        // target-specific bank row (never the anchor's own row).
        out.k_plus.assign(bank.W.row(cls), bank.W.row(cls) + bank.W.cols);
        for (int c = 0; c < C; ++c)
            if (c != cls) out.negatives.push_back(bank.W.row_span(c));
        for (int i = 0; i < bank.n(); ++i)
            if (bank.split[i] == Split::TargetSpecific && i != s.index)
                out.negatives.push_back(bank.Z.row_span(i));
    } else {
        // positive: strong view blended with the K nearest bank rows (the
        // anchor's own row is allowed in the neighborhood); negatives: the
        // other target-specific rows plus all centroids.
        if (K > bank.n()) throw std::invalid_argument("build_prototypes: K > n");
        std::vector<int> nbrs = knn(bank, s.f_w, K);
        out.k_plus = s.f_s;
        for (int j : nbrs) axpy(1.0, bank.Z.row_span(j), std::span<double>(out.k_plus));
        for (double& v : out.k_plus) v /= (K + 1);
        out.kplus_uses_strong = true;
        for (int i = 0; i < bank.n(); ++i)
            if (bank.split[i] == Split::TargetSpecific && i != s.index)
                out.negatives.push_back(bank.Z.row_span(i));
        for (int c = 0; c < C; ++c) out.negatives.push_back(bank.W.row_span(c));
    }
    return out;
}

double info_nce(double pos_logit, std::span<const double> neg_logits,
                std::vector<double>* softmax_weights) {
    double m = pos_logit;
    for (double v : neg_logits) m = std::max(m, v);
    double z = std::exp(pos_logit - m);
    double sum = z;
    for (double v : neg_logits) sum += std::exp(v - m);
    double loss = -(pos_logit - m) + std::log(sum);
    if (softmax_weights) {
        softmax_weights->resize(neg_logits.size() + 1);
        (*softmax_weights)[0] = z / sum;
        for (size_t j = 0; j < neg_logits.size(); ++j)
            (*softmax_weights)[j + 1] = std::exp(neg_logits[j] - m) / sum;
    }
    return loss;
}

double contrastive_loss(const LossBatch& batch, const MemoryBankState& bank, double tau,
                        int K, Scheme scheme, std::vector<SampleGrads>* grads) {
    if (tau <= 0) throw std::invalid_argument("contrastive_loss: tau must be > 0");
    const int B = static_cast<int>(batch.samples.size());
    if (B == 0) throw std::invalid_argument("contrastive_loss: empty batch");

    double total = 0.0;
    std::vector<double> neg_logits, w;
    for (int i = 0; i < B; ++i) {
        const auto& s = batch.samples[i];
        Prototypes pr = build_prototypes(s, bank, K, scheme);
        double pos = dot(s.f_w, pr.k_plus) / tau;
        neg_logits.resize(pr.negatives.size());
        for (size_t j = 0; j < pr.negatives.size(); ++j)
            neg_logits[j] = dot(s.f_w, pr.negatives[j]) / tau;
        total += info_nce(pos, neg_logits, grads ? &w : nullptr) / B;

        if (grads) {
            auto& g = (*grads)[i];
            // d/d f_w: 1/tau [ (w0 - 1) k+  +  sum_j wj k-_j ]
            double coef = (w[0] - 1.0) / (tau * B);
            axpy(coef, pr.k_plus, std::span<double>(g.d_fw));
            for (size_t j = 0; j < pr.negatives.size(); ++j)
                axpy(w[j + 1] / (tau * B), pr.negatives[j], std::span<double>(g.d_fw));
            if (pr.kplus_uses_strong) {
                // k+ = (f_s + sum z)/(K+1) passes gradient to the strong view
                axpy(coef / (K + 1), s.f_w, std::span<double>(g.d_fs));
            }
        }
    }
    return total;
}

MmdPrototypes mmd_prototypes(const LossSample& s, const MemoryBankState& bank) {
    const int b = bank.Z.cols;
    const int cls = s.split_class;
    MmdPrototypes out;

    std::vector<double> ts_mean(b, 0.0);
    int ts_count = 0;
    for (int i = 0; i < bank.n(); ++i)
        if (bank.split[i] == Split::TargetSpecific && bank.split_class[i] == cls) {
            axpy(1.0, bank.Z.row_span(i), std::span<double>(ts_mean));
            ++ts_count;
        }
    int sl_count = 0;
    for (int i = 0; i < bank.n(); ++i)
        sl_count += bank.split[i] == Split::SourceLike && bank.split_class[i] == cls;

    if (s.split == Split::SourceLike) {
        if (ts_count == 0) return out;  // opposite split empty: skip
    } else {
        if (sl_count == 0) return out;
    }
    if (ts_count > 0) {
        for (double& v : ts_mean) v /= ts_count;
        // mirror the centroid convention so both prototypes share a scale
        if (bank.renorm_centroids) {
            if (l2_norm(ts_mean) < 1e-12) return out;
            normalize_inplace(ts_mean);
        }
    }

    out.skipped = false;
    if (s.split == Split::SourceLike) {
        out.q_minus.assign(bank.W.row(cls), bank.W.row(cls) + b);
        out.q_plus = std::move(ts_mean);
    } else {
        out.q_minus = std::move(ts_mean);
        out.q_plus.assign(bank.W.row(cls), bank.W.row(cls) + b);
    }
    return out;
}

namespace {

template <typename PerSample>
double mmd_mean(const LossBatch& batch, const MemoryBankState& bank, int* n_skipped,
                PerSample&& per_sample) {
    int used = 0, skipped = 0;
    std::vector<std::pair<int, MmdPrototypes>> active;
    for (int i = 0; i < static_cast<int>(batch.samples.size()); ++i) {
        MmdPrototypes q = mmd_prototypes(batch.samples[i], bank);
        if (q.skipped) {
            ++skipped;
            continue;
        }
        ++used;
        active.emplace_back(i, std::move(q));
    }
    if (n_skipped) *n_skipped = skipped;
    if (used == 0) return 0.0;
    double total = 0.0;
    for (auto& [i, q] : active) total += per_sample(i, q, used);
    return total / used;
}

}  // namespace

double lmmd_loss(const LossBatch& batch, const MemoryBankState& bank,
                 std::vector<SampleGrads>* grads, int* n_skipped) {
    return mmd_mean(batch, bank, n_skipped, [&](int i, const MmdPrototypes& q, int used) {
        const auto& s = batch.samples[i];
        double v = dot(s.f_w, q.q_minus) - dot(s.f_w, q.q_plus);
        if (grads) {
            auto& g = (*grads)[i];
            for (size_t j = 0; j < g.d_fw.size(); ++j)
                g.d_fw[j] += (q.q_minus[j] - q.q_plus[j]) / used;
        }
        return v;
    });
}

double emmd_loss(const LossBatch& batch, const MemoryBankState& bank, double tau,
                 std::vector<SampleGrads>* grads, int* n_skipped) {
    if (tau <= 0) throw std::invalid_argument("emmd_loss: tau must be > 0");
    return mmd_mean(batch, bank, n_skipped, [&](int i, const MmdPrototypes& q, int used) {
        const auto& s = batch.samples[i];
        double u = (dot(s.f_w, q.q_minus) - dot(s.f_w, q.q_plus)) / tau;
        if (grads) {
            double sg = sigmoid(u) / (tau * used);
            auto& g = (*grads)[i];
            for (size_t j = 0; j < g.d_fw.size(); ++j)
                g.d_fw[j] += sg * (q.q_minus[j] - q.q_plus[j]);
        }
        return softplus(u);
    });
}

LossReport total_loss(const LossBatch& batch, const MemoryBankState& bank,
                      const LossOptions& opt, std::vector<SampleGrads>* grads) {
    LossReport rep;
    rep.n_source_like = bank.n_source_like();
    rep.n_target_specific = bank.n_target_specific();
    for (int c = 0; c < bank.C(); ++c)
        if (bank.centroid_carried[c])
            rep.degenerate_flags.push_back("centroid_carry:c" + std::to_string(c));

    if (grads) *grads = zero_sample_grads(batch);

    std::vector<SampleGrads> part;
    auto merge = [&](double weight) {
        if (!grads) return;
        for (size_t i = 0; i < grads->size(); ++i) {
            axpy(weight, part[i].d_pw, std::span<double>((*grads)[i].d_pw));
            axpy(weight, part[i].d_ps, std::span<double>((*grads)[i].d_ps));
            axpy(weight, part[i].d_fw, std::span<double>((*grads)[i].d_fw));
            axpy(weight, part[i].d_fs, std::span<double>((*grads)[i].d_fs));
        }
    };

    if (opt.scheme != Scheme::SelfOnly) {
        if (grads) part = zero_sample_grads(batch);
        rep.con = contrastive_loss(batch, bank, opt.tau, opt.K, opt.scheme,
                                   grads ? &part : nullptr);
        merge(1.0);
    }

    if (grads) part = zero_sample_grads(batch);
    rep.self = self_training_loss(batch, opt.omega, grads ? &part : nullptr);
    merge(opt.alpha);

    // the memory-bank MMD alignment belongs to the full divide-and-contrast
    // scheme; the ablation schemes pair self-training with their contrastive
    // variant only
    if (opt.scheme == Scheme::Dac && opt.mmd != MmdKind::None) {
        int skipped = 0;
        if (grads) part = zero_sample_grads(batch);
        rep.mmd = opt.mmd == MmdKind::Emmd
                      ? emmd_loss(batch, bank, opt.tau, grads ? &part : nullptr, &skipped)
                      : lmmd_loss(batch, bank, grads ? &part : nullptr, &skipped);
        merge(opt.beta);
        if (skipped > 0)
            rep.degenerate_flags.push_back("mmd_skipped:" + std::to_string(skipped));
    }

    rep.total = rep.con + opt.alpha * rep.self + opt.beta * rep.mmd;
    return rep;
}

}  // namespace dac
