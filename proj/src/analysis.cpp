#include "dac/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "dac/rng.hpp"

namespace dac {

double consistency_error(const ModelParams& params, const Dataset& ds,
                         const AugmentPolicy& policy, int n_aug, uint64_t seed,
                         std::span<const int> subset) {
    if (n_aug < 1) throw std::invalid_argument("consistency_error: n_aug must be >= 1");
    std::vector<int> all;
    if (subset.empty()) {
        all.resize(ds.n());
        std::iota(all.begin(), all.end(), 0);
        subset = all;
    }
    if (subset.empty()) return 0.0;

    auto rng = sub_stream(seed, "consistency");
    int flips = 0;
    for (int i : subset) {
        auto x = ds.features.row_span(i);
        int base = predict_class(forward(params, x).probs);
        auto pts = sample_ball(x, policy, rng, n_aug);
        for (const auto& xp : pts) {
            if (predict_class(forward(params, xp).probs) != base) {
                ++flips;
                break;
            }
        }
    }
    return static_cast<double>(flips) / subset.size();
}

SplitErrors disagreement_and_split_errors(const ModelParams& params,
                                          const PseudoLabelState& pseudo,
                                          const Dataset& ds, const MemoryBankState& bank) {
    if (!ds.labeled())
        throw std::invalid_argument("disagreement_and_split_errors: dataset has no labels");
    SplitErrors out;
    int n_sl = 0, sl_pl_err = 0, sl_err = 0, dis = 0, err = 0;
    for (int i = 0; i < ds.n(); ++i) {
        int pred = predict_class(forward(params, ds.features.row_span(i)).probs);
        int y = (*ds.labels)[i];
        int pl = pseudo.labels[i];
        dis += pred != pl;
        err += pred != y;
        if (bank.split[i] == Split::SourceLike) {
            ++n_sl;
            sl_pl_err += pl != y;
            sl_err += pred != y;
        }
    }
    out.disagreement = static_cast<double>(dis) / ds.n();
    out.eps_DT = static_cast<double>(err) / ds.n();
    out.eps_DS = n_sl > 0 ? static_cast<double>(sl_err) / n_sl : 0.0;
    out.eps_DS_pl = n_sl > 0 ? static_cast<double>(sl_pl_err) / n_sl : 0.0;
    return out;
}

double proxy_divergence(const MemoryBankState& bank, int cls, uint64_t seed) {
    std::vector<int> a, b;  // source-like vs target-specific rows of this class
    for (int i = 0; i < bank.n(); ++i) {
        if (bank.split_class[i] != cls) continue;
        (bank.split[i] == Split::SourceLike ? a : b).push_back(i);
    }
    if (a.size() < 4 || b.size() < 4) return std::numeric_limits<double>::quiet_NaN();

    auto rng = sub_stream(seed, "proxy." + std::to_string(cls));
    std::shuffle(a.begin(), a.end(), rng);
    std::shuffle(b.begin(), b.end(), rng);
    size_t ha = a.size() / 2, hb = b.size() / 2;

    struct Item {
        const double* z;
        double y;
    };
    std::vector<Item> train, held;
    for (size_t k = 0; k < a.size(); ++k)
        (k < ha ? train : held).push_back({bank.Z.row(a[k]), 0.0});
    for (size_t k = 0; k < b.size(); ++k)
        (k < hb ? train : held).push_back({bank.Z.row(b[k]), 1.0});

    // Linear probe: logistic regression, fixed budget, zero init.
    const int dim = bank.Z.cols;
    std::vector<double> w(dim, 0.0);
    double bias = 0.0;
    for (int epoch = 0; epoch < 200; ++epoch) {
        std::vector<double> gw(dim, 0.0);
        double gb = 0.0;
        for (const auto& it : train) {
            double s = bias + dot({it.z, static_cast<size_t>(dim)}, w);
            double e = sigmoid(s) - it.y;
            axpy(e / train.size(), {it.z, static_cast<size_t>(dim)}, std::span<double>(gw));
            gb += e / train.size();
        }
        axpy(-0.1, gw, std::span<double>(w));
        bias -= 0.1 * gb;
    }

    int mistakes = 0;
    for (const auto& it : held) {
        double s = bias + dot({it.z, static_cast<size_t>(dim)}, w);
        int pred = s > 0.0 ? 1 : 0;  // ties to the lower class
        mistakes += pred != static_cast<int>(it.y);
    }
    double err = static_cast<double>(mistakes) / held.size();
    return std::clamp(2.0 * (1.0 - 2.0 * err), 0.0, 2.0);
}

double lipschitz_hat(const std::function<std::vector<double>(std::span<const double>)>& fn,
                     const Dataset& ds, int n_pairs, uint64_t seed) {
    if (n_pairs < 1) throw std::invalid_argument("lipschitz_hat: n_pairs must be >= 1");
    if (ds.n() < 2) throw std::invalid_argument("lipschitz_hat: need at least 2 samples");
    auto rng = sub_stream(seed, "lipschitz");
    std::uniform_int_distribution<int> pick(0, ds.n() - 1);
    double best = -1.0;
    // Alternate uniform pairs with each anchor's nearest distinct neighbor;
    // short pairs probe the local slope, which dominates the true constant.
    for (int k = 0; k < n_pairs; ++k) {
        int i = pick(rng);
        int j;
        if (k % 2 == 0) {
            j = pick(rng);
        } else {
            j = -1;
            double bd = std::numeric_limits<double>::infinity();
            for (int m = 0; m < ds.n(); ++m) {
                if (m == i) continue;
                double dm = l1_dist(ds.features.row_span(i), ds.features.row_span(m));
                if (dm >= 1e-9 && dm < bd) {
                    bd = dm;
                    j = m;
                }
            }
            if (j < 0) j = pick(rng);
        }
        double dx = l1_dist(ds.features.row_span(i), ds.features.row_span(j));
        if (dx < 1e-9) continue;
        std::vector<double> yi = fn(ds.features.row_span(i));
        std::vector<double> yj = fn(ds.features.row_span(j));
        best = std::max(best, l1_dist(yi, yj) / dx);
    }
    if (best < 0.0) throw std::invalid_argument("lipschitz_hat: all sampled pairs degenerate");
    return best;
}

std::pair<double, double> lipschitz_and_threshold(const ModelParams& params, const Dataset& ds,
                                                  const AugmentPolicy& policy, int n_pairs,
                                                  uint64_t seed) {
    double L = lipschitz_hat(
        [&params](std::span<const double> x) { return forward(params, x).probs; }, ds,
        n_pairs, seed);
    double tau_claim = std::min(1.0 - 1e-6, L * policy.radius_r / 4.0 + 0.5);
    return {L, tau_claim};
}

BoundReport bound_report(const ModelParams& params, const Dataset& ds,
                         const MemoryBankState& bank, const PseudoLabelState& pseudo,
                         const AugmentPolicy& policy, int n_aug, int n_pairs, uint64_t seed) {
    BoundReport rep;
    rep.consistency_error = consistency_error(params, ds, policy, n_aug, seed);
    std::vector<int> sl;
    for (int i = 0; i < bank.n(); ++i)
        if (bank.split[i] == Split::SourceLike) sl.push_back(i);
    rep.consistency_error_source_like =
        sl.empty() ? 0.0 : consistency_error(params, ds, policy, n_aug, seed, sl);
    SplitErrors se = disagreement_and_split_errors(params, pseudo, ds, bank);
    rep.disagreement = se.disagreement;
    rep.eps_DS_pl = se.eps_DS_pl;
    rep.eps_DS = se.eps_DS;
    rep.eps_DT = se.eps_DT;
    for (int c = 0; c < bank.C(); ++c) rep.proxy_div.push_back(proxy_divergence(bank, c, seed));
    auto [L, tc] = lipschitz_and_threshold(params, ds, policy, n_pairs, seed);
    rep.lipschitz_hat = L;
    rep.tau_claim = tc;
    return rep;
}

void write_bound_report_csv(std::ostream& out, const BoundReport& rep) {
    out << "key,value\n";
    out << "consistency_error," << fmt_g17(rep.consistency_error) << "\n";
    out << "consistency_error_source_like," << fmt_g17(rep.consistency_error_source_like) << "\n";
    out << "disagreement," << fmt_g17(rep.disagreement) << "\n";
    out << "eps_DS_pl," << fmt_g17(rep.eps_DS_pl) << "\n";
    out << "eps_DS," << fmt_g17(rep.eps_DS) << "\n";
    out << "eps_DT," << fmt_g17(rep.eps_DT) << "\n";
    out << "lipschitz_hat," << fmt_g17(rep.lipschitz_hat) << "\n";
    out << "tau_claim," << fmt_g17(rep.tau_claim) << "\n";
    for (size_t c = 0; c < rep.proxy_div.size(); ++c)
        out << "proxy_div_c" << c << "," << fmt_g17(rep.proxy_div[c]) << "\n";
}

}  // namespace dac
