#include "dac/bank.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace dac {

int MemoryBankState::n_source_like() const {
    int k = 0;
    for (Split s : split) k += s == Split::SourceLike;
    return k;
}

MemoryBankState init_bank(const ModelParams& params, const Dataset& ds,
                          const std::vector<int>& pseudo_labels,
                          double momentum, bool renorm_bank, bool renorm_centroids) {
    MemoryBankState bank;
    Mat probs;
    predict_all(params, ds, probs, bank.Z);
    bank.split.assign(ds.n(), Split::TargetSpecific);
    bank.split_class.assign(ds.n(), 0);
    bank.momentum = momentum;
    bank.renorm_bank = renorm_bank;
    bank.renorm_centroids = renorm_centroids;
    bank.W = Mat(params.dims.C, params.dims.b, 0.0);
    bank.centroid_carried.assign(params.dims.C, 0);
    init_division_top_percent(bank, probs, pseudo_labels);
    class_centroids(bank);
    return bank;
}

void momentum_update(MemoryBankState& bank, int index, std::span<const double> f) {
    if (index < 0 || index >= bank.n())
        throw std::invalid_argument("momentum_update: index out of range");
    if (std::fabs(l2_norm(f) - 1.0) > 1e-6)
        throw std::invalid_argument("momentum_update: feature not unit norm");
    double m = bank.momentum;
    double* z = bank.Z.row(index);
    for (size_t j = 0; j < f.size(); ++j) z[j] = m * z[j] + (1.0 - m) * f[j];
    if (bank.renorm_bank) normalize_inplace(bank.Z.row_span(index));
}

void init_division_top_percent(MemoryBankState& bank, const Mat& probs_w,
                               const std::vector<int>& pseudo_labels) {
    const int n = bank.n(), C = probs_w.cols;
    if (probs_w.rows != n) throw std::invalid_argument("init_division: probs row mismatch");
    const int N = std::max(1, static_cast<int>(0.05 * n / C));

    // Per-class candidate order: probability descending, index ascending.
    std::vector<std::vector<int>> order(C);
    for (int c = 0; c < C; ++c) {
        order[c].resize(n);
        std::iota(order[c].begin(), order[c].end(), 0);
        std::stable_sort(order[c].begin(), order[c].end(), [&](int a, int b) {
            return probs_w.at(a, c) > probs_w.at(b, c);
        });
    }

    std::vector<int> claimed(n, -1);
    std::vector<int> cursor(C, 0), deficit(C, N);
    bool progress = true;
    while (progress) {
        progress = false;
        // Round of proposals: each deficient class nominates its next-best
        // unclaimed candidates; per-sample conflicts go to the higher
        // probability (ties to the lower class). Claims are final.
        std::vector<int> proposal(n, -1);
        for (int c = 0; c < C; ++c) {
            int proposed = 0;
            int cur = cursor[c];
            while (proposed < deficit[c] && cur < n) {
                int i = order[c][cur++];
                if (claimed[i] != -1) continue;
                ++proposed;
                if (proposal[i] == -1 || probs_w.at(i, c) > probs_w.at(i, proposal[i]))
                    proposal[i] = c;
            }
        }
        for (int i = 0; i < n; ++i) {
            if (proposal[i] == -1) continue;
            claimed[i] = proposal[i];
            --deficit[proposal[i]];
            progress = true;
        }
        if (progress) {
            // Skip past claimed entries so exhausted classes stop proposing.
            for (int c = 0; c < C; ++c)
                while (cursor[c] < n && claimed[order[c][cursor[c]]] != -1) ++cursor[c];
        }
    }

    for (int i = 0; i < n; ++i) {
        if (claimed[i] != -1) {
            bank.split[i] = Split::SourceLike;
            bank.split_class[i] = claimed[i];
        } else {
            bank.split[i] = Split::TargetSpecific;
            bank.split_class[i] = pseudo_labels[i];
        }
    }
}

namespace {

void divide_row(MemoryBankState& bank, int i, std::span<const double> p, double tau_c,
                const std::vector<int>& pseudo_labels) {
    int arg = argmax_lowest(p);
    if (p[arg] >= tau_c) {
        bank.split[i] = Split::SourceLike;
        bank.split_class[i] = arg;
    } else {
        bank.split[i] = Split::TargetSpecific;
        bank.split_class[i] = pseudo_labels[i];
    }
}

void check_tau(double tau_c) {
    if (tau_c <= 0.0 || tau_c >= 1.0)
        throw std::invalid_argument("update_division: tau_c must be in (0,1)");
}

}  // namespace

void update_division(MemoryBankState& bank, const Mat& probs_w, double tau_c,
                     const std::vector<int>& pseudo_labels) {
    check_tau(tau_c);
    if (probs_w.rows != bank.n()) throw std::invalid_argument("update_division: probs row mismatch");
    for (int i = 0; i < bank.n(); ++i)
        divide_row(bank, i, probs_w.row_span(i), tau_c, pseudo_labels);
}

// probs_rows is compact: row k belongs to sample rows[k].
void update_division_rows(MemoryBankState& bank, std::span<const int> rows,
                          const Mat& probs_rows, double tau_c,
                          const std::vector<int>& pseudo_labels) {
    check_tau(tau_c);
    for (size_t k = 0; k < rows.size(); ++k)
        divide_row(bank, rows[k], probs_rows.row_span(static_cast<int>(k)), tau_c, pseudo_labels);
}

void refresh_target_specific_classes(MemoryBankState& bank, const std::vector<int>& pseudo_labels) {
    for (int i = 0; i < bank.n(); ++i)
        if (bank.split[i] == Split::TargetSpecific) bank.split_class[i] = pseudo_labels[i];
}

void class_centroids(MemoryBankState& bank) {
    const int C = bank.C(), b = bank.Z.cols;
    for (int c = 0; c < C; ++c) {
        std::vector<double> mean(b, 0.0);
        int count = 0;
        for (int i = 0; i < bank.n(); ++i)
            if (bank.split[i] == Split::SourceLike && bank.split_class[i] == c) {
                axpy(1.0, bank.Z.row_span(i), std::span<double>(mean));
                ++count;
            }
        if (count == 0) {
            bank.centroid_carried[c] = 1;
            continue;
        }
        for (double& v : mean) v /= count;
        if (bank.renorm_centroids) {
            if (l2_norm(mean) < 1e-12) {
                bank.centroid_carried[c] = 1;  // degenerate mean, keep old row
                continue;
            }
            normalize_inplace(mean);
        }
        std::copy(mean.begin(), mean.end(), bank.W.row(c));
        bank.centroid_carried[c] = 0;
    }
}

std::vector<int> knn(const MemoryBankState& bank, std::span<const double> f, int K) {
    if (K < 1 || K > bank.n()) throw std::invalid_argument("knn: K outside [1, n]");
    // Rows are unit norm, so ranking by dot(f, z) is the cosine ranking for
    // any positive scaling of f.
    std::vector<double> sim(bank.n());
    for (int i = 0; i < bank.n(); ++i) sim[i] = dot(f, bank.Z.row_span(i));
    std::vector<int> idx(bank.n());
    std::iota(idx.begin(), idx.end(), 0);
    std::partial_sort(idx.begin(), idx.begin() + K, idx.end(), [&](int a, int b) {
        if (sim[a] != sim[b]) return sim[a] > sim[b];
        return a < b;
    });
    idx.resize(K);
    return idx;
}

}  // namespace dac
