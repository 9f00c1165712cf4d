#include "dac/pseudo.hpp"

#include <limits>
#include <stdexcept>

namespace dac {

Mat init_centroids(const Mat& probs, const Mat& feats) {
    if (probs.rows != feats.rows) throw std::invalid_argument("init_centroids: row mismatch");
    const int n = probs.rows, C = probs.cols, b = feats.cols;
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int c = 0; c < C; ++c) s += probs.at(i, c);
        if (std::fabs(s - 1.0) > 1e-6)
            throw std::invalid_argument("init_centroids: probs row does not sum to 1");
    }

    Mat cent(C, b, 0.0);
    std::vector<double> wsum(C, 0.0);
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < C; ++c) {
            double w = probs.at(i, c);
            wsum[c] += w;
            axpy(w, feats.row_span(i), cent.row_span(c));
        }
    std::vector<double> global(b, 0.0);
    for (int i = 0; i < n; ++i) axpy(1.0 / n, feats.row_span(i), std::span<double>(global));
    for (int c = 0; c < C; ++c) {
        if (wsum[c] > 0.0) {
            for (int j = 0; j < b; ++j) cent.at(c, j) /= wsum[c];
        } else {
            std::copy(global.begin(), global.end(), cent.row(c));
        }
    }
    return cent;
}

std::vector<int> assign_labels(const Mat& feats, const Mat& centroids) {
    const int n = feats.rows, C = centroids.rows;
    std::vector<double> cnorm(C);
    bool any_nonzero = false;
    for (int c = 0; c < C; ++c) {
        cnorm[c] = l2_norm(centroids.row_span(c));
        any_nonzero |= cnorm[c] > 0.0;
    }
    if (!any_nonzero) throw std::invalid_argument("assign_labels: all centroid rows are zero");

    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) {
        double fn = l2_norm(feats.row_span(i));
        double best = -std::numeric_limits<double>::infinity();
        int best_c = 0;
        for (int c = 0; c < C; ++c) {
            double cs = cnorm[c] > 0.0
                            ? dot(feats.row_span(i), centroids.row_span(c)) / (std::max(fn, 1e-300) * cnorm[c])
                            : -std::numeric_limits<double>::infinity();
            if (cs > best) {
                best = cs;
                best_c = c;
            }
        }
        labels[i] = best_c;
    }
    return labels;
}

Mat refine_centroids(const Mat& feats, const std::vector<int>& labels, int C, const Mat& prev) {
    const int n = feats.rows, b = feats.cols;
    if (static_cast<int>(labels.size()) != n)
        throw std::invalid_argument("refine_centroids: label count mismatch");
    Mat cent(C, b, 0.0);
    std::vector<int> counts(C, 0);
    for (int i = 0; i < n; ++i) {
        int c = labels[i];
        if (c < 0 || c >= C) throw std::invalid_argument("refine_centroids: label outside [0,C)");
        counts[c]++;
        axpy(1.0, feats.row_span(i), cent.row_span(c));
    }
    for (int c = 0; c < C; ++c) {
        if (counts[c] > 0) {
            for (int j = 0; j < b; ++j) cent.at(c, j) /= counts[c];
        } else {
            std::copy(prev.row(c), prev.row(c) + b, cent.row(c));
        }
    }
    return cent;
}

PseudoLabelState update_pseudo_labels(const ModelParams& params, const Dataset& ds,
                                      const PseudoLabelState* prev) {
    Mat probs, feats;
    predict_all(params, ds, probs, feats);
    Mat cent = init_centroids(probs, feats);
    std::vector<int> labels = assign_labels(feats, cent);
    cent = refine_centroids(feats, labels, params.dims.C, cent);
    labels = assign_labels(feats, cent);
    PseudoLabelState st;
    st.centroids = std::move(cent);
    st.labels = std::move(labels);
    st.epoch = prev ? prev->epoch + 1 : 0;
    return st;
}

}  // namespace dac
