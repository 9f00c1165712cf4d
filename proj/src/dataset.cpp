#include "dac/dataset.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

#include "dac/rng.hpp"

namespace dac {

void validate_dataset(const Dataset& ds) {
    if (ds.d() < 1) throw std::invalid_argument("dataset: feature dimension must be >= 1");
    if (ds.labeled()) {
        const auto& y = *ds.labels;
        if (static_cast<int>(y.size()) != ds.n())
            throw std::invalid_argument("dataset: label count != sample count");
        if (ds.C < 1) throw std::invalid_argument("dataset: labeled dataset needs C >= 1");
        std::vector<int> counts(ds.C, 0);
        for (int v : y) {
            if (v < 0 || v >= ds.C) throw std::invalid_argument("dataset: label outside [0,C)");
            counts[v]++;
        }
        for (int c = 0; c < ds.C; ++c)
            if (counts[c] == 0)
                throw std::invalid_argument("dataset: class " + std::to_string(c) + " has no samples");
        if (ds.n() < ds.C) throw std::invalid_argument("dataset: n < C");
    }
}

Dataset gen_two_moons(int n, double noise, double rotation_deg, uint64_t seed,
                      std::string domain_tag) {
    if (n < 4 || n % 2 != 0)
        throw std::invalid_argument("gen_two_moons: n must be even and >= 4");
    const int m = n / 2;
    Dataset ds;
    ds.features = Mat(n, 2);
    ds.labels = std::vector<int>(n);
    ds.C = 2;
    ds.domain_tag = std::move(domain_tag);

    auto rng = sub_stream(seed, "two_moons");
    std::normal_distribution<double> gauss(0.0, 1.0);

    for (int i = 0; i < m; ++i) {
        double t = std::numbers::pi * i / (m - 1);
        ds.features.at(i, 0) = std::cos(t);
        ds.features.at(i, 1) = std::sin(t);
        (*ds.labels)[i] = 0;
        ds.features.at(m + i, 0) = 1.0 - std::cos(t);
        ds.features.at(m + i, 1) = 0.5 - std::sin(t);
        (*ds.labels)[m + i] = 1;
    }
    if (noise > 0.0) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < 2; ++j) ds.features.at(i, j) += noise * gauss(rng);
    }
    rotate2d_inplace(ds.features, rotation_deg);
    return ds;
}

void rotate2d_inplace(Mat& pts, double deg) {
    if (pts.cols != 2) throw std::invalid_argument("rotate2d: expected 2 columns");
    const double th = deg * std::numbers::pi / 180.0;
    const double c = std::cos(th), s = std::sin(th);
    for (int i = 0; i < pts.rows; ++i) {
        double x = pts.at(i, 0), y = pts.at(i, 1);
        pts.at(i, 0) = c * x - s * y;
        pts.at(i, 1) = s * x + c * y;
    }
}

Mat blob_means(int C, int d) {
    Mat mu(C, d, 0.0);
    for (int c = 0; c < C; ++c) {
        if (d == 1) {
            mu.at(c, 0) = 2.0 * c;
        } else {
            double ang = 2.0 * std::numbers::pi * c / C;
            mu.at(c, 0) = 2.0 * std::cos(ang);
            mu.at(c, 1) = 2.0 * std::sin(ang);
        }
    }
    return mu;
}

Dataset gen_gauss_blobs(int n, int C, int d, const std::vector<double>& shift,
                        double spread, uint64_t seed, std::string domain_tag) {
    if (C < 2 || n < C || d < 1)
        throw std::invalid_argument("gen_gauss_blobs: need n >= C >= 2 and d >= 1");
    if (!shift.empty() && static_cast<int>(shift.size()) != d)
        throw std::invalid_argument("gen_gauss_blobs: shift length != d");

    Dataset ds;
    ds.features = Mat(n, d);
    ds.labels = std::vector<int>(n);
    ds.C = C;
    ds.domain_tag = std::move(domain_tag);

    Mat mu = blob_means(C, d);
    auto rng = sub_stream(seed, "gauss_blobs");
    std::normal_distribution<double> gauss(0.0, 1.0);

    int row = 0;
    for (int c = 0; c < C; ++c) {
        int count = n / C + (c < n % C ? 1 : 0);
        for (int k = 0; k < count; ++k, ++row) {
            for (int j = 0; j < d; ++j) {
                double v = mu.at(c, j);
                if (spread > 0.0) v += spread * gauss(rng);
                if (!shift.empty()) v += shift[j];
                ds.features.at(row, j) = v;
            }
            (*ds.labels)[row] = c;
        }
    }
    return ds;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    cells.push_back(cur);
    return cells;
}

double parse_double_cell(const std::string& cell, int row) {
    const char* begin = cell.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0')
        throw CsvError(row, "non-numeric cell '" + cell + "'");
    return v;
}

}  // namespace

Dataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw CsvError(0, "empty file, missing header");
    auto header = split_csv_line(line);
    if (header.size() < 3 || header[header.size() - 2] != "label" || header.back() != "domain")
        throw CsvError(0, "header must be x0,...,x{d-1},label,domain");
    const int d = static_cast<int>(header.size()) - 2;
    for (int j = 0; j < d; ++j)
        if (header[j] != "x" + std::to_string(j))
            throw CsvError(0, "feature column " + std::to_string(j) + " must be named x" + std::to_string(j));

    std::vector<double> feats;
    std::vector<int> labels;
    std::string domain;
    bool any_label = false, any_unlabeled = false;
    int row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ++row;
        auto cells = split_csv_line(line);
        if (static_cast<int>(cells.size()) != d + 2)
            throw CsvError(row, "expected " + std::to_string(d + 2) + " cells, got " +
                                    std::to_string(cells.size()));
        for (int j = 0; j < d; ++j) feats.push_back(parse_double_cell(cells[j], row));
        const std::string& lab = cells[d];
        if (lab.empty()) {
            if (any_label) throw CsvError(row, "mixed labeled and unlabeled rows");
            any_unlabeled = true;
            labels.push_back(-1);
        } else {
            if (any_unlabeled) throw CsvError(row, "mixed labeled and unlabeled rows");
            any_label = true;
            double v = parse_double_cell(lab, row);
            int iv = static_cast<int>(v);
            if (iv < 0 || static_cast<double>(iv) != v)
                throw CsvError(row, "label must be a non-negative integer");
            labels.push_back(iv);
        }
        if (row == 1) domain = cells[d + 1];
    }

    Dataset ds;
    ds.features = Mat(row, d);
    ds.features.data = std::move(feats);
    ds.domain_tag = domain.empty() ? "target" : domain;
    if (any_label) {
        int C = 0;
        for (int v : labels) C = std::max(C, v + 1);
        ds.labels = std::move(labels);
        ds.C = C;
        validate_dataset(ds);
    }
    return ds;
}

void save_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    for (int j = 0; j < ds.d(); ++j) out << "x" << j << ",";
    out << "label,domain\n";
    for (int i = 0; i < ds.n(); ++i) {
        for (int j = 0; j < ds.d(); ++j) out << fmt_g17(ds.features.at(i, j)) << ",";
        if (ds.labeled()) out << (*ds.labels)[i];
        out << "," << ds.domain_tag << "\n";
    }
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace dac
