#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "dac/dataset.hpp"

using namespace dac;
namespace fs = std::filesystem;

namespace {

std::string tmp_path(const std::string& name) {
    return (fs::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("two moons canonical points at n=4, zero noise") {
    Dataset ds = gen_two_moons(4, 0.0, 0.0, 0);
    REQUIRE(ds.n() == 4);
    REQUIRE(ds.d() == 2);
    CHECK(ds.C == 2);
    // class 0 half circle endpoints
    CHECK(ds.features.at(0, 0) == doctest::Approx(1.0));
    CHECK(ds.features.at(0, 1) == doctest::Approx(0.0));
    CHECK(ds.features.at(1, 0) == doctest::Approx(-1.0));
    CHECK(std::fabs(ds.features.at(1, 1)) < 1e-15);
    // class 1 endpoints
    CHECK(ds.features.at(2, 0) == doctest::Approx(0.0));
    CHECK(ds.features.at(2, 1) == doctest::Approx(0.5));
    CHECK(ds.features.at(3, 0) == doctest::Approx(2.0));
    CHECK(ds.features.at(3, 1) == doctest::Approx(0.5));
    CHECK(*ds.labels == std::vector<int>{0, 0, 1, 1});
}

TEST_CASE("two moons determinism and rotation equivariance") {
    Dataset a = gen_two_moons(1000, 0.1, 0.0, 7);
    Dataset b = gen_two_moons(1000, 0.1, 0.0, 7);
    CHECK(a.features.data == b.features.data);  // bit identical

    // rotating the unrotated output reproduces the rotated generator exactly
    Dataset rot = gen_two_moons(2000, 0.1, 35.0, 0);
    Dataset flat = gen_two_moons(2000, 0.1, 0.0, 0);
    rotate2d_inplace(flat.features, 35.0);
    CHECK(rot.features.data == flat.features.data);
}

TEST_CASE("two moons rotate there and back within 1e-12") {
    Dataset ds = gen_two_moons(500, 0.05, 25.0, 3);
    Mat copy = ds.features;
    rotate2d_inplace(copy, -25.0);
    rotate2d_inplace(copy, 25.0);
    for (size_t i = 0; i < copy.data.size(); ++i)
        CHECK(std::fabs(copy.data[i] - ds.features.data[i]) < 1e-12);
}

TEST_CASE("two moons rejects bad n") {
    CHECK_THROWS_AS(gen_two_moons(3, 0.1, 0.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(gen_two_moons(2, 0.1, 0.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(gen_two_moons(7, 0.1, 0.0, 0), std::invalid_argument);
}

TEST_CASE("gauss blobs zero spread sits on the configured means") {
    Dataset ds = gen_gauss_blobs(3, 3, 2, {}, 0.0, 0);
    Mat mu = blob_means(3, 2);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 2; ++j) CHECK(ds.features.at(i, j) == doctest::Approx(mu.at(i, j)));
    CHECK(*ds.labels == std::vector<int>{0, 1, 2});
}

TEST_CASE("gauss blobs shift is an exact translation") {
    Dataset base = gen_gauss_blobs(60, 3, 2, {}, 0.3, 5);
    Dataset moved = gen_gauss_blobs(60, 3, 2, {5.0, 0.0}, 0.3, 5);
    for (int i = 0; i < base.n(); ++i) {
        CHECK(moved.features.at(i, 0) == base.features.at(i, 0) + 5.0);
        CHECK(moved.features.at(i, 1) == base.features.at(i, 1) + 0.0);
    }
}

TEST_CASE("gauss blobs empirical means approach configured means") {
    Dataset ds = gen_gauss_blobs(600, 3, 2, {}, 0.3, 1);
    Mat mu = blob_means(3, 2);
    std::vector<std::vector<double>> sums(3, std::vector<double>(2, 0.0));
    std::vector<int> counts(3, 0);
    for (int i = 0; i < ds.n(); ++i) {
        int c = (*ds.labels)[i];
        counts[c]++;
        for (int j = 0; j < 2; ++j) sums[c][j] += ds.features.at(i, j);
    }
    for (int c = 0; c < 3; ++c)
        for (int j = 0; j < 2; ++j)
            CHECK(std::fabs(sums[c][j] / counts[c] - mu.at(c, j)) < 0.1);
}

TEST_CASE("gauss blobs near-balanced counts and input validation") {
    Dataset ds = gen_gauss_blobs(10, 3, 2, {}, 0.1, 0);
    std::vector<int> counts(3, 0);
    for (int v : *ds.labels) counts[v]++;
    int lo = *std::min_element(counts.begin(), counts.end());
    int hi = *std::max_element(counts.begin(), counts.end());
    CHECK(hi - lo <= 1);

    CHECK_THROWS_AS(gen_gauss_blobs(1, 2, 2, {}, 0.1, 0), std::invalid_argument);
    CHECK_THROWS_AS(gen_gauss_blobs(10, 1, 2, {}, 0.1, 0), std::invalid_argument);
    CHECK_THROWS_AS(gen_gauss_blobs(10, 2, 0, {}, 0.1, 0), std::invalid_argument);
    CHECK_THROWS_AS(gen_gauss_blobs(10, 2, 2, {1.0}, 0.1, 0), std::invalid_argument);
}

TEST_CASE("csv round trip is exact") {
    Dataset ds = gen_gauss_blobs(57, 3, 4, {0.5, -1.0, 0.0, 2.0}, 0.7, 11);
    ds.domain_tag = "target";
    std::string path = tmp_path("dac_roundtrip.csv");
    save_csv(ds, path);
    Dataset back = load_csv(path);
    CHECK(back.features.data == ds.features.data);
    CHECK(*back.labels == *ds.labels);
    CHECK(back.domain_tag == "target");
    CHECK(back.C == ds.C);
    fs::remove(path);
}

TEST_CASE("csv unlabeled round trip") {
    Dataset ds = gen_two_moons(10, 0.1, 0.0, 2);
    ds.labels.reset();
    ds.C = 0;
    std::string path = tmp_path("dac_unlabeled.csv");
    save_csv(ds, path);
    Dataset back = load_csv(path);
    CHECK(!back.labeled());
    CHECK(back.features.data == ds.features.data);
    fs::remove(path);
}

TEST_CASE("csv malformed inputs carry the row number") {
    std::string path = tmp_path("dac_bad.csv");
    {
        std::ofstream out(path);
        out << "x0,x1,x2,label,domain\n";
        out << "1.0,2.0,0,source\n";  // three feature columns declared, two given
    }
    CHECK_THROWS_WITH_AS(load_csv(path), doctest::Contains("row 1"), CsvError);

    {
        std::ofstream out(path);
        out << "x0,x1,label,domain\n";
        out << "1.0,2.0,0,source\n";
        out << "1.0,abc,1,source\n";
    }
    CHECK_THROWS_WITH_AS(load_csv(path), doctest::Contains("row 2"), CsvError);

    {
        std::ofstream out(path);
        out << "x0,x1,label,domain\n";
        out << "1.0,2.0,0,source\n";
        out << "1.0,2.0,,source\n";  // mixed labeled/unlabeled
    }
    CHECK_THROWS_AS(load_csv(path), CsvError);

    {
        std::ofstream out(path);
        out << "x0,x1,count,domain\n";  // bad header
        out << "1.0,2.0,0,source\n";
    }
    CHECK_THROWS_AS(load_csv(path), CsvError);
    fs::remove(path);
}

TEST_CASE("dataset validation catches label gaps") {
    Dataset ds;
    ds.features = Mat(3, 2, 1.0);
    ds.labels = std::vector<int>{0, 0, 2};
    ds.C = 3;
    CHECK_THROWS_AS(validate_dataset(ds), std::invalid_argument);
}
