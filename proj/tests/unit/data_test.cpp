#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "bsvc/data.hpp"
#include "bsvc/errors.hpp"
#include "bsvc/rng.hpp"

using namespace bsvc;

namespace {

struct TempFile {
    std::filesystem::path path;
    explicit TempFile(const std::string& contents) {
        path = std::filesystem::temp_directory_path() /
               ("bsvc_test_" + std::to_string(std::rand()) + ".csv");
        std::ofstream out(path);
        out << contents;
    }
    ~TempFile() { std::filesystem::remove(path); }
};

}  // namespace

TEST_CASE("load_csv with a label column") {
    TempFile f("1,2,A\n3,4,B\n");
    Dataset d = load_csv(f.path.string(), false, 2);
    CHECK(d.n() == 2);
    CHECK(d.dim == 2);
    CHECK(d.points == std::vector<double>{1, 2, 3, 4});
    REQUIRE(d.labels.has_value());
    CHECK(*d.labels == std::vector<int>{0, 1});
}

TEST_CASE("load_csv label ids follow first appearance") {
    TempFile f("1,zebra\n2,ant\n3,zebra\n4,bee\n");
    Dataset d = load_csv(f.path.string(), false, 1);
    CHECK(*d.labels == std::vector<int>{0, 1, 0, 2});
}

TEST_CASE("load_csv skips the header when told to") {
    TempFile f("x,y\n1,2\n3,4\n");
    Dataset d = load_csv(f.path.string(), true, std::nullopt);
    CHECK(d.n() == 2);
    CHECK_FALSE(d.labels.has_value());
}

TEST_CASE("load_csv errors carry line numbers") {
    SUBCASE("ragged row") {
        TempFile f("1,2\n3\n");
        CHECK_THROWS_WITH_AS(load_csv(f.path.string(), false, std::nullopt),
                             doctest::Contains("line 2"), parse_error);
    }
    SUBCASE("non-numeric feature") {
        TempFile f("1,2\n3,oops\n");
        CHECK_THROWS_WITH_AS(load_csv(f.path.string(), false, std::nullopt),
                             doctest::Contains("line 2"), parse_error);
    }
    SUBCASE("empty file") {
        TempFile f("");
        CHECK_THROWS_AS(load_csv(f.path.string(), false, std::nullopt), parse_error);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_csv("/nonexistent/nope.csv", false, std::nullopt), io_error);
    }
}

TEST_CASE("save then load reproduces doubles bit for bit") {
    SplitMix64 rng(55);
    Dataset d;
    d.dim = 3;
    for (int i = 0; i < 40; ++i) {
        d.points.push_back(1e6 * (rng.next_double() - 0.5));
        d.points.push_back(rng.next_gaussian() * 1e-7);
        d.points.push_back(rng.next_double());
    }
    d.labels = std::vector<int>(40, 1);
    auto path = std::filesystem::temp_directory_path() / "bsvc_roundtrip.csv";
    save_csv(d, path.string());
    Dataset back = load_csv(path.string(), false, 3);
    CHECK(back.points == d.points);
    std::filesystem::remove(path);
}

TEST_CASE("standardize") {
    Dataset d;
    d.dim = 2;
    d.points = {1, 5, 2, 5, 3, 5, 4, 5};  // second feature constant
    auto [std_data, s] = standardize(d);
    CHECK(s.mean[0] == doctest::Approx(2.5));
    CHECK(s.stddev[1] == 1.0);  // zero-variance divisor recorded as 1
    double mean0 = 0.0, var0 = 0.0;
    for (std::size_t i = 0; i < 4; ++i) mean0 += std_data.row(i)[0];
    mean0 /= 4.0;
    for (std::size_t i = 0; i < 4; ++i) {
        var0 += (std_data.row(i)[0] - mean0) * (std_data.row(i)[0] - mean0);
    }
    var0 /= 4.0;
    CHECK(mean0 == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(var0 == doctest::Approx(1.0).epsilon(1e-9));
    for (std::size_t i = 0; i < 4; ++i) CHECK(std_data.row(i)[1] == 0.0);  // centered

    // re-applying the stored transform reproduces the matrix exactly
    Dataset again = apply_standardization(d, s);
    CHECK(again.points == std_data.points);
}

TEST_CASE("gen_rings") {
    Dataset a = gen_rings(50, 1.0, 2.0, 0.05, 20, 7);
    Dataset b = gen_rings(50, 1.0, 2.0, 0.05, 20, 7);
    CHECK(a.points == b.points);  // seed determinism
    CHECK(a.n() == 120);

    std::set<int> distinct(a.labels->begin(), a.labels->end());
    CHECK(distinct == std::set<int>{0, 1, 2});

    Dataset clean = gen_rings(30, 1.0, 2.0, 0.0, 5, 3);
    for (std::size_t i = 0; i < clean.n(); ++i) {
        int label = (*clean.labels)[i];
        if (label == 2) continue;
        auto r = clean.row(i);
        double radius = std::sqrt(r[0] * r[0] + r[1] * r[1]);
        CHECK(radius == doctest::Approx(label == 0 ? 1.0 : 2.0).epsilon(1e-12));
    }

    CHECK_THROWS_AS(gen_rings(10, 1.0, 1.0, 0.0, 5, 1), invalid_input);
}

TEST_CASE("gen_moons") {
    Dataset a = gen_moons(80, 0.05, 11);
    Dataset b = gen_moons(80, 0.05, 11);
    CHECK(a.points == b.points);
    std::set<int> distinct(a.labels->begin(), a.labels->end());
    CHECK(distinct == std::set<int>{0, 1});

    Dataset clean = gen_moons(40, 0.0, 2);
    for (std::size_t i = 0; i < clean.n(); ++i) {
        auto r = clean.row(i);
        if ((*clean.labels)[i] == 0) {
            CHECK(r[0] * r[0] + r[1] * r[1] == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(r[1] >= -1e-12);
        } else {
            double dx = r[0] - 1.0, dy = r[1] - 0.5;
            CHECK(dx * dx + dy * dy == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(r[1] <= 0.5 + 1e-12);
        }
    }
}

TEST_CASE("gen_gaussian_mixture") {
    std::vector<std::size_t> counts{400, 400, 400};
    std::vector<std::vector<double>> means{{0, 0}, {5, 0}, {0, 5}};
    std::vector<double> sigmas{0.5, 0.5, 0.5};
    Dataset d = gen_gaussian_mixture(counts, means, sigmas, 99);
    CHECK(d.n() == 1200);
    std::set<int> distinct(d.labels->begin(), d.labels->end());
    CHECK(distinct.size() == 3);

    // law of large numbers: empirical component means within 3 sigma / sqrt(n)
    for (int k = 0; k < 3; ++k) {
        double mx = 0.0, my = 0.0;
        std::size_t cnt = 0;
        for (std::size_t i = 0; i < d.n(); ++i) {
            if ((*d.labels)[i] != k) continue;
            mx += d.row(i)[0];
            my += d.row(i)[1];
            ++cnt;
        }
        mx /= double(cnt);
        my /= double(cnt);
        double tol = 3.0 * 0.5 / std::sqrt(double(cnt));
        CHECK(std::abs(mx - means[k][0]) < tol);
        CHECK(std::abs(my - means[k][1]) < tol);
    }

    SUBCASE("sigma zero collapses to the means") {
        Dataset point_masses = gen_gaussian_mixture({3, 3}, {{1, 2}, {3, 4}}, {0.0, 0.0}, 5);
        for (std::size_t i = 0; i < point_masses.n(); ++i) {
            auto r = point_masses.row(i);
            int k = (*point_masses.labels)[i];
            CHECK(r[0] == (k == 0 ? 1.0 : 3.0));
            CHECK(r[1] == (k == 0 ? 2.0 : 4.0));
        }
    }
    SUBCASE("mismatched parameter lists") {
        CHECK_THROWS_AS(gen_gaussian_mixture({1, 2}, {{0, 0}}, {0.1, 0.1}, 1), invalid_input);
    }
}
