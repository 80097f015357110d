#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "tractosurv/feature_pipeline.hpp"
#include "tractosurv/rng.hpp"
#include "test_util.hpp"

using namespace tractosurv;
using namespace tsv_test;

namespace {

FeatureTable make_table(size_t rows, size_t cols, const std::vector<double>& values) {
    FeatureTable t;
    for (size_t r = 0; r < rows; ++r) t.subject_ids.push_back("s" + std::to_string(r));
    for (size_t c = 0; c < cols; ++c) t.feature_names.push_back("f" + std::to_string(c));
    t.values = {rows, cols, values};
    t.validate();
    return t;
}

// 3 balanced classes; features {0,1,2} carry class-dependent means +-2 with
// unit noise, the rest are pure noise.
struct Synthetic {
    FeatureTable table;
    std::vector<int> y;
};

Synthetic recovery_data(size_t per_class, size_t n_features, uint64_t seed) {
    PhiloxEngine eng(seed);
    const double mean_signs[3][3] = {{+2, -2, +2}, {-2, +2, +2}, {+2, +2, -2}};
    Synthetic s;
    const size_t rows = per_class * 3;
    s.table = make_table(rows, n_features, std::vector<double>(rows * n_features, 0.0));
    size_t r = 0;
    for (int cls = 0; cls < 3; ++cls)
        for (size_t i = 0; i < per_class; ++i, ++r) {
            s.y.push_back(cls);
            for (size_t c = 0; c < n_features; ++c) {
                const double mean = c < 3 ? mean_signs[cls][c] : 0.0;
                s.table.values.at(r, c) = mean + eng.normal();
            }
        }
    return s;
}

CVConfig quick_cv(uint64_t seed, int repeats = 2) {
    CVConfig cv;
    cv.folds = 5;
    cv.repeats = repeats;
    cv.seed = seed;
    return cv;
}

} // namespace

TEST_CASE("variance_filter removes constant columns and keeps distinct ones") {
    // column 1 constant
    const auto t = make_table(3, 3, {1, 5, 0.1, 2, 5, 0.2, 3, 5, 0.3});
    CHECK(variance_filter(t) == std::vector<size_t>{0, 2});
    CHECK(variance_filter(t, 0.0) == std::vector<size_t>{0, 2});

    // threshold 0 with all-distinct columns keeps everything
    const auto t2 = make_table(3, 2, {1, 2, 3, 4, 5, 6});
    CHECK(variance_filter(t2, 0.0) == std::vector<size_t>{0, 1});
}

TEST_CASE("variance_filter matches the two-pass oracle and is idempotent") {
    PhiloxEngine eng(3);
    std::vector<double> values(40 * 12);
    for (auto& v : values) v = eng.normal();
    auto t = make_table(40, 12, values);
    // plant two near-constant columns
    for (size_t r = 0; r < 40; ++r) {
        t.values.at(r, 4) = 7.0;
        t.values.at(r, 9) = 1.0 + 1e-9 * static_cast<double>(r);
    }

    const double threshold = 1e-8;
    const auto kept = variance_filter(t, threshold);

    std::vector<size_t> expected;
    for (size_t c = 0; c < 12; ++c) {
        double mean = 0;
        for (size_t r = 0; r < 40; ++r) mean += t.values.at(r, c);
        mean /= 40.0;
        double ss = 0;
        for (size_t r = 0; r < 40; ++r) ss += (t.values.at(r, c) - mean) * (t.values.at(r, c) - mean);
        if (ss / 39.0 > threshold) expected.push_back(c);
    }
    CHECK(kept == expected);
    CHECK(kept.size() == 10);

    // filtering the filtered table keeps every column
    const auto filtered = t.select_columns(kept);
    std::vector<size_t> all(kept.size());
    for (size_t i = 0; i < all.size(); ++i) all[i] = i;
    CHECK(variance_filter(filtered, threshold) == all);

    const auto tiny = make_table(1, 2, {1, 2});
    CHECK_THROWS_AS(variance_filter(tiny), Error);
}

TEST_CASE("scaler: forced example {1,2,3} -> {-1,0,1}") {
    DataMatrix train{3, 1, {1, 2, 3}};
    const Scaler s = Scaler::fit(train);
    const DataMatrix z = s.apply(train);
    CHECK(z.at(0, 0) == doctest::Approx(-1.0));
    CHECK(z.at(1, 0) == doctest::Approx(0.0));
    CHECK(z.at(2, 0) == doctest::Approx(1.0));
}

TEST_CASE("scaler: training columns standardized, held-out rows via the oracle") {
    PhiloxEngine eng(6);
    DataMatrix train{30, 4, std::vector<double>(120)};
    DataMatrix held{10, 4, std::vector<double>(40)};
    for (auto& v : train.values) v = eng.normal() * 4 + 2;
    for (auto& v : held.values) v = eng.normal() * 4 + 2;

    const Scaler s = Scaler::fit(train);
    const DataMatrix zt = s.apply(train);
    for (size_t c = 0; c < 4; ++c) {
        double mean = 0;
        for (size_t r = 0; r < 30; ++r) mean += zt.at(r, c);
        mean /= 30.0;
        double ss = 0;
        for (size_t r = 0; r < 30; ++r) ss += (zt.at(r, c) - mean) * (zt.at(r, c) - mean);
        CHECK(std::abs(mean) < 1e-9);
        CHECK(std::abs(std::sqrt(ss / 29.0) - 1.0) < 1e-9);
    }

    // held-out rows transformed with the training statistics only
    const DataMatrix zh = s.apply(held);
    for (size_t r = 0; r < 10; ++r)
        for (size_t c = 0; c < 4; ++c)
            CHECK(zh.at(r, c) ==
                  doctest::Approx((held.at(r, c) - s.mean[c]) / s.stddev[c]).epsilon(1e-12));

    // re-applying the same scaler to its own output is NOT the identity
    const DataMatrix zz = s.apply(zt);
    bool differs = false;
    for (size_t i = 0; i < zz.values.size(); ++i)
        differs = differs || std::abs(zz.values[i] - zt.values[i]) > 1e-9;
    CHECK(differs);

    DataMatrix constant{3, 1, {2, 2, 2}};
    CHECK_THROWS_WITH_AS(Scaler::fit(constant), doctest::Contains("variance"), Error);
}

TEST_CASE("rfe_cv: single feature is trivially selected") {
    const auto data = recovery_data(10, 1, 1);
    const auto result = rfe_cv(data.table, data.y, 3, quick_cv(1), SvmParams{});
    CHECK(result.retained == std::vector<size_t>{0});
    CHECK(result.chosen_count == 1);
    REQUIRE(result.curve.size() == 1);
    CHECK(result.curve[0].first == 1);
}

TEST_CASE("rfe_cv recovers the informative features") {
    const auto data = recovery_data(40, 12, 7);
    SvmParams svm;
    svm.tol = 1e-3;
    svm.max_iter = 300;
    const auto result = rfe_cv(data.table, data.y, 3, quick_cv(7), svm);
    // signal lives in features {0,1,2}
    for (size_t must : {size_t{0}, size_t{1}, size_t{2}})
        CHECK(std::count(result.retained.begin(), result.retained.end(), must) == 1);
    // accuracy at the chosen count is the curve maximum
    double best = 0;
    for (const auto& [k, acc] : result.curve) best = std::max(best, acc);
    for (const auto& [k, acc] : result.curve)
        if (k == result.chosen_count) CHECK(acc == best);
}

TEST_CASE("rfe_cv is deterministic given the seed") {
    const auto data = recovery_data(20, 8, 9);
    const auto a = rfe_cv(data.table, data.y, 3, quick_cv(5), SvmParams{});
    const auto b = rfe_cv(data.table, data.y, 3, quick_cv(5), SvmParams{});
    CHECK(a.retained == b.retained);
    CHECK(a.chosen_count == b.chosen_count);
    REQUIRE(a.curve.size() == b.curve.size());
    for (size_t i = 0; i < a.curve.size(); ++i) {
        CHECK(a.curve[i].first == b.curve[i].first);
        CHECK(a.curve[i].second == b.curve[i].second);
    }
    // parallel evaluation does not change the outcome
    const auto c = rfe_cv(data.table, data.y, 3, quick_cv(5), SvmParams{}, 4);
    CHECK(a.retained == c.retained);
    for (size_t i = 0; i < a.curve.size(); ++i) CHECK(a.curve[i].second == c.curve[i].second);
}

TEST_CASE("rfe_cv: duplicated informative columns keep the curve flat") {
    auto data = recovery_data(30, 3, 11); // only informative features
    // append exact duplicates of the three informative columns plus noise
    FeatureTable wide = data.table;
    wide.feature_names = {"f0", "f1", "f2", "d0", "d1", "d2", "n0", "n1"};
    wide.values = DataMatrix::zeros(90, 8);
    PhiloxEngine eng(12);
    for (size_t r = 0; r < 90; ++r) {
        for (size_t c = 0; c < 3; ++c) {
            wide.values.at(r, c) = data.table.values.at(r, c);
            wide.values.at(r, c + 3) = data.table.values.at(r, c);
        }
        wide.values.at(r, 6) = eng.normal();
        wide.values.at(r, 7) = eng.normal();
    }
    SvmParams svm;
    svm.tol = 1e-3;
    const auto result = rfe_cv(wide, data.y, 3, quick_cv(13), svm);

    double best = 0;
    for (const auto& [k, acc] : result.curve) best = std::max(best, acc);
    // with duplicates present, accuracy must already be near-max at k >= 4
    for (const auto& [k, acc] : result.curve)
        if (k >= 4) CHECK(acc >= best - 0.1);
    // at most one copy of each duplicate pair is needed: chosen set is small
    CHECK(result.chosen_count <= 6);
}

TEST_CASE("rfe_cv rejects single-class labels") {
    const auto data = recovery_data(10, 4, 15);
    std::vector<int> y(data.y.size(), 1);
    CHECK_THROWS_WITH_AS(rfe_cv(data.table, y, 3, quick_cv(1), SvmParams{}),
                         doctest::Contains("two classes"), Error);
}

TEST_CASE("selection JSON round trip") {
    SelectionResult r;
    r.retained = {0, 2, 5};
    r.curve = {{3, 0.9}, {2, 0.95}, {1, 0.5}};
    r.chosen_count = 2;
    const std::string json = selection_to_json(r);
    const SelectionResult back = selection_from_json(json);
    CHECK(back.retained == r.retained);
    CHECK(back.chosen_count == 2);
    REQUIRE(back.curve.size() == 3);
    CHECK(back.curve[1].second == 0.95);

    CHECK_THROWS_AS(selection_from_json("{"), Error);
    CHECK_THROWS_AS(selection_from_json("{}"), Error);
}

TEST_CASE("feature table CSV round trip and parse errors") {
    const auto t = make_table(2, 2, {1.5, 2.25, -3.125, 4.0625});
    const std::string csv = feature_table_csv(t);
    CHECK(csv == "subject_id,f0,f1\ns0,1.5,2.25\ns1,-3.125,4.0625\n");
    const auto back = feature_table_from_csv(csv, "test");
    CHECK(back.subject_ids == t.subject_ids);
    CHECK(back.feature_names == t.feature_names);
    CHECK(back.values.values == t.values.values);

    CHECK_THROWS_AS(feature_table_from_csv("", "test"), Error);
    CHECK_THROWS_AS(feature_table_from_csv("wrong,f0\na,1\n", "test"), Error);
    CHECK_THROWS_AS(feature_table_from_csv("subject_id,f0\na,1,2\n", "test"), Error);
    CHECK_THROWS_AS(feature_table_from_csv("subject_id,f0\na,xyz\n", "test"), Error);
}
