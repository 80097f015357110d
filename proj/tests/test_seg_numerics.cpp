#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "tractosurv/seg_numerics.hpp"
#include "tractosurv/rng.hpp"
#include "test_util.hpp"

using namespace tractosurv;
using namespace tsv_test;

namespace {

FeatureMap random_map(int n, int c, int d, int h, int w, uint64_t seed, double scale = 1.0,
                      double shift = 0.0) {
    FeatureMap m = FeatureMap::zeros(n, c, d, h, w);
    PhiloxEngine eng(seed);
    for (auto& v : m.data) v = eng.normal() * scale + shift;
    return m;
}

// independent two-pass group statistics
void oracle_group_stats(const FeatureMap& x, int groups, int ni, int g, double& mean, double& var) {
    const int cpg = x.c / groups;
    const size_t spatial = x.spatial_size();
    double sum = 0;
    size_t count = 0;
    for (int cc = 0; cc < cpg; ++cc)
        for (size_t s = 0; s < spatial; ++s) {
            sum += x.data[x.index(ni, g * cpg + cc, s)];
            ++count;
        }
    mean = sum / double(count);
    double ss = 0;
    for (int cc = 0; cc < cpg; ++cc)
        for (size_t s = 0; s < spatial; ++s) {
            const double d = x.data[x.index(ni, g * cpg + cc, s)] - mean;
            ss += d * d;
        }
    var = ss / double(count);
}

FeatureMap random_simplex_map(int c, int d, int h, int w, uint64_t seed) {
    FeatureMap m = FeatureMap::zeros(1, c, d, h, w);
    PhiloxEngine eng(seed);
    for (size_t s = 0; s < m.spatial_size(); ++s) {
        double total = 0;
        std::vector<double> raw(static_cast<size_t>(c));
        for (auto& v : raw) {
            v = -std::log(1.0 - eng.unit());
            total += v;
        }
        for (int ci = 0; ci < c; ++ci) m.data[m.index(0, ci, s)] = raw[static_cast<size_t>(ci)] / total;
    }
    return m;
}

} // namespace

TEST_CASE("group_norm_forward: constant input collapses to beta") {
    FeatureMap x = FeatureMap::zeros(2, 8, 2, 2, 2);
    for (auto& v : x.data) v = 5.0;
    std::vector<double> gamma(8, 2.0), beta(8);
    for (int c = 0; c < 8; ++c) beta[static_cast<size_t>(c)] = 0.5 * c;
    const FeatureMap y = group_norm_forward(x, 4, gamma, beta);
    for (int n = 0; n < 2; ++n)
        for (int c = 0; c < 8; ++c)
            for (size_t s = 0; s < y.spatial_size(); ++s)
                CHECK(y.data[y.index(n, c, s)] == doctest::Approx(beta[static_cast<size_t>(c)]));
}

TEST_CASE("group_norm_forward: per-group statistics match the two-pass oracle") {
    const FeatureMap x = random_map(2, 8, 4, 4, 4, 3, 2.5, -1.0);
    std::vector<double> gamma(8, 1.0), beta(8, 0.0);
    const FeatureMap y = group_norm_forward(x, 4, gamma, beta);

    for (int n = 0; n < 2; ++n)
        for (int g = 0; g < 4; ++g) {
            double mean_out, var_out;
            oracle_group_stats(y, 4, n, g, mean_out, var_out);
            CHECK(std::abs(mean_out) < 1e-5);
            CHECK(std::abs(var_out - 1.0) < 1e-4);

            // elementwise against the oracle formula
            double mean_in, var_in;
            oracle_group_stats(x, 4, n, g, mean_in, var_in);
            const int cpg = 2;
            for (int cc = 0; cc < cpg; ++cc)
                for (size_t s = 0; s < x.spatial_size(); ++s) {
                    const size_t idx = x.index(n, g * cpg + cc, s);
                    const double expected =
                        (x.data[idx] - mean_in) / std::sqrt(var_in + 1e-5);
                    CHECK(y.data[idx] == doctest::Approx(expected).epsilon(1e-5));
                }
        }
}

TEST_CASE("group_norm_forward: groups == channels equals instance norm") {
    const FeatureMap x = random_map(2, 6, 3, 3, 3, 9, 1.7, 0.4);
    std::vector<double> gamma(6, 1.0), beta(6, 0.0);
    const FeatureMap y = group_norm_forward(x, 6, gamma, beta);

    // oracle: per-channel (instance) normalization
    for (int n = 0; n < 2; ++n)
        for (int c = 0; c < 6; ++c) {
            double mean = 0;
            for (size_t s = 0; s < x.spatial_size(); ++s) mean += x.data[x.index(n, c, s)];
            mean /= double(x.spatial_size());
            double ss = 0;
            for (size_t s = 0; s < x.spatial_size(); ++s) {
                const double d = x.data[x.index(n, c, s)] - mean;
                ss += d * d;
            }
            const double var = ss / double(x.spatial_size());
            for (size_t s = 0; s < x.spatial_size(); ++s) {
                const double expected = (x.data[x.index(n, c, s)] - mean) / std::sqrt(var + 1e-5);
                CHECK(y.data[y.index(n, c, s)] == doctest::Approx(expected).epsilon(1e-6));
            }
        }
}

TEST_CASE("group_norm_forward: gamma/beta affine applied per channel") {
    const FeatureMap x = random_map(1, 4, 2, 2, 2, 13);
    std::vector<double> gamma{2, 3, 4, 5}, beta{-1, 0, 1, 2};
    std::vector<double> ones(4, 1.0), zeros(4, 0.0);
    const FeatureMap plain = group_norm_forward(x, 2, ones, zeros);
    const FeatureMap affine = group_norm_forward(x, 2, gamma, beta);
    for (int c = 0; c < 4; ++c)
        for (size_t s = 0; s < x.spatial_size(); ++s)
            CHECK(affine.data[affine.index(0, c, s)] ==
                  doctest::Approx(gamma[static_cast<size_t>(c)] * plain.data[plain.index(0, c, s)] +
                                  beta[static_cast<size_t>(c)]));
}

TEST_CASE("group_norm_forward: invariance to per-group affine input rescaling") {
    const FeatureMap x = random_map(1, 8, 3, 3, 3, 21);
    std::vector<double> gamma(8, 1.0), beta(8, 0.0);
    const FeatureMap base = group_norm_forward(x, 4, gamma, beta);

    FeatureMap scaled = x;
    const double a[4] = {2.0, 0.5, 3.0, 1.5};
    const double b[4] = {1.0, -2.0, 0.0, 4.0};
    for (int g = 0; g < 4; ++g)
        for (int cc = 0; cc < 2; ++cc)
            for (size_t s = 0; s < x.spatial_size(); ++s) {
                const size_t idx = x.index(0, g * 2 + cc, s);
                scaled.data[idx] = a[g] * x.data[idx] + b[g];
            }
    const FeatureMap out = group_norm_forward(scaled, 4, gamma, beta);
    for (size_t i = 0; i < out.data.size(); ++i)
        CHECK(out.data[i] == doctest::Approx(base.data[i]).epsilon(1e-4).scale(1.0));
}

TEST_CASE("group_norm_forward: shape errors") {
    const FeatureMap x = random_map(1, 6, 2, 2, 2, 2);
    std::vector<double> gamma(6, 1.0), beta(6, 0.0);
    CHECK_THROWS_WITH_AS(group_norm_forward(x, 4, gamma, beta), doctest::Contains("divisible"),
                         Error);
    std::vector<double> short_gamma(5, 1.0);
    CHECK_THROWS_AS(group_norm_forward(x, 3, short_gamma, beta), Error);
}

TEST_CASE("hard_negative_select: P=2 with 10 negatives keeps the top 6") {
    LossMap l;
    l.loss = {0.5, 0.9, 0.1, 0.8, 0.2, 0.7, 0.3, 0.6, 0.05, 0.4, 0.15, 0.25};
    l.positive = {1, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0};
    const auto sel = hard_negative_select(l, 3.0);
    size_t pos_selected = 0, neg_selected = 0;
    double min_selected = 1e9, max_unselected = -1e9;
    for (size_t i = 0; i < sel.size(); ++i) {
        if (l.positive[i]) {
            CHECK(sel[i] == 1);
            ++pos_selected;
        } else if (sel[i]) {
            ++neg_selected;
            min_selected = std::min(min_selected, l.loss[i]);
        } else {
            max_unselected = std::max(max_unselected, l.loss[i]);
        }
    }
    CHECK(pos_selected == 2);
    CHECK(neg_selected == 6);
    CHECK(min_selected >= max_unselected);
}

TEST_CASE("hard_negative_select: no positives falls back to the floor count") {
    LossMap l;
    l.loss.assign(300, 0.0);
    l.positive.assign(300, 0);
    PhiloxEngine eng(4);
    for (auto& v : l.loss) v = eng.unit();
    const auto sel = hard_negative_select(l, 3.0);
    CHECK(std::count(sel.begin(), sel.end(), 1) == 128);

    LossMap few;
    few.loss.assign(50, 0.5);
    few.positive.assign(50, 0);
    const auto sel_few = hard_negative_select(few, 3.0);
    CHECK(std::count(sel_few.begin(), sel_few.end(), 1) == 50);
}

TEST_CASE("hard_negative_select: equal losses break ties toward low indices") {
    LossMap l;
    l.loss = {0.5, 0.5, 0.5, 0.5, 0.5};
    l.positive = {1, 0, 0, 0, 0};
    const auto sel = hard_negative_select(l, 3.0); // budget 3 negatives
    CHECK(sel == std::vector<uint8_t>{1, 1, 1, 1, 0});
}

TEST_CASE("hard_negative_select: randomized selection property") {
    PhiloxEngine eng(99);
    for (int trial = 0; trial < 200; ++trial) {
        LossMap l;
        const size_t n = 20 + eng.below(200);
        l.loss.resize(n);
        l.positive.resize(n);
        size_t n_pos = 0;
        for (size_t i = 0; i < n; ++i) {
            l.loss[i] = eng.unit();
            l.positive[i] = eng.unit() < 0.15 ? 1 : 0;
            n_pos += l.positive[i];
        }
        const auto sel = hard_negative_select(l, 3.0);

        size_t sel_neg = 0;
        double min_sel = 2.0, max_unsel = -1.0;
        for (size_t i = 0; i < n; ++i) {
            if (l.positive[i]) {
                CHECK(sel[i] == 1);
                continue;
            }
            if (sel[i]) {
                ++sel_neg;
                min_sel = std::min(min_sel, l.loss[i]);
            } else {
                max_unsel = std::max(max_unsel, l.loss[i]);
            }
        }
        const size_t n_neg = n - n_pos;
        const size_t expected =
            n_pos > 0 ? std::min(static_cast<size_t>(std::floor(3.0 * double(n_pos))), n_neg)
                      : std::min<size_t>(128, n_neg);
        CHECK(sel_neg == expected);
        if (sel_neg > 0 && sel_neg < n_neg) CHECK(min_sel >= max_unsel);
    }
}

TEST_CASE("ensemble_average: single map is returned unchanged") {
    const auto m = random_simplex_map(4, 2, 2, 2, 5);
    const auto avg = ensemble_average({m});
    CHECK(avg.data == m.data);
}

TEST_CASE("ensemble_average: disagreeing one-hot maps split 0.5/0.5") {
    FeatureMap a = FeatureMap::zeros(1, 2, 1, 1, 1);
    FeatureMap b = FeatureMap::zeros(1, 2, 1, 1, 1);
    a.data = {1, 0};
    b.data = {0, 1};
    const auto avg = ensemble_average({a, b});
    CHECK(avg.data == std::vector<double>{0.5, 0.5});
}

TEST_CASE("ensemble_average: matches the mean oracle and stays on the simplex") {
    std::vector<FeatureMap> maps;
    for (uint64_t k = 0; k < 5; ++k) maps.push_back(random_simplex_map(4, 3, 3, 3, 10 + k));
    const auto avg = ensemble_average(maps);
    for (size_t i = 0; i < avg.data.size(); ++i) {
        double expected = 0;
        for (const auto& m : maps) expected += m.data[i];
        expected /= 5.0;
        CHECK(avg.data[i] == doctest::Approx(expected).epsilon(1e-12));
    }
    for (size_t s = 0; s < avg.spatial_size(); ++s) {
        double sum = 0;
        for (int c = 0; c < 4; ++c) sum += avg.data[avg.index(0, c, s)];
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }

    // permutation invariance over the input list
    std::vector<FeatureMap> shuffled = {maps[3], maps[0], maps[4], maps[2], maps[1]};
    const auto avg2 = ensemble_average(shuffled);
    for (size_t i = 0; i < avg.data.size(); ++i)
        CHECK(avg2.data[i] == doctest::Approx(avg.data[i]).epsilon(1e-12));
}

TEST_CASE("ensemble_average: error paths") {
    CHECK_THROWS_WITH_AS(ensemble_average({}), doctest::Contains("at least one"), Error);
    const auto a = random_simplex_map(3, 2, 2, 2, 1);
    const auto b = random_simplex_map(3, 2, 2, 3, 2);
    CHECK_THROWS_WITH_AS(ensemble_average({a, b}), doctest::Contains("shape"), Error);
}

TEST_CASE("decode_labels: one-hot map recovers the labels exactly") {
    const std::vector<int> label_values = {0, 1, 2, 4};
    Volume labels = Volume::zeros({4, 3, 2}, {1, 1, 1}, Affine::identity(), VolumeKind::label);
    PhiloxEngine eng(8);
    for (auto& v : labels.data()) v = label_values[eng.below(4)];

    FeatureMap p = FeatureMap::zeros(1, 4, 2, 3, 4);
    for (size_t s = 0; s < p.spatial_size(); ++s)
        for (int c = 0; c < 4; ++c)
            p.data[p.index(0, c, s)] = labels.data()[s] == label_values[static_cast<size_t>(c)] ? 1.0 : 0.0;
    const Volume decoded = decode_labels(p, label_values);
    CHECK(decoded.data() == labels.data());
    CHECK(decoded.dims() == std::array<int, 3>{4, 3, 2});
}

TEST_CASE("decode_labels: uniform probabilities pick the first label") {
    FeatureMap p = FeatureMap::zeros(1, 4, 2, 2, 2);
    for (auto& v : p.data) v = 0.25;
    const Volume decoded = decode_labels(p);
    for (double v : decoded.data()) CHECK(v == 0.0);
}

TEST_CASE("decode_labels: matches the per-voxel argmax oracle") {
    const auto p = random_simplex_map(4, 3, 4, 5, 33);
    const Volume decoded = decode_labels(p);
    const std::vector<int> label_values = {0, 1, 2, 4};
    for (size_t s = 0; s < p.spatial_size(); ++s) {
        int best = 0;
        for (int c = 1; c < 4; ++c)
            if (p.data[p.index(0, c, s)] > p.data[p.index(0, best, s)]) best = c;
        CHECK(decoded.data()[s] == label_values[static_cast<size_t>(best)]);
    }
}

TEST_CASE("decode_labels: schema error on channel mismatch") {
    const auto p = random_simplex_map(3, 2, 2, 2, 44);
    CHECK_THROWS_WITH_AS(decode_labels(p, {0, 1, 2, 4}), doctest::Contains("channel"), Error);
}
