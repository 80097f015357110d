#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "tractosurv/text_io.hpp"
#include "tractosurv/tracking.hpp"
#include "test_util.hpp"

using namespace tractosurv;
using namespace tsv_test;

namespace {

TrackingParams small_params(uint64_t seed = 0) {
    TrackingParams p;
    p.target_tracts = 100;
    p.rng_seed = seed;
    return p;
}

} // namespace

TEST_CASE("seed_points stays inside a single-voxel mask cube") {
    Volume mask = Volume::zeros({5, 5, 5}, {2, 2, 2}, Affine::scaling(2, 2, 2), VolumeKind::mask);
    mask.at(2, 3, 1) = 1.0;
    auto params = small_params(7);
    params.target_tracts = 500;
    const auto seeds = seed_points(mask, params);
    REQUIRE(seeds.size() == 500);
    for (const auto& s : seeds) {
        // cube of voxel (2,3,1) in world mm: [3,5) x [5,7) x [1,3)
        CHECK(s.x >= 3.0);
        CHECK(s.x < 5.0);
        CHECK(s.y >= 5.0);
        CHECK(s.y < 7.0);
        CHECK(s.z >= 1.0);
        CHECK(s.z < 3.0);
    }
}

TEST_CASE("seed_points is deterministic and seed-indexed") {
    const Volume mask = random_mask({6, 6, 6}, 0.5, 3);
    const auto a = seed_points(mask, small_params(42));
    const auto b = seed_points(mask, small_params(42));
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].x == b[i].x);
        CHECK(a[i].y == b[i].y);
        CHECK(a[i].z == b[i].z);
    }
    const auto c = seed_points(mask, small_params(43));
    bool any_differ = false;
    for (size_t i = 0; i < a.size(); ++i) any_differ = any_differ || a[i].x != c[i].x;
    CHECK(any_differ);
}

TEST_CASE("seed_points splits a 2-voxel mask binomially") {
    Volume mask = Volume::zeros({4, 1, 1}, {1, 1, 1}, Affine::identity(), VolumeKind::mask);
    mask.at(0, 0, 0) = 1.0;
    mask.at(2, 0, 0) = 1.0;
    TrackingParams params = small_params(11);
    params.target_tracts = 100000;
    const auto seeds = seed_points(mask, params);
    size_t first = 0;
    for (const auto& s : seeds)
        if (s.x < 1.0) ++first;
    // binomial(100000, 0.5): 3 sigma = 3*sqrt(25000) ~ 474.3
    CHECK(std::abs(static_cast<double>(first) - 50000.0) < 474.3);
}

TEST_CASE("seed_points rejects an empty mask") {
    const Volume empty = Volume::zeros({4, 4, 4}, {1, 1, 1}, Affine::identity(), VolumeKind::mask);
    CHECK_THROWS_WITH_AS(seed_points(empty, small_params()), doctest::Contains("empty"), Error);
}

TEST_CASE("track_one follows a uniform +x field to both boundaries") {
    const auto field = uniform_peak_field({60, 20, 20}, {1, 0, 0}, 1.0);
    TrackingParams params = small_params();
    const Vec3 seed{29.5, 10, 10};
    const auto tract = track_one(seed, field, params);
    REQUIRE(tract.has_value());

    // oracle: simulate the stepping rule directly (llround in-bounds check)
    auto steps_until_exit = [&](double dir) {
        size_t k = 0;
        double x = 29.5;
        while (true) {
            x += dir * params.step_mm;
            if (std::llround(x) < 0 || std::llround(x) > 59) break;
            ++k;
        }
        return k;
    };
    const size_t expected = steps_until_exit(+1.0) + steps_until_exit(-1.0) + 1;
    CHECK(tract->points.size() == expected);

    // point count ~ floor(span/step) +- 1
    const auto span_count = static_cast<size_t>(60.0 / params.step_mm);
    CHECK(tract->points.size() >= span_count - 1);
    CHECK(tract->points.size() <= span_count + 1);

    // spans to both x boundaries
    CHECK(tract->points.front().x <= 0.5);
    CHECK(tract->points.back().x >= 58.5);

    // collinear with the field within 1e-6 per segment, step length exact
    for (size_t i = 1; i < tract->points.size(); ++i) {
        const Vec3 d = tract->points[i] - tract->points[i - 1];
        CHECK(std::abs(d.x - params.step_mm) < 1e-9);
        CHECK(std::abs(d.y) < 1e-6);
        CHECK(std::abs(d.z) < 1e-6);
    }
}

TEST_CASE("track_one rejects in a zero-QA field") {
    const auto field = uniform_peak_field({10, 10, 10}, {1, 0, 0}, 0.0);
    CHECK_FALSE(track_one({5, 5, 5}, field, small_params()).has_value());
}

TEST_CASE("track_one errors when the seed is outside the grid") {
    const auto field = uniform_peak_field({10, 10, 10}, {1, 0, 0}, 1.0);
    CHECK_THROWS_WITH_AS(track_one({50, 5, 5}, field, small_params()),
                         doctest::Contains("outside"), Error);
}

TEST_CASE("orthogonal peak is never selected with incoming along x") {
    // every voxel carries a +x peak (qa 1.0) and a +y peak (qa 0.9); the seed
    // starts along the highest-qa +x, and the 90-degree y peak must never win
    // the angular selection afterwards
    const std::array<int, 3> dims{30, 30, 30};
    const size_t n = 30 * 30 * 30;
    std::vector<float> dirs(n * 2 * 3, 0.0f);
    std::vector<float> qa(n * 2, 0.0f);
    for (size_t v = 0; v < n; ++v) {
        dirs[v * 6 + 0] = 1.0f; // peak 0: +x
        dirs[v * 6 + 4] = 1.0f; // peak 1: +y
        qa[v * 2 + 0] = 1.0f;
        qa[v * 2 + 1] = 0.9f;
    }
    const PeakField field(dims, {1, 1, 1}, Affine::identity(), 2, std::move(dirs), std::move(qa));
    const auto tract = track_one({14.5, 14.5, 14.5}, field, small_params());
    REQUIRE(tract.has_value());
    for (size_t i = 1; i < tract->points.size(); ++i) {
        const Vec3 d = tract->points[i] - tract->points[i - 1];
        CHECK(std::abs(d.y) < 1e-9); // y peak (90 degrees) never selected
        CHECK(std::abs(d.z) < 1e-9);
    }
}

TEST_CASE("branch terminates when only out-of-cone peaks remain") {
    // +x peaks for x < 20, +y-only beyond; with angle_max 60 the forward branch
    // must stop at the transition
    const std::array<int, 3> dims{40, 40, 40};
    const size_t n = static_cast<size_t>(40) * 40 * 40;
    std::vector<float> dirs(n * 3, 0.0f);
    std::vector<float> qa(n, 0.0f);
    for (int z = 0; z < 40; ++z)
        for (int y = 0; y < 40; ++y)
            for (int x = 0; x < 40; ++x) {
                const size_t v = static_cast<size_t>(x) + 40 * (static_cast<size_t>(y) + 40 * static_cast<size_t>(z));
                if (x < 20) dirs[v * 3 + 0] = 1.0f;
                else dirs[v * 3 + 1] = 1.0f;
                qa[v] = 1.0f;
            }
    const PeakField field(dims, {1, 1, 1}, Affine::identity(), 1, std::move(dirs), std::move(qa));
    const auto tract = track_one({10.25, 20, 20}, field, small_params());
    REQUIRE(tract.has_value());
    for (const auto& p : tract->points) CHECK(p.x < 20.5);
    CHECK(tract->points.back().x > 19.0); // reached the transition before stopping
}

TEST_CASE("max length caps the tract and min length rejects short ones") {
    const auto field = uniform_peak_field({100, 10, 10}, {1, 0, 0}, 1.0);
    TrackingParams params = small_params();
    params.max_length_mm = 20.0;
    const auto tract = track_one({49.5, 5, 5}, field, params);
    REQUIRE(tract.has_value());
    CHECK(tract->length_mm(params.step_mm) <= 20.0);
    CHECK(tract->length_mm(params.step_mm) >= 19.0);

    // per-branch cap: max/2 on each side of the seed
    CHECK(tract->points.front().x >= 49.5 - 10.0 - 1e-9);
    CHECK(tract->points.back().x <= 49.5 + 10.0 + 1e-9);

    TrackingParams strict = small_params();
    strict.min_length_mm = 200.0; // grid only allows ~100mm
    CHECK_FALSE(track_one({49.5, 5, 5}, field, strict).has_value());
}

TEST_CASE("track_all: phantom produces parallel straight tracts in seed order") {
    const auto field = uniform_peak_field({40, 20, 20}, {1, 0, 0}, 1.0);
    const Volume mask = make_box_mask({40, 20, 20}, {18, 8, 8}, {21, 11, 11});
    TrackingParams params = small_params(5);
    params.target_tracts = 1000;
    const auto tracts = track_all(mask, field, params, 1);
    CHECK(tracts.size() == 1000); // every tract spans ~40mm >= min_length 10
    for (const auto& t : tracts)
        for (size_t i = 1; i < t.points.size(); ++i) {
            const Vec3 d = t.points[i] - t.points[i - 1];
            CHECK(std::abs(d.x - 0.5) < 1e-9);
            CHECK(std::abs(d.y) < 1e-6);
        }
    // seed order is preserved
    for (size_t i = 1; i < tracts.size(); ++i) CHECK(tracts[i].seed_index > tracts[i - 1].seed_index);
}

TEST_CASE("track_all with target 0 returns an empty list") {
    const auto field = uniform_peak_field({10, 10, 10}, {1, 0, 0}, 1.0);
    const Volume mask = make_box_mask({10, 10, 10}, {4, 4, 4}, {5, 5, 5});
    TrackingParams params = small_params();
    params.target_tracts = 0;
    CHECK(track_all(mask, field, params, 2).empty());
}

TEST_CASE("track_all is identical across 1 and 8 workers") {
    const auto field = uniform_peak_field({40, 20, 20}, {1, 0, 0}, 1.0);
    const Volume mask = make_box_mask({40, 20, 20}, {15, 5, 5}, {25, 15, 15});
    TrackingParams params = small_params(17);
    params.target_tracts = 2000;
    const auto a = track_all(mask, field, params, 1);
    const auto b = track_all(mask, field, params, 8);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].seed_index == b[i].seed_index);
        REQUIRE(a[i].points.size() == b[i].points.size());
        for (size_t p = 0; p < a[i].points.size(); ++p) {
            CHECK(a[i].points[p].x == b[i].points[p].x);
            CHECK(a[i].points[p].y == b[i].points[p].y);
            CHECK(a[i].points[p].z == b[i].points[p].z);
        }
    }
}

TEST_CASE("raising qa_threshold never increases accepted tracts") {
    // +x directions with random per-voxel QA in [0,1]
    const std::array<int, 3> dims{40, 12, 12};
    const size_t n = static_cast<size_t>(40) * 12 * 12;
    std::vector<float> dirs(n * 3, 0.0f);
    std::vector<float> qa(n, 0.0f);
    PhiloxEngine eng(23);
    for (size_t v = 0; v < n; ++v) {
        dirs[v * 3] = 1.0f;
        qa[v] = static_cast<float>(eng.unit());
    }
    const PeakField field(dims, {1, 1, 1}, Affine::identity(), 1, std::move(dirs), std::move(qa));
    const Volume mask = make_box_mask({40, 12, 12}, {15, 4, 4}, {24, 7, 7});

    size_t prev = SIZE_MAX;
    for (double threshold : {0.0, 0.2, 0.4, 0.6, 0.8}) {
        TrackingParams params = small_params(3);
        params.target_tracts = 500;
        params.qa_threshold = threshold;
        const size_t accepted = track_all(mask, field, params, 2).size();
        CHECK(accepted <= prev);
        prev = accepted;
    }
}

TEST_CASE("angular constraint holds post hoc on every emitted tract") {
    // smoothly rotating field: direction depends on x
    const std::array<int, 3> dims{40, 40, 40};
    const size_t n = static_cast<size_t>(40) * 40 * 40;
    std::vector<float> dirs(n * 3, 0.0f);
    std::vector<float> qa(n, 1.0f);
    for (int z = 0; z < 40; ++z)
        for (int y = 0; y < 40; ++y)
            for (int x = 0; x < 40; ++x) {
                const size_t v = static_cast<size_t>(x) + 40 * (static_cast<size_t>(y) + 40 * static_cast<size_t>(z));
                const double angle = 0.02 * x;
                dirs[v * 3 + 0] = static_cast<float>(std::cos(angle));
                dirs[v * 3 + 1] = static_cast<float>(std::sin(angle));
            }
    const PeakField field(dims, {1, 1, 1}, Affine::identity(), 1, std::move(dirs), std::move(qa));
    const Volume mask = make_box_mask({40, 40, 40}, {18, 18, 18}, {21, 21, 21});
    TrackingParams params = small_params(9);
    params.target_tracts = 200;
    const auto tracts = track_all(mask, field, params, 2);
    const double cos_max = std::cos(params.angle_max_deg * M_PI / 180.0);
    for (const auto& t : tracts) {
        CHECK(t.length_mm(params.step_mm) >= params.min_length_mm);
        CHECK(t.length_mm(params.step_mm) <= params.max_length_mm);
        for (size_t i = 2; i < t.points.size(); ++i) {
            const Vec3 a = t.points[i - 1] - t.points[i - 2];
            const Vec3 b = t.points[i] - t.points[i - 1];
            const double c = a.dot(b) / (a.norm() * b.norm());
            CHECK(c >= cos_max - 1e-9);
        }
    }
}

TEST_CASE("tracking params validation") {
    TrackingParams p;
    p.step_mm = 2.0;
    CHECK_THROWS_AS(p.validate(1.0), Error); // step above min spacing
    p = TrackingParams{};
    p.min_length_mm = 400;
    CHECK_THROWS_AS(p.validate(1.0), Error);
    p = TrackingParams{};
    p.angle_max_deg = 120;
    CHECK_THROWS_AS(p.validate(1.0), Error);
}

TEST_CASE("streamline file round trip") {
    TempDir tmp("trk");
    std::vector<Streamline> tracts(3);
    PhiloxEngine eng(31);
    for (auto& t : tracts) {
        const size_t n = 2 + eng.below(50);
        for (size_t i = 0; i < n; ++i)
            t.points.push_back({eng.normal() * 10, eng.normal() * 10, eng.normal() * 10});
    }
    save_streamlines(tracts, tmp.path("t.trk0"));
    const auto loaded = load_streamlines(tmp.path("t.trk0"));
    REQUIRE(loaded.size() == 3);
    for (size_t i = 0; i < 3; ++i) {
        REQUIRE(loaded[i].points.size() == tracts[i].points.size());
        for (size_t p = 0; p < loaded[i].points.size(); ++p) {
            // float32 on disk
            CHECK(loaded[i].points[p].x == static_cast<float>(tracts[i].points[p].x));
            CHECK(loaded[i].points[p].y == static_cast<float>(tracts[i].points[p].y));
            CHECK(loaded[i].points[p].z == static_cast<float>(tracts[i].points[p].z));
        }
    }

    auto bytes = read_binary_file(tmp.path("t.trk0"));
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "TRK0");
    bytes[0] = 'X';
    write_binary_atomic(tmp.path("bad.trk0"), bytes.data(), bytes.size());
    CHECK_THROWS_AS(load_streamlines(tmp.path("bad.trk0")), Error);
}

TEST_CASE("peak field NIfTI round trip") {
    TempDir tmp("peaks");
    const std::array<int, 3> dims{5, 4, 3};
    const size_t n = 5 * 4 * 3;
    const int k = 3;
    std::vector<float> dirs(n * k * 3, 0.0f);
    std::vector<float> qa(n * k, 0.0f);
    PhiloxEngine eng(41);
    for (size_t v = 0; v < n; ++v)
        for (int p = 0; p < k; ++p) {
            if (eng.unit() < 0.3) continue; // empty slot
            Vec3 d{eng.normal(), eng.normal(), eng.normal()};
            d = d * (1.0 / d.norm());
            dirs[(v * k + static_cast<size_t>(p)) * 3 + 0] = static_cast<float>(d.x);
            dirs[(v * k + static_cast<size_t>(p)) * 3 + 1] = static_cast<float>(d.y);
            dirs[(v * k + static_cast<size_t>(p)) * 3 + 2] = static_cast<float>(d.z);
            qa[v * k + static_cast<size_t>(p)] = static_cast<float>(eng.unit() + 0.01);
        }
    const PeakField field(dims, {2, 2, 2}, Affine::scaling(2, 2, 2), k, dirs, qa);
    save_peak_field(field, tmp.path("pf.nii"), tmp.path("pf.json"));
    const PeakField loaded = load_peak_field(tmp.path("pf.nii"), tmp.path("pf.json"));
    CHECK(loaded.dims() == dims);
    CHECK(loaded.k_peaks() == k);
    CHECK(loaded.dirs() == field.dirs());
    CHECK(loaded.qa() == field.qa());
    CHECK(loaded.affine() == field.affine());
}
