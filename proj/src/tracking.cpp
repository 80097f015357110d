#include "tractosurv/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "tractosurv/parallel.hpp"
#include "tractosurv/rng.hpp"
#include "tractosurv/text_io.hpp"

namespace tractosurv {

void TrackingParams::validate(double min_spacing_mm) const {
    if (step_mm <= 0) throw_config("step_mm must be positive");
    if (step_mm > min_spacing_mm) throw_config("step_mm must not exceed the smallest voxel spacing");
    if (!(angle_max_deg > 0 && angle_max_deg <= 90)) throw_config("angle_max_deg must be in (0,90]");
    if (qa_threshold < 0) throw_config("qa_threshold must be non-negative");
    if (min_length_mm < 0) throw_config("min_length_mm must be non-negative");
    if (max_length_mm <= 0) throw_config("max_length_mm must be positive");
    if (!(min_length_mm < max_length_mm)) throw_config("min_length_mm must be below max_length_mm");
}

std::vector<Vec3> seed_points(const Volume& mask, const TrackingParams& params) {
    if (mask.kind() != VolumeKind::mask) throw_data("seeding requires a mask volume");
    std::vector<size_t> voxels;
    for (size_t i = 0; i < mask.voxel_count(); ++i)
        if (mask.data()[i] != 0.0) voxels.push_back(i);
    if (voxels.empty()) throw_data("cannot seed tracts: tumor mask is empty");

    const size_t nx = static_cast<size_t>(mask.dims()[0]);
    const size_t ny = static_cast<size_t>(mask.dims()[1]);
    const double n_voxels = static_cast<double>(voxels.size());

    std::vector<Vec3> seeds(params.target_tracts);
    for (uint64_t i = 0; i < params.target_tracts; ++i) {
        // one philox block per seed: voxel pick + 3 in-cube offsets
        const auto b0 = philox_block(params.rng_seed, i, 0);
        const auto b1 = philox_block(params.rng_seed, i, 1);
        const double pick = u32_pair_to_unit(b0[0], b0[1]);
        const double ux = u32_pair_to_unit(b0[2], b0[3]);
        const double uy = u32_pair_to_unit(b1[0], b1[1]);
        const double uz = u32_pair_to_unit(b1[2], b1[3]);

        size_t vi = static_cast<size_t>(pick * n_voxels);
        if (vi >= voxels.size()) vi = voxels.size() - 1;
        const size_t lin = voxels[vi];
        const auto vx = static_cast<double>(lin % nx);
        const auto vy = static_cast<double>((lin / nx) % ny);
        const auto vz = static_cast<double>(lin / (nx * ny));
        // voxel cube in index space: [v-0.5, v+0.5)
        seeds[i] = mask.affine().apply({vx + ux - 0.5, vy + uy - 0.5, vz + uz - 0.5});
    }
    return seeds;
}

namespace {

struct PeakHit {
    Vec3 dir;   // sign-disambiguated to point along the incoming direction
    double qa;
    double cos_angle;
};

// Peak at the nearest voxel with the smallest angle to `incoming`, after sign
// disambiguation. Returns false when the position leaves the grid or no peak
// slot is populated.
bool best_peak(const PeakField& field, const Vec3& pos, const Vec3& incoming, PeakHit& hit) {
    const Vec3 idx = field.world_to_voxel().apply(pos);
    const long long x = std::llround(idx.x);
    const long long y = std::llround(idx.y);
    const long long z = std::llround(idx.z);
    if (!field.in_bounds(x, y, z)) return false;
    const size_t v =
        field.voxel_index(static_cast<int>(x), static_cast<int>(y), static_cast<int>(z));

    bool found = false;
    for (int k = 0; k < field.k_peaks(); ++k) {
        const double qa = field.peak_qa(v, k);
        if (qa <= 0.0) continue;
        Vec3 d = field.peak_dir(v, k);
        double c = d.dot(incoming);
        if (c < 0) {
            d = d * -1.0;
            c = -c;
        }
        if (!found || c > hit.cos_angle) {
            hit = {d, qa, c};
            found = true;
        }
    }
    return found;
}

// Highest-QA peak at the seed voxel; defines the initial direction.
bool seed_peak(const PeakField& field, const Vec3& pos, PeakHit& hit) {
    const Vec3 idx = field.world_to_voxel().apply(pos);
    const long long x = std::llround(idx.x);
    const long long y = std::llround(idx.y);
    const long long z = std::llround(idx.z);
    if (!field.in_bounds(x, y, z)) throw_data("tract seed lies outside the peak field grid");
    const size_t v =
        field.voxel_index(static_cast<int>(x), static_cast<int>(y), static_cast<int>(z));
    bool found = false;
    for (int k = 0; k < field.k_peaks(); ++k) {
        const double qa = field.peak_qa(v, k);
        if (qa <= 0.0) continue;
        if (!found || qa > hit.qa) {
            hit = {field.peak_dir(v, k), qa, 1.0};
            found = true;
        }
    }
    return found;
}

// Single branch: Euler steps of step_mm along the selected peak until a
// termination rule fires. Appends visited points (excluding the seed).
void track_branch(const Vec3& seed, Vec3 dir, const PeakField& field,
                  const TrackingParams& params, size_t max_steps, std::vector<Vec3>& out) {
    const double cos_max = std::cos(params.angle_max_deg * M_PI / 180.0);
    Vec3 pos = seed;
    Vec3 incoming = dir;
    for (size_t step = 0; step < max_steps; ++step) {
        PeakHit hit;
        if (!best_peak(field, pos, incoming, hit)) return; // left grid or no peaks
        if (hit.cos_angle < cos_max) return;               // turn sharper than angle_max
        if (hit.qa < params.qa_threshold) return;          // anisotropy floor
        pos = pos + hit.dir * params.step_mm;
        // the new position must still be on the grid to be recorded
        const Vec3 idx = field.world_to_voxel().apply(pos);
        if (!field.in_bounds(std::llround(idx.x), std::llround(idx.y), std::llround(idx.z)))
            return;
        out.push_back(pos);
        incoming = hit.dir;
    }
}

} // namespace

std::optional<Streamline> track_one(const Vec3& seed, const PeakField& field,
                                    const TrackingParams& params) {
    PeakHit seed_hit;
    const bool has_seed_peak = seed_peak(field, seed, seed_hit);

    Streamline tract;
    if (has_seed_peak && seed_hit.qa >= params.qa_threshold) {
        // each branch may cover at most half of max_length_mm
        const auto max_steps =
            static_cast<size_t>(std::floor(params.max_length_mm / (2.0 * params.step_mm)));
        std::vector<Vec3> forward, backward;
        track_branch(seed, seed_hit.dir, field, params, max_steps, forward);
        track_branch(seed, seed_hit.dir * -1.0, field, params, max_steps, backward);

        tract.points.reserve(forward.size() + backward.size() + 1);
        for (size_t i = backward.size(); i > 0; --i) tract.points.push_back(backward[i - 1]);
        tract.points.push_back(seed);
        for (const auto& p : forward) tract.points.push_back(p);
    }

    if (tract.length_mm(params.step_mm) < params.min_length_mm) return std::nullopt;
    return tract;
}

std::vector<Streamline> track_all(const Volume& mask, const PeakField& field,
                                  const TrackingParams& params, int workers) {
    const double min_spacing =
        std::min({field.spacing()[0], field.spacing()[1], field.spacing()[2]});
    params.validate(min_spacing);
    if (params.target_tracts == 0) return {};

    const auto seeds = seed_points(mask, params);
    std::vector<std::optional<Streamline>> slots(seeds.size());
    parallel_for_blocks(seeds.size(), workers, [&](size_t begin, size_t end, int) {
        for (size_t i = begin; i < end; ++i) {
            slots[i] = track_one(seeds[i], field, params);
            if (slots[i]) slots[i]->seed_index = i;
        }
    });

    std::vector<Streamline> accepted;
    for (auto& s : slots)
        if (s) accepted.push_back(std::move(*s));
    return accepted;
}

void save_streamlines(const std::vector<Streamline>& tracts, const std::string& path) {
    std::string blob;
    blob.reserve(8 + tracts.size() * 16);
    blob.append("TRK0", 4);
    auto put_u32 = [&blob](uint32_t v) {
        char b[4];
        std::memcpy(b, &v, 4);
        blob.append(b, 4);
    };
    put_u32(static_cast<uint32_t>(tracts.size()));
    for (const auto& t : tracts) {
        put_u32(static_cast<uint32_t>(t.points.size()));
        for (const auto& p : t.points) {
            const float xyz[3] = {static_cast<float>(p.x), static_cast<float>(p.y),
                                  static_cast<float>(p.z)};
            char b[12];
            std::memcpy(b, xyz, 12);
            blob.append(b, 12);
        }
    }
    write_binary_atomic(path, blob.data(), blob.size());
}

std::vector<Streamline> load_streamlines(const std::string& path) {
    const auto blob = read_binary_file(path);
    size_t off = 0;
    auto need = [&](size_t n) {
        if (off + n > blob.size()) throw_data("truncated streamline file: " + path);
    };
    need(4);
    if (std::memcmp(blob.data(), "TRK0", 4) != 0)
        throw_data("bad magic in streamline file: " + path);
    off = 4;
    auto get_u32 = [&]() {
        need(4);
        uint32_t v;
        std::memcpy(&v, blob.data() + off, 4);
        off += 4;
        return v;
    };
    const uint32_t count = get_u32();
    std::vector<Streamline> tracts(count);
    for (uint32_t i = 0; i < count; ++i) {
        const uint32_t n_points = get_u32();
        tracts[i].seed_index = i;
        tracts[i].points.resize(n_points);
        need(static_cast<size_t>(n_points) * 12);
        for (uint32_t p = 0; p < n_points; ++p) {
            float xyz[3];
            std::memcpy(xyz, blob.data() + off, 12);
            off += 12;
            tracts[i].points[p] = {xyz[0], xyz[1], xyz[2]};
        }
    }
    if (off != blob.size()) throw_data("trailing bytes in streamline file: " + path);
    return tracts;
}

} // namespace tractosurv
