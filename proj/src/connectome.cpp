#include "tractosurv/connectome.hpp"

#include <algorithm>
#include <cmath>

#include "tractosurv/parallel.hpp"
#include "tractosurv/text_io.hpp"

namespace tractosurv {

const char* to_string(MatrixKind k) { return k == MatrixKind::pass ? "pass" : "end"; }

const char* to_string(MatrixVariant v) {
    switch (v) {
    case MatrixVariant::original: return "original";
    case MatrixVariant::normalized: return "normalized";
    case MatrixVariant::binarized: return "binarized";
    }
    return "?";
}

double ConnectivityMatrix::max_value() const {
    double m = 0.0;
    for (double v : w) m = std::max(m, v);
    return m;
}

namespace {

// Label under a world point: nearest atlas voxel, 0 outside the grid.
int label_at(const ParcellationAtlas& atlas, const Affine& world_to_voxel, const Vec3& p) {
    const Vec3 idx = world_to_voxel.apply(p);
    const long long x = std::llround(idx.x);
    const long long y = std::llround(idx.y);
    const long long z = std::llround(idx.z);
    if (x < 0 || y < 0 || z < 0 || x >= atlas.labels.dims()[0] || y >= atlas.labels.dims()[1] ||
        z >= atlas.labels.dims()[2])
        return 0;
    return static_cast<int>(
        atlas.labels.at(static_cast<int>(x), static_cast<int>(y), static_cast<int>(z)));
}

void accumulate_tract(const Streamline& tract, const ParcellationAtlas& atlas,
                      const Affine& world_to_voxel, MatrixKind kind, std::vector<double>& w,
                      std::vector<int>& scratch) {
    const auto n = static_cast<size_t>(atlas.n_regions);
    if (tract.points.empty()) return; // nothing to assign; counted by the caller
    if (kind == MatrixKind::pass) {
        scratch.clear();
        for (const auto& p : tract.points) {
            const int label = label_at(atlas, world_to_voxel, p);
            if (label > 0) scratch.push_back(label);
        }
        std::sort(scratch.begin(), scratch.end());
        scratch.erase(std::unique(scratch.begin(), scratch.end()), scratch.end());
        for (int a : scratch)
            for (int b : scratch)
                w[static_cast<size_t>(a - 1) * n + static_cast<size_t>(b - 1)] += 1.0;
    } else {
        const int a = label_at(atlas, world_to_voxel, tract.points.front());
        const int b = label_at(atlas, world_to_voxel, tract.points.back());
        if (a > 0 && b > 0) {
            w[static_cast<size_t>(a - 1) * n + static_cast<size_t>(b - 1)] += 1.0;
            w[static_cast<size_t>(b - 1) * n + static_cast<size_t>(a - 1)] += 1.0;
        }
    }
}

} // namespace

ConnectivityMatrix build_matrix(const std::vector<Streamline>& streamlines,
                                const ParcellationAtlas& atlas, MatrixKind kind, int workers) {
    atlas.validate();
    const auto n = static_cast<size_t>(atlas.n_regions);
    const Affine world_to_voxel = atlas.labels.affine().inverse();

    ConnectivityMatrix out;
    out.n = atlas.n_regions;
    out.kind = kind;
    out.variant = MatrixVariant::original;
    out.w.assign(n * n, 0.0);

    if (workers <= 1 || streamlines.size() < 2) {
        std::vector<int> scratch;
        for (const auto& t : streamlines)
            accumulate_tract(t, atlas, world_to_voxel, kind, out.w, scratch);
        return out;
    }

    const auto w_count = static_cast<size_t>(workers);
    std::vector<std::vector<double>> partials(w_count, std::vector<double>(n * n, 0.0));
    parallel_for_blocks(streamlines.size(), workers, [&](size_t begin, size_t end, int worker) {
        std::vector<int> scratch;
        auto& w = partials[static_cast<size_t>(worker)];
        for (size_t i = begin; i < end; ++i)
            accumulate_tract(streamlines[i], atlas, world_to_voxel, kind, w, scratch);
    });
    for (const auto& part : partials)
        for (size_t i = 0; i < out.w.size(); ++i) out.w[i] += part[i];
    return out;
}

ConnectivityMatrix normalize(const ConnectivityMatrix& m) {
    if (m.variant != MatrixVariant::original)
        throw_data("normalize expects an original-variant matrix");
    const double mx = m.max_value();
    if (mx <= 0.0) throw_numeric("cannot normalize an all-zero connectivity matrix");
    ConnectivityMatrix out = m;
    out.variant = MatrixVariant::normalized;
    for (auto& v : out.w) v /= mx;
    return out;
}

ConnectivityMatrix binarize(const ConnectivityMatrix& m) {
    if (m.variant != MatrixVariant::original)
        throw_data("binarize expects an original-variant matrix");
    ConnectivityMatrix out = m;
    out.variant = MatrixVariant::binarized;
    for (auto& v : out.w) v = v > 0.0 ? 1.0 : 0.0;
    return out;
}

std::vector<double> column_sums(const ConnectivityMatrix& m) {
    std::vector<double> v(static_cast<size_t>(m.n), 0.0);
    for (int i = 0; i < m.n; ++i)
        for (int j = 0; j < m.n; ++j) v[static_cast<size_t>(j)] += m.at(i, j);
    return v;
}

CoverageWeights coverage_weights(const Volume& tumor_mask, const ParcellationAtlas& atlas) {
    atlas.validate();
    if (!tumor_mask.same_grid(atlas.labels))
        throw_data("tumor mask grid differs from atlas grid");
    const auto n = static_cast<size_t>(atlas.n_regions);
    CoverageWeights cw;
    cw.alpha.assign(n, 0.0);
    cw.tumor_voxels.assign(n, 0);
    cw.region_voxels.assign(n, 0);
    for (size_t i = 0; i < tumor_mask.voxel_count(); ++i) {
        const int label = static_cast<int>(atlas.labels.data()[i]);
        if (label < 1) continue;
        ++cw.region_voxels[static_cast<size_t>(label - 1)];
        if (tumor_mask.data()[i] != 0.0) ++cw.tumor_voxels[static_cast<size_t>(label - 1)];
    }
    for (size_t r = 0; r < n; ++r)
        cw.alpha[r] = cw.region_voxels[r] > 0 ? static_cast<double>(cw.tumor_voxels[r]) /
                                                    static_cast<double>(cw.region_voxels[r])
                                              : 0.0;
    return cw;
}

std::vector<TractographicFeature> tractographic_features(const std::vector<Streamline>& streamlines,
                                                         const ParcellationAtlas& atlas,
                                                         const Volume& tumor_mask, int workers) {
    const CoverageWeights cw = coverage_weights(tumor_mask, atlas);
    std::vector<TractographicFeature> out;
    out.reserve(6);
    for (MatrixKind kind : {MatrixKind::pass, MatrixKind::end}) {
        const ConnectivityMatrix ori = build_matrix(streamlines, atlas, kind, workers);
        const bool all_zero = ori.max_value() <= 0.0;
        for (MatrixVariant variant :
             {MatrixVariant::original, MatrixVariant::normalized, MatrixVariant::binarized}) {
            TractographicFeature f;
            f.kind = kind;
            f.variant = variant;
            if (variant == MatrixVariant::original) {
                f.v = column_sums(ori);
            } else if (variant == MatrixVariant::normalized) {
                // all-zero matrix has no maximum divisor; its features are zero
                f.v = all_zero ? std::vector<double>(static_cast<size_t>(atlas.n_regions), 0.0)
                               : column_sums(normalize(ori));
            } else {
                f.v = column_sums(binarize(ori));
            }
            f.v_wei.resize(f.v.size());
            for (size_t i = 0; i < f.v.size(); ++i) f.v_wei[i] = cw.alpha[i] * f.v[i];
            out.push_back(std::move(f));
        }
    }
    return out;
}

std::string matrix_csv(const ConnectivityMatrix& m, const std::vector<std::string>& names) {
    if (names.size() != static_cast<size_t>(m.n))
        throw_data("matrix CSV needs one region name per row");
    std::string out = join_csv(names);
    for (int i = 0; i < m.n; ++i) {
        std::vector<std::string> row(static_cast<size_t>(m.n));
        for (int j = 0; j < m.n; ++j) row[static_cast<size_t>(j)] = format_double(m.at(i, j));
        out += join_csv(row);
    }
    return out;
}

} // namespace tractosurv
