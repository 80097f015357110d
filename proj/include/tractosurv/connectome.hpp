#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tractosurv/atlas.hpp"
#include "tractosurv/tracking.hpp"

namespace tractosurv {

enum class MatrixKind { pass, end };
enum class MatrixVariant { original, normalized, binarized };

const char* to_string(MatrixKind k);
const char* to_string(MatrixVariant v);

// N x N symmetric non-negative tract-count matrix.
struct ConnectivityMatrix {
    int n = 0;
    MatrixKind kind = MatrixKind::pass;
    MatrixVariant variant = MatrixVariant::original;
    std::vector<double> w; // row-major n*n

    double at(int i, int j) const { return w[static_cast<size_t>(i) * static_cast<size_t>(n) + static_cast<size_t>(j)]; }
    double& at(int i, int j) { return w[static_cast<size_t>(i) * static_cast<size_t>(n) + static_cast<size_t>(j)]; }
    double max_value() const;
};

// pass: each tract contributes 1 to w_ij for every ordered pair (i,j) of the
// distinct nonzero labels it visits (diagonal included), labels taken at the
// nearest atlas voxel of each point. end: tracts whose two endpoints both land
// in nonzero labels a,b contribute to w_ab and w_ba (w_aa gets 2 when a == b).
// Workers accumulate partial matrices reduced by addition, so the result is
// independent of the worker count.
ConnectivityMatrix build_matrix(const std::vector<Streamline>& streamlines,
                                const ParcellationAtlas& atlas, MatrixKind kind,
                                int workers = 1);

// w / max(w); errors on an all-zero matrix.
ConnectivityMatrix normalize(const ConnectivityMatrix& m);

// indicator of the nonzero pattern.
ConnectivityMatrix binarize(const ConnectivityMatrix& m);

// v_j = sum_i w_ij.
std::vector<double> column_sums(const ConnectivityMatrix& m);

// alpha_i = tumor voxels in region i / region-i voxels (0 for empty regions).
struct CoverageWeights {
    std::vector<double> alpha; // N entries, regions 1..N
    std::vector<int64_t> tumor_voxels;
    std::vector<int64_t> region_voxels;
};

CoverageWeights coverage_weights(const Volume& tumor_mask, const ParcellationAtlas& atlas);

struct TractographicFeature {
    MatrixKind kind;
    MatrixVariant variant;
    std::vector<double> v;     // column sums
    std::vector<double> v_wei; // alpha ⊙ v
};

// The six {pass,end} x {original,normalized,binarized} features. An all-zero
// original matrix yields zero features on the normalized path instead of the
// normalize() error, so an empty tract set still produces finite rows.
std::vector<TractographicFeature> tractographic_features(const std::vector<Streamline>& streamlines,
                                                         const ParcellationAtlas& atlas,
                                                         const Volume& tumor_mask,
                                                         int workers = 1);

// CSV with one header row of region names and N data rows.
std::string matrix_csv(const ConnectivityMatrix& m, const std::vector<std::string>& names);

} // namespace tractosurv
