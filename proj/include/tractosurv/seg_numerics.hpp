#pragma once

#include <cstdint>
#include <vector>

#include "tractosurv/volume.hpp"

namespace tractosurv {

// Dense NCDHW tensor used by the segmentation-side kernels.
struct FeatureMap {
    int n = 0, c = 0, d = 0, h = 0, w = 0;
    std::vector<double> data;

    static FeatureMap zeros(int n, int c, int d, int h, int w);
    size_t spatial_size() const { return static_cast<size_t>(d) * static_cast<size_t>(h) * static_cast<size_t>(w); }
    size_t size() const { return static_cast<size_t>(n) * static_cast<size_t>(c) * spatial_size(); }

    size_t index(int ni, int ci, size_t s) const {
        return (static_cast<size_t>(ni) * static_cast<size_t>(c) + static_cast<size_t>(ci)) * spatial_size() + s;
    }
};

// y = gamma * (x - mu) / sqrt(var + eps) + beta with mu/var (population)
// taken over each sample's channel group x spatial extent.
FeatureMap group_norm_forward(const FeatureMap& x, int groups, const std::vector<double>& gamma,
                              const std::vector<double>& beta, double eps = 1e-5);

// Per-voxel loss with a positive/negative ground-truth flag.
struct LossMap {
    std::vector<double> loss;
    std::vector<uint8_t> positive;
};

// All positives plus the min(floor(ratio*P), N_neg) hardest negatives; when
// there are no positives, up to `zero_positive_floor` negatives are taken.
// Loss ties break toward the lower linear index.
std::vector<uint8_t> hard_negative_select(const LossMap& l, double ratio = 3.0,
                                          size_t zero_positive_floor = 128);

// Elementwise mean over equally shaped probability maps.
FeatureMap ensemble_average(const std::vector<FeatureMap>& maps);

// Per-voxel argmax channel mapped through label_values (ties -> lowest
// channel). The result is a label volume on a unit grid of the map's spatial
// dims.
Volume decode_labels(const FeatureMap& p, const std::vector<int>& label_values = {0, 1, 2, 4});

} // namespace tractosurv
