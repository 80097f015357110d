#include "tractosurv/seg_numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tractosurv {

FeatureMap FeatureMap::zeros(int n, int c, int d, int h, int w) {
    if (n < 1 || c < 1 || d < 1 || h < 1 || w < 1)
        throw_data("feature map dimensions must be positive");
    FeatureMap m;
    m.n = n;
    m.c = c;
    m.d = d;
    m.h = h;
    m.w = w;
    m.data.assign(m.size(), 0.0);
    return m;
}

FeatureMap group_norm_forward(const FeatureMap& x, int groups, const std::vector<double>& gamma,
                              const std::vector<double>& beta, double eps) {
    if (x.data.size() != x.size()) throw_data("feature map buffer size mismatch");
    if (groups < 1 || x.c % groups != 0)
        throw_data("channel count must be divisible by the group count");
    if (gamma.size() != static_cast<size_t>(x.c) || beta.size() != static_cast<size_t>(x.c))
        throw_data("gamma/beta must have one entry per channel");

    const int channels_per_group = x.c / groups;
    const size_t spatial = x.spatial_size();
    const size_t group_size = static_cast<size_t>(channels_per_group) * spatial;

    FeatureMap out = x;
    for (int ni = 0; ni < x.n; ++ni)
        for (int g = 0; g < groups; ++g) {
            double sum = 0, sq = 0;
            for (int cc = 0; cc < channels_per_group; ++cc) {
                const int ci = g * channels_per_group + cc;
                const size_t base = x.index(ni, ci, 0);
                for (size_t s = 0; s < spatial; ++s) {
                    const double v = x.data[base + s];
                    sum += v;
                    sq += v * v;
                }
            }
            const double mean = sum / static_cast<double>(group_size);
            const double var = sq / static_cast<double>(group_size) - mean * mean;
            const double inv_std = 1.0 / std::sqrt(std::max(var, 0.0) + eps);
            for (int cc = 0; cc < channels_per_group; ++cc) {
                const int ci = g * channels_per_group + cc;
                const size_t base = x.index(ni, ci, 0);
                for (size_t s = 0; s < spatial; ++s)
                    out.data[base + s] =
                        gamma[static_cast<size_t>(ci)] * (x.data[base + s] - mean) * inv_std +
                        beta[static_cast<size_t>(ci)];
            }
        }
    return out;
}

std::vector<uint8_t> hard_negative_select(const LossMap& l, double ratio,
                                          size_t zero_positive_floor) {
    if (l.loss.size() != l.positive.size()) throw_data("loss/flag size mismatch");
    std::vector<uint8_t> selected(l.loss.size(), 0);

    size_t n_pos = 0;
    std::vector<size_t> negatives;
    for (size_t i = 0; i < l.loss.size(); ++i) {
        if (l.positive[i]) {
            selected[i] = 1;
            ++n_pos;
        } else {
            negatives.push_back(i);
        }
    }

    const size_t budget =
        n_pos > 0 ? static_cast<size_t>(std::floor(ratio * static_cast<double>(n_pos)))
                  : zero_positive_floor;
    const size_t take = std::min(budget, negatives.size());
    if (take > 0) {
        // hardest first; equal losses keep the lower voxel index
        std::nth_element(negatives.begin(), negatives.begin() + static_cast<ptrdiff_t>(take - 1),
                         negatives.end(), [&](size_t a, size_t b) {
                             if (l.loss[a] != l.loss[b]) return l.loss[a] > l.loss[b];
                             return a < b;
                         });
        for (size_t k = 0; k < take; ++k) selected[negatives[k]] = 1;
    }
    return selected;
}

FeatureMap ensemble_average(const std::vector<FeatureMap>& maps) {
    if (maps.empty()) throw_data("ensemble average needs at least one probability map");
    const FeatureMap& first = maps.front();
    for (const auto& m : maps)
        if (m.n != first.n || m.c != first.c || m.d != first.d || m.h != first.h || m.w != first.w)
            throw_data("ensemble probability maps must share one shape");

    FeatureMap out = first;
    for (size_t k = 1; k < maps.size(); ++k)
        for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += maps[k].data[i];
    const double inv = 1.0 / static_cast<double>(maps.size());
    for (auto& v : out.data) v *= inv;
    return out;
}

Volume decode_labels(const FeatureMap& p, const std::vector<int>& label_values) {
    if (p.data.size() != p.size()) throw_data("feature map buffer size mismatch");
    if (p.n != 1) throw_data("label decoding expects a single sample");
    if (label_values.size() != static_cast<size_t>(p.c))
        throw_data("label value count must equal the channel count");
    for (int v : label_values)
        if (v < 0) throw_data("label values must be non-negative");

    Volume out = Volume::zeros({p.w, p.h, p.d}, {1, 1, 1}, Affine::identity(), VolumeKind::label);
    const size_t spatial = p.spatial_size();
    for (size_t s = 0; s < spatial; ++s) {
        int best = 0;
        double best_v = p.data[p.index(0, 0, s)];
        for (int ci = 1; ci < p.c; ++ci) {
            const double v = p.data[p.index(0, ci, s)];
            if (v > best_v) { // strict: ties keep the lowest channel
                best_v = v;
                best = ci;
            }
        }
        out.data()[s] = label_values[static_cast<size_t>(best)];
    }
    return out;
}

} // namespace tractosurv
