#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

namespace tractosurv {

// Philox4x32-10 counter-based generator (Salmon et al., SC 2011).
// Every draw is a pure function of (key, counter), so independent streams
// can be evaluated in any order on any number of workers and still agree.

namespace philox {

constexpr uint32_t kW32A = 0x9E3779B9u;
constexpr uint32_t kW32B = 0xBB67AE85u;
constexpr uint32_t kM4x32A = 0xD2511F53u;
constexpr uint32_t kM4x32B = 0xCD9E8D57u;

inline void mulhilo(uint32_t a, uint32_t b, uint32_t& lo, uint32_t& hi) {
    const uint64_t p = static_cast<uint64_t>(a) * b;
    lo = static_cast<uint32_t>(p);
    hi = static_cast<uint32_t>(p >> 32);
}

inline std::array<uint32_t, 4> block(std::array<uint32_t, 4> ctr, std::array<uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        uint32_t lo0, hi0, lo1, hi1;
        mulhilo(kM4x32A, ctr[0], lo0, hi0);
        mulhilo(kM4x32B, ctr[2], lo1, hi1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kW32A;
        key[1] += kW32B;
    }
    return ctr;
}

} // namespace philox

// One 128-bit block addressed by (seed, index, stream).
inline std::array<uint32_t, 4> philox_block(uint64_t seed, uint64_t index, uint32_t stream = 0) {
    const std::array<uint32_t, 4> ctr = {
        static_cast<uint32_t>(index), static_cast<uint32_t>(index >> 32), stream, 0u};
    const std::array<uint32_t, 2> key = {
        static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32)};
    return philox::block(ctr, key);
}

// [0,1) with 53 significant bits from two 32-bit words.
inline double u32_pair_to_unit(uint32_t hi, uint32_t lo) {
    const uint64_t v = (static_cast<uint64_t>(hi) << 21) ^ (static_cast<uint64_t>(lo) >> 11);
    return static_cast<double>(v & ((uint64_t(1) << 53) - 1)) * 0x1.0p-53;
}

// Two independent uniforms per block; enough for one 3-D sample plus a pick.
inline std::array<double, 2> philox_unit2(uint64_t seed, uint64_t index, uint32_t stream = 0) {
    const auto b = philox_block(seed, index, stream);
    return {u32_pair_to_unit(b[0], b[1]), u32_pair_to_unit(b[2], b[3])};
}

// Stateful stream over consecutive counters. Used where a sequence of draws
// is consumed in order (shuffles, synthetic data); determinism comes from the
// fixed (seed, stream) key, not from call order across objects.
class PhiloxEngine {
public:
    using result_type = uint32_t;

    explicit PhiloxEngine(uint64_t seed, uint32_t stream = 0)
        : seed_(seed), stream_(stream) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return 0xFFFFFFFFu; }

    result_type operator()() {
        if (slot_ == 0) {
            buf_ = philox_block(seed_, counter_++, stream_);
        }
        const uint32_t v = buf_[slot_];
        slot_ = (slot_ + 1) & 3;
        return v;
    }

    // Unbiased integer in [0, n) by rejection.
    uint32_t below(uint32_t n) {
        if (n <= 1) return 0;
        const uint32_t limit = UINT32_MAX - UINT32_MAX % n;
        uint32_t v;
        do {
            v = (*this)();
        } while (v >= limit);
        return v % n;
    }

    double unit() {
        const uint32_t a = (*this)();
        const uint32_t b = (*this)();
        return u32_pair_to_unit(a, b);
    }

    // Marsaglia polar method; platform-independent unlike std::normal_distribution.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * unit() - 1.0;
            v = 2.0 * unit() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        have_spare_ = true;
        return u * f;
    }

private:
    uint64_t seed_;
    uint32_t stream_;
    uint64_t counter_ = 0;
    std::array<uint32_t, 4> buf_{};
    int slot_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Fisher-Yates with explicit rejection sampling; std::shuffle is
// implementation-defined and would break cross-build reproducibility.
template <typename T>
void deterministic_shuffle(std::vector<T>& v, PhiloxEngine& eng) {
    for (size_t i = v.size(); i > 1; --i) {
        const size_t j = eng.below(static_cast<uint32_t>(i));
        std::swap(v[i - 1], v[j]);
    }
}

} // namespace tractosurv
