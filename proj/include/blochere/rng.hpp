// Counter-based random streams (Philox4x32-10).
//
// Every random quantity in a run is addressed by a SeedPath: the master seed,
// a unit index (atom or grid point) and a stream tag. Draws depend only on
// that address and the draw counter, never on which worker produced them.
#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

namespace blochere {

/// Stream tags keep independent uses of one unit index apart.
enum class StreamTag : std::uint32_t {
    FieldPhases = 1,
    FieldAmplitudes = 2,
    GridJitter = 3,
    Directions = 4,
    Positions = 5,
    ColoredNoise = 6,
    SweepPoint = 7,
};

struct SeedPath {
    std::uint64_t run_seed = 0;
    std::uint64_t unit = 0;
    StreamTag tag = StreamTag::FieldPhases;

    SeedPath with_tag(StreamTag t) const { return {run_seed, unit, t}; }
};

/// Raw Philox4x32 with 10 rounds (Salmon et al., SC'11).
inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                  std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t kM0 = 0xD2511F53u;
    constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    constexpr std::uint32_t kW0 = 0x9E3779B9u;
    constexpr std::uint32_t kW1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = std::uint64_t{kM0} * ctr[0];
        const std::uint64_t p1 = std::uint64_t{kM1} * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kW0;
        key[1] += kW1;
    }
    return ctr;
}

/// Sequential view over one Philox substream.
class CounterRng {
public:
    explicit CounterRng(const SeedPath& path)
        : key_{static_cast<std::uint32_t>(path.run_seed),
               static_cast<std::uint32_t>(path.run_seed >> 32)},
          unit_lo_(static_cast<std::uint32_t>(path.unit)),
          // unit indices above 2^32 fold their high word into the tag slot
          tag_word_(static_cast<std::uint32_t>(path.tag) ^
                    (static_cast<std::uint32_t>(path.unit >> 32) << 8)) {}

    /// Next 64 random bits.
    std::uint64_t next_u64() {
        if (cursor_ == 2) refill();
        return buffer_[cursor_++];
    }

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1].
    double uniform_open0() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; the second variate is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform_open0()));
        const double theta = 2.0 * std::numbers::pi * uniform();
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    /// Circular complex Gaussian with E|z|^2 = 1.
    std::complex<double> complex_normal() {
        const double re = normal();
        const double im = normal();
        return {re * std::numbers::sqrt2 / 2.0, im * std::numbers::sqrt2 / 2.0};
    }

    std::uint64_t draws() const { return counter_; }

private:
    void refill() {
        const std::array<std::uint32_t, 4> ctr{static_cast<std::uint32_t>(counter_),
                                               static_cast<std::uint32_t>(counter_ >> 32),
                                               unit_lo_, tag_word_};
        const auto out = philox4x32_10(ctr, key_);
        buffer_[0] = (std::uint64_t{out[0]} << 32) | out[1];
        buffer_[1] = (std::uint64_t{out[2]} << 32) | out[3];
        ++counter_;
        cursor_ = 0;
    }

    std::array<std::uint32_t, 2> key_;
    std::uint32_t unit_lo_;
    std::uint32_t tag_word_;
    std::uint64_t counter_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int cursor_ = 2;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace blochere
