#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>

namespace mimo {

// Philox4x32-10 counter-based generator. A draw is a pure function of
// (key, counter), so any (seed, lane, trial) triple names an independent
// stream that can be consumed from any thread without shared state.
class Philox4x32 {
public:
    Philox4x32(uint64_t key, const std::array<uint32_t, 4>& counter)
        : key0_(static_cast<uint32_t>(key)), key1_(static_cast<uint32_t>(key >> 32)), ctr_(counter) {}

    std::array<uint32_t, 4> operator()() {
        std::array<uint32_t, 4> x = ctr_;
        uint32_t k0 = key0_, k1 = key1_;
        for (int round = 0; round < 10; ++round) {
            x = single_round(x, k0, k1);
            k0 += kW32A;
            k1 += kW32B;
        }
        // 128-bit counter increment, low word first
        if (++ctr_[0] == 0 && ++ctr_[1] == 0 && ++ctr_[2] == 0) ++ctr_[3];
        return x;
    }

private:
    static constexpr uint32_t kW32A = 0x9E3779B9u;
    static constexpr uint32_t kW32B = 0xBB67AE85u;
    static constexpr uint32_t kM4x32A = 0xD2511F53u;
    static constexpr uint32_t kM4x32B = 0xCD9E8D57u;

    static std::array<uint32_t, 4> single_round(const std::array<uint32_t, 4>& c, uint32_t k0, uint32_t k1) {
        uint64_t p0 = static_cast<uint64_t>(kM4x32A) * c[0];
        uint64_t p1 = static_cast<uint64_t>(kM4x32B) * c[2];
        uint32_t hi0 = static_cast<uint32_t>(p0 >> 32), lo0 = static_cast<uint32_t>(p0);
        uint32_t hi1 = static_cast<uint32_t>(p1 >> 32), lo1 = static_cast<uint32_t>(p1);
        return {hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0};
    }

    uint32_t key0_, key1_;
    std::array<uint32_t, 4> ctr_;
};

// Independent sub-streams of one master seed. Keep the numbering stable:
// results are reproducible only as long as (lane, trial) assignments and the
// per-stream draw order do not change.
enum class RngLane : uint32_t {
    Channel = 1,
    PilotNoise = 2,
    DataSymbols = 3,
    DataNoise = 4,
    Trainer = 5,
};

class RngStream {
public:
    RngStream(uint64_t master_seed, RngLane lane, uint64_t trial)
        : gen_(master_seed,
               {0u, static_cast<uint32_t>(lane),
                static_cast<uint32_t>(trial), static_cast<uint32_t>(trial >> 32)}) {}

    uint32_t next_u32() {
        if (have_ == 0) {
            buf_ = gen_();
            have_ = 4;
        }
        return buf_[4 - have_--];
    }

    uint64_t next_u64() {
        uint64_t lo = next_u32();
        uint64_t hi = next_u32();
        return (hi << 32) | lo;
    }

    // uniform on (0,1]; never 0 so it is safe under log()
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1p-53;
    }

    // standard normal, Box-Muller; the pair is kept so consecutive calls
    // consume exactly one (u1,u2) pair per two variates
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // circularly symmetric complex normal, unit variance (0.5 per component)
    std::complex<double> cnormal() {
        double re = normal();
        double im = normal();
        return {re * M_SQRT1_2, im * M_SQRT1_2};
    }

private:
    Philox4x32 gen_;
    std::array<uint32_t, 4> buf_{};
    int have_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

inline RngStream derive_rng_stream(uint64_t master_seed, RngLane lane, uint64_t trial) {
    return RngStream(master_seed, lane, trial);
}

} // namespace mimo
