#include "obmimo/rng.hpp"

#include <cmath>

namespace obmimo {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

namespace {

// Philox4x32 round constants.
constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void philox_round(std::uint32_t ctr[4], const std::uint32_t key[2]) {
    const std::uint64_t p0 = std::uint64_t(kMul0) * ctr[0];
    const std::uint64_t p1 = std::uint64_t(kMul1) * ctr[2];
    const std::uint32_t hi0 = std::uint32_t(p0 >> 32);
    const std::uint32_t lo0 = std::uint32_t(p0);
    const std::uint32_t hi1 = std::uint32_t(p1 >> 32);
    const std::uint32_t lo1 = std::uint32_t(p1);
    const std::uint32_t n0 = hi1 ^ ctr[1] ^ key[0];
    const std::uint32_t n1 = lo1;
    const std::uint32_t n2 = hi0 ^ ctr[3] ^ key[1];
    const std::uint32_t n3 = lo0;
    ctr[0] = n0;
    ctr[1] = n1;
    ctr[2] = n2;
    ctr[3] = n3;
}

} // namespace

RngStream::RngStream(std::uint64_t key)
    : key_full_(key), out_pos_(4), spare_(0.0), has_spare_(false) {
    key_[0] = std::uint32_t(key);
    key_[1] = std::uint32_t(key >> 32);
    ctr_[0] = ctr_[1] = ctr_[2] = ctr_[3] = 0;
}

std::uint64_t RngStream::derive_key(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> path) {
    std::uint64_t h = mix64(master);
    for (std::uint64_t v : path)
        h = mix64(h ^ v);
    return h;
}

RngStream RngStream::keyed(std::uint64_t master,
                           std::initializer_list<std::uint64_t> path) {
    return RngStream(derive_key(master, path));
}

void RngStream::refill() {
    std::uint32_t c[4] = {ctr_[0], ctr_[1], ctr_[2], ctr_[3]};
    std::uint32_t k[2] = {key_[0], key_[1]};
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            k[0] += kWeyl0;
            k[1] += kWeyl1;
        }
        philox_round(c, k);
    }
    out_[0] = c[0];
    out_[1] = c[1];
    out_[2] = c[2];
    out_[3] = c[3];
    out_pos_ = 0;
    // 128-bit counter increment.
    if (++ctr_[0] == 0 && ++ctr_[1] == 0 && ++ctr_[2] == 0)
        ++ctr_[3];
}

std::uint32_t RngStream::next_u32() {
    if (out_pos_ >= 4)
        refill();
    return out_[out_pos_++];
}

std::uint64_t RngStream::next_u64() {
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    return (hi << 32) | lo;
}

double RngStream::uniform() {
    return double(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

double RngStream::gaussian() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // u1 on (0, 1] keeps the log finite.
    const double u1 = double((next_u64() >> 11) + 1) * 0x1.0p-53;
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 6.283185307179586476925286766559 * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

std::complex<double> RngStream::cgaussian(double var) {
    const double s = std::sqrt(0.5 * var);
    const double re = s * gaussian();
    const double im = s * gaussian();
    return {re, im};
}

} // namespace obmimo
