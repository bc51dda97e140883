#pragma once

#include <complex>
#include <cstdint>
#include <initializer_list>

namespace obmimo {

// splitmix64 finalizer, used to hash seed material into stream keys.
std::uint64_t mix64(std::uint64_t x);

// Counter-based random stream (Philox4x32-10). Streams are cheap to create
// and fully determined by their key, so every simulation cell can derive its
// own independent stream from (master seed, cell coordinates) and produce the
// same numbers no matter how work is scheduled across threads.
class RngStream {
  public:
    explicit RngStream(std::uint64_t key);

    // Derives a stream key by hash-chaining the path elements into the
    // master seed. Distinct paths give statistically independent streams.
    static RngStream keyed(std::uint64_t master,
                           std::initializer_list<std::uint64_t> path);
    static std::uint64_t derive_key(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> path);

    std::uint64_t key() const { return key_full_; }

    std::uint32_t next_u32();
    std::uint64_t next_u64();

    // Uniform on [0, 1) with 53 random bits.
    double uniform();
    // Uniform on [lo, hi).
    double uniform(double lo, double hi);
    // Standard normal (Box-Muller, spare value cached).
    double gaussian();
    // Circularly symmetric complex normal with E|z|^2 = var.
    std::complex<double> cgaussian(double var);

  private:
    void refill();

    std::uint64_t key_full_;
    std::uint32_t key_[2];
    std::uint32_t ctr_[4];
    std::uint32_t out_[4];
    int out_pos_;
    double spare_;
    bool has_spare_;
};

} // namespace obmimo
