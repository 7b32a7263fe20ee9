#pragma once

#include <cstdint>
#include <initializer_list>

namespace mimoloc {

/// Mixes an arbitrary list of 64-bit words into a single key.
///
/// Used to derive independent stream keys from (master seed, point, trial,
/// stream id) so that a trial's randomness does not depend on which worker
/// ran it or in which order.
std::uint64_t derive_seed(std::initializer_list<std::uint64_t> words);

/// Counter-based generator: the i-th output is a pure function of (key, i).
///
/// Uniform and normal variates are produced with portable arithmetic, so
/// identical keys give bit-identical sequences on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t key) : key_(key) {}

    /// Generator for stream `stream` of trial `trial` under `master`.
    static Rng stream(std::uint64_t master, std::uint64_t trial, std::uint64_t stream) {
        return Rng(derive_seed({master, trial, stream}));
    }

    std::uint64_t next_u64();

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; the second variate of each pair is cached.
    double normal();

    std::uint64_t key() const { return key_; }
    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

}  // namespace mimoloc
