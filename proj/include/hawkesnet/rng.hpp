#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace hawkes {

// xoshiro256++ with splitmix64 seeding. We deliberately avoid the <random>
// distributions: their output is implementation-defined, while the simulation
// contract requires identical streams for identical (model, config) across
// builds and across any parallel schedule.
class Rng {
public:
    explicit Rng(std::uint64_t key);

    std::uint64_t key() const noexcept { return key_; }

    // Independent generator derived from this generator's key and a tag
    // sequence. Derivation depends only on the key, never on consumed state.
    Rng substream(std::uint64_t a) const;
    Rng substream(std::uint64_t a, std::uint64_t b) const;
    Rng substream(std::uint64_t a, std::uint64_t b, std::uint64_t c) const;

    std::uint64_t next_u64();
    double uniform();                    // [0, 1)
    double exponential(double rate);
    double normal();
    double gamma(double shape, double rate);
    long poisson(double mean);
    // Index drawn proportionally to nonnegative weights (their sum need not be 1).
    std::size_t categorical(const std::vector<double>& weights);

private:
    std::uint64_t key_;
    std::array<std::uint64_t, 4> state_;
};

std::uint64_t splitmix64(std::uint64_t& x);
std::uint64_t mix_key(std::uint64_t key, std::uint64_t tag);

} // namespace hawkes
