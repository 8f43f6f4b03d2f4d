#include "hawkesnet/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace hawkes {

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

std::uint64_t mix_key(std::uint64_t key, std::uint64_t tag) {
    std::uint64_t x = key ^ (0x9E3779B97F4A7C15ull + tag);
    splitmix64(x);
    std::uint64_t y = x;
    return splitmix64(y);
}

Rng::Rng(std::uint64_t key) : key_(key) {
    std::uint64_t x = key;
    for (auto& s : state_) s = splitmix64(x);
}

Rng Rng::substream(std::uint64_t a) const { return Rng(mix_key(key_, a)); }
Rng Rng::substream(std::uint64_t a, std::uint64_t b) const { return Rng(mix_key(mix_key(key_, a), b)); }
Rng Rng::substream(std::uint64_t a, std::uint64_t b, std::uint64_t c) const {
    return Rng(mix_key(mix_key(mix_key(key_, a), b), c));
}

namespace {
inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
} // namespace

std::uint64_t Rng::next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::exponential(double rate) {
    double u = uniform();
    return -std::log1p(-u) / rate;
}

double Rng::normal() {
    // Marsaglia polar, spare discarded to keep draws stateless per call.
    for (;;) {
        double u = 2.0 * uniform() - 1.0;
        double v = 2.0 * uniform() - 1.0;
        double s = u * u + v * v;
        if (s > 0.0 && s < 1.0) {
            return u * std::sqrt(-2.0 * std::log(s) / s);
        }
    }
}

double Rng::gamma(double shape, double rate) {
    if (shape < 1.0) {
        // Boost to shape+1, then scale back (Marsaglia-Tsang trick).
        double u = uniform();
        while (u <= 0.0) u = uniform();
        return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = normal();
        double t = 1.0 + c * x;
        if (t <= 0.0) continue;
        double v = t * t * t;
        double u = uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
        if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
    }
}

long Rng::poisson(double mean) {
    if (mean <= 0.0) return 0;
    if (mean > 30.0) {
        // Sum of independent halves keeps the multiplication method exact.
        long half = poisson(mean / 2.0);
        return half + poisson(mean / 2.0);
    }
    const double limit = std::exp(-mean);
    long n = 0;
    double prod = uniform();
    while (prod > limit) {
        ++n;
        prod *= uniform();
    }
    return n;
}

std::size_t Rng::categorical(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) throw std::invalid_argument("categorical: nonpositive total weight");
    double target = uniform() * total;
    double cum = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        cum += weights[i];
        if (target < cum) return i;
    }
    return weights.size() - 1;
}

} // namespace hawkes
