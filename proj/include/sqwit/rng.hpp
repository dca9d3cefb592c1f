#pragma once
// Deterministic per-pulse random streams.
//
// Every pulse gets its own mt19937_64 seeded from the master seed and the
// pulse index through splitmix64. Results are therefore independent of
// worker count and iteration order. Samplers are hand-rolled because the
// standard library's distribution implementations may differ across
// platforms, which would break bit-identical reruns.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace sqwit {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class PulseRng {
public:
    PulseRng(std::uint64_t master_seed, std::uint64_t stream_index)
        : eng_(splitmix64(master_seed ^ splitmix64(stream_index + 0x51ed270b8f6a34c1ULL))) {}

    // uniform in [0, 1)
    double uniform() {
        return (eng_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller with cached spare
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 == 0.0) u1 = uniform();
        double u2 = uniform();
        double mag = std::sqrt(-2.0 * std::log(u1));
        spare_ = mag * std::sin(2.0 * M_PI * u2);
        have_spare_ = true;
        return mag * std::cos(2.0 * M_PI * u2);
    }

    // per-trial Bernoulli sum; n is a photon count here, never large
    long binomial(long n, double p) {
        if (p <= 0.0 || n <= 0) return 0;
        if (p >= 1.0) return n;
        long k = 0;
        for (long i = 0; i < n; ++i)
            if (uniform() < p) ++k;
        return k;
    }

    // Knuth product method; lambda stays small in this codebase
    long poisson(double lambda) {
        if (lambda <= 0.0) return 0;
        double limit = std::exp(-lambda);
        long k = 0;
        double prod = uniform();
        while (prod > limit) {
            ++k;
            prod *= uniform();
        }
        return k;
    }

    // index sample from a discrete distribution given cumulative weights
    long pick_cumulative(const std::vector<double>& cdf) {
        double u = uniform() * cdf.back();
        auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
        return static_cast<long>(it - cdf.begin());
    }

    std::uint64_t raw() { return eng_(); }

private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}
