#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace satsurf {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec3i = Eigen::Vector3i;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using Matrix3Xd = Eigen::Matrix<double, 3, Eigen::Dynamic>;

// Validation errors exit the CLI with status 1, runtime failures with 2.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct RuntimeFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OutOfDomainError : ValidationError { using ValidationError::ValidationError; };
struct DegenerateDenominatorError : RuntimeFailure { using RuntimeFailure::RuntimeFailure; };
struct NoConvergenceError : RuntimeFailure { using RuntimeFailure::RuntimeFailure; };
struct DegenerateJacobianError : RuntimeFailure { using RuntimeFailure::RuntimeFailure; };
struct NonFiniteError : RuntimeFailure { using RuntimeFailure::RuntimeFailure; };
struct DegenerateFitError : RuntimeFailure { using RuntimeFailure::RuntimeFailure; };
struct EmptySurfaceError : RuntimeFailure { using RuntimeFailure::RuntimeFailure; };
struct GridMismatchError : ValidationError { using ValidationError::ValidationError; };
struct NoOverlapError : RuntimeFailure { using RuntimeFailure::RuntimeFailure; };
struct EmptySetError : ValidationError { using ValidationError::ValidationError; };
struct EmptyDatasetError : ValidationError { using ValidationError::ValidationError; };
struct RpcFitFailedError : RuntimeFailure { using RuntimeFailure::RuntimeFailure; };
struct IoError : RuntimeFailure { using RuntimeFailure::RuntimeFailure; };

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Mixes a base seed with stream identifiers so that independent RNG streams
// (per iteration, per ray, ...) can be derived reproducibly.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    return splitmix64(splitmix64(seed ^ 0x5851f42d4c957f2dULL) ^ splitmix64(a + 0x9e3779b97f4a7c15ULL * (b + 1)));
}

// mt19937_64 output is pinned by the standard; the variate transforms are
// hand-rolled because std::*_distribution is implementation-defined.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t bits() { return eng_(); }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller; one value per call, cached pair discarded for simplicity.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    // uniform integer in [0, n)
    std::uint64_t index(std::uint64_t n) {
        // rejection sampling to avoid modulo bias
        const std::uint64_t limit = n * (UINT64_MAX / n);
        std::uint64_t r;
        do {
            r = eng_();
        } while (r >= limit);
        return r % n;
    }

private:
    std::mt19937_64 eng_;
};

// Fixed-order pairwise summation. Independent of thread count, so reductions
// built on it are bit-reproducible.
double pairwise_sum(std::span<const double> values);

// Process-wide worker count (CLI --threads). Defaults to the hardware count.
void set_thread_count(int n);
int thread_count();

// Static-partition parallel loop: fn(index, worker_id). Worker w owns a
// contiguous index range, so per-worker accumulation buffers reduced in
// worker order give reproducible results at a fixed thread count.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t, int)>& fn);

}  // namespace satsurf
