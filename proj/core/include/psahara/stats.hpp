#pragma once
#include <cstdint>
#include <vector>

namespace psahara {

struct MeanSE {
    double mean = 0.0;
    double se = 0.0;
    double sd = 0.0;
    std::size_t n = 0;
};

MeanSE mean_se(const std::vector<double>& xs);
double quantile(std::vector<double> xs, double q);

struct KSResult {
    double statistic;
    double p_value;
};

// two-sample Kolmogorov-Smirnov with the asymptotic Kolmogorov distribution
KSResult ks_two_sample(std::vector<double> a, std::vector<double> b);
double kolmogorov_q(double lambda);

// seed for an independent stream (counter-based mixing of seed and stream index)
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream);

// PSAHARA_THREADS if set (>= 1), else hardware concurrency
unsigned worker_threads();

}  // namespace psahara
