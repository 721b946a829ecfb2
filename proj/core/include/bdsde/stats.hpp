#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace bdsde {

struct SampleSummary {
    double mean = 0.0;
    double variance = 0.0;  // unbiased
    double std_error = 0.0;
    std::size_t count = 0;
};

SampleSummary summarize(std::span<const double> xs);

/// Two-sample Kolmogorov-Smirnov test.
struct KsResult {
    double statistic = 0.0;       // sup |F1 - F2|
    double critical_value = 0.0;  // at the requested level
    bool significant = false;
};

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b,
                       double level = 0.05);

/// Least-squares slope and intercept of y against x.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

LineFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace bdsde
