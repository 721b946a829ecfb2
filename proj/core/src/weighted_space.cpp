#include "bdsde/weighted_space.hpp"

#include <cmath>
#include <stdexcept>

#include "bdsde/quadrature.hpp"
#include "bdsde/rng.hpp"

namespace bdsde {

namespace {

double euclidean_norm(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

}  // namespace

WeightedSpace::WeightedSpace(int dimension, double q, double p)
    : d_(dimension), q_(q), p_(p) {
    if (d_ < 1) throw std::invalid_argument("WeightedSpace: dimension must be positive");
    if (!(q_ > 3.0)) throw std::invalid_argument("WeightedSpace: q must exceed 3");
    if (!(p_ > 2.0 && p_ < q_ - 1.0)) {
        throw std::invalid_argument("WeightedSpace: p must lie in (2, q-1)");
    }
    if (d_ > 2) {
        throw std::runtime_error("WeightedSpace: normalizer quadrature only supports d in {1, 2}");
    }
    const double q_local = q_;
    if (d_ == 1) {
        z_rho_ = 2.0 * integrate_half_line(
                           [q_local](double r) { return std::pow(1.0 + r, -q_local); }, 1e-8);
    } else {
        z_rho_ = 2.0 * M_PI *
                 integrate_half_line(
                     [q_local](double r) { return r * std::pow(1.0 + r, -q_local); }, 1e-8);
    }
    if (!std::isfinite(z_rho_) || z_rho_ <= 0.0) {
        throw std::runtime_error("WeightedSpace: normalizer is not finite");
    }
}

double WeightedSpace::weight(std::span<const double> x) const {
    return std::pow(1.0 + euclidean_norm(x), q_);
}

namespace {

// P(|X| > r) for the radial part in d = 2, normalized to 1 at r = 0
double radial_tail_2d(double r, double q) {
    return (q - 1.0) * std::pow(1.0 + r, 2.0 - q) - (q - 2.0) * std::pow(1.0 + r, 1.0 - q);
}

double invert_radial_2d(double u, double q) {
    // solve radial_tail_2d(r) = u; the dominant term gives the initial guess
    double r = std::pow(u / (q - 1.0), 1.0 / (2.0 - q)) - 1.0;
    if (!(r > 0.0)) r = 1e-12;
    for (int it = 0; it < 80; ++it) {
        const double f = radial_tail_2d(r, q) - u;
        const double df = -(q - 1.0) * (q - 2.0) *
                          (std::pow(1.0 + r, 1.0 - q) - std::pow(1.0 + r, -q));
        double step = f / df;
        if (!std::isfinite(step)) break;
        double next = r - step;
        if (next <= 0.0) next = 0.5 * r;
        if (std::abs(next - r) < 1e-14 * (1.0 + r)) {
            r = next;
            break;
        }
        r = next;
    }
    return r;
}

}  // namespace

ReferenceCloud sample_reference_cloud(std::size_t count, const WeightedSpace& space,
                                      std::uint64_t seed) {
    if (count < 1) throw std::invalid_argument("sample_reference_cloud: count must be >= 1");
    const int d = space.dimension();
    const double q = space.weight_exponent();
    ReferenceCloud cloud;
    cloud.dimension = d;
    cloud.size = count;
    cloud.seed = seed;
    cloud.points.resize(count * static_cast<std::size_t>(d));
    cloud.weights.assign(count, 1.0 / static_cast<double>(count));
    for (std::size_t i = 0; i < count; ++i) {
        if (d == 1) {
            const double u = rng::uniform(seed, rng::kCloud, i, 0, 0);
            const double s = rng::uniform(seed, rng::kCloud, i, 0, 1) < 0.5 ? -1.0 : 1.0;
            // P(|X| > r) = (1+r)^{1-q}
            cloud.points[i] = s * (std::pow(u, 1.0 / (1.0 - q)) - 1.0);
        } else {
            const double u = rng::uniform(seed, rng::kCloud, i, 0, 0);
            const double ang = 2.0 * M_PI * rng::uniform(seed, rng::kCloud, i, 0, 1);
            const double r = invert_radial_2d(u, q);
            cloud.points[2 * i] = r * std::cos(ang);
            cloud.points[2 * i + 1] = r * std::sin(ang);
        }
    }
    return cloud;
}

double weighted_l2_norm(std::span<const double> field, const ReferenceCloud& cloud,
                        const WeightedSpace& space) {
    if (field.size() != cloud.size) {
        throw std::invalid_argument("weighted_l2_norm: field length does not match the cloud");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < cloud.size; ++i) {
        acc += cloud.weights[i] * field[i] * field[i];
    }
    return std::sqrt(space.normalizer() * acc);
}

DiscountedNormSpec::DiscountedNormSpec(double k, std::vector<double> nodes)
    : discount_rate(k), grid(std::move(nodes)) {
    if (!(discount_rate > 0.0)) {
        throw std::invalid_argument("DiscountedNormSpec: discount rate must be positive");
    }
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] > grid[i - 1])) {
            throw std::invalid_argument("DiscountedNormSpec: grid must be strictly increasing");
        }
    }
}

DiscountedNormResult discounted_l2_process_norm(
    const std::vector<std::vector<double>>& process, const DiscountedNormSpec& spec,
    const ReferenceCloud& cloud, const WeightedSpace& space) {
    if (process.size() != spec.grid.size()) {
        throw std::invalid_argument("discounted_l2_process_norm: process not defined on all nodes");
    }
    const std::size_t n = spec.grid.size();
    std::vector<double> integrand(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double nm = weighted_l2_norm(process[k], cloud, space);
        integrand[k] = std::exp(-spec.discount_rate * spec.grid[k]) * nm * nm;
    }
    DiscountedNormResult out;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        out.value += 0.5 * (integrand[k] + integrand[k + 1]) * (spec.grid[k + 1] - spec.grid[k]);
    }
    // a discounted integrand that stops decreasing over the last quarter of
    // the horizon signals a divergent (non M^{2,-K}) process
    if (n >= 8) {
        const std::size_t k0 = (3 * (n - 1)) / 4;
        if (integrand[n - 1] >= 0.999 * integrand[k0] && integrand[n - 1] > 0.0) {
            out.diverging = true;
        }
    }
    return out;
}

double discounted_sup_norm(const std::vector<std::vector<double>>& process,
                           const DiscountedNormSpec& spec, const ReferenceCloud& cloud,
                           const WeightedSpace& space) {
    if (process.size() != spec.grid.size()) {
        throw std::invalid_argument("discounted_sup_norm: process not defined on all nodes");
    }
    double sup = 0.0;
    for (std::size_t k = 0; k < process.size(); ++k) {
        const double nm = weighted_l2_norm(process[k], cloud, space);
        sup = std::max(sup, std::exp(-spec.discount_rate * spec.grid[k]) * nm * nm);
    }
    return sup;
}

}  // namespace bdsde
