#include "bdsde/conditions.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "bdsde/rng.hpp"

namespace bdsde {

const ConditionEntry* ConditionReport::find(const std::string& id) const {
    for (const auto& e : entries) {
        if (e.id == id) return &e;
    }
    return nullptr;
}

bool ConditionReport::passed(const std::string& id) const {
    const auto* e = find(id);
    return e != nullptr && e->status != ConditionStatus::Fail;
}

std::vector<std::string> ConditionReport::failed_ids() const {
    std::vector<std::string> out;
    for (const auto& e : entries) {
        if (e.status == ConditionStatus::Fail) out.push_back(e.id);
    }
    return out;
}

namespace {

constexpr int kMaxDim = 2;

struct ProbePoint {
    double r;
    double x[kMaxDim];
    double x2[kMaxDim];
    double y1, y2;
    double z1[kMaxDim];
    double z2[kMaxDim];
};

ProbePoint draw_probe(const ProbeSettings& probe, int d, int n) {
    ProbePoint p;
    const auto id = static_cast<std::uint64_t>(n);
    p.r = probe.time_horizon * rng::uniform(probe.seed, rng::kProbe, id, 10, 0);
    for (int c = 0; c < d; ++c) {
        p.x[c] = probe.range * rng::normal(probe.seed, rng::kProbe, id, 11, c);
        p.x2[c] = probe.range * rng::normal(probe.seed, rng::kProbe, id, 12, c);
        p.z1[c] = probe.range * rng::normal(probe.seed, rng::kProbe, id, 13, c);
        p.z2[c] = probe.range * rng::normal(probe.seed, rng::kProbe, id, 14, c);
    }
    p.y1 = probe.range * rng::normal(probe.seed, rng::kProbe, id, 15, 0);
    p.y2 = probe.range * rng::normal(probe.seed, rng::kProbe, id, 15, 1);
    return p;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

void push(ConditionReport& rep, std::string id, ConditionStatus st, std::string ev, double v) {
    rep.entries.push_back({std::move(id), st, std::move(ev), v});
    if (st == ConditionStatus::Fail) rep.all_hard_checks_pass = false;
}

// shared probe machinery -----------------------------------------------------

int probe_weak_lipschitz_g(const BDSDEProblem& pb, const ProbeSettings& probe, int d) {
    int violations = 0;
    const std::size_t n_modes = pb.noise_g.size();
    for (int n = 0; n < probe.samples; ++n) {
        const ProbePoint p = draw_probe(probe, d, n);
        std::span<const double> x{p.x, static_cast<std::size_t>(d)};
        std::span<const double> z1{p.z1, static_cast<std::size_t>(d)};
        std::span<const double> z2{p.z2, static_cast<std::size_t>(d)};
        double dz2 = 0.0;
        for (int c = 0; c < d; ++c) dz2 += (p.z1[c] - p.z2[c]) * (p.z1[c] - p.z2[c]);
        const double dy2 = (p.y1 - p.y2) * (p.y1 - p.y2);
        for (std::size_t j = 0; j < n_modes; ++j) {
            const double g1 = pb.eval_g(static_cast<int>(j), p.r, x, p.y1, z1);
            const double g2 = pb.eval_g(static_cast<int>(j), p.r, x, p.y2, z2);
            const double lhs = (g1 - g2) * (g1 - g2);
            const double rhs = pb.y_lipschitz[j] * dy2 + pb.z_gain[j] * dz2;
            if (lhs > rhs + probe.slack) {
                ++violations;
                break;
            }
        }
    }
    return violations;
}

int probe_f_z_lipschitz(const BDSDEProblem& pb, const ProbeSettings& probe, int d) {
    int violations = 0;
    for (int n = 0; n < probe.samples; ++n) {
        const ProbePoint p = draw_probe(probe, d, n);
        std::span<const double> x{p.x, static_cast<std::size_t>(d)};
        std::span<const double> z1{p.z1, static_cast<std::size_t>(d)};
        std::span<const double> z2{p.z2, static_cast<std::size_t>(d)};
        double dz2 = 0.0;
        for (int c = 0; c < d; ++c) dz2 += (p.z1[c] - p.z2[c]) * (p.z1[c] - p.z2[c]);
        const double f1 = pb.eval_f(p.r, x, p.y1, z1);
        const double f2 = pb.eval_f(p.r, x, p.y1, z2);
        if ((f1 - f2) * (f1 - f2) > pb.z_lipschitz * dz2 + probe.slack) ++violations;
    }
    return violations;
}

int probe_growth(const BDSDEProblem& pb, const ProbeSettings& probe, int d) {
    int violations = 0;
    for (int n = 0; n < probe.samples; ++n) {
        const ProbePoint p = draw_probe(probe, d, n);
        std::span<const double> x{p.x, static_cast<std::size_t>(d)};
        std::span<const double> z1{p.z1, static_cast<std::size_t>(d)};
        double zn = 0.0;
        for (int c = 0; c < d; ++c) zn += p.z1[c] * p.z1[c];
        zn = std::sqrt(zn);
        const double f = pb.eval_f(p.r, x, p.y1, z1);
        if (std::abs(f) > pb.growth_bound * (1.0 + std::abs(p.y1) + zn) + probe.slack) {
            ++violations;
        }
    }
    return violations;
}

int probe_monotone(const BDSDEProblem& pb, const ProbeSettings& probe, int d, double mu) {
    int violations = 0;
    for (int n = 0; n < probe.samples; ++n) {
        const ProbePoint p = draw_probe(probe, d, n);
        std::span<const double> x{p.x, static_cast<std::size_t>(d)};
        std::span<const double> z1{p.z1, static_cast<std::size_t>(d)};
        const double f1 = pb.eval_f(p.r, x, p.y1, z1);
        const double f2 = pb.eval_f(p.r, x, p.y2, z1);
        const double dy = p.y1 - p.y2;
        if (dy * (f1 - f2) > mu * dy * dy + probe.slack) ++violations;
    }
    return violations;
}

double mc_terminal_second_moment(const BDSDEProblem& pb, const WeightedSpace& space,
                                 const ProbeSettings& probe) {
    const auto cloud = sample_reference_cloud(512, space, probe.seed ^ 0x5eedull);
    double acc = 0.0;
    for (std::size_t i = 0; i < cloud.size; ++i) {
        const double h = pb.eval_h(cloud.point(i));
        acc += cloud.weights[i] * h * h;
    }
    return space.normalizer() * acc;
}

double mc_g_at_zero(const BDSDEProblem& pb, const WeightedSpace& space,
                    const ProbeSettings& probe, double power) {
    const auto cloud = sample_reference_cloud(512, space, probe.seed ^ 0x90a7ull);
    const int d = space.dimension();
    std::vector<double> z0(static_cast<std::size_t>(d), 0.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < cloud.size; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < pb.noise_g.size(); ++j) {
            const double g = pb.eval_g(static_cast<int>(j), 0.0, cloud.point(i), 0.0, z0);
            s += std::pow(std::abs(g), power);
        }
        acc += cloud.weights[i] * s;
    }
    return space.normalizer() * acc;
}

}  // namespace

ConditionReport validate_conditions_finite(const BDSDEProblem& problem,
                                           const WeightedSpace& space,
                                           const ProbeSettings& probe) {
    ConditionReport rep;
    const int d = space.dimension();

    const double h2 = mc_terminal_second_moment(problem, space, probe);
    push(rep, "H.1", std::isfinite(h2) ? ConditionStatus::Asserted : ConditionStatus::Fail,
         "measurability asserted; Monte Carlo second moment of h = " + fmt(h2), h2);

    const double sum_a = problem.sum_alpha();
    const double sum_c = problem.sum_cj();
    if (sum_a >= 0.5) {
        push(rep, "H.2", ConditionStatus::Fail,
             "sum alpha_j = " + fmt(sum_a) + " >= 1/2", sum_a);
    } else {
        const int vg = probe_weak_lipschitz_g(problem, probe, d);
        const int vf = probe_f_z_lipschitz(problem, probe, d);
        const bool ok = vg == 0 && vf == 0;
        push(rep, "H.2", ok ? ConditionStatus::Pass : ConditionStatus::Fail,
             "sum alpha_j = " + fmt(sum_a) + ", sum C_j = " + fmt(sum_c) + "; probe violations g/f = " +
                 std::to_string(vg) + "/" + std::to_string(vf),
             ok ? sum_a : static_cast<double>(vg + vf));
    }

    const double g0 = mc_g_at_zero(problem, space, probe, 2.0);
    push(rep, "H.3", std::isfinite(g0) ? ConditionStatus::Pass : ConditionStatus::Fail,
         "Monte Carlo int |g(.,0,0)|^2 rho^{-1} = " + fmt(g0), g0);

    const int vgrow = probe_growth(problem, probe, d);
    push(rep, "H.4", vgrow == 0 ? ConditionStatus::Pass : ConditionStatus::Fail,
         "linear growth probe violations = " + std::to_string(vgrow) + " with M_0 = " +
             fmt(problem.growth_bound),
         static_cast<double>(vgrow));

    const int vmono = probe_monotone(problem, probe, d, problem.monotonicity);
    push(rep, "H.5", vmono == 0 ? ConditionStatus::Pass : ConditionStatus::Fail,
         "monotonicity probe violations = " + std::to_string(vmono) + " with mu = " +
             fmt(problem.monotonicity),
         static_cast<double>(vmono));

    push(rep, "H.6", ConditionStatus::Asserted, "continuity of (y,z) -> f asserted", 0.0);

    const int vlip = problem.diffusion.probe_lipschitz(probe.seed ^ 0x11b5ull, probe.samples,
                                                       probe.slack);
    push(rep, "H.7", vlip == 0 ? ConditionStatus::Asserted : ConditionStatus::Fail,
         "smoothness asserted; Lipschitz spot-check violations = " + std::to_string(vlip) +
             " with L = " + fmt(problem.diffusion.lipschitz),
         static_cast<double>(vlip));

    return rep;
}

ConditionReport validate_conditions_infinite(const BDSDEProblem& problem,
                                             const WeightedSpace& space, double p, double K,
                                             const ProbeSettings& probe) {
    ConditionReport rep;
    const int d = space.dimension();

    const double sum_a = problem.sum_alpha();
    const double sum_c = problem.sum_cj();
    if (sum_a >= 0.5) {
        push(rep, "A.1", ConditionStatus::Fail, "sum alpha_j = " + fmt(sum_a) + " >= 1/2",
             sum_a);
    } else {
        const int vg = probe_weak_lipschitz_g(problem, probe, d);
        const int vf = probe_f_z_lipschitz(problem, probe, d);
        const bool ok = vg == 0 && vf == 0;
        push(rep, "A.1", ok ? ConditionStatus::Pass : ConditionStatus::Fail,
             "sum alpha_j = " + fmt(sum_a) + "; probe violations g/f = " + std::to_string(vg) +
                 "/" + std::to_string(vf),
             ok ? sum_a : static_cast<double>(vg + vf));
    }

    const double gp = mc_g_at_zero(problem, space, probe, p);
    push(rep, "A.2", std::isfinite(gp) ? ConditionStatus::Pass : ConditionStatus::Fail,
         "Monte Carlo int |g(.,0,0)|^p rho^{-1} = " + fmt(gp), gp);

    const int vgrow = probe_growth(problem, probe, d);
    push(rep, "A.3", vgrow == 0 ? ConditionStatus::Pass : ConditionStatus::Fail,
         "linear growth probe violations = " + std::to_string(vgrow), static_cast<double>(vgrow));

    // margin 2 mu - pK - pC - p(p-1)/2 sum C_j with the flipped-sign monotone probe
    const double mu = -problem.monotonicity;  // H.5 constant is -mu here
    const double margin_a4 =
        2.0 * mu - p * K - p * problem.z_lipschitz - 0.5 * p * (p - 1.0) * sum_c;
    if (!(mu > 0.0) || !(margin_a4 > 0.0)) {
        push(rep, "A.4", ConditionStatus::Fail,
             "margin 2mu - pK - pC - p(p-1)/2 sum C_j = " + fmt(margin_a4) + " with mu = " +
                 fmt(mu),
             margin_a4);
    } else {
        const int vmono = probe_monotone(problem, probe, d, -mu);
        push(rep, "A.4", vmono == 0 ? ConditionStatus::Pass : ConditionStatus::Fail,
             "margin = " + fmt(margin_a4) + "; flipped monotonicity probe violations = " +
                 std::to_string(vmono),
             margin_a4);
    }

    push(rep, "A.5", ConditionStatus::Asserted, "continuity of (y,z) -> f asserted", 0.0);

    const double L = problem.diffusion.lipschitz;
    const double margin_a6 = K - p * L - 0.5 * p * (p - 1.0) * L * L;
    if (!(margin_a6 > 0.0)) {
        push(rep, "A.6", ConditionStatus::Fail,
             "margin K - pL - p(p-1)/2 L^2 = " + fmt(margin_a6), margin_a6);
    } else {
        const int vlip = problem.diffusion.probe_lipschitz(probe.seed ^ 0x11b5ull,
                                                           probe.samples, probe.slack);
        push(rep, "A.6", vlip == 0 ? ConditionStatus::Pass : ConditionStatus::Fail,
             "margin = " + fmt(margin_a6) + "; Lipschitz spot-check violations = " +
                 std::to_string(vlip),
             margin_a6);
    }

    return rep;
}

double default_discount_rate(const BDSDEProblem& problem, double p) {
    const double mu = -problem.monotonicity;
    const double L = problem.diffusion.lipschitz;
    const double sum_c = problem.sum_cj();
    auto margin_low = [&](double K) { return K - p * L - 0.5 * p * (p - 1.0) * L * L; };
    auto margin_high = [&](double K) {
        return 2.0 * mu - p * K - p * problem.z_lipschitz - 0.5 * p * (p - 1.0) * sum_c;
    };
    // bisect for the zero crossings of the two margins
    auto bisect = [](const std::function<double(double)>& f, double lo, double hi) {
        double flo = f(lo);
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double fm = f(mid);
            if ((fm > 0.0) == (flo > 0.0)) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        return 0.5 * (lo + hi);
    };
    const double k_hi_start = 1e6;
    if (!(margin_high(0.0) > 0.0)) {
        throw std::runtime_error("default_discount_rate: monotonicity margin admits no K > 0");
    }
    const double k_hi = margin_high(k_hi_start) > 0.0 ? k_hi_start
                                                      : bisect(margin_high, 0.0, k_hi_start);
    const double k_lo = margin_low(0.0) > 0.0 ? 0.0 : bisect(margin_low, 0.0, k_hi_start);
    if (!(k_hi > k_lo)) {
        throw std::runtime_error("default_discount_rate: empty admissible discount interval");
    }
    return k_lo + 0.1 * (k_hi - k_lo);
}

}  // namespace bdsde
