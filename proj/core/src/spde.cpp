#include "bdsde/spde.hpp"

#include <cmath>

#include "bdsde/quadrature.hpp"

namespace bdsde {

namespace {
constexpr int kMaxDim = 2;
}

double TestFunction::operator()(std::span<const double> x) const {
    double r2 = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) {
        const double d = (x[c] - center[c]) / width;
        r2 += d * d;
    }
    if (r2 >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - r2));
}

void TestFunction::gradient(std::span<const double> x, std::span<double> out) const {
    double r2 = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) {
        const double d = (x[c] - center[c]) / width;
        r2 += d * d;
    }
    if (r2 >= 1.0) {
        for (auto& v : out) v = 0.0;
        return;
    }
    const double den = 1.0 - r2;
    const double f = std::exp(1.0 - 1.0 / den);
    for (std::size_t c = 0; c < x.size(); ++c) {
        out[c] = -f * 2.0 * (x[c] - center[c]) / (width * width * den * den);
    }
}

FieldSnapshot extract_field(const BackwardSolution& solution, double t) {
    if (solution.times.empty() || std::abs(solution.times.front() - t) > 1e-9) {
        throw std::invalid_argument(
            "extract_field: t is not the start node of this solution; launch an ensemble at t");
    }
    FieldSnapshot snap;
    snap.time = t;
    snap.u.resize(solution.particles);
    snap.sigma_grad_u.resize(solution.particles * static_cast<std::size_t>(solution.dimension));
    for (std::size_t i = 0; i < solution.particles; ++i) {
        snap.u[i] = solution.y_at(0, i);
        for (int c = 0; c < solution.dimension; ++c) {
            snap.sigma_grad_u[i * solution.dimension + c] = solution.z_at(0, i, c);
        }
    }
    return snap;
}

namespace {

/// quadrature nodes covering the support box of phi
struct SupportQuadrature {
    std::vector<double> points;   // flat, n * d
    std::vector<double> weights;  // n
    int dimension = 1;
    std::size_t size() const { return weights.size(); }
    std::span<const double> point(std::size_t i) const {
        return {points.data() + i * static_cast<std::size_t>(dimension),
                static_cast<std::size_t>(dimension)};
    }
};

SupportQuadrature make_support_quadrature(const TestFunction& phi, int dimension, int n,
                                          double padding) {
    SupportQuadrature q;
    q.dimension = dimension;
    std::vector<double> nodes, weights;
    if (dimension == 1) {
        gauss_legendre(n, phi.center[0] - phi.width, phi.center[0] + phi.width, nodes, weights);
        q.points = nodes;
        q.weights = weights;
        if (padding > 0.0) {
            // side strips are outside the support; all integrands vanish there
            for (double side : {-1.0, 1.0}) {
                const double lo = phi.center[0] + side * phi.width;
                gauss_legendre(8, std::min(lo, lo + side * padding),
                               std::max(lo, lo + side * padding), nodes, weights);
                q.points.insert(q.points.end(), nodes.begin(), nodes.end());
                q.weights.insert(q.weights.end(), weights.begin(), weights.end());
            }
        }
    } else {
        const double r = phi.width + padding;
        std::vector<double> nx, wx, ny, wy;
        gauss_legendre(n, phi.center[0] - r, phi.center[0] + r, nx, wx);
        gauss_legendre(n, phi.center[1] - r, phi.center[1] + r, ny, wy);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                q.points.push_back(nx[static_cast<std::size_t>(i)]);
                q.points.push_back(ny[static_cast<std::size_t>(j)]);
                q.weights.push_back(wx[static_cast<std::size_t>(i)] *
                                    wy[static_cast<std::size_t>(j)]);
            }
        }
    }
    return q;
}

double eval_interpolant(const BackwardSolution& sol, const PolyBasis& basis, std::size_t node,
                        std::span<const double> x) {
    if (sol.y_coef[node].empty()) return 0.0;
    // coefficient records may come from a degraded basis; match sizes
    PolyBasis b = basis;
    if (sol.y_coef[node].size() != basis.size()) {
        int deg = basis.degree();
        while (deg > 0 && PolyBasis(basis.dimension(), deg, basis.scale()).size() !=
                              sol.y_coef[node].size()) {
            --deg;
        }
        b = PolyBasis(basis.dimension(), deg, basis.scale());
    }
    return b.eval_combination(sol.y_coef[node], x);
}

double eval_z_interpolant(const BackwardSolution& sol, const PolyBasis& basis,
                          std::size_t node, int comp, std::span<const double> x) {
    const auto& coef = sol.z_coef[node][static_cast<std::size_t>(comp)];
    if (coef.empty()) return 0.0;
    PolyBasis b = basis;
    if (coef.size() != basis.size()) {
        int deg = basis.degree();
        while (deg > 0 &&
               PolyBasis(basis.dimension(), deg, basis.scale()).size() != coef.size()) {
            --deg;
        }
        b = PolyBasis(basis.dimension(), deg, basis.scale());
    }
    return b.eval_combination(coef, x);
}

/// div((b - A~) phi) at x by central differences with step 1e-4 (1 + |x|)
double divergence_term_at(const BDSDEProblem& problem, const TestFunction& phi,
                          std::span<const double> x) {
    const int d = problem.diffusion.dimension;
    double nrm = 0.0;
    for (double v : x) nrm += v * v;
    const double h = 1e-4 * (1.0 + std::sqrt(nrm));
    auto field = [&](std::span<const double> pt, int comp) {
        double b[kMaxDim], corr[kMaxDim];
        problem.diffusion.eval_drift(pt, {b, static_cast<std::size_t>(d)});
        problem.diffusion.eval_correction(pt, {corr, static_cast<std::size_t>(d)});
        return (b[comp] - corr[comp]) * phi(pt);
    };
    double xp[kMaxDim], xm[kMaxDim];
    double acc = 0.0;
    for (int i = 0; i < d; ++i) {
        for (int c = 0; c < d; ++c) xp[c] = xm[c] = x[static_cast<std::size_t>(c)];
        xp[i] += h;
        xm[i] -= h;
        acc += (field({xp, static_cast<std::size_t>(d)}, i) -
                field({xm, static_cast<std::size_t>(d)}, i)) /
               (2.0 * h);
    }
    return acc;
}

}  // namespace

WeakResidual weak_residual(const BackwardSolution& solution, const BDSDEProblem& problem,
                           const TestFunction& phi, const TwoSidedPath& b_hat,
                           const ResidualOptions& options) {
    const int d = problem.diffusion.dimension;
    const std::size_t n_nodes = solution.times.size();
    if (n_nodes < 2) throw std::invalid_argument("weak_residual: need at least two nodes");
    const PolyBasis basis(d, solution.basis_degree, solution.basis_scale);
    const auto quad =
        make_support_quadrature(phi, d, options.quadrature_points, options.support_padding);

    // per-quadrature-point static data
    const std::size_t nq = quad.size();
    std::vector<double> phiv(nq), divv(nq);
    std::vector<double> sgradphi(nq * static_cast<std::size_t>(d));
    for (std::size_t qi = 0; qi < nq; ++qi) {
        auto x = quad.point(qi);
        phiv[qi] = phi(x);
        divv[qi] = divergence_term_at(problem, phi, x);
        double gp[kMaxDim], sg[kMaxDim * kMaxDim];
        phi.gradient(x, {gp, static_cast<std::size_t>(d)});
        problem.diffusion.eval_sigma(x, {sg, static_cast<std::size_t>(d * d)});
        for (int c = 0; c < d; ++c) {
            double acc = 0.0;
            for (int r = 0; r < d; ++r) acc += sg[r * d + c] * gp[r];  // sigma^T grad phi
            sgradphi[qi * d + c] = acc;
        }
    }

    WeakResidual out;

    // mass terms: solver field at the start node, exact data at the terminal
    for (std::size_t qi = 0; qi < nq; ++qi) {
        auto x = quad.point(qi);
        out.mass_start += quad.weights[qi] * eval_interpolant(solution, basis, 0, x) * phiv[qi];
        out.mass_terminal += quad.weights[qi] * problem.eval_h(x) * phiv[qi];
    }

    // Lebesgue-in-time terms by the trapezoidal rule over (subsampled) nodes
    std::vector<std::size_t> nodes;
    for (std::size_t k = 0; k < n_nodes; k += options.node_stride) nodes.push_back(k);
    if (nodes.back() != n_nodes - 1) nodes.push_back(n_nodes - 1);
    std::vector<double> grad_s(nodes.size()), div_s(nodes.size()), drift_s(nodes.size());
    for (std::size_t a = 0; a < nodes.size(); ++a) {
        const std::size_t k = nodes[a];
        double gsum = 0.0, dsum = 0.0, fsum = 0.0;
        for (std::size_t qi = 0; qi < nq; ++qi) {
            auto x = quad.point(qi);
            const double u = eval_interpolant(solution, basis, k, x);
            double z[kMaxDim];
            for (int c = 0; c < d; ++c) z[c] = eval_z_interpolant(solution, basis, k, c, x);
            double zg = 0.0;
            for (int c = 0; c < d; ++c) zg += z[c] * sgradphi[qi * d + c];
            gsum += quad.weights[qi] * zg;
            dsum += quad.weights[qi] * u * divv[qi];
            fsum += quad.weights[qi] *
                    problem.eval_f(solution.times[k], x, u, {z, static_cast<std::size_t>(d)}) *
                    phiv[qi];
        }
        grad_s[a] = gsum;
        div_s[a] = dsum;
        drift_s[a] = fsum;
    }
    for (std::size_t a = 0; a + 1 < nodes.size(); ++a) {
        const double w = 0.5 * (solution.times[nodes[a + 1]] - solution.times[nodes[a]]);
        out.gradient_term += w * (grad_s[a] + grad_s[a + 1]);
        out.divergence_term += w * (div_s[a] + div_s[a + 1]);
        out.drift_term += w * (drift_s[a] + drift_s[a + 1]);
    }
    out.gradient_term *= 0.5;  // the 1/2 of the second-order part

    // stochastic term: right-endpoint backward sum of int g_j phi dx
    const int n_modes = problem.noise.modes;
    for (int j = 0; j < n_modes; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k + 1 < n_nodes; ++k) {
            const std::size_t b0 = b_hat.index_of(solution.times[k]);
            const double db = b_hat.value_at(j, b0 + 1) - b_hat.value_at(j, b0);
            if (db == 0.0) continue;
            double gsum = 0.0;
            for (std::size_t qi = 0; qi < nq; ++qi) {
                auto x = quad.point(qi);
                const double u = eval_interpolant(solution, basis, k + 1, x);
                double z[kMaxDim];
                for (int c = 0; c < d; ++c) {
                    z[c] = eval_z_interpolant(solution, basis, k + 1, c, x);
                }
                gsum += quad.weights[qi] *
                        problem.eval_g(j, solution.times[k + 1], x, u,
                                       {z, static_cast<std::size_t>(d)}) *
                        phiv[qi];
            }
            acc += gsum * db;
        }
        out.noise_term += acc;
    }

    // mass_start - mass_terminal + gradient + divergence - drift + noise = 0
    out.residual = std::abs(out.mass_start - out.mass_terminal + out.gradient_term +
                            out.divergence_term - out.drift_term + out.noise_term);
    out.normalizer = std::max({std::abs(out.mass_start), std::abs(out.mass_terminal),
                               std::abs(out.gradient_term), std::abs(out.divergence_term),
                               std::abs(out.drift_term), std::abs(out.noise_term)});
    out.relative = out.normalizer > 0.0 ? out.residual / out.normalizer : 0.0;
    return out;
}

GradientCheck gradient_representation_check(const BackwardSolution& solution,
                                            const ParticleEnsemble& ensemble,
                                            const BDSDEProblem& problem,
                                            const WeightedSpace& space) {
    const int d = solution.dimension;
    const std::size_t m = solution.particles;
    const PolyBasis basis(d, solution.basis_degree, solution.basis_scale);
    const std::size_t n_nodes = solution.times.size();
    double acc_disc = 0.0, acc_mag = 0.0;
    std::size_t counted = 0;
    double xp[kMaxDim], xm[kMaxDim], grad[kMaxDim], sg[kMaxDim * kMaxDim];
    for (std::size_t k = 0; k + 1 < n_nodes; ++k) {
        double disc2 = 0.0, mag2 = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            auto x = ensemble.state(k, i);
            double nrm = 0.0;
            for (double v : x) nrm += v * v;
            const double h = 1e-4 * (1.0 + std::sqrt(nrm));
            for (int c = 0; c < d; ++c) {
                for (int cc = 0; cc < d; ++cc) xp[cc] = xm[cc] = x[static_cast<std::size_t>(cc)];
                xp[c] += h;
                xm[c] -= h;
                grad[c] = (eval_interpolant(solution, basis, k, {xp, static_cast<std::size_t>(d)}) -
                           eval_interpolant(solution, basis, k, {xm, static_cast<std::size_t>(d)})) /
                          (2.0 * h);
            }
            problem.diffusion.eval_sigma(x, {sg, static_cast<std::size_t>(d * d)});
            for (int c = 0; c < d; ++c) {
                double ref = 0.0;
                for (int r = 0; r < d; ++r) ref += sg[r * d + c] * grad[r];  // sigma^T grad u
                const double dv = solution.z_at(k, i, c) - ref;
                disc2 += dv * dv;
                mag2 += ref * ref;
            }
        }
        acc_disc += space.normalizer() * disc2 / static_cast<double>(m);
        acc_mag += space.normalizer() * mag2 / static_cast<double>(m);
        ++counted;
    }
    GradientCheck out;
    if (counted > 0) {
        out.discrepancy = std::sqrt(acc_disc / static_cast<double>(counted));
        out.magnitude = std::sqrt(acc_mag / static_cast<double>(counted));
        out.relative = out.magnitude > 0.0 ? out.discrepancy / out.magnitude : out.discrepancy;
    }
    return out;
}

}  // namespace bdsde
