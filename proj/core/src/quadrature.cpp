#include "bdsde/quadrature.hpp"

#include <limits>
#include <vector>

namespace bdsde {

namespace {

double simpson(double fa, double fm, double fb, double h) {
    return h / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_step(const std::function<double(double)>& f, double a, double b,
                     double fa, double fm, double fb, double whole,
                     double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = simpson(fa, flm, fm, m - a);
    const double right = simpson(fm, frm, fb, b - m);
    const double delta = left + right - whole;
    // the roundoff floor stops subdivision once the requested tolerance falls
    // under the cancellation noise of the partial sums
    const double floor_tol =
        64.0 * std::numeric_limits<double>::epsilon() *
        (std::abs(left) + std::abs(right) + std::abs(whole));
    if (depth <= 0 || std::abs(delta) <= std::max(15.0 * tol, floor_tol)) {
        return left + right + delta / 15.0;
    }
    return adaptive_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double rel_tol, int max_depth) {
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = simpson(fa, fm, fb, b - a);
    const double scale = std::max(std::abs(whole), 1e-300);
    return adaptive_step(f, a, b, fa, fm, fb, whole, rel_tol * scale, max_depth);
}

double integrate_real_line(const std::function<double(double)>& f, double rel_tol) {
    auto g = [&f](double t) {
        const double den = 1.0 - t * t;
        const double x = t / den;
        const double jac = (1.0 + t * t) / (den * den);
        return f(x) * jac;
    };
    const double eps = 1e-12;
    return adaptive_simpson(g, -1.0 + eps, 1.0 - eps, rel_tol);
}

double integrate_half_line(const std::function<double(double)>& f, double rel_tol) {
    auto g = [&f](double t) {
        const double den = 1.0 - t;
        const double x = t / den;
        return f(x) / (den * den);
    };
    const double eps = 1e-12;
    return adaptive_simpson(g, 0.0, 1.0 - eps, rel_tol);
}

void gauss_legendre(int n, double a, double b,
                    std::vector<double>& nodes, std::vector<double>& weights) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);
    // roots of P_n by Newton iteration from the Chebyshev initial guess
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (x * p0 - p1) / (x * x - 1.0);
            const double dx = p0 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        const double xl = 0.5 * (b - a);
        const double xm = 0.5 * (b + a);
        nodes[i] = xm - xl * x;
        nodes[n - 1 - i] = xm + xl * x;
        weights[i] = 2.0 * xl / ((1.0 - x * x) * pp * pp);
        weights[n - 1 - i] = weights[i];
    }
}

}  // namespace bdsde
