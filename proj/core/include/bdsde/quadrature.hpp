#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>

namespace bdsde {

/// Adaptive Simpson quadrature on [a, b].
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double rel_tol = 1e-10, int max_depth = 24);

/// Integral over the whole real line through the substitution x = t/(1-t^2),
/// which maps (-1, 1) onto R. The integrand must decay at least like |x|^{-2}.
double integrate_real_line(const std::function<double(double)>& f, double rel_tol = 1e-8);

/// Integral over [0, inf) through x = t/(1-t).
double integrate_half_line(const std::function<double(double)>& f, double rel_tol = 1e-8);

/// Nodes and weights of the n-point Gauss-Legendre rule on [a, b].
void gauss_legendre(int n, double a, double b,
                    std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace bdsde
