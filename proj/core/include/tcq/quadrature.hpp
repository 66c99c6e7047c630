#ifndef TCQ_QUADRATURE_HPP
#define TCQ_QUADRATURE_HPP

#include <functional>

namespace tcq {

/// Adaptive Simpson integration of f over [a, b] to absolute tolerance.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double abs_tol = 1e-10);

/// Numeric-integration route to the quantizer statistics, independent of the
/// closed forms in laplace.hpp. The Laplacian tail is truncated where the pdf
/// drops below 1e-15; each reconstruction bin is split at its |x - l*q| kink.
struct NumericStats {
    double tau;        // 1 - dead-zone mass
    double d_zero;
    double d_nonzero;
    double d_expected;
};

NumericStats numeric_stats(double lambda_lap, double q_step, double abs_tol = 1e-10);

} // namespace tcq

#endif
