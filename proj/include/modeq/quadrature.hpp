#pragma once

#include <functional>

namespace modeq {

/// Adaptive Gauss-Kronrod (G7, K15) integration of f over [a, b] to the given
/// relative tolerance (absolute floor abs_tol for integrals near zero).
double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, double rel_tol = 1e-10,
                          double abs_tol = 1e-300, int max_depth = 48);

}  // namespace modeq
