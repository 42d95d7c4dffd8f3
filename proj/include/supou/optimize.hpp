#pragma once

#include <functional>

#include "supou/common.hpp"

namespace supou {

struct NelderMeadOptions {
    int max_evals = 2000;
    double diameter_tol = 1e-8;  // stop when every vertex is this close to the best one
    double initial_step = 0.1;
    int restarts = 1;            // fresh simplexes built around the incumbent after convergence
};

struct NelderMeadResult {
    Vector x;
    double value = 0.0;
    int evaluations = 0;
    int iterations = 0;
    bool converged = false;
};

/// Unconstrained Nelder-Mead (standard coefficients 1, 2, 0.5, 0.5). Non-finite
/// objective values are treated as +inf, so callers can encode box constraints by
/// returning infinity outside the feasible set.
NelderMeadResult nelder_mead(const std::function<double(const Vector&)>& f, const Vector& x0,
                             const NelderMeadOptions& opt = {});

}  // namespace supou
