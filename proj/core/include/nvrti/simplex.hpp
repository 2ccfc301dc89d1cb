#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace nvrti {

struct SimplexOptions {
    double objective_tol = 1e-10;  ///< relative spread of simplex objective values
    double diameter_tol = 1e-8;    ///< max vertex distance in the search space
    std::size_t max_evals = 40000;
    double initial_step = 0.15;    ///< displacement used to build the starting simplex
};

struct SimplexResult {
    std::vector<double> best;
    double objective = 0.0;
    bool converged = false;
    std::size_t iterations = 0;
    std::size_t evals = 0;
};

/// Nelder-Mead downhill simplex minimization. `on_improve` (optional) fires
/// with the objective value each time the incumbent best vertex improves.
SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& objective,
                          const std::vector<double>& start, const SimplexOptions& options = {},
                          const std::function<void(double)>& on_improve = {});

/// Standard errors from the inverse of the numerically differenced observed
/// information matrix (central second differences of the negative
/// log-likelihood at the optimum).
struct FisherResult {
    std::vector<double> standard_errors;
    bool positive_definite = false;
};

FisherResult observed_information_errors(
    const std::function<double(const std::vector<double>&)>& nll,
    const std::vector<double>& theta, double relative_step = 1e-3);

} // namespace nvrti
