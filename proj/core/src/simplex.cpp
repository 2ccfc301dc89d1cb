#include "nvrti/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nvrti/errors.hpp"

namespace nvrti {

SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& objective,
                          const std::vector<double>& start, const SimplexOptions& options,
                          const std::function<void(double)>& on_improve) {
    const std::size_t dim = start.size();
    if (dim == 0) throw validation_error("simplex optimizer needs at least one parameter");

    SimplexResult result;
    auto eval = [&](const std::vector<double>& x) {
        ++result.evals;
        const double f = objective(x);
        return std::isfinite(f) ? f : 1e300;
    };

    // Initial simplex: start point plus one displaced vertex per coordinate.
    std::vector<std::vector<double>> verts(dim + 1, start);
    std::vector<double> fvals(dim + 1);
    for (std::size_t i = 0; i < dim; ++i) {
        double& c = verts[i + 1][i];
        c += (c != 0.0) ? options.initial_step * std::abs(c) : options.initial_step;
    }
    for (std::size_t i = 0; i <= dim; ++i) fvals[i] = eval(verts[i]);

    double best_seen = *std::min_element(fvals.begin(), fvals.end());
    if (on_improve) on_improve(best_seen);

    constexpr double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;
    std::vector<std::size_t> order(dim + 1);

    while (result.evals < options.max_evals) {
        ++result.iterations;
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return fvals[a] < fvals[b]; });

        const std::size_t lo = order.front(), hi = order.back(), next_hi = order[dim - 1];

        if (fvals[lo] < best_seen) {
            best_seen = fvals[lo];
            if (on_improve) on_improve(best_seen);
        }

        // Convergence: objective spread and simplex extent both small. The
        // absolute floor lets exactly-representable optima (chi^2 of
        // noiseless data) terminate.
        const double spread = std::abs(fvals[hi] - fvals[lo]);
        const double scale = std::abs(fvals[lo]) + std::abs(fvals[hi]) + 1e-4;
        double diameter = 0.0;
        for (std::size_t i = 0; i <= dim; ++i) {
            double d2 = 0.0;
            for (std::size_t k = 0; k < dim; ++k) {
                const double d = verts[i][k] - verts[lo][k];
                d2 += d * d;
            }
            diameter = std::max(diameter, std::sqrt(d2));
        }
        if (spread <= options.objective_tol * scale && diameter <= options.diameter_tol) {
            result.converged = true;
            break;
        }

        std::vector<double> centroid(dim, 0.0);
        for (std::size_t i = 0; i <= dim; ++i) {
            if (i == hi) continue;
            for (std::size_t k = 0; k < dim; ++k) centroid[k] += verts[i][k];
        }
        for (double& c : centroid) c /= static_cast<double>(dim);

        auto blend = [&](double coeff) {
            std::vector<double> x(dim);
            for (std::size_t k = 0; k < dim; ++k)
                x[k] = centroid[k] + coeff * (verts[hi][k] - centroid[k]);
            return x;
        };

        const std::vector<double> reflected = blend(-alpha);
        const double f_ref = eval(reflected);

        if (f_ref < fvals[lo]) {
            const std::vector<double> expanded = blend(-alpha * gamma);
            const double f_exp = eval(expanded);
            if (f_exp < f_ref) {
                verts[hi] = expanded;
                fvals[hi] = f_exp;
            } else {
                verts[hi] = reflected;
                fvals[hi] = f_ref;
            }
            continue;
        }
        if (f_ref < fvals[next_hi]) {
            verts[hi] = reflected;
            fvals[hi] = f_ref;
            continue;
        }

        const bool outside = f_ref < fvals[hi];
        const std::vector<double> contracted = blend(outside ? -rho : rho);
        const double f_con = eval(contracted);
        if (f_con < std::min(f_ref, fvals[hi])) {
            verts[hi] = contracted;
            fvals[hi] = f_con;
            continue;
        }

        // Shrink toward the best vertex.
        for (std::size_t i = 0; i <= dim; ++i) {
            if (i == lo) continue;
            for (std::size_t k = 0; k < dim; ++k)
                verts[i][k] = verts[lo][k] + sigma * (verts[i][k] - verts[lo][k]);
            fvals[i] = eval(verts[i]);
        }
    }

    const std::size_t lo = static_cast<std::size_t>(
        std::min_element(fvals.begin(), fvals.end()) - fvals.begin());
    result.best = verts[lo];
    result.objective = fvals[lo];
    if (result.objective < best_seen && on_improve) on_improve(result.objective);
    return result;
}

namespace {

// Cholesky-based inversion for small symmetric matrices; returns false if the
// matrix is not positive definite.
bool invert_spd(std::vector<double>& m, std::size_t n) {
    std::vector<double> chol(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double sum = m[i * n + j];
            for (std::size_t k = 0; k < j; ++k) sum -= chol[i * n + k] * chol[j * n + k];
            if (i == j) {
                if (sum <= 0.0) return false;
                chol[i * n + i] = std::sqrt(sum);
            } else {
                chol[i * n + j] = sum / chol[j * n + j];
            }
        }
    }
    // Invert L, then assemble (L L^T)^-1 = L^-T L^-1.
    std::vector<double> inv_l(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        inv_l[i * n + i] = 1.0 / chol[i * n + i];
        for (std::size_t j = 0; j < i; ++j) {
            double sum = 0.0;
            for (std::size_t k = j; k < i; ++k) sum -= chol[i * n + k] * inv_l[k * n + j];
            inv_l[i * n + j] = sum / chol[i * n + i];
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            double sum = 0.0;
            for (std::size_t k = i; k < n; ++k) sum += inv_l[k * n + i] * inv_l[k * n + j];
            m[i * n + j] = m[j * n + i] = sum;
        }
    return true;
}

} // namespace

FisherResult observed_information_errors(
    const std::function<double(const std::vector<double>&)>& nll,
    const std::vector<double>& theta, double relative_step) {
    const std::size_t n = theta.size();
    std::vector<double> h(n);
    for (std::size_t i = 0; i < n; ++i)
        h[i] = std::max(relative_step * std::abs(theta[i]), 1e-12);

    const double f0 = nll(theta);
    std::vector<double> hess(n * n, 0.0);
    auto shifted = [&](std::size_t i, double di, std::size_t j, double dj) {
        std::vector<double> x = theta;
        x[i] += di;
        if (i == j)
            x[i] += dj;
        else
            x[j] += dj;
        return nll(x);
    };

    for (std::size_t i = 0; i < n; ++i) {
        const double fp = shifted(i, h[i], i, 0.0);
        const double fm = shifted(i, -h[i], i, 0.0);
        hess[i * n + i] = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
        for (std::size_t j = i + 1; j < n; ++j) {
            const double fpp = shifted(i, h[i], j, h[j]);
            const double fpm = shifted(i, h[i], j, -h[j]);
            const double fmp = shifted(i, -h[i], j, h[j]);
            const double fmm = shifted(i, -h[i], j, -h[j]);
            const double cross = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
            hess[i * n + j] = hess[j * n + i] = cross;
        }
    }

    FisherResult result;
    result.positive_definite = invert_spd(hess, n);
    if (!result.positive_definite) return result;
    result.standard_errors.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double v = hess[i * n + i];
        result.standard_errors[i] = v > 0.0 ? std::sqrt(v) : 0.0;
    }
    return result;
}

} // namespace nvrti
