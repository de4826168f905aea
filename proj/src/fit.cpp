#include "lipidflow/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lipidflow/error.hpp"

namespace lipidflow {

double projected_sse(std::span<const double> t, std::span<const double> d, double lambda, double* rho, double* c)
{
    const std::size_t n = t.size();
    std::vector<double> e(n);
    double em = 0.0, dm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        e[i] = std::exp(-t[i] / lambda);
        em += e[i];
        dm += d[i];
    }
    em /= static_cast<double>(n);
    dm /= static_cast<double>(n);
    double see = 0.0, sed = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        see += (e[i] - em) * (e[i] - em);
        sed += (e[i] - em) * (d[i] - dm);
    }
    const double r = see > 1e-300 ? sed / see : 0.0;
    const double off = dm - r * em;
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double res = d[i] - (r * e[i] + off);
        sse += res * res;
    }
    if (rho) *rho = r;
    if (c) *c = off;
    return sse;
}

namespace {

/// Derivative of the projected SSE with respect to log(lambda); by the envelope theorem only the
/// explicit lambda dependence of the basis contributes.
double projected_slope(std::span<const double> t, std::span<const double> d, double log_lambda)
{
    const double lambda = std::exp(log_lambda);
    double rho = 0.0, c = 0.0;
    projected_sse(t, d, lambda, &rho, &c);
    double acc = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double e = std::exp(-t[i] / lambda);
        acc += (d[i] - (rho * e + c)) * e * t[i];
    }
    return -2.0 * rho * acc / lambda;
}

/// Root of the slope inside [lo, hi] (log lambda) by bisection, or NaN when the ends do not bracket one.
double derivative_root(std::span<const double> t, std::span<const double> d, double lo, double hi)
{
    double glo = projected_slope(t, d, lo), ghi = projected_slope(t, d, hi);
    if (!(glo < 0.0 && ghi > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double g = projected_slope(t, d, mid);
        if (g == 0.0) return mid;
        (g < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

std::vector<double> lambda_grid()
{
    std::vector<double> g(kLambdaGrid);
    const double l0 = std::log(kLambdaMin), l1 = std::log(kLambdaMax);
    for (int i = 0; i < kLambdaGrid; ++i) g[i] = std::exp(l0 + (l1 - l0) * i / (kLambdaGrid - 1));
    return g;
}

DecayFit fit_exponential(std::span<const double> t, std::span<const double> d)
{
    require(t.size() == d.size(), "time and displacement lengths differ", ErrorCode::DimensionMismatch);
    require(t.size() >= 4, "exponential fit needs at least 4 samples", ErrorCode::InsufficientData);
    for (std::size_t i = 0; i < t.size(); ++i) {
        require(std::isfinite(t[i]) && std::isfinite(d[i]), "fit samples must be finite");
        if (i > 0) require(t[i] > t[i - 1], "fit times must be strictly increasing");
    }

    DecayFit fit;
    fit.n = static_cast<int>(t.size());
    const auto [dmin, dmax] = std::minmax_element(d.begin(), d.end());
    const double scale = std::max({1.0, std::abs(*dmin), std::abs(*dmax)});
    if (*dmax - *dmin <= 1e-12 * scale) {
        double mean = 0.0;
        for (double v : d) mean += v;
        mean /= static_cast<double>(d.size());
        fit.degenerate = true;
        fit.rho = 0.0;
        fit.c = mean;
        fit.lambda_s = std::sqrt(kLambdaMin * kLambdaMax);
        fit.residuals.resize(d.size());
        double sse = 0.0;
        for (std::size_t i = 0; i < d.size(); ++i) {
            fit.residuals[i] = d[i] - mean;
            sse += fit.residuals[i] * fit.residuals[i];
        }
        fit.rmse = std::sqrt(sse / static_cast<double>(d.size()));
        return fit;
    }

    const auto grid = lambda_grid();
    std::size_t best = 0;
    double best_sse = projected_sse(t, d, grid[0]);
    std::vector<double> sse(grid.size());
    sse[0] = best_sse;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        sse[i] = projected_sse(t, d, grid[i]);
        // Ties resolve to the smaller lambda.
        if (sse[i] < best_sse - 1e-12 * std::max(1.0, best_sse)) {
            best_sse = sse[i];
            best = i;
        }
    }

    // Golden section on log(lambda) inside the neighbouring grid bracket. The search runs to a
    // relative width of 1e-6 and then keeps going while the objective can still resolve the minimum,
    // so noiseless model data is recovered to round-off.
    double a = std::log(grid[best > 0 ? best - 1 : 0]);
    double b = std::log(grid[std::min(best + 1, grid.size() - 1)]);
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - invphi * (b - a), x2 = a + invphi * (b - a);
    double f1 = projected_sse(t, d, std::exp(x1)), f2 = projected_sse(t, d, std::exp(x2));
    while (b - a > 1e-14) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = projected_sse(t, d, std::exp(x1));
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = projected_sse(t, d, std::exp(x2));
        }
    }
    double lambda = std::exp(f1 <= f2 ? x1 : x2);
    double refined = projected_sse(t, d, lambda);

    // Near the optimum the objective is flat to round-off, so the last digits come from the
    // root of its derivative, which stays well conditioned.
    const double lo = std::log(grid[best > 0 ? best - 1 : 0]);
    const double hi = std::log(grid[std::min(best + 1, grid.size() - 1)]);
    const double root = derivative_root(t, d, lo, hi);
    if (std::isfinite(root)) {
        const double at_root = projected_sse(t, d, std::exp(root));
        if (at_root <= refined + 1e-12 * std::max(1.0, refined)) {
            lambda = std::exp(root);
            refined = at_root;
        }
    }
    if (refined > best_sse) {
        lambda = grid[best];
        refined = best_sse;
    }

    fit.lambda_s = lambda;
    projected_sse(t, d, lambda, &fit.rho, &fit.c);
    fit.residuals.resize(d.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        fit.residuals[i] = d[i] - (fit.rho * std::exp(-t[i] / lambda) + fit.c);
        acc += fit.residuals[i] * fit.residuals[i];
    }
    fit.rmse = std::sqrt(acc / static_cast<double>(d.size()));
    return fit;
}

CorrelationResult pearson(std::span<const double> xs, std::span<const double> ys)
{
    require(xs.size() == ys.size(), "pearson inputs differ in length", ErrorCode::DimensionMismatch);
    require(xs.size() >= 2, "pearson needs at least two pairs", ErrorCode::InsufficientData);
    const double n = static_cast<double>(xs.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    require(sxx > 0 && syy > 0, "pearson needs non-zero variance in both inputs", ErrorCode::InsufficientData);
    CorrelationResult r;
    r.n = static_cast<int>(xs.size());
    r.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    r.slope = sxy / sxx;
    r.intercept = my - r.slope * mx;
    return r;
}

ComparisonRow compare_with_annotation(const DecayFit& computed, const DecayFit& annotation)
{
    ComparisonRow row;
    row.lambda_computed = computed.lambda_s;
    row.lambda_annotation = annotation.lambda_s;
    row.abs_diff = std::abs(computed.lambda_s - annotation.lambda_s);
    row.flagged = computed.degenerate || annotation.degenerate;
    if (!row.flagged && annotation.lambda_s > 0) row.rel_diff = row.abs_diff / annotation.lambda_s;
    return row;
}

}  // namespace lipidflow
