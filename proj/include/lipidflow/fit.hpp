#pragma once

#include <optional>
#include <span>
#include <vector>

namespace lipidflow {

/// d(t) ~ rho * exp(-t / lambda) + c.
struct DecayFit {
    double rho = 0.0;
    double lambda_s = 0.0;
    double c = 0.0;
    double rmse = 0.0;
    int n = 0;
    bool degenerate = false;
    std::vector<double> residuals;  ///< d - model, one per sample
};

struct CorrelationResult {
    double r = 0.0;
    int n = 0;
    double slope = 0.0;
    double intercept = 0.0;
};

inline constexpr double kLambdaMin = 0.02;
inline constexpr double kLambdaMax = 20.0;
inline constexpr int kLambdaGrid = 200;

/// Sum of squared residuals after solving (rho, c) in closed form for a fixed lambda.
double projected_sse(std::span<const double> t, std::span<const double> d, double lambda, double* rho = nullptr,
                     double* c = nullptr);

/// The log-spaced lambda scan grid.
std::vector<double> lambda_grid();

/// Variable projection: global log-lambda scan, golden-section refinement of the best bracket.
DecayFit fit_exponential(std::span<const double> t, std::span<const double> d);

CorrelationResult pearson(std::span<const double> xs, std::span<const double> ys);

struct ComparisonRow {
    double lambda_computed = 0.0;
    double lambda_annotation = 0.0;
    double abs_diff = 0.0;
    std::optional<double> rel_diff;  ///< relative to the annotation; absent when a fit is degenerate
    bool flagged = false;
};

ComparisonRow compare_with_annotation(const DecayFit& computed, const DecayFit& annotation);

}  // namespace lipidflow
