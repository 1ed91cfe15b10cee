#pragma once

#include <cstddef>
#include <span>

namespace svl
{
struct MeanEstimate
{
    double mean = 0.0;
    double se = 0.0;  //!< standard error of the mean
    std::size_t count = 0;
};

//! Sample mean with standard error (unbiased variance).
MeanEstimate estimate_mean(std::span<const double> xs);

//! Unbiased sample variance; zero for fewer than two samples.
double sample_variance(std::span<const double> xs);

//! True iff |value - target| <= nsigma * se (se == 0 requires equality up to
//! a relative round-off slack).
bool within_ci(double value, double target, double se, double nsigma);

struct LinearFit
{
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
    double residual_sd = 0.0;
    bool degenerate = false;  //!< regressor has (near) zero spread
};

//! Ordinary least squares y = intercept + slope * x.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);
}  // namespace svl
