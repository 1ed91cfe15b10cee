#include "svl/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "svl/error.hpp"

namespace svl
{
MeanEstimate estimate_mean(std::span<const double> xs)
{
    MeanEstimate out;
    out.count = xs.size();
    if (xs.empty())
        return out;
    double sum = 0.0;
    for (double x : xs)
        sum += x;
    out.mean = sum / double(xs.size());
    out.se = std::sqrt(sample_variance(xs) / double(xs.size()));
    return out;
}

double sample_variance(std::span<const double> xs)
{
    if (xs.size() < 2)
        return 0.0;
    double mean = 0.0;
    for (double x : xs)
        mean += x;
    mean /= double(xs.size());
    double ss = 0.0;
    for (double x : xs)
        ss += (x - mean) * (x - mean);
    return ss / double(xs.size() - 1);
}

bool within_ci(double value, double target, double se, double nsigma)
{
    double slack = 1e-12 * std::max(std::abs(value), std::abs(target));
    return std::abs(value - target) <= nsigma * se + slack;
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size() || x.size() < 2)
        throw StatisticalError("fit_line needs at least two paired points");
    const double n = double(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    LinearFit fit;
    double scale = std::max(1.0, std::abs(mx));
    if (sxx <= 1e-24 * scale * scale * n)
    {
        fit.degenerate = true;
        fit.slope = std::numeric_limits<double>::quiet_NaN();
        fit.intercept = my;
        return fit;
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double rss = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        double r = y[i] - fit.intercept - fit.slope * x[i];
        rss += r * r;
    }
    if (x.size() > 2)
    {
        fit.residual_sd = std::sqrt(rss / (n - 2.0));
        fit.slope_se = fit.residual_sd / std::sqrt(sxx);
    }
    return fit;
}
}  // namespace svl
