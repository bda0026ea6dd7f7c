#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace adaptsurv {

double norm_pdf(double x);
double norm_cdf(double x);
// Inverse standard normal CDF (Wichura's PPND16), accurate to ~1e-15.
double norm_quantile(double p);

double mean(const std::vector<double>& x);
double variance(const std::vector<double>& x);  // unbiased, n-1
double covariance(const std::vector<double>& x, const std::vector<double>& y);

// Standard error of the sample mean.
double se_mean(const std::vector<double>& x);
// Standard error of the unbiased sample variance, from the fourth central moment.
double se_variance(const std::vector<double>& x);

// One-sample Kolmogorov-Smirnov statistic against the standard normal.
double ks_normal(std::vector<double> x);

// FNV-1a 64-bit content hash (manifest fingerprints, not security).
uint64_t fnv1a64(std::string_view bytes);

}  // namespace adaptsurv
