#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "simstudy/executor.hpp"
#include "simstudy/rng.hpp"

namespace simstudy::var {

enum class Family { Clayton, Gumbel };

std::string_view to_string(Family f);
/// Throws ConfigError for an unknown family name.
Family parse_family(std::string_view s);

/// Standard normal quantile (Wichura's AS 241, relative error about 1e-16).
double qnorm(double p);

/// Copula parameter for a given Kendall's tau in (0,1).
double itau(Family f, double tau);

/// n x d uniforms, row-major, every entry strictly inside (0,1). Both
/// families use the Marshall-Olkin frailty construction U = psi(E / V).
std::vector<double> sample_copula(Family f, double theta, std::size_t n, std::size_t d, Rng& rng);

/// Gamma(shape, 1) variate (Marsaglia and Tsang).
double rgamma(double shape, Rng& rng);

/// Positive stable variate with Laplace transform exp(-t^alpha), 0 < alpha <= 1.
double rstable(double alpha, Rng& rng);

using Quantile = std::function<double(double)>;

/// L_i = -sum_j w_j (exp(X_ij) - 1) with X_ij = qf(U_ij); weights recycled.
std::vector<double> losses(std::span<const double> u, std::size_t n, std::size_t d, const Quantile& qf,
                           std::span<const double> weights);

/// R's default (type 7) sample quantile.
double quantile_type7(std::vector<double> sample, double p);
/// Several probabilities of an already sorted sample.
std::vector<double> quantiles_type7_sorted(std::span<const double> sorted, std::span<const double> probs);

double median(std::vector<double> x);

/// 1.4826 * median(|x - median(x)|).
double mad(const std::vector<double>& x);

/// Huber M-estimate of location with the scale fixed at the MAD. Returns the
/// median when the MAD is zero.
double huber_mean(const std::vector<double>& x, double k = 1.5, double tol = 1e-6, int max_iter = 50);

/// Kendall's tau-b in O(n log n) (Knight's merge-sort algorithm).
double kendall_tau(std::span<const double> x, std::span<const double> y);

/// Kolmogorov-Smirnov distance between the sample's ecdf and U(0,1).
double ks_uniform(std::vector<double> sample);

struct StudyArgs {
    std::size_t n = 0;
    std::size_t d = 0;
    Family family = Family::Clayton;
    double tau = 0.5;
    std::vector<double> alpha;
    std::vector<double> weights{1.0};
    Quantile margin_quantile = qnorm;

    /// Throws ConfigError when an invariant does not hold.
    void check() const;
};

/// VaR estimates for every alpha from one simulated loss sample.
std::vector<double> do_one_var(const StudyArgs& args, Rng& rng);

/// The VaR copula study as a study function. Reads grid variables n, d,
/// family, tau; alpha may be inner (value over alpha) or grid (scalar);
/// frozen varWgts (number, list, or object keyed by d) and qF.
StudyFn var_copula_study();

/// Returns the first uniform drawn from the sub-job's generator.
StudyFn first_uniform_study();

}  // namespace simstudy::var
