#include "simstudy/study_var.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "simstudy/error.hpp"

namespace simstudy::var {

std::string_view to_string(Family f) { return f == Family::Clayton ? "Clayton" : "Gumbel"; }

Family parse_family(std::string_view s)
{
    if (s == "Clayton") return Family::Clayton;
    if (s == "Gumbel") return Family::Gumbel;
    throw ConfigError("unknown copula family '" + std::string(s) + "' (expected Clayton or Gumbel)");
}

namespace {

template <std::size_t N>
double poly(const double (&c)[N], double x)
{
    double acc = c[N - 1];
    for (std::size_t i = N - 1; i-- > 0;) acc = acc * x + c[i];
    return acc;
}

}  // namespace

double qnorm(double p)
{
    static constexpr double a[] = {3.3871328727963666080e0,  1.3314166789178437745e+2, 1.9715909503065514427e+3,
                                   1.3731693765509461125e+4, 4.5921953931549871457e+4, 6.7265770927008700853e+4,
                                   3.3430575583588128105e+4, 2.5090809287301226727e+3};
    static constexpr double b[] = {1.0,
                                   4.2313330701600911252e+1, 6.8718700749205790830e+2, 5.3941960214247511077e+3,
                                   2.1213794301586595867e+4, 3.9307895800092710610e+4, 2.8729085735721942674e+4,
                                   5.2264952788528545610e+3};
    static constexpr double c[] = {1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
                                   3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
                                   2.27238449892691845833e-2, 7.74545014278341407640e-4};
    static constexpr double d[] = {1.0,
                                   2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
                                   1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
                                   1.05075007164441684324e-9};
    static constexpr double e[] = {6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
                                   2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
                                   2.71155556874348757815e-5, 2.01033439929228813265e-7};
    static constexpr double f[] = {1.0,
                                   5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
                                   7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
                                   2.04426310338993978564e-15};

    if (std::isnan(p) || p < 0.0 || p > 1.0) return std::numeric_limits<double>::quiet_NaN();
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();

    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q * poly(a, r) / poly(b, r);
    }
    double r = std::sqrt(-std::log(q < 0 ? p : 1.0 - p));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = poly(c, r) / poly(d, r);
    } else {
        r -= 5.0;
        val = poly(e, r) / poly(f, r);
    }
    return q < 0 ? -val : val;
}

double itau(Family f, double tau)
{
    if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("Kendall's tau must lie in (0,1), got " + format_number(tau));
    return f == Family::Clayton ? 2.0 * tau / (1.0 - tau) : 1.0 / (1.0 - tau);
}

double rgamma(double shape, Rng& rng)
{
    if (!(shape > 0.0)) throw ConfigError("gamma shape must be positive");
    if (shape < 1.0) {
        // G(a) = G(a+1) * U^(1/a)
        const double g = rgamma(shape + 1.0, rng);
        return g * std::pow(rng.uniform(), 1.0 / shape);
    }
    const double dd = shape - 1.0 / 3.0;
    const double cc = 1.0 / std::sqrt(9.0 * dd);
    while (true) {
        double x, v;
        do {
            x = qnorm(rng.uniform());
            v = 1.0 + cc * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = rng.uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return dd * v;
        if (std::log(u) < 0.5 * x * x + dd * (1.0 - v + std::log(v))) return dd * v;
    }
}

double rstable(double alpha, Rng& rng)
{
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("stable index must lie in (0,1]");
    if (alpha == 1.0) return 1.0;
    // Kanter's representation of the Chambers-Mallows-Stuck sampler
    const double u = std::numbers::pi * rng.uniform();
    const double w = -std::log(rng.uniform());
    const double a = std::sin(alpha * u) / std::pow(std::sin(u), 1.0 / alpha);
    const double b = std::pow(std::sin((1.0 - alpha) * u) / w, (1.0 - alpha) / alpha);
    return a * b;
}

namespace {

double clamp_open(double u)
{
    constexpr double lo = std::numeric_limits<double>::min();
    constexpr double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2;
    return std::clamp(u, lo, hi);
}

}  // namespace

std::vector<double> sample_copula(Family f, double theta, std::size_t n, std::size_t d, Rng& rng)
{
    if (f == Family::Clayton && !(theta > 0.0)) throw ConfigError("Clayton parameter must be positive");
    if (f == Family::Gumbel && !(theta >= 1.0)) throw ConfigError("Gumbel parameter must be at least 1");
    std::vector<double> u(n * d);
    for (std::size_t i = 0; i < n; ++i) {
        const double v = f == Family::Clayton ? rgamma(1.0 / theta, rng) : rstable(1.0 / theta, rng);
        for (std::size_t j = 0; j < d; ++j) {
            const double t = -std::log(rng.uniform()) / v;
            const double psi = f == Family::Clayton ? std::pow(1.0 + t, -1.0 / theta)
                                                    : std::exp(-std::pow(t, 1.0 / theta));
            u[i * d + j] = clamp_open(psi);
        }
    }
    return u;
}

std::vector<double> losses(std::span<const double> u, std::size_t n, std::size_t d, const Quantile& qf,
                           std::span<const double> weights)
{
    if (u.size() != n * d) throw Error("losses: matrix has " + std::to_string(u.size()) + " entries, expected n*d");
    if (weights.empty()) throw Error("losses: empty weight vector");
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += weights[j % weights.size()] * std::expm1(qf(u[i * d + j]));
        out[i] = -s;
    }
    return out;
}

std::vector<double> quantiles_type7_sorted(std::span<const double> x, std::span<const double> probs)
{
    if (x.empty()) throw Error("quantile of an empty sample");
    std::vector<double> out;
    out.reserve(probs.size());
    const double n = static_cast<double>(x.size());
    for (double p : probs) {
        if (!(p >= 0.0 && p <= 1.0)) throw Error("probability outside [0,1]");
        const double h = (n - 1.0) * p;
        const double lo = std::floor(h);
        const auto j = static_cast<std::size_t>(lo);
        const double frac = h - lo;
        if (j + 1 >= x.size()) out.push_back(x.back());
        else out.push_back(x[j] + frac * (x[j + 1] - x[j]));
    }
    return out;
}

double quantile_type7(std::vector<double> sample, double p)
{
    std::sort(sample.begin(), sample.end());
    const double probs[] = {p};
    return quantiles_type7_sorted(sample, probs)[0];
}

double median(std::vector<double> x)
{
    if (x.empty()) throw Error("median of an empty sample");
    const std::size_t m = x.size() / 2;
    std::nth_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(m), x.end());
    const double hi = x[m];
    if (x.size() % 2) return hi;
    const double lo = *std::max_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(m));
    return (lo + hi) / 2.0;
}

double mad(const std::vector<double>& x)
{
    const double med = median(x);
    std::vector<double> dev;
    dev.reserve(x.size());
    for (double v : x) dev.push_back(std::fabs(v - med));
    return 1.4826 * median(std::move(dev));
}

double huber_mean(const std::vector<double>& x, double k, double tol, int max_iter)
{
    double mu = median(x);
    const double s = mad(x);
    if (s == 0.0) return mu;
    for (int it = 0; it < max_iter; ++it) {
        double sum = 0.0;
        for (double v : x) sum += std::clamp(v, mu - k * s, mu + k * s);
        const double mu1 = sum / static_cast<double>(x.size());
        if (std::fabs(mu - mu1) < tol * s) break;
        mu = mu1;
    }
    return mu;
}

namespace {

// Sorts `v` and returns the number of strict inversions.
std::uint64_t sort_count(std::vector<double>& v, std::vector<double>& buf, std::size_t lo, std::size_t hi)
{
    if (hi - lo < 2) return 0;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::uint64_t inv = sort_count(v, buf, lo, mid) + sort_count(v, buf, mid, hi);
    std::size_t i = lo, j = mid, k = lo;
    while (i < mid && j < hi) {
        if (v[j] < v[i]) {
            inv += mid - i;
            buf[k++] = v[j++];
        } else {
            buf[k++] = v[i++];
        }
    }
    while (i < mid) buf[k++] = v[i++];
    while (j < hi) buf[k++] = v[j++];
    std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
              v.begin() + static_cast<std::ptrdiff_t>(lo));
    return inv;
}

std::uint64_t tied_pairs(const std::vector<double>& sorted)
{
    std::uint64_t t = 0;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        const std::uint64_t run = j - i;
        t += run * (run - 1) / 2;
        i = j;
    }
    return t;
}

}  // namespace

double kendall_tau(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size()) throw Error("kendall_tau: samples differ in length");
    const std::size_t n = x.size();
    if (n < 2) throw Error("kendall_tau: need at least two observations");
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
    });
    std::vector<double> xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = x[order[i]];
        ys[i] = y[order[i]];
    }
    const std::uint64_t n0 = static_cast<std::uint64_t>(n) * (n - 1) / 2;
    const std::uint64_t n1 = tied_pairs(xs);
    std::uint64_t n3 = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && xs[j] == xs[i] && ys[j] == ys[i]) ++j;
        const std::uint64_t run = j - i;
        n3 += run * (run - 1) / 2;
        i = j;
    }
    std::vector<double> buf(n);
    const std::uint64_t swaps = sort_count(ys, buf, 0, n);
    const std::uint64_t n2 = tied_pairs(ys);
    const double num = static_cast<double>(n0) - static_cast<double>(n1) - static_cast<double>(n2) +
                       static_cast<double>(n3) - 2.0 * static_cast<double>(swaps);
    const double den = std::sqrt(static_cast<double>(n0 - n1) * static_cast<double>(n0 - n2));
    return num / den;
}

double ks_uniform(std::vector<double> sample)
{
    if (sample.empty()) throw Error("ks_uniform: empty sample");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double dmax = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = std::clamp(sample[i], 0.0, 1.0);
        dmax = std::max({dmax, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
    }
    return dmax;
}

void StudyArgs::check() const
{
    if (n < 1) throw ConfigError("sample size n must be at least 1");
    if (d < 1) throw ConfigError("dimension d must be at least 1");
    if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("tau must lie in (0,1)");
    if (alpha.empty()) throw ConfigError("no alpha levels");
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        if (!(alpha[i] > 0.0 && alpha[i] < 1.0)) throw ConfigError("alpha must lie in (0,1)");
        if (i && !(alpha[i] > alpha[i - 1])) throw ConfigError("alpha levels must be strictly increasing");
    }
    if (weights.empty()) throw ConfigError("empty weight vector");
    if (!margin_quantile) throw ConfigError("no marginal quantile function");
}

std::vector<double> do_one_var(const StudyArgs& args, Rng& rng)
{
    args.check();
    const double theta = itau(args.family, args.tau);
    const auto u = sample_copula(args.family, theta, args.n, args.d, rng);
    auto l = losses(u, args.n, args.d, args.margin_quantile, args.weights);
    std::sort(l.begin(), l.end());
    return quantiles_type7_sorted(l, args.alpha);
}

namespace {

std::vector<double> weights_for(const Json& w, std::size_t d)
{
    auto as_vector = [](const Json& v) {
        std::vector<double> out;
        if (v.is_number()) {
            out.push_back(v.get<double>());
        } else if (v.is_array()) {
            for (const auto& x : v) {
                if (!x.is_number()) throw ConfigError("varWgts entries must be numbers");
                out.push_back(x.get<double>());
            }
        } else {
            throw ConfigError("varWgts entries must be numbers or lists of numbers");
        }
        return out;
    };
    if (w.is_object()) {
        const std::string key = format_number(static_cast<double>(d));
        auto it = w.find(key);
        if (it == w.end()) throw ConfigError("varWgts has no entry for d = " + key);
        return as_vector(*it);
    }
    return as_vector(w);
}

Quantile quantile_for(const Json& q)
{
    const Json* v = &q;
    if (q.is_object() && q.size() == 1) v = &q.begin().value();
    if (v->is_string() && (v->get<std::string>() == "qnorm" || v->get<std::string>() == "normal")) return qnorm;
    throw ConfigError("unsupported marginal quantile function (only \"qnorm\" is available)");
}

}  // namespace

StudyFn var_copula_study()
{
    return [](SubJobContext& ctx) -> Value {
        StudyArgs a;
        a.n = static_cast<std::size_t>(ctx.number("n"));
        a.d = static_cast<std::size_t>(ctx.number("d"));
        a.family = parse_family(ctx.text("family"));
        a.tau = ctx.number("tau");
        const VarList& vl = ctx.varlist();
        if (const auto* w = vl.find("varWgts"); w && w->type == VarType::Frozen) a.weights = weights_for(ctx.frozen("varWgts"), a.d);
        if (const auto* q = vl.find("qF"); q && q->type == VarType::Frozen) a.margin_quantile = quantile_for(ctx.frozen("qF"));

        if (ctx.is_grid("alpha")) {
            a.alpha = {ctx.number("alpha")};
            return scalar_value(do_one_var(a, ctx.rng())[0]);
        }
        const VarSpec& alpha = ctx.inner("alpha");
        for (const auto& l : alpha.levels) a.alpha.push_back(l.number());
        auto var = do_one_var(a, ctx.rng());
        return Value({Dim{alpha.name, alpha.level_labels()}}, std::move(var));
    };
}

StudyFn first_uniform_study()
{
    return [](SubJobContext& ctx) -> Value { return scalar_value(ctx.rng().uniform()); };
}

}  // namespace simstudy::var
