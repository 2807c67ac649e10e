#include "fpp/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace fpp {

DistributionSpec DistributionSpec::deterministic(double c) {
    DistributionSpec s;
    s.kind = DistKind::Deterministic;
    s.value = c;
    s.validate();
    return s;
}

DistributionSpec DistributionSpec::uniform01() {
    DistributionSpec s;
    s.kind = DistKind::Uniform;
    return s;
}

DistributionSpec DistributionSpec::exponential(double rate) {
    DistributionSpec s;
    s.kind = DistKind::Exponential;
    s.rate = rate;
    s.validate();
    return s;
}

DistributionSpec DistributionSpec::bernoulli(double p0) {
    DistributionSpec s;
    s.kind = DistKind::Bernoulli;
    s.p0 = p0;
    s.validate();
    return s;
}

DistributionSpec DistributionSpec::pareto(double a) {
    DistributionSpec s;
    s.kind = DistKind::Pareto;
    s.a = a;
    s.validate();
    return s;
}

void DistributionSpec::validate() const {
    switch (kind) {
        case DistKind::Deterministic:
            if (value < 0 || !std::isfinite(value))
                throw WeightError("deterministic weight must be finite and >= 0");
            break;
        case DistKind::Uniform:
            break;
        case DistKind::Exponential:
            if (rate <= 0 || !std::isfinite(rate))
                throw WeightError("exponential rate must be finite and > 0");
            break;
        case DistKind::Bernoulli:
            if (p0 < 0 || p0 > 1) throw WeightError("bernoulli zero-atom must lie in [0,1]");
            break;
        case DistKind::Pareto:
            if (a <= 0 || !std::isfinite(a)) throw WeightError("pareto shape must be > 0");
            break;
    }
}

double DistributionSpec::quantile(double q) const {
    switch (kind) {
        case DistKind::Deterministic:
            return value;
        case DistKind::Uniform:
            return q;
        case DistKind::Exponential:
            return -std::log1p(-q) / rate;
        case DistKind::Bernoulli:
            return q <= p0 ? 0.0 : 1.0;
        case DistKind::Pareto:
            return std::pow(1.0 - q, -1.0 / a);
    }
    return 0;
}

double DistributionSpec::survival(double x) const {
    switch (kind) {
        case DistKind::Deterministic:
            return x < value ? 1.0 : 0.0;
        case DistKind::Uniform:
            if (x < 0) return 1.0;
            return x >= 1 ? 0.0 : 1.0 - x;
        case DistKind::Exponential:
            return x < 0 ? 1.0 : std::exp(-rate * x);
        case DistKind::Bernoulli:
            if (x < 0) return 1.0;
            return x < 1 ? 1.0 - p0 : 0.0;
        case DistKind::Pareto:
            return x < 1 ? 1.0 : std::pow(x, -a);
    }
    return 0;
}

double DistributionSpec::y_survival(double x, int dim) const {
    return std::pow(survival(x), 2.0 * dim);
}

double DistributionSpec::tbar(double delta) const {
    if (delta < 0 || delta > 1) throw WeightError("delta must lie in [0,1]");
    return quantile(1.0 - delta);
}

double DistributionSpec::min_weight() const {
    switch (kind) {
        case DistKind::Deterministic:
            return value;
        case DistKind::Pareto:
            return 1.0;
        default:
            return 0.0;
    }
}

bool DistributionSpec::moment_finite(double alpha) const {
    if (kind == DistKind::Pareto) return alpha < a;
    return true;  // the other families have all moments
}

bool DistributionSpec::y_moment_finite(double alpha, int dim) const {
    if (kind == DistKind::Pareto) return alpha < 2.0 * dim * a;
    return true;
}

double DistributionSpec::zero_atom() const {
    if (kind == DistKind::Bernoulli) return p0;
    if (kind == DistKind::Deterministic && value == 0) return 1.0;
    return 0.0;
}

std::string DistributionSpec::describe() const {
    switch (kind) {
        case DistKind::Deterministic:
            return "deterministic(" + std::to_string(value) + ")";
        case DistKind::Uniform:
            return "uniform01";
        case DistKind::Exponential:
            return "exponential(" + std::to_string(rate) + ")";
        case DistKind::Bernoulli:
            return "bernoulli(p0=" + std::to_string(p0) + ")";
        case DistKind::Pareto:
            return "pareto(a=" + std::to_string(a) + ")";
    }
    return "?";
}

bool DistributionSpec::operator==(const DistributionSpec& o) const {
    if (kind != o.kind) return false;
    switch (kind) {
        case DistKind::Deterministic:
            return value == o.value;
        case DistKind::Uniform:
            return true;
        case DistKind::Exponential:
            return rate == o.rate;
        case DistKind::Bernoulli:
            return p0 == o.p0;
        case DistKind::Pareto:
            return a == o.a;
    }
    return false;
}

// splitmix64 finalizer; statistically solid avalanche for counter-based use
static uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

uint64_t split_seed(uint64_t master_seed, uint64_t index, uint64_t stream) {
    uint64_t h = mix64(master_seed ^ 0xa0761d6478bd642fULL);
    h = mix64(h ^ index);
    h = mix64(h ^ (stream * 0xe7037ed1a0b428dbULL));
    return h;
}

WeightField::WeightField(DistributionSpec spec, uint64_t seed, int dim)
    : spec_(spec), seed_(seed), dim_(dim) {
    require_dim(dim);
    spec_.validate();
}

double WeightField::weight(const Edge& e) const {
    uint64_t h = mix64(seed_ ^ 0x243f6a8885a308d3ULL);
    for (int i = 0; i < dim_; ++i)
        h = mix64(h ^ static_cast<uint64_t>(static_cast<int64_t>(e.base[i])));
    h = mix64(h ^ (0x452821e638d01377ULL + static_cast<uint64_t>(e.axis)));
    // 53 high bits -> uniform on [0,1)
    double u = static_cast<double>(h >> 11) * 0x1.0p-53;
    return spec_.quantile(u);
}

double WeightField::y_at(const Point& z) const {
    double m = std::numeric_limits<double>::infinity();
    for (const Edge& e : incident_edges(z)) m = std::min(m, weight(e));
    return m;
}

RestrictedMoment restricted_moment(std::vector<double> samples, double alpha, double a) {
    if (samples.empty()) throw WeightError("restricted_moment needs samples");
    if (alpha <= 0) throw WeightError("restricted_moment needs alpha > 0");
    const double n = static_cast<double>(samples.size());
    RestrictedMoment out;
    double direct = 0;
    size_t exceed = 0;
    for (double x : samples) {
        if (x > a) {
            direct += std::pow(x, alpha);
            ++exceed;
        }
    }
    out.direct = direct / n;
    out.exceed_fraction = static_cast<double>(exceed) / n;

    // tail route: the empirical survival is a step function, so the integral
    // is a sum of closed-form pieces between consecutive order statistics
    std::sort(samples.begin(), samples.end());
    double integral = 0;
    double lo = a;
    for (size_t i = 0; i < samples.size(); ++i) {
        double x = samples[i];
        if (x <= a) continue;
        double surv = static_cast<double>(samples.size() - i) / n;  // P(X > t) for t in [lo, x)
        integral += surv * (std::pow(x, alpha) - std::pow(lo, alpha)) / alpha;
        lo = x;
    }
    out.tail_formula = std::pow(a, alpha) * out.exceed_fraction + alpha * integral;
    return out;
}

MinMomentCheck min_moment_check(const DistributionSpec& spec, int K, int L, double alpha,
                                double beta, int N, int samples, uint64_t seed) {
    if (K < 1 || L < K) throw WeightError("min_moment_check needs L >= K >= 1");
    if (N < 1) throw WeightError("min_moment_check needs N >= 1");
    if (beta * K > alpha * L)
        throw WeightError("invalid exponents: beta*K must not exceed alpha*L");
    if (samples < 2) throw WeightError("min_moment_check needs at least 2 samples");
    spec.validate();

    std::mt19937_64 rng(seed);
    auto draw = [&]() {
        double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        return spec.quantile(u);
    };

    double lhs_sum = 0, lhs_sq = 0, min_alpha_sum = 0, min_alpha_sq = 0;
    for (int s = 0; s < samples; ++s) {
        double min_of_sums = std::numeric_limits<double>::infinity();
        for (int i = 0; i < L; ++i) {
            double sum = 0;
            for (int j = 0; j < N; ++j) sum += draw();
            min_of_sums = std::min(min_of_sums, sum);
        }
        double v = std::pow(min_of_sums, beta);
        lhs_sum += v;
        lhs_sq += v * v;

        double min_k = std::numeric_limits<double>::infinity();
        for (int i = 0; i < K; ++i) min_k = std::min(min_k, draw());
        double w = std::pow(min_k, alpha);
        min_alpha_sum += w;
        min_alpha_sq += w * w;
    }
    const double n = samples;
    MinMomentCheck out;
    out.lhs = lhs_sum / n;
    double lhs_var = std::max(0.0, (lhs_sq - lhs_sum * lhs_sum / n) / (n - 1));
    out.lhs_ci = 1.96 * std::sqrt(lhs_var / n);

    double ma = min_alpha_sum / n;
    double ma_var = std::max(0.0, (min_alpha_sq - min_alpha_sum * min_alpha_sum / n) / (n - 1));
    double ma_ci = 1.96 * std::sqrt(ma_var / n);
    const double expo = static_cast<double>(L) / K;
    const double nfac = std::pow(static_cast<double>(N), L + beta);
    out.rhs = nfac * (1.0 + beta / alpha * std::pow(ma, expo));
    // first-order error propagation through m -> N^(L+beta) (1 + (b/a) m^(L/K))
    double deriv = nfac * (beta / alpha) * expo * std::pow(std::max(ma, 1e-300), expo - 1.0);
    out.rhs_ci = std::abs(deriv) * ma_ci;
    out.holds_within_error = out.lhs - out.lhs_ci <= out.rhs + out.rhs_ci;
    return out;
}

}  // namespace fpp
