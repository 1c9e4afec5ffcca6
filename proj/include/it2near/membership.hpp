#pragma once

// Membership-function families (triangular, trapezoidal, Gaussian, Beta), the
// interval type-2 Beta construction, Gaussian-by-Beta approximation and the
// linguistic term banks used to fuzzify feature values.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "errors.hpp"

namespace it2near {

namespace detail {

inline double clamp_grade(double g) noexcept {
    if (!(g > 0.0)) return 0.0;  // also maps NaN to 0
    return g > 1.0 ? 1.0 : g;
}

inline void require(bool ok, const std::string& what) {
    if (!ok) throw InvalidParameter(what);
}

}  // namespace detail

/// Symmetric triangle on [a, b] peaking at the midpoint.
class Triangular {
public:
    Triangular(double a, double b) : a_(a), b_(b) {
        detail::require(std::isfinite(a) && std::isfinite(b) && b > a, "triangular: requires a < b");
    }

    double a() const noexcept { return a_; }
    double b() const noexcept { return b_; }
    double peak() const noexcept { return 0.5 * (a_ + b_); }

    double operator()(double x) const noexcept {
        if (x <= a_ || x >= b_) return 0.0;
        const double p = peak();
        const double g = x <= p ? (x - a_) / (p - a_) : (b_ - x) / (b_ - p);
        return detail::clamp_grade(g);
    }

private:
    double a_, b_;
};

/// Ramp a->b, plateau b..c, ramp c->d.
class Trapezoidal {
public:
    Trapezoidal(double a, double b, double c, double d) : a_(a), b_(b), c_(c), d_(d) {
        detail::require(std::isfinite(a) && std::isfinite(d) && a <= b && b <= c && c <= d && a < d,
                        "trapezoidal: requires a <= b <= c <= d and a < d");
    }

    double a() const noexcept { return a_; }
    double b() const noexcept { return b_; }
    double c() const noexcept { return c_; }
    double d() const noexcept { return d_; }

    double operator()(double x) const noexcept {
        if (x < a_ || x > d_) return 0.0;
        if (x < b_) return detail::clamp_grade((x - a_) / (b_ - a_));
        if (x <= c_) return 1.0;
        if (x < d_) return detail::clamp_grade((d_ - x) / (d_ - c_));
        return c_ == d_ ? 1.0 : 0.0;
    }

private:
    double a_, b_, c_, d_;
};

class Gaussian {
public:
    Gaussian(double mu, double sigma) : mu_(mu), sigma_(sigma) {
        detail::require(std::isfinite(mu) && std::isfinite(sigma) && sigma > 0.0, "gaussian: requires sigma > 0");
    }

    double mu() const noexcept { return mu_; }
    double sigma() const noexcept { return sigma_; }

    double operator()(double x) const noexcept {
        const double t = (x - mu_) / sigma_;
        return detail::clamp_grade(std::exp(-0.5 * t * t));
    }

private:
    double mu_, sigma_;
};

/// Beta membership function on the open support (x_min, x_max).
///
/// The peak sits at x_center = (alpha * x_max + beta * x_min) / (alpha + beta)
/// where the grade is exactly 1; the width is x_max - x_min.
class BetaMF {
public:
    BetaMF(double alpha, double beta, double x_min, double x_max)
        : alpha_(alpha), beta_(beta), x_min_(x_min), x_max_(x_max) {
        detail::require(std::isfinite(alpha) && alpha > 0.0, "beta: alpha must be positive");
        detail::require(std::isfinite(beta) && beta > 0.0, "beta: beta must be positive");
        detail::require(std::isfinite(x_min) && std::isfinite(x_max) && x_max > x_min,
                        "beta: requires x_max > x_min");
        const double c = center();
        detail::require(c > x_min_ && c < x_max_, "beta: center must lie strictly inside the support");
    }

    /// Builds the equivalent (x_min, x_max) parameterization from a center and width.
    static BetaMF from_center(double center, double width, double alpha, double beta) {
        detail::require(std::isfinite(width) && width > 0.0, "beta: width must be positive");
        detail::require(alpha > 0.0 && beta > 0.0, "beta: alpha and beta must be positive");
        const double s = alpha + beta;
        return BetaMF(alpha, beta, center - width * alpha / s, center + width * beta / s);
    }

    double alpha() const noexcept { return alpha_; }
    double beta() const noexcept { return beta_; }
    double x_min() const noexcept { return x_min_; }
    double x_max() const noexcept { return x_max_; }
    double center() const noexcept { return (alpha_ * x_max_ + beta_ * x_min_) / (alpha_ + beta_); }
    double width() const noexcept { return x_max_ - x_min_; }

    double operator()(double x) const noexcept {
        if (!(x > x_min_ && x < x_max_)) return 0.0;
        const double c = center();
        const double left = std::pow((x - x_min_) / (c - x_min_), alpha_);
        const double right = std::pow((x_max_ - x) / (x_max_ - c), beta_);
        return detail::clamp_grade(left * right);
    }

private:
    double alpha_, beta_, x_min_, x_max_;
};

using MembershipFunction = std::variant<Triangular, Trapezoidal, Gaussian, BetaMF>;

inline double eval_mf(const MembershipFunction& mf, double x) {
    return std::visit([x](const auto& f) { return f(x); }, mf);
}

/// Beta grade in the center/width parameterization. Agrees with BetaMF on
/// the equivalent (x_min, x_max) parameters.
inline double eval_beta_centered(double center, double width, double alpha, double beta, double x) {
    detail::require(width > 0.0 && alpha > 0.0 && beta > 0.0, "beta: width, alpha and beta must be positive");
    const double s = alpha + beta;
    const double lo = center - width * alpha / s;
    const double hi = center + width * beta / s;
    if (!(x > lo && x < hi)) return 0.0;
    const double t = s * (x - center) / width;
    const double left = std::pow(1.0 + t / alpha, alpha);
    const double right = std::pow(1.0 - t / beta, beta);
    return detail::clamp_grade(left * right);
}

/// A closed interval of membership grades [lower, upper].
struct GradeInterval {
    double lower = 0.0;
    double upper = 0.0;
};

/// Interval type-2 Beta membership function.
///
/// Two Beta envelopes share the base width and shape parameters but sit on
/// different centers. The footprint of uncertainty at x is the interval
/// between the pointwise minimum and maximum of the two envelopes, so
/// lower <= upper holds for every x regardless of which center is larger.
class IT2BetaMF {
public:
    IT2BetaMF(BetaMF base, double center_upper, double center_lower)
        : base_(base), center_upper_(center_upper), center_lower_(center_lower) {
        detail::require(std::isfinite(center_upper) && std::isfinite(center_lower), "it2 beta: centers must be finite");
    }

    /// Centers base.center() * (1 +/- spread), clipped to [0, 1].
    static IT2BetaMF symmetric(BetaMF base, double spread) {
        detail::require(spread >= 0.0, "it2 beta: spread must be non-negative");
        const double c = base.center();
        return IT2BetaMF(base, std::clamp(c * (1.0 + spread), 0.0, 1.0), std::clamp(c * (1.0 - spread), 0.0, 1.0));
    }

    /// Centers base.center() * alpha and base.center() * beta, unclipped.
    static IT2BetaMF literal(BetaMF base) {
        const double c = base.center();
        return IT2BetaMF(base, c * base.alpha(), c * base.beta());
    }

    const BetaMF& base() const noexcept { return base_; }
    double center_upper() const noexcept { return center_upper_; }
    double center_lower() const noexcept { return center_lower_; }

    GradeInterval operator()(double x) const {
        const double g1 = eval_beta_centered(center_upper_, base_.width(), base_.alpha(), base_.beta(), x);
        const double g2 = eval_beta_centered(center_lower_, base_.width(), base_.alpha(), base_.beta(), x);
        return {std::min(g1, g2), std::max(g1, g2)};
    }

private:
    BetaMF base_;
    double center_upper_, center_lower_;
};

inline GradeInterval eval_it2(const IT2BetaMF& mf, double x) { return mf(x); }

// ---------------------------------------------------------------------------
// Gaussian approximation

struct GaussianFitOptions {
    std::vector<double> alphas = {1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 5.5, 6.0};
    std::vector<double> betas = {1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 5.5, 6.0};
    /// Support half-widths, in units of the target sigma.
    std::vector<double> half_widths = {2.0, 3.0, 4.0, 5.0};
    bool refine = true;
    /// Refinement steps per axis on each side of the best coarse cell.
    int refine_steps = 5;
    /// Maximum number of candidate evaluations (coarse + refined).
    std::size_t max_candidates = 100000;
    /// Sample count for the sup-norm error over [mu - 4 sigma, mu + 4 sigma].
    std::size_t error_samples = 801;
};

struct GaussianFit {
    BetaMF mf;
    double error;  ///< achieved sup-norm error on the evaluation grid
    std::size_t candidates_evaluated;
};

/// Sup-norm distance between a Beta and a Gaussian, sampled uniformly on [lo, hi].
inline double sup_error(const BetaMF& b, const Gaussian& g, double lo, double hi, std::size_t samples) {
    double worst = 0.0;
    const std::size_t n = std::max<std::size_t>(samples, 2);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
        worst = std::max(worst, std::abs(b(x) - g(x)));
    }
    return worst;
}

/// Finds Beta parameters approximating Gaussian(mu, sigma) in sup norm.
///
/// The coarse grid is scanned in (alpha, beta, half-width) order and the first
/// candidate under `precision` is returned. Otherwise one refinement pass runs
/// around the best coarse cell. Throws FitNotFound when the precision is not
/// reached or the candidate budget runs out.
inline GaussianFit gaussian_approximation_fit(double target_mu, double target_sigma, double precision,
                                              const GaussianFitOptions& opts = {}) {
    detail::require(precision > 0.0, "gaussian fit: precision must be positive");
    const Gaussian target(target_mu, target_sigma);
    const double lo = target_mu - 4.0 * target_sigma;
    const double hi = target_mu + 4.0 * target_sigma;

    std::size_t evaluated = 0;
    std::optional<GaussianFit> best;
    bool budget_hit = false;

    auto try_candidate = [&](double a, double b, double hw) -> bool {
        if (evaluated >= opts.max_candidates) {
            budget_hit = true;
            return false;
        }
        if (a <= 0.0 || b <= 0.0 || hw <= 0.0) return false;
        ++evaluated;
        const BetaMF mf(a, b, target_mu - hw * target_sigma, target_mu + hw * target_sigma);
        const double err = sup_error(mf, target, lo, hi, opts.error_samples);
        if (!best || err < best->error) best = GaussianFit{mf, err, evaluated};
        return err < precision;
    };

    for (double a : opts.alphas)
        for (double b : opts.betas)
            for (double hw : opts.half_widths) {
                if (try_candidate(a, b, hw)) return GaussianFit{best->mf, best->error, evaluated};
                if (budget_hit) goto exhausted;
            }

    if (opts.refine && best) {
        const double a0 = best->mf.alpha();
        const double b0 = best->mf.beta();
        const double hw0 = (best->mf.x_max() - target_mu) / target_sigma;
        const double step_ab = 0.5 / opts.refine_steps;
        const double step_hw = 0.5 / opts.refine_steps;
        for (int i = -opts.refine_steps; i <= opts.refine_steps; ++i)
            for (int j = -opts.refine_steps; j <= opts.refine_steps; ++j)
                for (int k = -opts.refine_steps; k <= opts.refine_steps; ++k) {
                    if (try_candidate(a0 + i * step_ab, b0 + j * step_ab, hw0 + k * step_hw))
                        return GaussianFit{best->mf, best->error, evaluated};
                    if (budget_hit) goto exhausted;
                }
    }

exhausted:
    std::ostringstream msg;
    msg << "FitNotFound: no Beta within precision " << precision << " after " << evaluated << " candidates";
    if (best) msg << " (best error " << best->error << ")";
    throw FitNotFound(msg.str(), best ? best->error : std::numeric_limits<double>::infinity());
}

// ---------------------------------------------------------------------------
// Linguistic term banks

enum class BankFamily { triangular, trapezoidal, gaussian, beta, it2beta };

/// How the two IT2 centers are derived from a term's base center.
enum class CenterMode { symmetric, literal };

inline std::string to_string(BankFamily f) {
    switch (f) {
        case BankFamily::triangular: return "triangular";
        case BankFamily::trapezoidal: return "trapezoidal";
        case BankFamily::gaussian: return "gaussian";
        case BankFamily::beta: return "beta";
        case BankFamily::it2beta: return "it2beta";
    }
    return "?";
}

inline BankFamily parse_bank_family(const std::string& s) {
    if (s == "triangular") return BankFamily::triangular;
    if (s == "trapezoidal") return BankFamily::trapezoidal;
    if (s == "gaussian") return BankFamily::gaussian;
    if (s == "beta") return BankFamily::beta;
    if (s == "it2beta") return BankFamily::it2beta;
    throw InvalidParameter("unknown membership family '" + s + "'");
}

inline std::string to_string(CenterMode m) { return m == CenterMode::literal ? "literal" : "symmetric"; }

inline CenterMode parse_center_mode(const std::string& s) {
    if (s == "symmetric") return CenterMode::symmetric;
    if (s == "literal") return CenterMode::literal;
    throw InvalidParameter("unknown center mode '" + s + "'");
}

struct BankSpec {
    BankFamily family = BankFamily::it2beta;
    int terms = 3;
    double it2_spread = 0.1;
    double alpha = 2.0;
    double beta = 2.0;
    CenterMode center_mode = CenterMode::symmetric;

    void validate() const {
        detail::require(terms >= 1, "bank: term count must be at least 1");
        detail::require(it2_spread >= 0.0 && std::isfinite(it2_spread), "bank: it2 spread must be non-negative");
        detail::require(alpha > 0.0 && beta > 0.0, "bank: alpha and beta must be positive");
    }

    bool interval_valued() const noexcept { return family == BankFamily::it2beta; }
};

using BankTerm = std::variant<MembershipFunction, IT2BetaMF>;

/// Ordered terms covering [0, 1]; each term yields a grade interval.
class LinguisticBank {
public:
    LinguisticBank(std::vector<BankTerm> terms, std::vector<double> centers)
        : terms_(std::move(terms)), centers_(std::move(centers)) {
        detail::require(!terms_.empty() && terms_.size() == centers_.size(), "bank: needs at least one term");
    }

    std::size_t size() const noexcept { return terms_.size(); }
    const std::vector<BankTerm>& terms() const noexcept { return terms_; }
    const std::vector<double>& centers() const noexcept { return centers_; }

    GradeInterval grade(std::size_t term, double v) const {
        return std::visit(
            [v](const auto& t) -> GradeInterval {
                using T = std::decay_t<decltype(t)>;
                if constexpr (std::is_same_v<T, IT2BetaMF>) {
                    return t(v);
                } else {
                    const double g = eval_mf(t, v);
                    return {g, g};
                }
            },
            terms_[term]);
    }

private:
    std::vector<BankTerm> terms_;
    std::vector<double> centers_;
};

/// M terms with centers (j + 0.5) / M and width 2 / M.
inline LinguisticBank build_bank(const BankSpec& spec) {
    spec.validate();
    const int m = spec.terms;
    const double width = 2.0 / m;
    std::vector<BankTerm> terms;
    std::vector<double> centers;
    terms.reserve(m);
    for (int j = 0; j < m; ++j) {
        const double c = (j + 0.5) / m;
        centers.push_back(c);
        switch (spec.family) {
            case BankFamily::triangular:
                terms.emplace_back(MembershipFunction{Triangular(c - width / 2, c + width / 2)});
                break;
            case BankFamily::trapezoidal:
                terms.emplace_back(
                    MembershipFunction{Trapezoidal(c - width / 2, c - width / 8, c + width / 8, c + width / 2)});
                break;
            case BankFamily::gaussian:
                terms.emplace_back(MembershipFunction{Gaussian(c, width / 4)});
                break;
            case BankFamily::beta:
                terms.emplace_back(MembershipFunction{BetaMF::from_center(c, width, spec.alpha, spec.beta)});
                break;
            case BankFamily::it2beta: {
                const BetaMF base = BetaMF::from_center(c, width, spec.alpha, spec.beta);
                terms.emplace_back(spec.center_mode == CenterMode::literal ? IT2BetaMF::literal(base)
                                                                           : IT2BetaMF::symmetric(base, spec.it2_spread));
                break;
            }
        }
    }
    return LinguisticBank(std::move(terms), std::move(centers));
}

inline LinguisticBank build_bank(int terms, BankFamily family, double it2_spread) {
    BankSpec spec;
    spec.terms = terms;
    spec.family = family;
    spec.it2_spread = it2_spread;
    return build_bank(spec);
}

}  // namespace it2near
