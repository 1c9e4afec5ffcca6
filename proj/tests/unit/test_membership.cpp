#include <gtest/gtest.h>

#include <random>

#include "it2near/membership.hpp"

using namespace it2near;

TEST(BetaMF, PeakAndSupport) {
    const BetaMF b(1, 1, 0, 1);
    EXPECT_DOUBLE_EQ(b(0.5), 1.0);
    EXPECT_NEAR(b(0.25), 0.75, 1e-15);
    EXPECT_EQ(BetaMF(2, 3, 0, 1)(1.0), 0.0);
    EXPECT_EQ(b(0.0), 0.0);
    EXPECT_EQ(b(-0.2), 0.0);
    EXPECT_EQ(b(1.3), 0.0);
}

TEST(BetaMF, MatchesParabolaForUnitShapes) {
    const BetaMF b(1, 1, 0, 1);
    for (int i = 0; i <= 100; ++i) {
        const double x = i / 100.0;
        EXPECT_NEAR(b(x), 4 * x * (1 - x), 1e-12) << x;
    }
}

TEST(BetaMF, CenterHasGradeOne) {
    const BetaMF b(2, 5, -1, 3);
    EXPECT_NEAR(b.center(), (2 * 3 + 5 * -1) / 7.0, 1e-15);
    EXPECT_NEAR(b(b.center()), 1.0, 1e-15);
    EXPECT_DOUBLE_EQ(b.width(), 4.0);
}

TEST(BetaMF, RejectsInvalidParameters) {
    EXPECT_THROW(BetaMF(0, 1, 0, 1), InvalidParameter);
    EXPECT_THROW(BetaMF(1, -1, 0, 1), InvalidParameter);
    EXPECT_THROW(BetaMF(1, 1, 1, 1), InvalidParameter);
    EXPECT_THROW(BetaMF(1, 1, 2, 1), InvalidParameter);
}

TEST(BetaCentered, Examples) {
    EXPECT_DOUBLE_EQ(eval_beta_centered(0.5, 1, 1, 1, 0.5), 1.0);
    EXPECT_NEAR(eval_beta_centered(0.5, 1, 1, 1, 0.25), 0.75, 1e-15);
    EXPECT_EQ(eval_beta_centered(0.5, 1, 1, 1, 1.1), 0.0);
}

TEST(BetaCentered, AgreesWithSupportForm) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> shape(0.2, 6), pos(-2, 2), width(0.05, 3), u(0, 1);
    for (int i = 0; i < 1000; ++i) {
        const double a = shape(rng), b = shape(rng), c = pos(rng), w = width(rng);
        const auto mf = BetaMF::from_center(c, w, a, b);
        EXPECT_NEAR(mf.center(), c, 1e-12);
        const double x = mf.x_min() - 0.1 * w + 1.2 * w * u(rng);
        EXPECT_NEAR(mf(x), eval_beta_centered(c, w, a, b, x), 1e-12);
    }
}

TEST(Triangular, KnotsAndLimbs) {
    const Triangular t(0, 2);
    EXPECT_EQ(t(0), 0.0);
    EXPECT_EQ(t(1), 1.0);
    EXPECT_EQ(t(2), 0.0);
    EXPECT_DOUBLE_EQ(t(0.5), 0.5);
    EXPECT_DOUBLE_EQ(t(1.5), 0.5);
    EXPECT_EQ(t(3), 0.0);
    EXPECT_THROW(Triangular(1, 1), InvalidParameter);
}

TEST(Trapezoidal, KnotsAndPlateau) {
    const Trapezoidal t(0, 1, 2, 4);
    EXPECT_EQ(t(0), 0.0);
    EXPECT_EQ(t(1), 1.0);
    EXPECT_EQ(t(1.5), 1.0);
    EXPECT_EQ(t(2), 1.0);
    EXPECT_DOUBLE_EQ(t(3), 0.5);
    EXPECT_EQ(t(4), 0.0);
    EXPECT_DOUBLE_EQ(t(0.25), 0.25);
    EXPECT_THROW(Trapezoidal(0, 2, 1, 3), InvalidParameter);
}

TEST(Gaussian, Values) {
    const Gaussian g(0.5, 0.1);
    EXPECT_DOUBLE_EQ(g(0.5), 1.0);
    EXPECT_NEAR(g(0.6), std::exp(-0.5), 1e-15);
    EXPECT_THROW(Gaussian(0, 0), InvalidParameter);
}

TEST(GradesStayInUnitInterval, AllFamilies) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1, 2);
    const std::vector<MembershipFunction> mfs = {Triangular(0, 1), Trapezoidal(0, 0.2, 0.4, 1), Gaussian(0.3, 0.2),
                                                 BetaMF(3.5, 0.7, 0, 1)};
    for (const auto& mf : mfs)
        for (int i = 0; i < 2000; ++i) {
            const double g = eval_mf(mf, u(rng));
            EXPECT_GE(g, 0.0);
            EXPECT_LE(g, 1.0);
        }
}

TEST(IT2Beta, CollapsedCentersGiveSingleBeta) {
    const auto base = BetaMF::from_center(0.5, 0.5, 2, 2);
    const IT2BetaMF mf(base, 0.5, 0.5);
    for (int i = 0; i <= 100; ++i) {
        const double x = i / 100.0;
        const auto g = eval_it2(mf, x);
        EXPECT_EQ(g.lower, g.upper);
        EXPECT_NEAR(g.upper, base(x), 1e-12);
    }
}

TEST(IT2Beta, OutsideBothSupportsIsZero) {
    const auto mf = IT2BetaMF(BetaMF::from_center(0.5, 0.5, 2, 2), 0.45, 0.55);
    const auto g = mf(2.0);
    EXPECT_EQ(g.lower, 0.0);
    EXPECT_EQ(g.upper, 0.0);
}

TEST(IT2Beta, EnvelopesAtCenterAreMinAndMax) {
    const auto mf = IT2BetaMF(BetaMF::from_center(0.5, 0.5, 2, 2), 0.45, 0.55);
    const double a = eval_beta_centered(0.45, 0.5, 2, 2, 0.5);
    const double b = eval_beta_centered(0.55, 0.5, 2, 2, 0.5);
    const auto g = mf(0.5);
    EXPECT_DOUBLE_EQ(g.lower, std::min(a, b));
    EXPECT_DOUBLE_EQ(g.upper, std::max(a, b));
    EXPECT_LE(g.lower, g.upper);
}

TEST(IT2Beta, LiteralCentersKeepOrder) {
    const auto mf = IT2BetaMF::literal(BetaMF::from_center(0.3, 0.6, 3, 1.5));
    EXPECT_DOUBLE_EQ(mf.center_upper(), 0.9);
    EXPECT_DOUBLE_EQ(mf.center_lower(), 0.45);
    for (int i = -500; i <= 1500; ++i) {
        const auto g = mf(i / 1000.0);
        EXPECT_LE(g.lower, g.upper);
    }
}

TEST(IT2Beta, SymmetricCentersAreClipped) {
    const auto mf = IT2BetaMF::symmetric(BetaMF::from_center(0.95, 0.4, 2, 2), 0.1);
    EXPECT_DOUBLE_EQ(mf.center_upper(), 1.0);
    EXPECT_NEAR(mf.center_lower(), 0.855, 1e-15);
}

TEST(GaussianFit, ReachesPrecision) {
    const auto fit = gaussian_approximation_fit(0.5, 0.15, 0.05);
    EXPECT_LT(fit.error, 0.05);
    const Gaussian g(0.5, 0.15);
    double worst = 0;
    for (int i = 0; i <= 1200; ++i) {
        const double x = -0.1 + i * 1e-3;
        worst = std::max(worst, std::abs(fit.mf(x) - g(x)));
    }
    EXPECT_LT(worst, 0.05);
}

TEST(GaussianFit, VacuousPrecisionTakesFirstCandidate) {
    const auto fit = gaussian_approximation_fit(0.5, 0.15, 2.0);
    EXPECT_EQ(fit.candidates_evaluated, 1u);
    EXPECT_DOUBLE_EQ(fit.mf.alpha(), 1.0);
    EXPECT_DOUBLE_EQ(fit.mf.beta(), 1.0);
}

TEST(GaussianFit, TinyBudgetThrows) {
    GaussianFitOptions opts;
    opts.alphas = {1.0};
    opts.betas = {1.0};
    opts.half_widths = {2.0, 3.0};
    opts.refine = false;
    EXPECT_THROW(gaussian_approximation_fit(0.5, 0.15, 1e-9, opts), FitNotFound);
    opts.refine = true;
    opts.max_candidates = 2;
    try {
        gaussian_approximation_fit(0.5, 0.15, 1e-9, opts);
        FAIL() << "expected FitNotFound";
    } catch (const FitNotFound& e) {
        EXPECT_GT(e.best_error(), 0.0);
    }
}

TEST(Bank, CentersAndWidth) {
    const auto one = build_bank(1, BankFamily::beta, 0.1);
    ASSERT_EQ(one.size(), 1u);
    EXPECT_DOUBLE_EQ(one.centers()[0], 0.5);

    const auto three = build_bank(3, BankFamily::it2beta, 0.1);
    ASSERT_EQ(three.size(), 3u);
    EXPECT_NEAR(three.centers()[0], 0.1667, 1e-4);
    EXPECT_NEAR(three.centers()[1], 0.5, 1e-15);
    EXPECT_NEAR(three.centers()[2], 0.8333, 1e-4);
    const auto& t1 = std::get<IT2BetaMF>(three.terms()[1]);
    EXPECT_NEAR(t1.base().width(), 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(t1.center_upper(), 0.55, 1e-15);
    EXPECT_NEAR(t1.center_lower(), 0.45, 1e-15);
}

TEST(Bank, ZeroSpreadCollapses) {
    const auto bank = build_bank(3, BankFamily::it2beta, 0.0);
    for (int i = 0; i <= 1000; ++i)
        for (std::size_t t = 0; t < bank.size(); ++t) {
            const auto g = bank.grade(t, i / 1000.0);
            EXPECT_EQ(g.lower, g.upper);
        }
}

TEST(Bank, CoversUnitInterval) {
    for (auto family :
         {BankFamily::triangular, BankFamily::trapezoidal, BankFamily::gaussian, BankFamily::beta, BankFamily::it2beta})
        for (int m : {1, 2, 3, 5, 8}) {
            const auto bank = build_bank(m, family, 0.1);
            for (int i = 0; i <= 1000; ++i) {
                double best = 0;
                for (std::size_t t = 0; t < bank.size(); ++t) best = std::max(best, bank.grade(t, i / 1000.0).upper);
                EXPECT_GT(best, 0.0) << to_string(family) << " M=" << m << " v=" << i / 1000.0;
            }
        }
}

TEST(Bank, RejectsBadSpec) {
    BankSpec s;
    s.terms = 0;
    EXPECT_THROW(build_bank(s), InvalidParameter);
    s.terms = 2;
    s.it2_spread = -0.1;
    EXPECT_THROW(build_bank(s), InvalidParameter);
}

TEST(Bank, NameRoundTrip) {
    for (auto f :
         {BankFamily::triangular, BankFamily::trapezoidal, BankFamily::gaussian, BankFamily::beta, BankFamily::it2beta})
        EXPECT_EQ(parse_bank_family(to_string(f)), f);
    EXPECT_THROW(parse_bank_family("cauchy"), InvalidParameter);
    EXPECT_EQ(parse_center_mode("literal"), CenterMode::literal);
}
