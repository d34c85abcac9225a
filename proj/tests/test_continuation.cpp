#include <cmath>

#include <Eigen/SparseLU>
#include <gtest/gtest.h>

#include "support.hpp"

using namespace lpdcm;
using lpdcm::testing::sample;
using lpdcm::testing::translated_sphere_spec;
using lpdcm::testing::two_plus_x3_squared;

namespace {

ProblemSpec constant_spec(int k, double p, double q, double phi)
{
    ProblemSpec s;
    s.k = k;
    s.p = p;
    s.q = q;
    s.phi = AmbientFunction{ConstantFn{phi}};
    return s;
}

ProblemSpec eigen_spec(AmbientFunction phi)
{
    ProblemSpec s;
    s.k = 1;
    s.p = 2;
    s.q = 2;
    s.phi = std::move(phi);
    return s;
}

const std::vector<double> kEps{0.4, 0.2, 0.1, 0.05, 0.025, 0.0125};

// Principal value of the limiting linear problem (Delta_h + 2) v = gamma phi v, by shifted
// inverse iteration. At u = 1 with k = 1, p = q = 2 the Jacobian is Delta_h + 2 - phi, i.e. the
// shift sigma = 1 is built in.
double linear_eigenvalue(const SphericalGrid& g, const ScalarField& phi)
{
    ProblemSpec s = eigen_spec(AmbientFunction{ConstantFn{1.0}});
    const SparseMatrix J = linearize(ScalarField(g, 1.0), s, phi);
    Eigen::SparseLU<SparseMatrix> lu;
    lu.compute(J);
    Eigen::VectorXd x = Eigen::VectorXd::Ones(g.size());
    const Eigen::Map<const Eigen::VectorXd> f(phi.values.data(), g.size());
    double lambda = 0.0;
    for (int it = 0; it < 200; ++it) {
        const Eigen::VectorXd y = lu.solve(f.cwiseProduct(x));
        const double next = 1.0 + x.squaredNorm() / y.dot(x);
        x = y / y.norm();
        if (std::abs(next - lambda) < 1e-15)
            break;
        lambda = next;
    }
    return lambda;
}

} // namespace

TEST(Newton, ExactSolutionNeedsNoIteration)
{
    const SphericalGrid g(16);
    const ProblemSpec s = constant_spec(1, 3, 1, 2.0);
    const NewtonResult r = newton_solve(ScalarField(g, 1.0), s, discretize_phi(s, g));
    EXPECT_LE(r.stats.iterations, 1);
    EXPECT_NEAR(max_abs_diff(r.u, ScalarField(g, 1.0)), 0.0, 1e-12);
}

TEST(Newton, ConvergesFromPerturbedConstant)
{
    const SphericalGrid g(16);
    const ProblemSpec s = constant_spec(1, 3, 1, 2.0);
    const NewtonResult r = newton_solve(ScalarField(g, 1.1), s, discretize_phi(s, g));
    EXPECT_LE(r.stats.iterations, 6);
    EXPECT_LE(max_abs_diff(r.u, ScalarField(g, 1.0)), 1e-10);
    EXPECT_LE(r.stats.residual_inf, r.stats.effective_tol);
    // quadratic convergence: each residual is much below the previous one near the end
    const auto& h = r.stats.history;
    ASSERT_GE(h.size(), 3u);
    EXPECT_LT(h[h.size() - 2], 1e-2 * h[h.size() - 3]);
}

TEST(Newton, ManufacturedFromPerturbation)
{
    const SphericalGrid g(32);
    const ProblemSpec s = translated_sphere_spec();
    const ScalarField exact = eval_ambient(std::get<ManufacturedPhi>(s.phi).support, g);
    const ScalarField phi = discretize_phi(s, g);
    ScalarField u0 = exact;
    const ScalarField bump = sample(g, [](double, double y, double z) { return 0.02 * y + 0.01 * z * z; });
    for (int idx = 0; idx < g.size(); ++idx)
        u0[idx] += bump[idx];
    const NewtonResult r = newton_solve(u0, s, phi);
    EXPECT_LE(r.stats.residual_inf, r.stats.effective_tol);
    EXPECT_LT(max_abs_diff(r.u, exact), 5e-3);
}

TEST(Newton, ConeExitAndNoConvergence)
{
    const SphericalGrid g(16);
    const ProblemSpec s = constant_spec(1, 3, 1, 2.0);
    const ScalarField phi = discretize_phi(s, g);
    ScalarField spike(g, 1.0);
    spike[g.index(8, 5)] = 3.0;
    EXPECT_THROW(newton_solve(spike, s, phi), ConeExitError);
    try {
        newton_solve(spike, s, phi);
    }
    catch (const ConeExitError& e) {
        EXPECT_EQ(e.node(), g.index(8, 5));
    }

    NewtonSettings one;
    one.max_iter = 1;
    EXPECT_THROW(newton_solve(ScalarField(g, 1.1), s, phi, one), NoConvergenceError);
    try {
        newton_solve(ScalarField(g, 1.1), s, phi, one);
    }
    catch (const NoConvergenceError& e) {
        EXPECT_EQ(e.stats().iterations, 1);
        EXPECT_EQ(e.last_iterate().size(), g.size());
    }
    one.max_iter = 0;
    EXPECT_THROW(newton_solve(ScalarField(g, 1.1), s, phi, one), ArgumentError);
}

TEST(Continuation, ConstantDataGivesClosedForm)
{
    // u = (C_n^k / phi)^{1/(p-q)}
    for (auto [k, p, q, phi] : {std::tuple{1, 3.0, 1.0, 4.0}, std::tuple{2, 4.0, 2.0, 0.5}, std::tuple{1, 2.5, 0.5, 3.0}}) {
        const SphericalGrid g(16);
        const ProblemSpec s = constant_spec(k, p, q, phi);
        const ContinuationResult r = continuation_solve(s, g);
        const double want = std::pow(s.binom() / phi, 1.0 / (p - q));
        EXPECT_LE(max_abs_diff(r.u, ScalarField(g, want)), 1e-8) << "k=" << k << " p=" << p;
    }
}

TEST(Continuation, NonconstantDataRespectsMaximumPrinciple)
{
    const SphericalGrid g(32);
    ProblemSpec s;
    s.k = 1;
    s.p = 4;
    s.q = 1;
    s.phi = two_plus_x3_squared();
    const ContinuationResult r = continuation_solve(s, g);
    EXPECT_GE(r.u.min(), std::cbrt(2.0 / 3.0) - 1e-6);
    EXPECT_LE(r.u.max(), 1.0 + 1e-6);
    // smaller where phi is larger: poles below equator
    EXPECT_LT(r.u.at(0, 0), r.u.at(15, 0));
}

TEST(Continuation, TraceInvariants)
{
    const SphericalGrid g(32);
    const ProblemSpec s = translated_sphere_spec();
    int observed = 0;
    const ContinuationResult r = continuation_solve(s, g, {}, [&](double t, const ScalarField& u, const ScalarField& phi_t) {
        ++observed;
        EXPECT_GE(t, 0.0);
        EXPECT_LE(t, 1.0);
        EXPECT_LE(residual_measure(residual(u, s, phi_t), u, s), 1e-8);
    });
    const auto& steps = r.trace.steps;
    ASSERT_GE(steps.size(), 2u);
    EXPECT_EQ(static_cast<int>(steps.size()), observed);
    EXPECT_EQ(steps.front().param, 0.0);
    EXPECT_EQ(steps.back().param, 1.0);
    for (std::size_t i = 0; i < steps.size(); ++i) {
        if (i > 0) {
            EXPECT_GT(steps[i].param, steps[i - 1].param);
        }
        EXPECT_GT(steps[i].min_eig_W, 0.0);
        EXPECT_LE(steps[i].residual_inf, steps[i].effective_tol);
        EXPECT_LE(steps[i].min_u, steps[i].max_u);
    }
    EXPECT_EQ(r.trace.param, ContinuationTrace::Param::t);
}

TEST(Continuation, StallWhenCorrectorIsStarved)
{
    const SphericalGrid g(16);
    ContinuationSettings cs;
    cs.newton.max_iter = 1;
    try {
        continuation_solve(translated_sphere_spec(), g, cs);
        FAIL() << "expected ContinuationStallError";
    }
    catch (const ContinuationStallError& e) {
        EXPECT_FALSE(e.trace().steps.empty());
        EXPECT_LT(e.trace().steps.back().param, 1.0);
    }
    cs = {};
    cs.n_steps_init = 0;
    EXPECT_THROW(continuation_solve(translated_sphere_spec(), g, cs), ArgumentError);
}

TEST(Eigen, ConstantData)
{
    const SphericalGrid g(16);
    const EigenResult r = eigen_solve(eigen_spec(AmbientFunction{ConstantFn{2.0}}), g, kEps);
    EXPECT_NEAR(r.gamma, 1.0, 1e-8);
    EXPECT_LE(max_abs_diff(r.u_normalized, ScalarField(g, 1.0)), 1e-10);
    EXPECT_EQ(r.fit_points, 4);
    EXPECT_EQ(r.sequence.size(), kEps.size());
    EXPECT_DOUBLE_EQ(r.bracket_lo, 1.0);
    EXPECT_DOUBLE_EQ(r.bracket_hi, 1.0);
}

TEST(Eigen, NonconstantData)
{
    const SphericalGrid g(16);
    const ProblemSpec s = eigen_spec(two_plus_x3_squared());
    const EigenResult r = eigen_solve(s, g, kEps);
    // bracket from the sampled phi; the staggered grid does not reach the poles
    const ScalarField phi = discretize_phi(s, g);
    EXPECT_DOUBLE_EQ(r.bracket_lo, 2.0 / phi.max());
    EXPECT_DOUBLE_EQ(r.bracket_hi, 2.0 / phi.min());
    EXPECT_GT(r.bracket_lo, 2.0 / 3.0);
    EXPECT_LT(r.bracket_hi, 1.0);
    EXPECT_GE(r.gamma, r.bracket_lo);
    EXPECT_LE(r.gamma, r.bracket_hi);
    EXPECT_DOUBLE_EQ(r.u_normalized.min(), 1.0);

    // Cauchy behaviour of gamma_eps and uniformly bounded gradient ratios
    const auto& seq = r.sequence;
    for (std::size_t i = 2; i < seq.size(); ++i)
        EXPECT_LT(std::abs(seq[i].gamma_eps - seq[i - 1].gamma_eps),
                  std::abs(seq[i - 1].gamma_eps - seq[i - 2].gamma_eps));
    double lo = seq.front().grad_ratio, hi = lo;
    for (const EigenStep& st : seq) {
        lo = std::min(lo, st.grad_ratio);
        hi = std::max(hi, st.grad_ratio);
    }
    EXPECT_LT(hi, 2.0 * lo);

    // independent oracle: the limiting linear eigenvalue on the same grid
    const double lin = linear_eigenvalue(g, phi);
    for (const EigenStep& st : seq)
        EXPECT_LT(st.gamma_eps, lin);
    EXPECT_LT(std::abs(r.gamma - lin), 0.2 * std::abs(seq.back().gamma_eps - lin));
}

TEST(Eigen, ObserverSeesEveryInnerStep)
{
    const SphericalGrid g(16);
    int calls = 0;
    double last_eps = 1.0;
    const EigenResult r = eigen_solve(eigen_spec(two_plus_x3_squared()), g, {0.2, 0.1}, {},
                                      [&](double eps, double, const ScalarField&, const ScalarField&) {
                                          ++calls;
                                          EXPECT_LE(eps, last_eps);
                                          last_eps = eps;
                                      });
    std::size_t steps = 0;
    for (const EigenStep& st : r.sequence)
        steps += st.trace.steps.size();
    EXPECT_EQ(static_cast<std::size_t>(calls), steps);
    EXPECT_EQ(r.eps_trace().param, ContinuationTrace::Param::eps);
}

TEST(Eigen, ArgumentErrors)
{
    const SphericalGrid g(8);
    const ProblemSpec s = eigen_spec(two_plus_x3_squared());
    EXPECT_THROW(eigen_solve(s, g, {}), ArgumentError);
    EXPECT_THROW(eigen_solve(s, g, {0.1, 0.2}), ArgumentError);
    EXPECT_THROW(eigen_solve(s, g, {0.1, 0.0}), ArgumentError);
    ProblemSpec bad = s;
    bad.q = 1;
    EXPECT_THROW(eigen_solve(bad, g, kEps), ArgumentError);
    bad = s;
    bad.p = bad.q = 1;
    EXPECT_THROW(eigen_solve(bad, g, kEps), ArgumentError);
}

TEST(Uniqueness, ConstantDataFromDistantSeeds)
{
    const SphericalGrid g(16);
    const ProblemSpec s = constant_spec(1, 3, 1, 2.0);
    const UniquenessReport r = uniqueness_probe(s, g, {ScalarField(g, 0.7), ScalarField(g, 1.4)});
    ASSERT_TRUE(r.complete);
    EXPECT_FALSE(r.normalized);
    EXPECT_LE(r.max_discrepancy, 1e-9);
    for (const SeedOutcome& o : r.seeds)
        EXPECT_LE(max_abs_diff(o.solution, ScalarField(g, 1.0)), 1e-9);
}

TEST(Uniqueness, ManufacturedSeeds)
{
    const SphericalGrid g(32);
    const ProblemSpec s = translated_sphere_spec();
    const UniquenessReport r =
        uniqueness_probe(s, g,
                         {sample(g, [](double x, double y, double) { return 1 + 0.3 * x + 0.05 * y; }),
                          sample(g, [](double x, double y, double) { return 1 + 0.3 * x - 0.05 * y; })});
    ASSERT_TRUE(r.complete);
    EXPECT_LE(r.max_discrepancy, 1e-8);
    EXPECT_EQ(r.discrepancy[0][1], r.discrepancy[1][0]);
}

TEST(Uniqueness, EigenCaseComparesNormalizedSolutions)
{
    const SphericalGrid g(16);
    ProblemSpec s = eigen_spec(two_plus_x3_squared());
    s.epsilon = 0.05;
    const ScalarField u = continuation_solve(s, g).u;
    const UniquenessReport r = uniqueness_probe(s, g, {u, scaled(u, 3.0)});
    ASSERT_TRUE(r.complete);
    EXPECT_TRUE(r.normalized);
    EXPECT_LE(r.max_discrepancy, 1e-8);
    EXPECT_NEAR(r.seeds[0].gamma_eps, std::pow(u.min(), 0.05), 1e-10);
}

TEST(Uniqueness, FailedSeedIsReported)
{
    const SphericalGrid g(16);
    const ProblemSpec s = constant_spec(1, 3, 1, 2.0);
    ScalarField bad(g, 1.0);
    bad[g.index(4, 4)] = 5.0;
    const UniquenessReport r = uniqueness_probe(s, g, {ScalarField(g, 1.0), bad});
    EXPECT_FALSE(r.complete);
    EXPECT_FALSE(r.seeds[1].converged);
    EXPECT_FALSE(r.seeds[1].error.empty());
    EXPECT_TRUE(std::isnan(r.discrepancy[0][1]));
}

TEST(Uniqueness, ImpliedPhiReproducesManufacturedData)
{
    const SphericalGrid g(32);
    const ProblemSpec s = translated_sphere_spec();
    const ScalarField exact = eval_ambient(std::get<ManufacturedPhi>(s.phi).support, g);
    const ScalarField phi = discretize_phi(s, g);
    const ScalarField implied = implied_phi(exact, s);
    // implied phi uses the discrete operator, the manufactured one is analytic: O(h) at the poles
    EXPECT_LT(max_abs_diff(implied, phi), 10 * g.h() * phi.max_abs());
    EXPECT_LE(residual_measure(residual(exact, s, implied), exact, s), 1e-10);
}
