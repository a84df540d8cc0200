// Randomized invariants. Each property draws its cases from a seeded
// generator so failures replay exactly; the seed is printed on failure.

#include "lambdalab/dual_ops.hpp"
#include "lambdalab/markov.hpp"
#include "lambdalab/rigging.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace lambdalab;

namespace {

struct Gen {
    std::mt19937_64 rng;
    explicit Gen(std::uint64_t seed) : rng(seed) {}

    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
    double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

    CascadeSystem system() {
        if (integer(0, 1) == 0) {
            return build_shift_cascade({-integer(3, 10), integer(3, 10)});
        }
        return build_baker_cascade(integer(1, 3));
    }
    // gumbel rates whose limits are certified on [-20, 20]
    LambdaProfile profile() { return LambdaProfile::gumbel(real(0.75, 3.0)); }
};

constexpr int kCases = 25;

}  // namespace

TEST_SUITE("properties") {

TEST_CASE("covariance is exact for every window and t") {
    Gen g(101);
    for (int c = 0; c < kCases; ++c) {
        const CascadeSystem sys = g.system();
        const int t = g.integer(0, sys.window().hi - sys.window().lo);
        CAPTURE(c);
        CHECK(verify_covariance(sys, t) == 0.0);
    }
}

TEST_CASE("pullback imprimitivity holds for random age sets") {
    Gen g(102);
    for (int c = 0; c < kCases; ++c) {
        const CascadeSystem sys = g.system();
        const AgeWindow w = sys.window();
        std::set<int> delta;
        for (int k = 0; k < g.integer(1, 3); ++k) {
            delta.insert(g.integer(w.lo, w.hi));
        }
        const ImprimitivityReport r = verify_imprimitivity(sys, delta, g.integer(1, 2));
        CAPTURE(c);
        CHECK(r.pullback_deviation == 0.0);
        CHECK(r.pushforward_deviation == 0.0);
    }
}

TEST_CASE("every certified gumbel rate gives a contracting, linear W_t") {
    Gen g(103);
    for (int c = 0; c < kCases; ++c) {
        const CascadeSystem sys = g.system();
        const LambdaProfile prof = g.profile();
        CAPTURE(prof.name());
        const int span = sys.window().hi - sys.window().lo;
        const int t = g.integer(0, span / 2);
        const MarkovEvolution ev(build_lambda(prof, sys), t);
        const HVector a = random_interior_vector(sys, t, g.rng);
        const HVector b = random_interior_vector(sys, t, g.rng);
        const double s = g.real(-2.0, 2.0);
        const HVector wa = markov_step(ev, a, t);
        CHECK(wa.norm() <= a.norm() * (1.0 + 1e-15));
        const HVector lin = markov_step(ev, a + b * s, t) - (wa + markov_step(ev, b, t) * s);
        CHECK(lin.norm() <= 1e-13 * (a.norm() + std::abs(s) * b.norm()));
    }
}

TEST_CASE("Lyapunov norm and quadratic form agree") {
    Gen g(104);
    for (int c = 0; c < kCases; ++c) {
        const CascadeSystem sys = g.system();
        const int max_t = g.integer(1, (sys.window().hi - sys.window().lo) / 2);
        const MarkovEvolution ev(build_lambda(g.profile(), sys), max_t);
        const LyapunovTrace tr = lyapunov_trace(ev, random_interior_vector(sys, max_t, g.rng), max_t);
        CAPTURE(c);
        CHECK(tr.monotone);
        CHECK(tr.forms_agree);
    }
}

TEST_CASE("Walsh-grid transform is an isometry up to the cell count") {
    Gen g(105);
    for (int c = 0; c < kCases; ++c) {
        const CascadeSystem sys = build_baker_cascade(g.integer(1, 4));
        std::normal_distribution<double> n(0.0, 1.0);
        Eigen::VectorXd v(static_cast<Eigen::Index>(sys.dim()));
        for (Eigen::Index k = 0; k < v.size(); ++k) {
            v[k] = n(g.rng);
        }
        const double eq = n(g.rng);
        const GridDensity grid = walsh_to_grid(sys, BlockVector{eq, HVector(sys.basis_id(), v)});
        double sq = 0.0;
        for (double x : grid.values) {
            sq += x * x;
        }
        CHECK(sq / static_cast<double>(grid.values.size()) ==
              doctest::Approx(eq * eq + v.squaredNorm()).epsilon(1e-12));
        CHECK(grid.mean() == doctest::Approx(eq).epsilon(1e-12));
    }
}

TEST_CASE("bold-Lambda preserves mass for random densities and profiles") {
    Gen g(106);
    for (int c = 0; c < kCases; ++c) {
        const int m = g.integer(1, 3);
        const CascadeSystem sys = build_baker_cascade(m);
        const LambdaOperator lam = build_lambda(g.profile(), sys);
        GridDensity d{m + 1, m, std::vector<double>(std::size_t{1} << (2 * m + 1))};
        for (double& x : d.values) {
            x = g.real(0.0, 3.0);
        }
        CHECK(verify_normalization(lam, std::vector<GridDensity>{d}).max_mass_deviation <= 1e-12);
    }
}

TEST_CASE("V_t = X_t and Z_t ~ U_bar_t for random windows, profiles and t") {
    Gen g(107);
    for (int c = 0; c < kCases; ++c) {
        const CascadeSystem sys = g.system();
        const LambdaOperator lam = build_lambda(g.profile(), sys);
        const int t = g.integer(1, std::min(3, sys.window().hi - sys.window().lo - 1));
        const TheoremReport rep = verify_theorem(build_web(lam, t), 4, g.rng);
        CAPTURE(lam.profile().name());
        CAPTURE(t);
        CHECK(rep.parts[0].pass);
        CHECK(rep.parts[1].pass);
        CHECK(rep.parts[5].pass);
    }
}

TEST_CASE("J-isometry for random positive diagonals") {
    Gen g(108);
    for (int c = 0; c < kCases; ++c) {
        std::vector<double> logs(static_cast<std::size_t>(g.integer(2, 40)));
        for (double& l : logs) {
            l = g.real(-30.0, 0.0);
        }
        CHECK(isometry_check(LogDiagonal(logs), "p", 10, g.rng) <= 1e-10);
    }
}

TEST_CASE("norm towers increase with the grade") {
    Gen g(109);
    for (int c = 0; c < kCases; ++c) {
        const CascadeSystem sys = build_shift_cascade({-g.integer(2, 6), g.integer(2, 6)});
        const LambdaOperator lam = build_lambda(g.profile(), sys);
        const TowerType type = g.integer(0, 1) == 0 ? TowerType::B : TowerType::C;
        const NormTower tower = build_tower(lam.log_diag(), sys.basis_id(), type, g.integer(2, 6), g.rng, 8);
        CHECK(tower.monotone_on_samples);
    }
}

TEST_CASE("power spectra: nuclear iff n alpha > 1, HS iff 2 n alpha > 1") {
    Gen g(110);
    for (int c = 0; c < 10; ++c) {
        // keep alpha away from the thresholds k/n
        const double alpha = std::floor(g.real(1.0, 12.0)) / 4.0 + 0.1;
        const OperatorClassReport r = classify(SingularSpectrum::power(alpha, 100000), 6);
        CAPTURE(alpha);
        for (const auto& [n, pc] : r.powers) {
            CHECK((pc.nuclear == Verdict::yes) == (n * alpha > 1.0));
            CHECK((pc.hilbert_schmidt == Verdict::yes) == (2.0 * n * alpha > 1.0));
        }
    }
}

}  // TEST_SUITE
