#include "lambdalab/errors.hpp"
#include "lambdalab/markov.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace lambdalab;

namespace {

MarkovEvolution gumbel_on(const CascadeSystem& sys, int max_t) {
    return MarkovEvolution(build_lambda(LambdaProfile::gumbel(1.0), sys), max_t);
}

}  // namespace

TEST_SUITE("markov") {

TEST_CASE("W_t e_0 spot values") {
    const CascadeSystem sys = build_shift_cascade({-10, 10});
    const MarkovEvolution ev = gumbel_on(sys, 6);
    const HVector e0 = sys.basis_vector(sys.index_of_age(0));
    CHECK(std::abs(markov_step(ev, e0, 1).norm() - oracle::w1_e0) <= 1e-9);
    CHECK(std::abs(markov_step(ev, e0, 2).norm() - oracle::w2_e0) <= 1e-9);
    const HVector w1 = markov_step(ev, e0, 1);
    CHECK(w1[static_cast<Eigen::Index>(sys.index_of_age(1))] == doctest::Approx(oracle::w1_e0).epsilon(1e-14));
}

TEST_CASE("log weights are nonpositive and the table matches on-the-fly values") {
    const CascadeSystem sys = build_shift_cascade({-6, 6});
    const MarkovEvolution ev = gumbel_on(sys, 2);
    for (int n = -6; n <= 2; ++n) {
        CHECK(ev.log_weight(n, 2) <= 0.0);
        CHECK(ev.log_weight(n, 4) == doctest::Approx(ev.lambda().log_at_age(n + 4) - ev.lambda().log_at_age(n)));
    }
    CHECK_THROWS_AS(ev.log_weight(5, 2), MarginError);
}

TEST_CASE("negative t is rejected: no group") {
    const CascadeSystem sys = build_shift_cascade({-4, 4});
    const MarkovEvolution ev = gumbel_on(sys, 2);
    try {
        markov_step(ev, sys.basis_vector(0), -1);
        FAIL("expected PreconditionError");
    } catch (const PreconditionError& e) {
        CHECK(std::string(e.what()).find("group") != std::string::npos);
    }
    CHECK_THROWS_AS(markov_step(ev, sys.basis_vector(sys.index_of_age(4)), 1), MarginError);
}

TEST_CASE("semigroup law W_s W_t = W_{s+t}") {
    std::mt19937_64 rng(77);
    const CascadeSystem sys = build_shift_cascade({-8, 8});
    const MarkovEvolution ev = gumbel_on(sys, 5);
    for (int trial = 0; trial < 10; ++trial) {
        const HVector rho = random_interior_vector(sys, 3, rng);
        const HVector a = markov_step(ev, markov_step(ev, rho, 1), 2);
        const HVector b = markov_step(ev, rho, 3);
        CHECK((a.coeffs() - b.coeffs()).norm() <= 1e-14 * (1.0 + b.norm()));
    }
}

TEST_CASE("Lyapunov decay on shift [-10, 10]") {
    std::mt19937_64 rng(20);
    const CascadeSystem sys = build_shift_cascade({-10, 10});
    const MarkovEvolution ev = gumbel_on(sys, 6);
    for (int s = 0; s < 20; ++s) {
        const LyapunovTrace tr = lyapunov_trace(ev, random_interior_vector(sys, 6, rng), 6);
        CHECK(tr.monotone);
        CHECK(tr.forms_agree);
        CHECK(tr.max_form_deviation <= 1e-10);
        CHECK(tr.ratio_to_zero <= 1e-3);
    }
    const LyapunovTrace e0 = lyapunov_trace(ev, sys.basis_vector(sys.index_of_age(0)), 6);
    CHECK(e0.norms[6] > 0.0);
    CHECK(e0.lyapunov_form[1] == doctest::Approx(oracle::w1_e0 * oracle::w1_e0).epsilon(1e-13));
}

TEST_CASE("baker trace also records the minimum cell of 1 + W_t rho") {
    const CascadeSystem sys = build_baker_cascade(2);
    const MarkovEvolution ev = gumbel_on(sys, 2);
    const LyapunovTrace tr = lyapunov_trace(ev, sys.basis_vector(*sys.index_of_subset(std::set<int>{0})), 2);
    REQUIRE(tr.min_cells.size() == 3);
    CHECK(tr.min_cells[0] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(tr.min_cells[1] == doctest::Approx(oracle::y_minus_u).epsilon(1e-13));
}

TEST_CASE("positivity probe on 1 + chi_{0}") {
    const CascadeSystem sys = build_baker_cascade(2);
    const MarkovEvolution ev = gumbel_on(sys, 2);
    const std::size_t chi0 = *sys.index_of_subset(std::set<int>{0});
    const GridDensity rho = walsh_to_grid(sys, BlockVector{1.0, sys.basis_vector(chi0)});
    CHECK(rho.min() == 0.0);
    CHECK(rho.mean() == doctest::Approx(1.0));
    const PositivityReport r = positivity_probe(ev, rho, 1);
    CHECK(r.min_cell == doctest::Approx(oracle::y_minus_u).epsilon(1e-13));
    CHECK(r.min_cell >= 0.82);
    CHECK_FALSE(r.negative);
    CHECK_THROWS_AS(positivity_probe(gumbel_on(build_shift_cascade({-3, 3}), 1), rho, 1), PreconditionError);
}

TEST_CASE("positivity probe reports signed inputs instead of rejecting them") {
    const CascadeSystem sys = build_baker_cascade(2);
    const MarkovEvolution ev = gumbel_on(sys, 1);
    const std::size_t chi0 = *sys.index_of_subset(std::set<int>{0});
    const GridDensity rho = walsh_to_grid(sys, BlockVector{1.0, sys.basis_vector(chi0) * 2.0});
    const PositivityReport r = positivity_probe(ev, rho, 1);
    CHECK(r.input_min == doctest::Approx(-1.0));
    CHECK(r.min_cell == doctest::Approx(1.0 - 2.0 * oracle::w1_e0).epsilon(1e-13));
}

TEST_CASE("positivity probe on 1 + chi_{0} + chi_{1}") {
    const CascadeSystem sys = build_baker_cascade(2);
    const MarkovEvolution ev = gumbel_on(sys, 1);
    HVector f = sys.basis_vector(*sys.index_of_subset(std::set<int>{0})) +
                sys.basis_vector(*sys.index_of_subset(std::set<int>{1}));
    const PositivityReport r = positivity_probe(ev, walsh_to_grid(sys, BlockVector{1.0, f}), 1);
    CHECK(r.input_min == doctest::Approx(-1.0));
    // brute-force cell evaluation: 1 - lambda(1)/lambda(0) - lambda(2)/lambda(1)
    CHECK(r.min_cell == doctest::Approx(oracle::positivity_two_term).epsilon(1e-12));
}

TEST_CASE("forward contraction versus backward blow-up") {
    const CascadeSystem sys = build_baker_cascade(3);
    const MarkovEvolution ev = gumbel_on(sys, 1);
    const AsymmetryReport r = asymmetry_probe(ev, sys.basis_vector(0), 1);
    CHECK(r.forward_max_factor <= 1.0);
    CHECK(r.backward_factor == doctest::Approx(oracle::backward_factor_m3).epsilon(1e-12));
    CHECK(r.backward_argmax_age == 3);
    REQUIRE(r.forward_norm_ratio.has_value());
    CHECK(*r.forward_norm_ratio <= 1.0);
}

}  // TEST_SUITE
