#include "lambdalab/cascade.hpp"
#include "lambdalab/errors.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <map>
#include <numeric>
#include <random>

using namespace lambdalab;

namespace {

HVector random_on(const CascadeSystem& sys, const std::vector<std::size_t>& labels, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sys.dim()));
    for (std::size_t k : labels) {
        c[static_cast<Eigen::Index>(k)] = g(rng);
    }
    return HVector(sys.basis_id(), c);
}

}  // namespace

TEST_SUITE("cascade") {

TEST_CASE("shift cascade: labels, steps and the open boundary") {
    const CascadeSystem sys = build_shift_cascade({-3, 3});
    REQUIRE(sys.dim() == 7);
    const std::size_t e0 = sys.index_of_age(0);
    CHECK(sys.label_name(e0) == "e0");
    CHECK(sys.age(*sys.advance(e0, 2)) == 2);
    CHECK(sys.age(*sys.retreat(e0, 3)) == -3);
    CHECK_FALSE(sys.advance(sys.index_of_age(3), 1).has_value());
    CHECK(sys.interior_margin(2).size() == 5);

    const HVector top = sys.basis_vector(sys.index_of_age(2));
    CHECK_NOTHROW(koopman_power(sys, top, 1));
    try {
        koopman_power(sys, top, 2);
        FAIL("expected MarginError");
    } catch (const MarginError& e) {
        CHECK(std::string(e.what()).find("e2") != std::string::npos);
    }
}

TEST_CASE("window preconditions") {
    CHECK_THROWS_AS(build_shift_cascade({0, 3}), PreconditionError);
    CHECK_THROWS_AS(build_shift_cascade({-1, 0}), PreconditionError);
    CHECK_NOTHROW(build_shift_cascade({-1, 1}));
}

TEST_CASE("baker cascade: Walsh labels graded by the largest coordinate") {
    const CascadeSystem sys = build_baker_cascade(2);
    CHECK(sys.dim() == 31);
    for (int n = -2; n <= 2; ++n) {
        CHECK(sys.labels_of_age(n).size() == (std::size_t{1} << (n + 2)));
    }
    const std::size_t s = *sys.index_of_subset(std::set<int>{-1, 0});
    CHECK(sys.label_name(s) == "{-1,0}");
    CHECK(sys.age(s) == 0);
    CHECK(sys.label_name(*sys.advance(s, 1)) == "{0,1}");
    CHECK(sys.label_name(*sys.retreat(s, 1)) == "{-2,-1}");
    CHECK_FALSE(sys.retreat(s, 2).has_value());
    CHECK_FALSE(sys.index_of_subset(std::set<int>{}).has_value());
}

TEST_CASE("baker size cap") {
    CHECK_NOTHROW(build_baker_cascade(6));
    try {
        build_baker_cascade(7);
        FAIL("expected PreconditionError");
    } catch (const PreconditionError& e) {
        CHECK(std::string(e.what()).find("m exceeds desk-scale cap 6") != std::string::npos);
    }
    CHECK_THROWS_AS(build_baker_cascade(0), PreconditionError);
}

TEST_CASE("covariance is exact on shift and baker systems") {
    const CascadeSystem shift = build_shift_cascade({-8, 8});
    for (int t = 0; t <= 3; ++t) {
        CHECK(verify_covariance(shift, t) == 0.0);
    }
    for (int m = 1; m <= 3; ++m) {
        const CascadeSystem baker = build_baker_cascade(m);
        for (int t = 0; t <= 3; ++t) {
            CHECK(verify_covariance(baker, t) == 0.0);
        }
    }
}

TEST_CASE("dense time operator reproduces the structural covariance") {
    const CascadeSystem sys = build_baker_cascade(2);
    const Eigen::MatrixXd u = sys.koopman_power_matrix(1).matrix();
    const Eigen::MatrixXd t = sys.time_operator().matrix();
    const Eigen::MatrixXd lhs = u.transpose() * t * u;
    for (std::size_t k : sys.interior_margin(1)) {
        const auto i = static_cast<Eigen::Index>(k);
        CHECK(lhs(i, i) == sys.age(k) + 1);
    }
}

TEST_CASE("imprimitivity: pushforward and pullback forms are exact") {
    for (const CascadeSystem& sys : {build_shift_cascade({-5, 5}), build_baker_cascade(2)}) {
        for (int t = 1; t <= 2; ++t) {
            for (const std::set<int>& delta : {std::set<int>{0}, std::set<int>{-1, 1}, std::set<int>{-2}}) {
                const ImprimitivityReport r = verify_imprimitivity(sys, delta, t);
                CHECK(r.pushforward_deviation == 0.0);
                CHECK(r.pullback_deviation == 0.0);
                CHECK(r.literal_minus_deviation == 0.0);
                CHECK(r.literal_plus_deviation > 0.0);
            }
        }
    }
}

TEST_CASE("Walsh <-> grid round trip and the constant density") {
    std::mt19937_64 rng(5);
    for (int m = 1; m <= 4; ++m) {
        const CascadeSystem sys = build_baker_cascade(m);
        std::vector<std::size_t> all(sys.dim());
        std::iota(all.begin(), all.end(), std::size_t{0});
        const BlockVector v{0.7, random_on(sys, all, rng)};
        const BlockVector back = grid_to_walsh(sys, walsh_to_grid(sys, v));
        CHECK(back.equilibrium == doctest::Approx(0.7).epsilon(1e-14));
        CHECK((back.fluctuation.coeffs() - v.fluctuation.coeffs()).norm() < 1e-13);

        const GridDensity one = walsh_to_grid(sys, BlockVector{1.0, sys.zero_vector()});
        CHECK(one.min() == 1.0);
        CHECK(one.mean() == 1.0);
    }
}

TEST_CASE("Walsh functions are orthonormal on the grid") {
    const CascadeSystem sys = build_baker_cascade(2);
    const auto a = walsh_to_grid(sys, BlockVector{0.0, sys.basis_vector(3)});
    const auto b = walsh_to_grid(sys, BlockVector{0.0, sys.basis_vector(17)});
    double aa = 0.0;
    double ab = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        aa += a.values[i] * a.values[i];
        ab += a.values[i] * b.values[i];
    }
    CHECK(aa / static_cast<double>(a.values.size()) == doctest::Approx(1.0));
    CHECK(ab == 0.0);
}

TEST_CASE("U acts on grid densities as composition with the inverse baker map") {
    std::mt19937_64 rng(9);
    const int m = 3;
    const CascadeSystem sys = build_baker_cascade(m);
    const HVector v = random_on(sys, sys.interior_margin(1), rng);
    const GridDensity before = walsh_to_grid(sys, BlockVector{0.0, v});
    const GridDensity after = walsh_to_grid(sys, BlockVector{0.0, koopman_power(sys, v, 1)});

    std::map<std::uint32_t, std::size_t> cell_of;
    const int nx = 1 << before.a;
    const int ny = 1 << before.b;
    for (int iy = 0; iy < ny; ++iy) {
        for (int ix = 0; ix < nx; ++ix) {
            cell_of[cell_digits(m, ix, iy)] = static_cast<std::size_t>(iy * nx + ix);
        }
    }
    for (const auto& [digits, cell] : cell_of) {
        // coordinate i of the preimage carries digit i + 1 of the image
        const std::uint32_t pre = digits >> 1;
        CHECK(after.values[cell] == doctest::Approx(before.values[cell_of.at(pre)]).epsilon(1e-12));
    }
}

TEST_CASE("walsh_sign is the product of Rademacher signs") {
    CHECK(walsh_sign(0b101u, 0b000u) == 1);
    CHECK(walsh_sign(0b101u, 0b001u) == -1);
    CHECK(walsh_sign(0b101u, 0b101u) == 1);
}

TEST_CASE("JSON export round-trips and is checked on import") {
    for (const CascadeSystem& sys : {build_shift_cascade({-4, 3}), build_baker_cascade(2)}) {
        const nlohmann::json doc = to_json(sys);
        CHECK(doc["basis_labels"].size() == sys.dim());
        const CascadeSystem back = cascade_from_json(doc);
        CHECK(back.label_names() == sys.label_names());
        CHECK(back.ages() == sys.ages());

        nlohmann::json bad = doc;
        bad["U"][0][0] = 5.0;
        CHECK_THROWS_AS(cascade_from_json(bad), Error);
    }
}

}  // TEST_SUITE
