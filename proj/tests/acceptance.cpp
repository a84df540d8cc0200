// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Reference values come from tests/oracles.hpp.

#include "lambdalab/dual_ops.hpp"
#include "lambdalab/experiment.hpp"
#include "lambdalab/markov.hpp"
#include "lambdalab/rigging.hpp"

#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

using namespace lambdalab;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

int failures = 0;

void criterion(int id, const std::string& title, double budget_s, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < budget_s;
    const bool pass = o.pass && in_time;
    failures += pass ? 0 : 1;
    std::printf("[%s] %2d %s: %s; %.3f s (limit %.0f s)%s\n", pass ? "PASS" : "FAIL", id, title.c_str(),
                o.detail.c_str(), secs, budget_s, in_time ? "" : " TOO SLOW");
    std::fflush(stdout);
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace

int main() {
    const LambdaProfile gumbel = LambdaProfile::gumbel(1.0);

    criterion(1, "covariance exactness", 1.0, [] {
        double worst = 0.0;
        int checks = 0;
        std::vector<CascadeSystem> systems{build_shift_cascade({-8, 8})};
        for (int m = 1; m <= 3; ++m) {
            systems.push_back(build_baker_cascade(m));
        }
        for (const auto& sys : systems) {
            for (int t = 0; t <= 3; ++t) {
                worst = std::max(worst, verify_covariance(sys, t));
                ++checks;
            }
        }
        return Outcome{worst == 0.0, std::to_string(checks) + " (system, t) pairs, max deviation " + num(worst)};
    });

    criterion(2, "imprimitivity", 1.0, [] {
        // (U^t)^dagger E(D + t) U^t = E(D) and U^t E(D) (U^t)^dagger = E(D + t)
        double pull = 0.0;
        double push = 0.0;
        double literal = 0.0;
        int sets = 0;
        for (const auto& sys : {build_shift_cascade({-8, 8}), build_baker_cascade(3)}) {
            const AgeWindow w = sys.window();
            for (int t = 1; t <= 2; ++t) {
                for (int a = w.lo; a <= w.hi; ++a) {
                    for (int b = a; b <= w.hi; ++b) {
                        const std::set<int> d = a == b ? std::set<int>{a} : std::set<int>{a, b};
                        const ImprimitivityReport r = verify_imprimitivity(sys, d, t);
                        pull = std::max(pull, r.pullback_deviation);
                        push = std::max(push, r.pushforward_deviation);
                        literal = std::max(literal, r.literal_minus_deviation);
                        ++sets;
                    }
                }
            }
        }
        return Outcome{pull == 0.0 && push == 0.0,
                       std::to_string(sets) + " (D, t) cases; pullback " + num(pull) + ", pushforward " + num(push) +
                           ", (U^t)^dagger E(D) U^t = E(D - t) " + num(literal)};
    });

    criterion(3, "Lyapunov decay", 1.0, [&gumbel] {
        const CascadeSystem sys = build_shift_cascade({-10, 10});
        const MarkovEvolution ev(build_lambda(gumbel, sys), 6);
        std::mt19937_64 rng(3);
        bool monotone = true;
        double worst_ratio = 0.0;
        double worst_form = 0.0;
        for (int s = 0; s < 20; ++s) {
            const LyapunovTrace tr = lyapunov_trace(ev, random_interior_vector(sys, 6, rng), 6);
            monotone = monotone && tr.monotone;
            worst_ratio = std::max(worst_ratio, tr.ratio_to_zero);
            worst_form = std::max(worst_form, tr.max_form_deviation);
        }
        const HVector e0 = sys.basis_vector(sys.index_of_age(0));
        const double w1 = markov_step(ev, e0, 1).norm();
        const double w2 = markov_step(ev, e0, 2).norm();
        const bool spots = std::abs(w1 - oracle::w1_e0) <= 1e-9 && std::abs(w2 - oracle::w2_e0) <= 1e-9;
        return Outcome{monotone && worst_ratio <= 1e-3 && worst_form <= 1e-10 && spots,
                       "20 vectors monotone=" + std::string(monotone ? "yes" : "no") + ", worst final/initial " +
                           num(worst_ratio) + ", form deviation " + num(worst_form) + ", |W1 e0| = " + num(w1) +
                           ", |W2 e0| = " + num(w2) + " (exp(1-e^2) = " + num(oracle::w2_e0) + ")"};
    });

    criterion(4, "isometry", 1.0, [&gumbel] {
        const CascadeSystem sys = build_shift_cascade({-6, 6});
        std::mt19937_64 rng(4);
        const double dev = isometry_check(build_lambda(gumbel, sys).log_diag(), sys.basis_id(), 100, rng);
        return Outcome{dev <= 1e-10, "100 samples, max relative deviation " + num(dev)};
    });

    criterion(5, "operator-web theorem", 2.0, [&gumbel] {
        const CascadeSystem sys = build_shift_cascade({-6, 6});
        const LambdaOperator lam = build_lambda(gumbel, sys);
        std::mt19937_64 rng(5);
        bool ok = true;
        std::string detail;
        for (int t = 1; t <= 2; ++t) {
            const TheoremReport r = verify_theorem(build_web(lam, t), 16, rng);
            const double i_dev = *r.parts[0].deviation;
            double min_witness = 1e300;
            bool witnesses = true;
            for (std::size_t k = 2; k <= 4; ++k) {
                witnesses = witnesses && r.parts[k].witness_difference.has_value();
                if (r.parts[k].witness_difference) {
                    min_witness = std::min(min_witness, *r.parts[k].witness_difference);
                }
            }
            const double spec = *r.parts[5].deviation;
            ok = ok && i_dev <= 1e-10 && witnesses && min_witness >= 1e-3 && spec <= 1e-8 && r.parts[5].pass;
            detail += "t=" + std::to_string(t) + ": (i) " + num(i_dev) + ", min witness " + num(min_witness) +
                      ", (vi) spectrum " + num(spec) + (t == 1 ? "; " : "");
        }
        return Outcome{ok, detail};
    });

    criterion(6, "power(1/2) classification", 2.0, [] {
        const OperatorClassReport r = classify(SingularSpectrum::power(0.5));
        const std::uint64_t K = 1000000;
        const double partial = partial_sum(SingularSpectrum::power(0.5), 4.0, K);
        const auto [lo, hi] = pseries_tail_bounds(2.0, K);
        const bool enclosed = partial + lo <= oracle::basel_minus_one && oracle::basel_minus_one <= partial + hi;
        const bool ok = r.compact == Verdict::yes && r.nuclear == Verdict::no && r.hilbert_schmidt == Verdict::no &&
                        r.powers.at(2).hilbert_schmidt == Verdict::yes && r.powers.at(4).nuclear == Verdict::yes &&
                        r.min_nuclear_power.has_value() && enclosed;
        return Outcome{ok, "min nuclear power " + (r.min_nuclear_power ? std::to_string(*r.min_nuclear_power) : "-") +
                               ", via HS square " + std::to_string(r.nuclear_power_via_hs_square.value_or(-1)) +
                               ", J^4 nuclear " + to_string(r.powers.at(4).nuclear) + ", sum lambda^4 in [" +
                               num(partial + lo) + ", " + num(partial + hi) + "] vs " + num(oracle::basel_minus_one)};
    });

    criterion(7, "Kothe nuclearity", 1.0, [] {
        const KotheReport g = kothe_nuclearity(SingularSpectrum::geometric(0.5), Rational(0), Rational(1, 2));
        const KotheReport p = kothe_nuclearity(SingularSpectrum::power(0.5), Rational(0), Rational(1, 2));
        const bool ok = g.ratio_limit == 0.5 && g.ratio_criterion && std::abs(g.series.partial_sum - 1.0) <= 1e-12 &&
                        !p.ratio_criterion && p.ratio_limit == 1.0;
        return Outcome{ok, "geometric ratio " + num(g.ratio_limit) + ", series " + num(g.series.partial_sum) +
                               "; power ratio limit " + num(p.ratio_limit) + " criterion " +
                               (p.ratio_criterion ? "holds" : "fails")};
    });

    criterion(8, "normalization", 1.0, [&gumbel] {
        const CascadeSystem sys = build_baker_cascade(2);
        const LambdaOperator lam = build_lambda(gumbel, sys);
        std::mt19937_64 rng(8);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::vector<GridDensity> grids;
        for (int s = 0; s < 50; ++s) {
            GridDensity g{3, 2, std::vector<double>(32)};
            for (double& v : g.values) {
                v = u(rng);
            }
            const double mean = g.mean();
            for (double& v : g.values) {
                v /= mean;
            }
            grids.push_back(std::move(g));
        }
        const NormalizationReport r = verify_normalization(lam, grids);
        return Outcome{r.max_mass_deviation <= 1e-12, "50 densities, max mass deviation " + num(r.max_mass_deviation)};
    });

    criterion(9, "admissibility gate", 1.0, [&gumbel] {
        const auto g = check_admissible(gumbel, -20, 20, {1, 2, 3});
        const auto l = check_admissible(LambdaProfile::logistic(), -20, 20, {1, 2, 3});
        const auto l2 = check_admissible(LambdaProfile::logistic(), -20, 20, {1, 2, 3});
        const bool ok = g.admissible() && !l.ratio_ok && !l.witnesses.empty() && l.to_json() == l2.to_json();
        return Outcome{ok, "gumbel(1) admissible " + std::string(g.admissible() ? "yes" : "no") +
                               ", logistic condition iii " + (l.ratio_ok ? "holds" : "fails") + " with " +
                               std::to_string(l.witnesses.size()) + " witnesses (first s = " +
                               (l.witnesses.empty() ? std::string("-") : std::to_string(l.witnesses.front().s)) + ")"};
    });

    criterion(10, "positivity probe (exploratory)", 1.0, [&gumbel] {
        const CascadeSystem sys = build_baker_cascade(2);
        const MarkovEvolution ev(build_lambda(gumbel, sys), 1);
        const std::size_t chi0 = *sys.index_of_subset(std::set<int>{0});
        const GridDensity rho = walsh_to_grid(sys, BlockVector{1.0, sys.basis_vector(chi0)});
        const PositivityReport r = positivity_probe(ev, rho, 1);
        const double expected = 1.0 - gumbel.value(1) / gumbel.value(0);
        const bool ok = r.min_cell >= 0.82 && std::abs(r.min_cell - expected) <= 1e-12;

        const ReportBundle b = run_experiment(parse_config(demo_config_text()));
        std::size_t swept = 0;
        for (const auto& rec : b.records) {
            if (rec.type == "positivity") {
                swept += rec.result["probes"].size();
            }
        }
        return Outcome{ok && swept > 0, "min cell " + num(r.min_cell) + " (1 - lambda(1)/lambda(0) = " +
                                            num(expected) + "), profile sweep recorded " + std::to_string(swept) +
                                            " probes"};
    });

    criterion(11, "determinism", 30.0, [] {
        const auto root = std::filesystem::temp_directory_path() / "lambdalab_acceptance";
        std::filesystem::remove_all(root);
        const ExperimentConfig cfg = parse_config(demo_config_text());
        emit_report(run_experiment(cfg), root / "a", ReportFormat::json);
        emit_report(run_experiment(cfg), root / "b", ReportFormat::json);
        const std::string a = slurp(root / "a" / "report.json");
        const std::string b = slurp(root / "b" / "report.json");
        std::filesystem::remove_all(root);
        return Outcome{!a.empty() && a == b, "two demo runs, report.json " + std::to_string(a.size()) + " bytes, " +
                                                 (a == b ? "byte-identical" : "DIFFERENT")};
    });

    std::printf("%d of 11 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
