#pragma once
//
// Rigging norm towers generated by a positive injective diagonal operator J,
//
//   ||v||_n = ||J^{-n} v||_L ,
//
// over three grade sets: A = {1}, B = {p/(p+1)}, C = {0, 1, 2, ...}; plus
// compact / Hilbert-Schmidt / nuclear classification of singular spectra and
// the Koethe nuclearity criterion.
//

#include "lambdalab/hilbert.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace lambdalab {

// Largest log-magnitude of a coordinate of J^{-n} v that is still
// materialized. Beyond it the vector is reported outside the domain.
inline constexpr double kLogWeightCap = 700.0;

// ||J^{-n} v||_L, J given by the logs of its diagonal.
double norm_n(const HVector& v, const Rational& n, const LogDiagonal& j, double log_cap = kLogWeightCap);
double norm_n(const HVector& v, const Rational& n, const HOperator& j, double log_cap = kLogWeightCap);

// J^{-n} v as a vector, with the same domain guard as norm_n.
HVector inverse_power_apply(const HVector& v, const Rational& n, const LogDiagonal& j, double log_cap = kLogWeightCap);

enum class TowerType { A, B, C };

std::string to_string(TowerType type);
TowerType tower_type_from_string(const std::string& text);

struct NormTower {
    TowerType type = TowerType::B;
    std::vector<Rational> grades;
    LogDiagonal j;
    BasisId basis;
    int cutoff = 0;
    // Supremum of the grade set and whether it belongs to the set.
    std::optional<Rational> supremum;
    bool supremum_attained = false;
    bool unbounded = false;
    // Result of the sampled check n1 <= n2 => ||v||_n1 <= ||v||_n2.
    bool monotone_on_samples = false;
    std::size_t samples_checked = 0;

    double norm(const HVector& v, std::size_t grade_index) const;
    nlohmann::json to_json() const;
};

NormTower build_tower(const LogDiagonal& j, const BasisId& basis, TowerType type, int cutoff, std::mt19937_64& rng,
                      std::size_t samples = 32);

// max relative deviation of <J sigma | J rho>_{Phi_H} from <sigma | rho>_L over
// random pairs, where <a | b>_{Phi_H} = <J^{-1} a | J^{-1} b>_L. Deviations are
// scaled by ||sigma|| ||rho||.
double isometry_check(const LogDiagonal& j, const BasisId& basis, std::size_t samples, std::mt19937_64& rng);
double isometry_deviation(const LogDiagonal& j, const HVector& sigma, const HVector& rho);

struct GradeEquivalenceReport {
    bool dominated_both_ways = false;
    // max over samples of ||v||_n / ||v||_{n'} for the matched grade n' >= n.
    double worst_ratio = 0.0;
};

// Two grade sets with the same supremum give equivalent towers: every grade
// of one is dominated by some grade of the other. Checked on samples.
GradeEquivalenceReport check_grade_equivalence(const LogDiagonal& j, const BasisId& basis,
                                               const std::vector<Rational>& first,
                                               const std::vector<Rational>& second, std::size_t samples,
                                               std::mt19937_64& rng);

// ------------------------------------------------------------------ spectra

enum class SpectrumFamily { power, geometric, raw };

// Singular values lambda_k, k = 1, 2, ...
struct SingularSpectrum {
    SpectrumFamily family = SpectrumFamily::power;
    double alpha = 0.5;  // power: lambda_k = (k+1)^{-alpha}
    double q = 0.5;      // geometric: lambda_k = q^k
    std::vector<double> raw;
    std::uint64_t terms = 1000;  // truncation K

    static SingularSpectrum power(double alpha, std::uint64_t terms = 1000000);
    static SingularSpectrum geometric(double q, std::uint64_t terms = 200);
    static SingularSpectrum from_list(std::vector<double> values);

    double value(std::uint64_t k) const;
    double log_value(std::uint64_t k) const;
    std::string name() const;
    nlohmann::json to_json() const;
};

enum class Verdict { yes, no, inconclusive };
std::string to_string(Verdict v);

struct SeriesEvidence {
    double exponent = 1.0;       // sum of lambda_k^exponent
    double partial_sum = 0.0;    // k = 1..K
    std::uint64_t terms = 0;
    // Enclosure of the infinite tail when the series converges analytically.
    std::optional<double> tail_lower;
    std::optional<double> tail_upper;
};

struct OperatorClassReport {
    std::string spectrum;
    Verdict compact = Verdict::inconclusive;
    Verdict hilbert_schmidt = Verdict::inconclusive;
    Verdict nuclear = Verdict::inconclusive;
    struct PowerClass {
        Verdict hilbert_schmidt = Verdict::inconclusive;
        Verdict nuclear = Verdict::inconclusive;
    };
    std::map<int, PowerClass> powers;  // n -> class of J^n
    std::optional<int> min_hs_power;
    std::optional<int> min_nuclear_power;
    // J^h Hilbert-Schmidt makes J^{2h} a product of two HS operators, hence
    // nuclear: the sufficient bound 2 * min_hs_power.
    std::optional<int> nuclear_power_via_hs_square;
    std::string method;  // "analytic-tail-bound" or "heuristic-inconclusive"
    SeriesEvidence nuclear_series;
    SeriesEvidence hs_series;

    nlohmann::json to_json() const;
};

OperatorClassReport classify(const SingularSpectrum& spectrum, int max_power = 8);

// sum_{k=1}^{K} lambda_k^exponent, compensated, smallest terms first.
double partial_sum(const SingularSpectrum& spectrum, double exponent, std::uint64_t terms);

// Integral enclosure of sum_{k > K} (k+1)^{-s}, s > 1:
// [(K+2)^{1-s}/(s-1), (K+1)^{1-s}/(s-1)].
std::pair<double, double> pseries_tail_bounds(double s, std::uint64_t terms);

struct KotheReport {
    std::string spectrum;
    Rational n1;
    Rational n2;
    double ratio_limit = 1.0;          // limsup lambda_{k+1}/lambda_k
    bool ratio_limit_analytic = false;
    double sampled_tail_ratio = 1.0;   // max ratio over the last quarter of the truncation
    bool ratio_criterion = false;      // ratio_limit < 1
    SeriesEvidence series;             // sum lambda_k^{2 (n2 - n1)}
    Verdict series_converges = Verdict::inconclusive;
    Verdict nuclear = Verdict::inconclusive;

    nlohmann::json to_json() const;
};

// Requires 0 <= n1 < n2 < 1.
KotheReport kothe_nuclearity(const SingularSpectrum& spectrum, const Rational& n1, const Rational& n2);

}  // namespace lambdalab
