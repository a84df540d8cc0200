#pragma once
//
// Admissible lambda profiles and the operators Lambda = lambda(T) and
// bold-Lambda = I_D (+) Lambda built from them.
//
// A profile lambda: Z -> [0, 1] is admissible when
//   (i)   it is nonincreasing,
//   (ii)  lambda(s) -> 1 as s -> -inf and lambda(s) -> 0 as s -> +inf,
//   (iii) for every t >= 0, s -> lambda(s + t) / lambda(s) is nonincreasing
//         and tends to 0.
// These are checked by sampling on a finite integer grid; a certificate is
// evidence on that grid, not a proof.
//

#include "lambdalab/cascade.hpp"
#include "lambdalab/hilbert.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace lambdalab {

enum class ProfileFamily { gumbel, logistic, custom };

class LambdaProfile {
public:
    // lambda(s) = exp(-e^{a s}), a > 0.
    static LambdaProfile gumbel(double a = 1.0);
    // lambda(s) = 1 / (1 + e^s).
    static LambdaProfile logistic();
    // Tabulated (s, lambda(s)) pairs, linearly interpolated between nodes.
    static LambdaProfile custom(std::vector<std::pair<double, double>> table);

    ProfileFamily family() const { return family_; }
    double gumbel_rate() const { return rate_; }
    const std::vector<std::pair<double, double>>& table() const { return table_; }
    std::string name() const;

    // log lambda(s); -inf where lambda vanishes. Custom tables throw
    // DomainError outside their sampled range.
    double log_value(double s) const;
    double value(double s) const;

    nlohmann::json to_json() const;

private:
    ProfileFamily family_ = ProfileFamily::gumbel;
    double rate_ = 1.0;
    std::vector<std::pair<double, double>> table_;
};

struct AdmissibilityWitness {
    std::string condition;  // "monotone", "limits" or "ratio"
    int s = 0;
    int t = 0;
    double value = 0.0;
    std::string detail;
};

struct AdmissibilityCertificate {
    std::string profile;
    int grid_lo = 0;
    int grid_hi = 0;
    std::vector<int> t_set;
    double tolerance = 1e-6;
    bool monotone_ok = false;
    bool limits_ok = false;
    bool ratio_ok = false;
    std::vector<AdmissibilityWitness> witnesses;

    bool admissible() const { return monotone_ok && limits_ok && ratio_ok; }
    nlohmann::json to_json() const;
};

inline constexpr double kAdmissibilityTolerance = 1e-6;

// Throws DomainError when the profile leaves [0, 1] on the grid and
// PreconditionError when the grid does not cover [-20, 20] or t_set is empty.
AdmissibilityCertificate check_admissible(const LambdaProfile& profile, int grid_lo, int grid_hi,
                                          const std::vector<int>& t_set);

class LambdaOperator {
public:
    const LambdaProfile& profile() const { return profile_; }
    const CascadeSystem& system() const { return system_; }
    const AdmissibilityCertificate& certificate() const { return certificate_; }

    // log lambda(age(label)) per basis label.
    const LogDiagonal& log_diag() const { return log_diag_; }
    double log_at_age(int age) const;
    double at_age(int age) const { return std::exp(log_at_age(age)); }

    // Diagonal matrix of lambda values. Entries below the double range
    // underflow to 0 here; use log_diag() for exact work.
    HOperator matrix() const;

    // Fluctuation part multiplied by lambda(T); equilibrium untouched.
    BlockVector apply_block(const BlockVector& v) const;
    HVector apply(const HVector& v) const;

    // log of lambda(lo) / lambda(hi): the condition number of Lambda on the
    // window, which grows without bound as the window widens.
    double log_condition_number() const;

private:
    friend LambdaOperator build_lambda(const LambdaProfile&, const CascadeSystem&, const AdmissibilityCertificate&);

    LambdaProfile profile_;
    CascadeSystem system_;
    AdmissibilityCertificate certificate_;
    LogDiagonal log_diag_;
    std::vector<double> log_by_age_;  // indexed by age - window.lo
};

// Uses a certificate produced by check_admissible. Rejects uncertified
// profiles, certificates whose grid misses the window, and lambda = 0 inside
// the window.
LambdaOperator build_lambda(const LambdaProfile& profile, const CascadeSystem& system,
                            const AdmissibilityCertificate& certificate);
// Certifies on [min(lo, -20), max(hi, 20)] with t in {1, 2, 3} first.
LambdaOperator build_lambda(const LambdaProfile& profile, const CascadeSystem& system);

struct CovariantTransformReport {
    double lambda_deviation = 0.0;          // |(U^t)^dagger Lambda U^t - lambda(T + t)|
    double lambda_squared_deviation = 0.0;  // same for Lambda^2
};

CovariantTransformReport verify_covariant_transform(const LambdaOperator& lambda, int t);

struct NormalizationReport {
    double max_mass_deviation = 0.0;        // |mass(bold-Lambda rho) - mass(rho)|
    double max_fluctuation_mass = 0.0;      // |<Lambda rho^c | 1>|
    std::size_t samples = 0;
};

NormalizationReport verify_normalization(const LambdaOperator& lambda, const std::vector<GridDensity>& samples);
NormalizationReport verify_normalization(const LambdaOperator& lambda, const std::vector<BlockVector>& samples);

}  // namespace lambdalab
