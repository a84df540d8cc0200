#pragma once
//
// The operator web of the Lambda-rigging.
//
// Functionals F in Phi_H^x are represented through the L pairing
// F(sigma) = <sigma | f>, so Phi_H, L and Phi_H^x share one coefficient space
// and differ only in their Gram matrices: Lambda^{-2}, identity and Lambda^2.
// In that representation, with real scalars and symmetric Lambda,
//
//   Lambda^x = Lambda,  R = Lambda Lambda^x = Lambda^2,  U-bar_t = U_t,
//   W_t = Lambda U_t Lambda^{-1},      V_t = Lambda^{-1} U_t Lambda,
//   X_t = R^{-1} W_t R,                Y_t = Lambda^x U-bar_t (Lambda^x)^{-1},
//   Z_t = R U-bar_t R^{-1}.
//
// Each of these is D_left U^t D_right with diagonal D's, so all of them are
// carried as a pair of log-diagonals and composed in the log domain.
//

#include "lambdalab/cascade.hpp"
#include "lambdalab/lambda.hpp"

#include <nlohmann/json.hpp>

#include <complex>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace lambdalab {

// Lambda^x: the matrix M with <rho | M f> = <Lambda rho | f>.
HOperator antitranspose(const HOperator& lambda);
// max |<rho | M f> - <Lambda rho | f>| over random pairs, scaled by |rho||f|.
double antitranspose_pairing_deviation(const HOperator& lambda, const HOperator& lambda_x, std::size_t pairs,
                                       std::mt19937_64& rng);

struct RieszMap {
    HOperator r;                 // Lambda Lambda^x (entries may underflow)
    LogDiagonal r_log;           // log of R, exact
    LogDiagonal r_inverse_log;   // R^{-1}, kept in log form only
    double sqrt_recovery_deviation = 0.0;  // max relative |sqrt(R) - Lambda|
};

RieszMap riesz_map(const LambdaOperator& lambda);
// min over random rho of <R rho | rho> / |rho|^2.
double riesz_min_quadratic_form(const RieszMap& riesz, const BasisId& basis, std::size_t samples, std::mt19937_64& rng);
// max relative deviation of <R F | R G>_{Phi_H} from <F | G>_{Phi_H^x}.
double riesz_isometry_deviation(const RieszMap& riesz, std::size_t samples, std::mt19937_64& rng);

// D_left U^t D_right restricted to interior_margin(t).
struct ConjugatedShift {
    std::string name;
    int t = 0;
    std::vector<double> left_log;   // per label
    std::vector<double> right_log;  // per label

    // log of the weight carried from label k to U^t(k); k must be safe.
    double log_weight(const CascadeSystem& system, std::size_t k) const;
    // Dense matrix on the full basis; columns outside the safe subspace are
    // zero. DomainError when an entry overflows.
    Eigen::MatrixXd to_matrix(const CascadeSystem& system) const;
};

struct OperatorWeb {
    int t = 0;
    LambdaOperator lambda;
    HOperator lambda_x;
    RieszMap riesz;
    std::vector<std::size_t> safe;  // interior_margin(t)
    ConjugatedShift u_bar;
    ConjugatedShift w;
    ConjugatedShift v;
    ConjugatedShift x;
    ConjugatedShift y;
    ConjugatedShift z;

    const CascadeSystem& system() const { return lambda.system(); }
};

OperatorWeb build_web(const LambdaOperator& lambda, int t);

struct TheoremPart {
    std::string id;
    std::string claim;
    bool pass = false;
    std::optional<double> deviation;
    // Witness label, its name and the norm of the column difference.
    std::optional<std::size_t> witness_label;
    std::string witness_name;
    std::optional<double> witness_difference;
    nlohmann::json details;
};

struct TheoremReport {
    int t = 0;
    std::string profile;
    std::string basis;
    std::vector<TheoremPart> parts;

    bool all_pass() const;
    nlohmann::json to_json() const;
};

inline constexpr double kIdentityTolerance = 1e-10;
inline constexpr double kWitnessThreshold = 1e-6;
inline constexpr double kSpectrumTolerance = 1e-8;

// Parts (iii)-(v) need t >= 1; t = 0 throws PreconditionError.
TheoremReport verify_theorem(const OperatorWeb& web, std::size_t samples, std::mt19937_64& rng);

// Eigenvalues of a square matrix whose nonzero entries (i, j) all satisfy
// age(i) >= age(j): block triangular in the age grading, so the spectrum is
// the union of the diagonal age blocks' spectra. Falls back to a dense
// eigensolver when the grading is not respected.
std::vector<std::complex<double>> graded_spectrum(const Eigen::MatrixXd& m, const std::vector<int>& ages);

// Max distance between two eigenvalue multisets after sorting; infinity if
// the sizes differ.
double spectrum_distance(std::vector<std::complex<double>> a, std::vector<std::complex<double>> b);

}  // namespace lambdalab
