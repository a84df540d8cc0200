#pragma once
//
// The semigroup W_t = Lambda U_t Lambda^{-1}, t >= 0.
//
// W_t is never formed through a Lambda^{-1} matrix: on a basis label of age n
// inside interior_margin(t) it moves the coefficient to the U^t image and
// scales it by lambda(n + t) / lambda(n) = exp(log lambda(n + t) - log lambda(n)).
//

#include "lambdalab/cascade.hpp"
#include "lambdalab/lambda.hpp"

#include <optional>
#include <random>
#include <vector>

namespace lambdalab {

class MarkovEvolution {
public:
    MarkovEvolution(LambdaOperator lambda, int max_t);

    const LambdaOperator& lambda() const { return lambda_; }
    const CascadeSystem& system() const { return lambda_.system(); }
    int max_t() const { return max_t_; }

    // log lambda(age + t) - log lambda(age); computed on the fly past max_t.
    double log_weight(int age, int t) const;

private:
    LambdaOperator lambda_;
    int max_t_ = 0;
    // table_[t][age - lo]; NaN where age + t leaves the window
    std::vector<std::vector<double>> table_;
};

// W_t rho. MarginError on support outside interior_margin(t); t < 0 rejected.
HVector markov_step(const MarkovEvolution& ev, const HVector& rho, int t);
// Block form: the equilibrium coefficient is fixed for every t.
BlockVector markov_step(const MarkovEvolution& ev, const BlockVector& rho, int t);

struct LyapunovTrace {
    std::vector<int> t_values;
    std::vector<double> norms;           // ||W_t rho||_L
    std::vector<double> lyapunov_form;   // <rho_t | Lambda^2 rho_t>, rho_t = U^t Lambda^{-1} rho
    std::vector<double> min_cells;       // baker only: min cell of 1 + W_t rho
    bool monotone = false;
    double ratio_to_zero = 0.0;          // final norm / initial norm
    double max_form_deviation = 0.0;     // max |norm^2 - form| / norm^2
    bool forms_agree = false;            // max_form_deviation <= 1e-10
};

LyapunovTrace lyapunov_trace(const MarkovEvolution& ev, const HVector& rho, int max_t);

// Random vector supported on ages [lo + margin, hi - margin].
HVector random_interior_vector(const CascadeSystem& system, int margin, std::mt19937_64& rng);

struct PositivityReport {
    int t = 0;
    double input_min = 0.0;
    double input_mean = 0.0;
    double min_cell = 0.0;   // min over cells of W_t rho
    double violation = 0.0;  // max(0, -min_cell)
    bool negative = false;
};

// grid -> Walsh -> (equilibrium fixed, fluctuation by W_t) -> grid.
PositivityReport positivity_probe(const MarkovEvolution& ev, const GridDensity& rho, int t);

struct AsymmetryReport {
    int t = 0;
    double forward_max_factor = 1.0;      // max_n lambda(n+t)/lambda(n)
    double backward_log_factor = 0.0;     // log of max_n lambda(n-t)/lambda(n)
    double backward_factor = 1.0;         // exp of the above (inf if it overflows)
    int backward_argmax_age = 0;
    std::optional<double> forward_norm_ratio;  // ||W_t rho|| / ||rho|| when rho fits the margin
};

AsymmetryReport asymmetry_probe(const MarkovEvolution& ev, const HVector& rho, int t);

}  // namespace lambdalab
