#pragma once
//
// Finite-window cascades carrying an imprimitivity system (U, {E_n}, T).
//
//   shift : basis e_lo .. e_hi, U e_n = e_{n+1}, U e_hi = 0.
//   baker : Walsh functions chi_S over nonempty subsets S of the coordinate
//           window [-m, m], age(chi_S) = max(S), U chi_S = chi_{S+1}.
//
// The boundary is open (truncating): U is a partial isometry and every
// identity involving U^t is checked on labels whose U^t image stays inside
// the window ("interior margin").
//

#include "lambdalab/hilbert.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace lambdalab {

struct AgeWindow {
    int lo = -1;
    int hi = 1;

    int size() const { return hi - lo + 1; }
    bool contains(int age) const { return age >= lo && age <= hi; }
    void validate() const;
};

enum class CascadeKind { shift, baker };

std::string to_string(CascadeKind kind);

// Fluctuation vector plus the separately stored equilibrium coefficient
// (the constant density 1).
struct BlockVector {
    double equilibrium = 0.0;
    HVector fluctuation;
};

// Values on the 2^a x 2^b dyadic cells of the unit square, row-major with
// the y index outer: values[iy * 2^a + ix].
struct GridDensity {
    int a = 0;
    int b = 0;
    std::vector<double> values;

    double mean() const;
    double min() const;
};

class CascadeSystem {
public:
    static constexpr int kMaxBakerM = 6;

    CascadeKind kind() const { return kind_; }
    const AgeWindow& window() const { return window_; }
    // Baker coordinate half-width; 0 for shift systems.
    int m() const { return m_; }
    const BasisId& basis_id() const { return basis_id_; }
    std::size_t dim() const { return ages_.size(); }

    int age(std::size_t label) const { return ages_[label]; }
    const std::vector<int>& ages() const { return ages_; }
    std::string label_name(std::size_t label) const;
    std::vector<std::string> label_names() const;

    // Baker only: bit (i + m) set <=> coordinate i in S.
    std::uint32_t subset(std::size_t label) const { return subsets_.at(label); }
    std::optional<std::size_t> index_of_subset(std::uint32_t mask) const;
    std::optional<std::size_t> index_of_subset(const std::set<int>& coords) const;
    // Shift only.
    std::size_t index_of_age(int age) const;

    // U^t applied to a basis label; nullopt when the image leaves the window.
    std::optional<std::size_t> advance(std::size_t label, int t) const;
    // (U^t)^dagger applied to a basis label.
    std::optional<std::size_t> retreat(std::size_t label, int t) const;

    bool in_margin(std::size_t label, int t) const { return advance(label, t).has_value(); }
    std::vector<std::size_t> interior_margin(int t) const;
    std::vector<std::size_t> labels_of_age(int age) const;

    HVector zero_vector() const { return HVector::zeros(basis_id_, static_cast<Eigen::Index>(dim())); }
    HVector basis_vector(std::size_t label) const;

    // Dense materializations. Cost is O(dim^2) memory.
    HOperator koopman() const;
    HOperator koopman_power_matrix(int t) const;
    HOperator age_projector(const std::set<int>& ages) const;
    HOperator time_operator() const;

private:
    friend CascadeSystem build_shift_cascade(const AgeWindow& window);
    friend CascadeSystem build_baker_cascade(int m);

    CascadeKind kind_ = CascadeKind::shift;
    AgeWindow window_;
    int m_ = 0;
    BasisId basis_id_;
    std::vector<int> ages_;
    std::vector<std::uint32_t> subsets_;
    std::vector<std::optional<std::size_t>> step_;
    std::vector<std::optional<std::size_t>> step_back_;
    std::vector<std::int32_t> subset_index_;  // mask -> label, -1 for the empty set
};

CascadeSystem build_shift_cascade(const AgeWindow& window);
CascadeSystem build_baker_cascade(int m);

// U^t v. Throws MarginError listing labels of v outside interior_margin(t).
HVector koopman_power(const CascadeSystem& system, const HVector& v, int t);

// max over interior basis vectors of |(U^t)^dagger T U^t v - (T + t) v|.
double verify_covariance(const CascadeSystem& system, int t);

struct ImprimitivityReport {
    // |U^t E(D) (U^t)^dagger - E(D+t)| on labels reachable by U^t.
    double pushforward_deviation = 0.0;
    // |(U^t)^dagger E(D+t) U^t - E(D)| on interior_margin(t).
    double pullback_deviation = 0.0;
    // |(U^t)^dagger E(D) U^t - E(D-t)| on interior_margin(t): the operator
    // identity as literally written with D on the left.
    double literal_minus_deviation = 0.0;
    // |(U^t)^dagger E(D) U^t - E(D+t)| on interior_margin(t); nonzero unless
    // both sides vanish.
    double literal_plus_deviation = 0.0;
};

ImprimitivityReport verify_imprimitivity(const CascadeSystem& system, const std::set<int>& ages, int t);

// Pointwise evaluation of equilibrium + sum_S c_S chi_S on the dyadic grid.
GridDensity walsh_to_grid(const CascadeSystem& system, const BlockVector& v);
// Inverse transform: c_S = mean over cells of rho * chi_S.
BlockVector grid_to_walsh(const CascadeSystem& system, const GridDensity& grid);

// Value of the Rademacher product chi_S on the cell with the given digit
// pattern (bit i + m = binary digit of coordinate i).
int walsh_sign(std::uint32_t subset, std::uint32_t digits);
// Digit pattern of grid cell (ix, iy).
std::uint32_t cell_digits(int m, int ix, int iy);

nlohmann::json to_json(const CascadeSystem& system);
// Rebuilds from kind/window and checks any stored matrices against the
// reconstruction.
CascadeSystem cascade_from_json(const nlohmann::json& doc);

}  // namespace lambdalab
