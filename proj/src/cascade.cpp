#include "lambdalab/cascade.hpp"

#include "lambdalab/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>

namespace lambdalab {

void AgeWindow::validate() const {
    if (!(lo < 0 && 0 < hi)) {
        std::ostringstream os;
        os << "age window [" << lo << ", " << hi << "] must contain 0 strictly inside";
        throw PreconditionError(os.str());
    }
    if (hi - lo < 2) {
        throw PreconditionError("age window too small (hi - lo < 2)");
    }
}

std::string to_string(CascadeKind kind) {
    return kind == CascadeKind::shift ? "shift" : "baker";
}

double GridDensity::mean() const {
    if (values.empty()) {
        return 0.0;
    }
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double GridDensity::min() const {
    return values.empty() ? 0.0 : *std::min_element(values.begin(), values.end());
}

// ------------------------------------------------------------ construction

CascadeSystem build_shift_cascade(const AgeWindow& window) {
    window.validate();
    CascadeSystem sys;
    sys.kind_ = CascadeKind::shift;
    sys.window_ = window;
    sys.m_ = 0;
    {
        std::ostringstream os;
        os << "shift[" << window.lo << "," << window.hi << "]";
        sys.basis_id_ = os.str();
    }
    const auto n = static_cast<std::size_t>(window.size());
    sys.ages_.resize(n);
    sys.step_.assign(n, std::nullopt);
    sys.step_back_.assign(n, std::nullopt);
    for (std::size_t k = 0; k < n; ++k) {
        sys.ages_[k] = window.lo + static_cast<int>(k);
        if (k + 1 < n) {
            sys.step_[k] = k + 1;
        }
        if (k > 0) {
            sys.step_back_[k] = k - 1;
        }
    }
    return sys;
}

CascadeSystem build_baker_cascade(int m) {
    if (m < 1) {
        throw PreconditionError("baker cascade needs m >= 1");
    }
    if (m > CascadeSystem::kMaxBakerM) {
        std::ostringstream os;
        os << "m exceeds desk-scale cap " << CascadeSystem::kMaxBakerM;
        throw PreconditionError(os.str());
    }
    CascadeSystem sys;
    sys.kind_ = CascadeKind::baker;
    sys.window_ = AgeWindow{-m, m};
    sys.m_ = m;
    sys.basis_id_ = "baker[m=" + std::to_string(m) + "]";

    const int ncoords = 2 * m + 1;
    const std::uint32_t nmasks = std::uint32_t{1} << ncoords;
    auto age_of = [m](std::uint32_t mask) { return static_cast<int>(std::bit_width(mask)) - 1 - m; };

    // Labels ordered by (age, mask) so each age block is contiguous.
    std::vector<std::uint32_t> masks(nmasks - 1);
    std::iota(masks.begin(), masks.end(), std::uint32_t{1});
    std::stable_sort(masks.begin(), masks.end(),
                     [&](std::uint32_t x, std::uint32_t y) { return age_of(x) < age_of(y); });

    sys.subset_index_.assign(nmasks, -1);
    sys.subsets_ = masks;
    sys.ages_.resize(masks.size());
    for (std::size_t k = 0; k < masks.size(); ++k) {
        sys.ages_[k] = age_of(masks[k]);
        sys.subset_index_[masks[k]] = static_cast<std::int32_t>(k);
    }
    sys.step_.assign(masks.size(), std::nullopt);
    sys.step_back_.assign(masks.size(), std::nullopt);
    const std::uint32_t top = std::uint32_t{1} << (ncoords - 1);
    for (std::size_t k = 0; k < masks.size(); ++k) {
        const std::uint32_t s = masks[k];
        if ((s & top) == 0) {
            sys.step_[k] = static_cast<std::size_t>(sys.subset_index_[s << 1]);
        }
        if ((s & 1u) == 0) {
            sys.step_back_[k] = static_cast<std::size_t>(sys.subset_index_[s >> 1]);
        }
    }
    return sys;
}

// ---------------------------------------------------------------- queries

std::string CascadeSystem::label_name(std::size_t label) const {
    if (kind_ == CascadeKind::shift) {
        return "e" + std::to_string(ages_.at(label));
    }
    std::string out = "{";
    bool first = true;
    const std::uint32_t s = subsets_.at(label);
    for (int i = -m_; i <= m_; ++i) {
        if (s & (std::uint32_t{1} << (i + m_))) {
            out += (first ? "" : ",") + std::to_string(i);
            first = false;
        }
    }
    return out + "}";
}

std::vector<std::string> CascadeSystem::label_names() const {
    std::vector<std::string> out;
    out.reserve(dim());
    for (std::size_t k = 0; k < dim(); ++k) {
        out.push_back(label_name(k));
    }
    return out;
}

std::optional<std::size_t> CascadeSystem::index_of_subset(std::uint32_t mask) const {
    if (kind_ != CascadeKind::baker) {
        throw PreconditionError("subset labels exist only for baker systems");
    }
    if (mask >= subset_index_.size() || subset_index_[mask] < 0) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(subset_index_[mask]);
}

std::optional<std::size_t> CascadeSystem::index_of_subset(const std::set<int>& coords) const {
    std::uint32_t mask = 0;
    for (int i : coords) {
        if (i < -m_ || i > m_) {
            return std::nullopt;
        }
        mask |= std::uint32_t{1} << (i + m_);
    }
    return index_of_subset(mask);
}

std::size_t CascadeSystem::index_of_age(int a) const {
    if (kind_ != CascadeKind::shift) {
        throw PreconditionError("index_of_age applies to shift systems; use labels_of_age");
    }
    if (!window_.contains(a)) {
        throw DimensionError("age " + std::to_string(a) + " outside the window");
    }
    return static_cast<std::size_t>(a - window_.lo);
}

std::optional<std::size_t> CascadeSystem::advance(std::size_t label, int t) const {
    if (t < 0) {
        return retreat(label, -t);
    }
    std::optional<std::size_t> cur = label;
    for (int s = 0; s < t && cur; ++s) {
        cur = step_[*cur];
    }
    return cur;
}

std::optional<std::size_t> CascadeSystem::retreat(std::size_t label, int t) const {
    if (t < 0) {
        return advance(label, -t);
    }
    std::optional<std::size_t> cur = label;
    for (int s = 0; s < t && cur; ++s) {
        cur = step_back_[*cur];
    }
    return cur;
}

std::vector<std::size_t> CascadeSystem::interior_margin(int t) const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < dim(); ++k) {
        if (in_margin(k, t)) {
            out.push_back(k);
        }
    }
    return out;
}

std::vector<std::size_t> CascadeSystem::labels_of_age(int a) const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < dim(); ++k) {
        if (ages_[k] == a) {
            out.push_back(k);
        }
    }
    return out;
}

HVector CascadeSystem::basis_vector(std::size_t label) const {
    return HVector::unit(basis_id_, static_cast<Eigen::Index>(dim()), static_cast<Eigen::Index>(label));
}

HOperator CascadeSystem::koopman() const {
    return koopman_power_matrix(1);
}

HOperator CascadeSystem::koopman_power_matrix(int t) const {
    const auto n = static_cast<Eigen::Index>(dim());
    Eigen::MatrixXd u = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t k = 0; k < dim(); ++k) {
        if (auto img = advance(k, t)) {
            u(static_cast<Eigen::Index>(*img), static_cast<Eigen::Index>(k)) = 1.0;
        }
    }
    return HOperator::dense(basis_id_, std::move(u));
}

HOperator CascadeSystem::age_projector(const std::set<int>& ages) const {
    std::vector<double> d(dim(), 0.0);
    for (std::size_t k = 0; k < dim(); ++k) {
        if (ages.count(ages_[k])) {
            d[k] = 1.0;
        }
    }
    return HOperator::diagonal(basis_id_, std::move(d));
}

HOperator CascadeSystem::time_operator() const {
    std::vector<double> d(ages_.begin(), ages_.end());
    return HOperator::diagonal(basis_id_, std::move(d));
}

// ------------------------------------------------------------ operations

HVector koopman_power(const CascadeSystem& system, const HVector& v, int t) {
    if (t < 0) {
        throw PreconditionError("koopman_power needs t >= 0");
    }
    if (v.basis() != system.basis_id() || static_cast<std::size_t>(v.dim()) != system.dim()) {
        throw DimensionError("vector does not live on basis " + system.basis_id());
    }
    Eigen::VectorXd c = Eigen::VectorXd::Zero(v.dim());
    std::vector<std::string> offending;
    for (std::size_t k = 0; k < system.dim(); ++k) {
        const double x = v[static_cast<Eigen::Index>(k)];
        if (x == 0.0) {
            continue;
        }
        const auto img = system.advance(k, t);
        if (!img) {
            offending.push_back(system.label_name(k));
            continue;
        }
        c[static_cast<Eigen::Index>(*img)] = x;
    }
    if (!offending.empty()) {
        std::string msg = "support outside interior_margin(" + std::to_string(t) + "):";
        for (const auto& name : offending) {
            msg += " " + name;
        }
        throw MarginError(msg);
    }
    return HVector(system.basis_id(), std::move(c));
}

double verify_covariance(const CascadeSystem& system, int t) {
    if (t < 0) {
        throw PreconditionError("verify_covariance needs t >= 0");
    }
    // U^t sends basis vectors to basis vectors, so the left side is
    // age(img) e_back with img = U^t e_k and back = (U^t)^dagger e_img.
    double worst = 0.0;
    for (std::size_t k : system.interior_margin(t)) {
        const std::size_t img = *system.advance(k, t);
        const auto back = system.retreat(img, t);
        const double lhs = static_cast<double>(system.age(img));
        const double rhs = static_cast<double>(system.age(k)) + static_cast<double>(t);
        double dev = 0.0;
        if (!back) {
            dev = std::abs(rhs);
        } else if (*back == k) {
            dev = std::abs(lhs - rhs);
        } else {
            dev = std::hypot(lhs, rhs);
        }
        worst = std::max(worst, dev);
    }
    return worst;
}

namespace {

// max |A(i,j) - B(i,j)| over the index set `rows x rows`.
double compressed_max_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const std::vector<std::size_t>& idx) {
    double worst = 0.0;
    for (std::size_t i : idx) {
        for (std::size_t j : idx) {
            const auto ii = static_cast<Eigen::Index>(i);
            const auto jj = static_cast<Eigen::Index>(j);
            worst = std::max(worst, std::abs(a(ii, jj) - b(ii, jj)));
        }
    }
    return worst;
}

std::set<int> shifted(const std::set<int>& ages, int t) {
    std::set<int> out;
    for (int a : ages) {
        out.insert(a + t);
    }
    return out;
}

}  // namespace

ImprimitivityReport verify_imprimitivity(const CascadeSystem& system, const std::set<int>& ages, int t) {
    if (t < 0) {
        throw PreconditionError("verify_imprimitivity needs t >= 0");
    }
    const Eigen::MatrixXd ut = system.koopman_power_matrix(t).matrix();
    const Eigen::MatrixXd e = system.age_projector(ages).matrix();
    const Eigen::MatrixXd e_plus = system.age_projector(shifted(ages, t)).matrix();
    const Eigen::MatrixXd e_minus = system.age_projector(shifted(ages, -t)).matrix();

    std::vector<std::size_t> reachable;
    for (std::size_t k = 0; k < system.dim(); ++k) {
        if (system.retreat(k, t)) {
            reachable.push_back(k);
        }
    }
    const std::vector<std::size_t> interior = system.interior_margin(t);

    ImprimitivityReport rep;
    const Eigen::MatrixXd push = ut * e * ut.transpose();
    const Eigen::MatrixXd pull = ut.transpose() * e_plus * ut;
    const Eigen::MatrixXd literal = ut.transpose() * e * ut;
    rep.pushforward_deviation = compressed_max_diff(push, e_plus, reachable);
    rep.pullback_deviation = compressed_max_diff(pull, e, interior);
    rep.literal_minus_deviation = compressed_max_diff(literal, e_minus, interior);
    rep.literal_plus_deviation = compressed_max_diff(literal, e_plus, interior);
    return rep;
}

// ------------------------------------------------------------- Walsh grid

std::uint32_t cell_digits(int m, int ix, int iy) {
    // x = 0.d_0 d_{-1} ... d_{-m}, y = 0.d_1 d_2 ... d_m. With this layout the
    // baker map B(x, y) = (2x mod 1, (y + floor(2x)) / 2) shifts digit
    // coordinates by +1, and rho o B^{-1} sends r_i to r_{i+1}.
    std::uint32_t digits = 0;
    for (int j = 0; j <= m; ++j) {
        const int bit = (ix >> (m - j)) & 1;  // digit of coordinate -j
        digits |= static_cast<std::uint32_t>(bit) << (-j + m);
    }
    for (int j = 1; j <= m; ++j) {
        const int bit = (iy >> (m - j)) & 1;  // digit of coordinate j
        digits |= static_cast<std::uint32_t>(bit) << (j + m);
    }
    return digits;
}

int walsh_sign(std::uint32_t subset, std::uint32_t digits) {
    return (std::popcount(subset & digits) & 1) ? -1 : 1;
}

namespace {

void require_baker(const CascadeSystem& system, const char* op) {
    if (system.kind() != CascadeKind::baker) {
        throw PreconditionError(std::string(op) + " needs a baker system");
    }
}

// In-place unnormalized Walsh-Hadamard transform (natural ordering).
void fwht(std::vector<double>& a) {
    for (std::size_t h = 1; h < a.size(); h <<= 1) {
        for (std::size_t i = 0; i < a.size(); i += h << 1) {
            for (std::size_t j = i; j < i + h; ++j) {
                const double x = a[j];
                const double y = a[j + h];
                a[j] = x + y;
                a[j + h] = x - y;
            }
        }
    }
}

}  // namespace

GridDensity walsh_to_grid(const CascadeSystem& system, const BlockVector& v) {
    require_baker(system, "walsh_to_grid");
    if (v.fluctuation.basis() != system.basis_id() || static_cast<std::size_t>(v.fluctuation.dim()) != system.dim()) {
        throw DimensionError("fluctuation vector does not live on basis " + system.basis_id());
    }
    const int m = system.m();
    const std::size_t ncells = std::size_t{1} << (2 * m + 1);
    // coefficients indexed by subset mask, then one Hadamard pass evaluates
    // every Walsh function on every digit pattern
    std::vector<double> by_digits(ncells, 0.0);
    by_digits[0] = v.equilibrium;
    for (std::size_t k = 0; k < system.dim(); ++k) {
        by_digits[system.subset(k)] = v.fluctuation[static_cast<Eigen::Index>(k)];
    }
    fwht(by_digits);

    GridDensity g;
    g.a = m + 1;
    g.b = m;
    const int nx = 1 << g.a;
    const int ny = 1 << g.b;
    g.values.resize(ncells);
    for (int iy = 0; iy < ny; ++iy) {
        for (int ix = 0; ix < nx; ++ix) {
            g.values[static_cast<std::size_t>(iy) * nx + ix] = by_digits[cell_digits(m, ix, iy)];
        }
    }
    return g;
}

BlockVector grid_to_walsh(const CascadeSystem& system, const GridDensity& grid) {
    require_baker(system, "grid_to_walsh");
    const int m = system.m();
    if (grid.a != m + 1 || grid.b != m) {
        throw DimensionError("grid resolution does not match the baker window");
    }
    const std::size_t ncells = std::size_t{1} << (2 * m + 1);
    if (grid.values.size() != ncells) {
        throw DimensionError("grid has the wrong number of cells");
    }
    const int nx = 1 << grid.a;
    const int ny = 1 << grid.b;
    std::vector<double> by_digits(ncells, 0.0);
    for (int iy = 0; iy < ny; ++iy) {
        for (int ix = 0; ix < nx; ++ix) {
            by_digits[cell_digits(m, ix, iy)] = grid.values[static_cast<std::size_t>(iy) * nx + ix];
        }
    }
    fwht(by_digits);
    const double scale = 1.0 / static_cast<double>(ncells);

    BlockVector out;
    out.equilibrium = by_digits[0] * scale;
    Eigen::VectorXd c(static_cast<Eigen::Index>(system.dim()));
    for (std::size_t k = 0; k < system.dim(); ++k) {
        c[static_cast<Eigen::Index>(k)] = by_digits[system.subset(k)] * scale;
    }
    out.fluctuation = HVector(system.basis_id(), std::move(c));
    return out;
}

// ------------------------------------------------------------------- JSON

namespace {

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            row.push_back(m(i, j));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

nlohmann::json to_json(const CascadeSystem& system) {
    nlohmann::json doc;
    doc["kind"] = to_string(system.kind());
    doc["window"] = {{"lo", system.window().lo}, {"hi", system.window().hi}};
    if (system.kind() == CascadeKind::baker) {
        doc["m"] = system.m();
    }
    doc["basis_id"] = system.basis_id();
    doc["basis_labels"] = system.label_names();
    doc["ages"] = system.ages();
    doc["U"] = matrix_json(system.koopman().matrix());
    doc["T"] = matrix_json(system.time_operator().matrix());
    nlohmann::json projectors = nlohmann::json::object();
    for (int a = system.window().lo; a <= system.window().hi; ++a) {
        projectors[std::to_string(a)] = matrix_json(system.age_projector({a}).matrix());
    }
    doc["E"] = std::move(projectors);
    return doc;
}

CascadeSystem cascade_from_json(const nlohmann::json& doc) {
    const std::string kind = doc.at("kind").get<std::string>();
    CascadeSystem sys = [&] {
        if (kind == "shift") {
            return build_shift_cascade(AgeWindow{doc.at("window").at("lo").get<int>(), doc.at("window").at("hi").get<int>()});
        }
        if (kind == "baker") {
            return build_baker_cascade(doc.at("m").get<int>());
        }
        throw PreconditionError("unknown cascade kind '" + kind + "'");
    }();
    auto check = [&](const char* key, const Eigen::MatrixXd& expect) {
        if (!doc.contains(key)) {
            return;
        }
        const auto& rows = doc.at(key);
        if (rows.size() != static_cast<std::size_t>(expect.rows())) {
            throw DimensionError(std::string("stored ") + key + " has the wrong dimension");
        }
        for (Eigen::Index i = 0; i < expect.rows(); ++i) {
            for (Eigen::Index j = 0; j < expect.cols(); ++j) {
                if (rows.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(j)).get<double>() != expect(i, j)) {
                    throw DimensionError(std::string("stored ") + key + " disagrees with the reconstruction");
                }
            }
        }
    };
    check("U", sys.koopman().matrix());
    check("T", sys.time_operator().matrix());
    return sys;
}

}  // namespace lambdalab
