#include "tdbs/domain_grid.hpp"

#include "tdbs/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>

namespace tdbs {

void DomainSpec::validate() const {
    if (lower.empty()) throw DomainError("domain has no axes");
    if (lower.size() != upper.size()) throw DomainError("lower/upper barrier counts differ");
    for (std::size_t i = 0; i < lower.size(); ++i) {
        if (!(lower[i] > 0.0) || !(upper[i] > lower[i]) || !std::isfinite(upper[i])) {
            throw DomainError("axis " + std::to_string(i) +
                              " needs 0 < lower < upper < infinity");
        }
    }
    if (sum_barrier) {
        const double floor = std::accumulate(lower.begin(), lower.end(), 0.0);
        if (!(*sum_barrier > floor)) {
            throw DomainError("sum barrier must exceed the sum of lower barriers");
        }
    }
}

bool DomainSpec::contains(std::span<const double> y) const {
    if (y.size() != dimension()) throw ShapeError("point dimension does not match domain");
    double sum = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (!(y[i] > lower[i] && y[i] < upper[i])) return false;
        sum += y[i];
    }
    return !(sum_barrier && sum >= *sum_barrier);
}

std::vector<double> log_transform(std::span<const double> y) {
    std::vector<double> x(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (!(y[i] > 0.0)) throw DomainError("log_transform needs strictly positive prices");
        x[i] = std::log(y[i]);
    }
    return x;
}

std::vector<double> exp_transform(std::span<const double> x) {
    std::vector<double> y(x.size());
    std::transform(x.begin(), x.end(), y.begin(), [](double v) { return std::exp(v); });
    return y;
}

// ---------------------------------------------------------------------------

Grid::Grid(std::vector<double> x_lower, std::vector<double> x_upper,
           std::vector<std::size_t> nodes_per_axis,
           const std::function<bool(std::span<const double>)>& knocked_out)
    : lower_(std::move(x_lower)), upper_(std::move(x_upper)), nodes_(std::move(nodes_per_axis)) {
    const std::size_t n = nodes_.size();
    if (n == 0 || lower_.size() != n || upper_.size() != n) {
        throw ShapeError("grid bounds and node counts must share one dimension");
    }
    strides_.resize(n);
    spacing_.resize(n);
    std::size_t total = 1;
    for (std::size_t i = 0; i < n; ++i) {
        if (nodes_[i] < 5) throw DomainError("grid needs at least 5 nodes per axis");
        if (!(upper_[i] > lower_[i])) throw DomainError("grid axis has empty extent");
        strides_[i] = total;
        total *= nodes_[i];
        spacing_[i] = (upper_[i] - lower_[i]) / static_cast<double>(nodes_[i] - 1);
    }

    classes_.assign(total, NodeClass::interior);
    std::vector<double> x(n);
    for (std::size_t flat = 0; flat < total; ++flat) {
        bool face = false;
        std::size_t rem = flat;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t k = rem % nodes_[i];
            rem /= nodes_[i];
            face = face || k == 0 || k + 1 == nodes_[i];
            x[i] = coordinate(i, k);
        }
        if (face || (knocked_out && knocked_out(x))) classes_[flat] = NodeClass::dirichlet;
    }

    interior_index_.assign(total, -1);
    for (std::size_t flat = 0; flat < total; ++flat) {
        if (classes_[flat] == NodeClass::interior) {
            interior_index_[flat] = static_cast<std::ptrdiff_t>(interior_.size());
            interior_.push_back(flat);
        }
    }
    if (interior_.empty()) throw DegenerateDomainError("no interior nodes remain after masking");
}

double Grid::coordinate(std::size_t axis, std::size_t k) const {
    if (k + 1 == nodes_.at(axis)) return upper_[axis];
    return lower_[axis] + static_cast<double>(k) * spacing_[axis];
}

std::vector<std::size_t> Grid::multi_index(std::size_t flat) const {
    std::vector<std::size_t> idx(dimension());
    for (std::size_t i = 0; i < dimension(); ++i) {
        idx[i] = flat % nodes_[i];
        flat /= nodes_[i];
    }
    return idx;
}

std::size_t Grid::flat_index(std::span<const std::size_t> multi) const {
    if (multi.size() != dimension()) throw ShapeError("multi-index dimension mismatch");
    std::size_t flat = 0;
    for (std::size_t i = 0; i < dimension(); ++i) flat += multi[i] * strides_[i];
    return flat;
}

std::vector<double> Grid::point(std::size_t flat) const {
    std::vector<double> x(dimension());
    const auto idx = multi_index(flat);
    for (std::size_t i = 0; i < dimension(); ++i) x[i] = coordinate(i, idx[i]);
    return x;
}

std::vector<bool> Grid::region_mask(Region region) const {
    std::vector<bool> mask(size(), false);
    for (std::size_t flat : interior_) {
        bool in = true;
        if (region == Region::core) {
            const auto x = point(flat);
            for (std::size_t i = 0; i < dimension() && in; ++i) {
                const double centre = 0.5 * (lower_[i] + upper_[i]);
                const double half = 0.25 * (upper_[i] - lower_[i]);
                in = std::abs(x[i] - centre) <= half * (1.0 + 1e-12);
            }
        }
        mask[flat] = in;
    }
    return mask;
}

double Grid::interpolate(const Eigen::VectorXd& values, std::span<const double> x) const {
    if (static_cast<std::size_t>(values.size()) != size()) {
        throw ShapeError("interpolate expects a full-grid field");
    }
    if (x.size() != dimension()) throw ShapeError("interpolation point dimension mismatch");
    const std::size_t n = dimension();
    std::vector<std::size_t> base(n);
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (x[i] < lower_[i] - 1e-12 || x[i] > upper_[i] + 1e-12) {
            throw DomainError("interpolation point outside the grid");
        }
        double s = (x[i] - lower_[i]) / spacing_[i];
        s = std::clamp(s, 0.0, static_cast<double>(nodes_[i] - 1));
        auto k = static_cast<std::size_t>(std::floor(s));
        if (k + 1 >= nodes_[i]) k = nodes_[i] - 2;
        base[i] = k;
        w[i] = s - static_cast<double>(k);
    }
    double result = 0.0;
    for (std::size_t corner = 0; corner < (std::size_t{1} << n); ++corner) {
        double weight = 1.0;
        std::size_t flat = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const bool up = (corner >> i) & 1U;
            weight *= up ? w[i] : 1.0 - w[i];
            flat += (base[i] + (up ? 1 : 0)) * strides_[i];
        }
        if (weight != 0.0) result += weight * values(static_cast<Eigen::Index>(flat));
    }
    return result;
}

Eigen::VectorXd Grid::scatter(const Eigen::VectorXd& interior_values) const {
    if (static_cast<std::size_t>(interior_values.size()) != interior_count()) {
        throw ShapeError("scatter expects one value per interior node");
    }
    Eigen::VectorXd full = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size()));
    for (std::size_t k = 0; k < interior_.size(); ++k) {
        full(static_cast<Eigen::Index>(interior_[k])) = interior_values(static_cast<Eigen::Index>(k));
    }
    return full;
}

Eigen::VectorXd Grid::gather(const Eigen::VectorXd& full_values) const {
    if (static_cast<std::size_t>(full_values.size()) != size()) {
        throw ShapeError("gather expects a full-grid field");
    }
    Eigen::VectorXd out(static_cast<Eigen::Index>(interior_count()));
    for (std::size_t k = 0; k < interior_.size(); ++k) {
        out(static_cast<Eigen::Index>(k)) = full_values(static_cast<Eigen::Index>(interior_[k]));
    }
    return out;
}

Grid build_grid(const DomainSpec& domain, std::span<const std::size_t> nodes_per_axis) {
    domain.validate();
    if (nodes_per_axis.size() != domain.dimension()) {
        throw ShapeError("node counts do not match the domain dimension");
    }
    std::vector<double> lo = log_transform(domain.lower);
    std::vector<double> hi = log_transform(domain.upper);
    std::function<bool(std::span<const double>)> outside;
    if (domain.sum_barrier) {
        const double level = *domain.sum_barrier;
        outside = [level](std::span<const double> x) {
            double sum = 0.0;
            for (double v : x) sum += std::exp(v);
            return sum >= level;
        };
    }
    return Grid(std::move(lo), std::move(hi),
                std::vector<std::size_t>(nodes_per_axis.begin(), nodes_per_axis.end()), outside);
}

// ---------------------------------------------------------------------------

double PayoffSpec::operator()(std::span<const double> y) const {
    const double basket = std::accumulate(y.begin(), y.end(), 0.0);
    switch (kind) {
        case Kind::basket_put:
        case Kind::gmmb:
            return std::max(strike - basket, 0.0);
        case Kind::basket_call:
            return std::max(basket - strike, 0.0);
        case Kind::vanilla_put:
            if (asset >= y.size()) throw ShapeError("vanilla put asset index out of range");
            return std::max(strike - y[asset], 0.0);
        case Kind::custom:
            break;
    }
    throw ShapeError("custom payoffs are defined on grid nodes only");
}

Eigen::VectorXd evaluate_payoff(const PayoffSpec& payoff, const Grid& grid) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()));
    if (payoff.kind == PayoffSpec::Kind::custom) {
        if (payoff.custom_values.size() != grid.size()) {
            throw ShapeError("custom payoff has " + std::to_string(payoff.custom_values.size()) +
                             " values for a grid of " + std::to_string(grid.size()) + " nodes");
        }
    }
    for (std::size_t flat : grid.interior_nodes()) {
        const auto i = static_cast<Eigen::Index>(flat);
        if (payoff.kind == PayoffSpec::Kind::custom) {
            g(i) = payoff.custom_values[flat];
        } else {
            const auto x = grid.point(flat);
            g(i) = payoff(exp_transform(x));
        }
    }
    return g;
}

void write_grid_csv(std::ostream& os, const Grid& grid, const Eigen::VectorXd& values) {
    if (static_cast<std::size_t>(values.size()) != grid.size()) {
        throw ShapeError("grid dump expects a full-grid field");
    }
    const auto old_precision = os.precision(17);
    for (std::size_t i = 0; i < grid.dimension(); ++i) os << "x" << i << ",";
    for (std::size_t i = 0; i < grid.dimension(); ++i) os << "y" << i << ",";
    os << "class,value\n";
    for (std::size_t flat = 0; flat < grid.size(); ++flat) {
        const auto x = grid.point(flat);
        for (double v : x) os << v << ",";
        for (double v : x) os << std::exp(v) << ",";
        os << (grid.node_class(flat) == NodeClass::interior ? "interior" : "dirichlet") << ","
           << values(static_cast<Eigen::Index>(flat)) << "\n";
    }
    os.precision(old_precision);
}

}  // namespace tdbs
