#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace tdbs {

/// Knock-out region in asset space: a box, optionally cut by the
/// up-and-out condition y_1 + ... + y_n >= sum_barrier.
struct DomainSpec {
    std::vector<double> lower;
    std::vector<double> upper;
    std::optional<double> sum_barrier;

    std::size_t dimension() const noexcept { return lower.size(); }
    /// Throws DomainError when the box is not strictly inside the positive orthant.
    void validate() const;
    /// True when y lies strictly inside the knock-out region.
    bool contains(std::span<const double> y) const;
};

std::vector<double> log_transform(std::span<const double> y);
std::vector<double> exp_transform(std::span<const double> x);

enum class NodeClass : std::uint8_t { interior, dirichlet };

/// Where a norm is measured: every interior node, or the central half of
/// the box along each axis.
enum class Region { interior, core };

/// Uniform tensor grid over the log image of the box. Node k of axis i sits
/// at x = ln(lower_i) + k h_i; the flat index runs fastest along axis 0.
class Grid {
public:
    /// Nodes on the box faces, and nodes for which `knocked_out(x)` holds,
    /// are classified Dirichlet.
    Grid(std::vector<double> x_lower, std::vector<double> x_upper,
         std::vector<std::size_t> nodes_per_axis,
         const std::function<bool(std::span<const double>)>& knocked_out = {});

    std::size_t dimension() const noexcept { return nodes_.size(); }
    std::size_t nodes(std::size_t axis) const { return nodes_.at(axis); }
    std::span<const std::size_t> nodes_per_axis() const noexcept { return nodes_; }
    double spacing(std::size_t axis) const { return spacing_.at(axis); }
    double lower(std::size_t axis) const { return lower_.at(axis); }
    double upper(std::size_t axis) const { return upper_.at(axis); }
    double coordinate(std::size_t axis, std::size_t k) const;

    std::size_t size() const noexcept { return classes_.size(); }
    std::size_t interior_count() const noexcept { return interior_.size(); }
    NodeClass node_class(std::size_t flat) const { return classes_.at(flat); }
    /// Position in the interior ordering, or -1 for Dirichlet nodes.
    std::ptrdiff_t interior_index(std::size_t flat) const { return interior_index_.at(flat); }
    std::span<const std::size_t> interior_nodes() const noexcept { return interior_; }

    std::vector<std::size_t> multi_index(std::size_t flat) const;
    std::size_t flat_index(std::span<const std::size_t> multi) const;
    std::size_t stride(std::size_t axis) const { return strides_.at(axis); }
    std::vector<double> point(std::size_t flat) const;

    /// Per-node membership of the measurement region (interior nodes only).
    std::vector<bool> region_mask(Region region) const;

    /// Multilinear interpolation of a full-grid nodal field at log point x.
    double interpolate(const Eigen::VectorXd& values, std::span<const double> x) const;

    Eigen::VectorXd scatter(const Eigen::VectorXd& interior_values) const;
    Eigen::VectorXd gather(const Eigen::VectorXd& full_values) const;

private:
    std::vector<double> lower_, upper_, spacing_;
    std::vector<std::size_t> nodes_, strides_;
    std::vector<NodeClass> classes_;
    std::vector<std::ptrdiff_t> interior_index_;
    std::vector<std::size_t> interior_;
};

/// Box faces are Dirichlet; with a sum barrier every node with
/// sum_i exp(x_i) >= L is Dirichlet as well (staircase mask).
Grid build_grid(const DomainSpec& domain, std::span<const std::size_t> nodes_per_axis);

struct PayoffSpec {
    enum class Kind { basket_put, basket_call, vanilla_put, gmmb, custom };

    Kind kind = Kind::basket_put;
    double strike = 0.0;
    std::size_t asset = 0;
    std::vector<double> custom_values;  // one value per grid node

    static PayoffSpec basket_put(double k) { return {Kind::basket_put, k, 0, {}}; }
    static PayoffSpec basket_call(double k) { return {Kind::basket_call, k, 0, {}}; }
    static PayoffSpec vanilla_put(double k, std::size_t asset) {
        return {Kind::vanilla_put, k, asset, {}};
    }
    static PayoffSpec gmmb(double k) { return {Kind::gmmb, k, 0, {}}; }
    static PayoffSpec custom(std::vector<double> values) {
        return {Kind::custom, 0.0, 0, std::move(values)};
    }

    /// Payoff at an asset vector; not defined for custom payoffs.
    double operator()(std::span<const double> y) const;
};

/// Nodal payoff on the full grid; Dirichlet nodes are forced to 0.
Eigen::VectorXd evaluate_payoff(const PayoffSpec& payoff, const Grid& grid);

/// CSV dump: one row per node with log and asset coordinates, class and value.
void write_grid_csv(std::ostream& os, const Grid& grid, const Eigen::VectorXd& values);

}  // namespace tdbs
