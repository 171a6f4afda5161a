#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace btimc {

using StateRef = Eigen::Ref<const Eigen::VectorXd>;

/// Axis-aligned box. Infinite bounds are allowed where a box is used as an
/// integration region; partition domains must be finite and non-degenerate.
struct StateBox {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;

    /// Builds a box and checks lower < upper on every axis.
    static StateBox checked(Eigen::VectorXd lower, Eigen::VectorXd upper);

    std::size_t dim() const { return static_cast<std::size_t>(lower.size()); }
    bool contains(const StateRef& x) const;
    bool contains(const StateBox& other) const;
    bool intersects(const StateBox& other) const;
    Eigen::VectorXd center() const { return 0.5 * (lower + upper); }
    Eigen::VectorXd width() const { return upper - lower; }
};

inline constexpr int kMaxPrecision = 30;

/// Node of the binary partition tree: the first `length` bits of a cell path,
/// stored most-significant-bit first so that integer order equals string order
/// among ids of equal length.
class CellId {
public:
    constexpr CellId() = default;
    CellId(std::uint64_t value, int length);

    static CellId from_string(std::string_view bits);

    std::uint64_t value() const noexcept { return value_; }
    int length() const noexcept { return length_; }

    /// Bit at depth i (0 = root split).
    bool bit(int i) const;
    CellId prefix(int l) const;
    CellId child(bool b) const;
    std::string to_string() const;

    auto operator<=>(const CellId&) const = default;

private:
    std::uint64_t value_ = 0;
    int length_ = 0;
};

/// Length of the longest common prefix of two ids of equal length.
int common_prefix_length(CellId a, CellId b);

/// The map from a box-shaped state space onto binary strings of length q.
/// Bit i halves dimension split_order[i]; the default order is cyclic.
/// Slices are half-open [a, b) except the topmost slice on each axis, which is
/// closed, so every point of the closed domain has exactly one cell.
class PartitionScheme {
public:
    PartitionScheme() = default;
    PartitionScheme(StateBox domain, int precision);
    PartitionScheme(StateBox domain, int precision, std::vector<int> split_order);

    const StateBox& domain() const { return domain_; }
    int precision() const { return precision_; }
    std::size_t dim() const { return domain_.dim(); }
    std::size_t cell_count() const { return std::size_t{1} << precision_; }
    const std::vector<int>& split_order() const { return split_order_; }

    /// Number of halvings applied to dimension d within the first `level` bits.
    int splits(std::size_t d, int level) const;
    int splits(std::size_t d) const { return splits(d, precision_); }
    /// Number of slices along dimension d at full precision.
    std::uint64_t slices(std::size_t d) const { return std::uint64_t{1} << splits(d); }

    CellId encode(const StateRef& x) const;
    CellId encode(const StateRef& x, int level) const;

    StateBox cell_box(CellId s) const;
    Eigen::VectorXd cell_center(CellId s) const;

    /// Cells whose boxes lie entirely inside `region` (an under-approximation),
    /// sorted by id. Empty when no cell fits.
    std::vector<CellId> project_set(const StateBox& region) const;

    /// Per-dimension slice indices of a level-q cell.
    std::vector<std::uint64_t> grid_index(CellId s) const;
    /// Inverse of grid_index.
    CellId compose(std::span<const std::uint64_t> slice_index) const;

    /// Lower edge of slice j along dimension d at the given number of halvings.
    double slice_edge(std::size_t d, std::uint64_t j, int halvings) const;

    bool operator==(const PartitionScheme& other) const;

private:
    std::uint64_t slice_of(std::size_t d, double x, int halvings) const;

    StateBox domain_;
    int precision_ = 0;
    std::vector<int> split_order_;
};

}  // namespace btimc
