#include "btimc/partition.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "btimc/error.hpp"

namespace btimc {

StateBox StateBox::checked(Eigen::VectorXd lower, Eigen::VectorXd upper) {
    require(lower.size() >= 1, "box must have at least one dimension");
    require(lower.size() == upper.size(), "box bounds differ in dimension");
    for (Eigen::Index d = 0; d < lower.size(); ++d) {
        require(std::isfinite(lower[d]) && std::isfinite(upper[d]),
                "box bounds must be finite");
        require(lower[d] < upper[d], "box lower bound must be below upper bound");
    }
    return StateBox{std::move(lower), std::move(upper)};
}

bool StateBox::contains(const StateRef& x) const {
    if (x.size() != lower.size()) return false;
    for (Eigen::Index d = 0; d < x.size(); ++d) {
        if (!(x[d] >= lower[d] && x[d] <= upper[d])) return false;
    }
    return true;
}

bool StateBox::contains(const StateBox& other) const {
    if (other.dim() != dim()) return false;
    return (other.lower.array() >= lower.array()).all() &&
           (other.upper.array() <= upper.array()).all();
}

bool StateBox::intersects(const StateBox& other) const {
    if (other.dim() != dim()) return false;
    return (other.lower.array() <= upper.array()).all() &&
           (other.upper.array() >= lower.array()).all();
}

CellId::CellId(std::uint64_t value, int length) : value_(value), length_(length) {
    require(length >= 0 && length <= kMaxPrecision, "cell id length out of range");
    require(length == 64 || value < (std::uint64_t{1} << length),
            "cell id value exceeds its length");
}

CellId CellId::from_string(std::string_view bits) {
    require(bits.size() <= static_cast<std::size_t>(kMaxPrecision), "bit string too long");
    std::uint64_t v = 0;
    for (char c : bits) {
        require(c == '0' || c == '1', "bit string may only contain 0 and 1");
        v = (v << 1) | static_cast<std::uint64_t>(c == '1');
    }
    return CellId(v, static_cast<int>(bits.size()));
}

bool CellId::bit(int i) const {
    require(i >= 0 && i < length_, "bit index out of range");
    return ((value_ >> (length_ - 1 - i)) & 1u) != 0;
}

CellId CellId::prefix(int l) const {
    require(l >= 0 && l <= length_, "prefix longer than cell id");
    return CellId(value_ >> (length_ - l), l);
}

CellId CellId::child(bool b) const {
    return CellId((value_ << 1) | static_cast<std::uint64_t>(b), length_ + 1);
}

std::string CellId::to_string() const {
    std::string out(static_cast<std::size_t>(length_), '0');
    for (int i = 0; i < length_; ++i) {
        if (bit(i)) out[static_cast<std::size_t>(i)] = '1';
    }
    return out;
}

int common_prefix_length(CellId a, CellId b) {
    require(a.length() == b.length(), "cell ids of different length");
    const std::uint64_t diff = a.value() ^ b.value();
    if (diff == 0) return a.length();
    const int width = 64 - std::countl_zero(diff);
    return a.length() - width;
}

PartitionScheme::PartitionScheme(StateBox domain, int precision)
    : PartitionScheme(domain, precision, [&] {
          std::vector<int> order(static_cast<std::size_t>(std::max(precision, 0)));
          const int n = static_cast<int>(domain.dim());
          for (std::size_t i = 0; i < order.size(); ++i) {
              order[i] = n > 0 ? static_cast<int>(i) % n : 0;
          }
          return order;
      }()) {}

PartitionScheme::PartitionScheme(StateBox domain, int precision, std::vector<int> split_order)
    : domain_(StateBox::checked(std::move(domain.lower), std::move(domain.upper))),
      precision_(precision),
      split_order_(std::move(split_order)) {
    require(precision_ >= 1 && precision_ <= kMaxPrecision, "precision must lie in [1, 30]");
    require(split_order_.size() == static_cast<std::size_t>(precision_),
            "split order length must equal the precision");
    for (int d : split_order_) {
        require(d >= 0 && static_cast<std::size_t>(d) < dim(), "split order entry out of range");
    }
}

int PartitionScheme::splits(std::size_t d, int level) const {
    int count = 0;
    for (int i = 0; i < level; ++i) {
        if (static_cast<std::size_t>(split_order_[static_cast<std::size_t>(i)]) == d) ++count;
    }
    return count;
}

double PartitionScheme::slice_edge(std::size_t d, std::uint64_t j, int halvings) const {
    const auto di = static_cast<Eigen::Index>(d);
    const std::uint64_t n = std::uint64_t{1} << halvings;
    if (j == 0) return domain_.lower[di];
    if (j >= n) return domain_.upper[di];
    const double w = domain_.upper[di] - domain_.lower[di];
    return domain_.lower[di] + w * std::ldexp(static_cast<double>(j), -halvings);
}

std::uint64_t PartitionScheme::slice_of(std::size_t d, double x, int halvings) const {
    const auto di = static_cast<Eigen::Index>(d);
    const std::uint64_t n = std::uint64_t{1} << halvings;
    const double t = (x - domain_.lower[di]) / (domain_.upper[di] - domain_.lower[di]);
    double scaled = std::floor(std::ldexp(t, halvings));
    scaled = std::clamp(scaled, 0.0, static_cast<double>(n - 1));
    auto j = static_cast<std::uint64_t>(scaled);
    // Snap to the edges actually used by cell_box so both agree on boundaries.
    while (j > 0 && x < slice_edge(d, j, halvings)) --j;
    while (j + 1 < n && x >= slice_edge(d, j + 1, halvings)) ++j;
    return j;
}

CellId PartitionScheme::encode(const StateRef& x) const { return encode(x, precision_); }

CellId PartitionScheme::encode(const StateRef& x, int level) const {
    require(level >= 0 && level <= precision_, "encode level exceeds precision");
    if (static_cast<std::size_t>(x.size()) != dim()) {
        fail(ErrorKind::InvalidArgument, "state dimension does not match the partition");
    }
    if (!domain_.contains(x)) fail(ErrorKind::OutOfDomain, "state lies outside the domain");

    std::vector<std::uint64_t> index(dim());
    std::vector<int> halvings(dim());
    for (std::size_t d = 0; d < dim(); ++d) {
        halvings[d] = splits(d, level);
        index[d] = slice_of(d, x[static_cast<Eigen::Index>(d)], halvings[d]);
    }
    std::vector<int> used(dim(), 0);
    std::uint64_t v = 0;
    for (int i = 0; i < level; ++i) {
        const auto d = static_cast<std::size_t>(split_order_[static_cast<std::size_t>(i)]);
        ++used[d];
        const std::uint64_t b = (index[d] >> (halvings[d] - used[d])) & 1u;
        v = (v << 1) | b;
    }
    return CellId(v, level);
}

StateBox PartitionScheme::cell_box(CellId s) const {
    require(s.length() <= precision_, "cell id longer than the precision");
    std::vector<std::uint64_t> index(dim(), 0);
    std::vector<int> halvings(dim(), 0);
    for (int i = 0; i < s.length(); ++i) {
        const auto d = static_cast<std::size_t>(split_order_[static_cast<std::size_t>(i)]);
        index[d] = (index[d] << 1) | static_cast<std::uint64_t>(s.bit(i));
        ++halvings[d];
    }
    StateBox box{Eigen::VectorXd(dim()), Eigen::VectorXd(dim())};
    for (std::size_t d = 0; d < dim(); ++d) {
        const auto di = static_cast<Eigen::Index>(d);
        box.lower[di] = slice_edge(d, index[d], halvings[d]);
        box.upper[di] = slice_edge(d, index[d] + 1, halvings[d]);
    }
    return box;
}

Eigen::VectorXd PartitionScheme::cell_center(CellId s) const {
    require(s.length() == precision_, "cell center requires a full-precision cell");
    return cell_box(s).center();
}

std::vector<std::uint64_t> PartitionScheme::grid_index(CellId s) const {
    require(s.length() == precision_, "grid index requires a full-precision cell");
    std::vector<std::uint64_t> index(dim(), 0);
    for (int i = 0; i < precision_; ++i) {
        const auto d = static_cast<std::size_t>(split_order_[static_cast<std::size_t>(i)]);
        index[d] = (index[d] << 1) | static_cast<std::uint64_t>(s.bit(i));
    }
    return index;
}

CellId PartitionScheme::compose(std::span<const std::uint64_t> slice_index) const {
    require(slice_index.size() == dim(), "slice index dimension mismatch");
    std::vector<int> used(dim(), 0);
    std::uint64_t v = 0;
    for (int i = 0; i < precision_; ++i) {
        const auto d = static_cast<std::size_t>(split_order_[static_cast<std::size_t>(i)]);
        ++used[d];
        const std::uint64_t b = (slice_index[d] >> (splits(d) - used[d])) & 1u;
        v = (v << 1) | b;
    }
    return CellId(v, precision_);
}

std::vector<CellId> PartitionScheme::project_set(const StateBox& region) const {
    require(region.dim() == dim(), "region dimension does not match the partition");
    require(region.intersects(domain_), "region does not intersect the domain");

    std::vector<std::vector<std::uint64_t>> inside(dim());
    for (std::size_t d = 0; d < dim(); ++d) {
        const auto di = static_cast<Eigen::Index>(d);
        const int k = splits(d);
        for (std::uint64_t j = 0; j < (std::uint64_t{1} << k); ++j) {
            if (slice_edge(d, j, k) >= region.lower[di] && slice_edge(d, j + 1, k) <= region.upper[di]) {
                inside[d].push_back(j);
            }
        }
        if (inside[d].empty()) return {};
    }

    std::vector<CellId> cells;
    std::vector<std::size_t> pos(dim(), 0);
    std::vector<std::uint64_t> index(dim());
    while (true) {
        for (std::size_t d = 0; d < dim(); ++d) index[d] = inside[d][pos[d]];
        cells.push_back(compose(index));
        std::size_t d = 0;
        while (d < dim() && ++pos[d] == inside[d].size()) pos[d++] = 0;
        if (d == dim()) break;
    }
    std::sort(cells.begin(), cells.end());
    return cells;
}

bool PartitionScheme::operator==(const PartitionScheme& other) const {
    return precision_ == other.precision_ && split_order_ == other.split_order_ &&
           domain_.lower == other.domain_.lower && domain_.upper == other.domain_.upper;
}

}  // namespace btimc
