#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gensep {

/// Fixed-width bitset over solver columns.
class ColumnSet {
public:
    ColumnSet() = default;
    explicit ColumnSet(std::size_t width) : width_(width), words_((width + 63) / 64, 0) {}

    std::size_t width() const noexcept { return width_; }
    bool test(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1u; }
    void set(std::size_t i) { words_[i / 64] |= std::uint64_t{1} << (i % 64); }
    void reset(std::size_t i) { words_[i / 64] &= ~(std::uint64_t{1} << (i % 64)); }
    std::size_t count() const noexcept;
    bool none() const noexcept;
    bool intersects(const ColumnSet& other) const noexcept;
    bool subset_of(const ColumnSet& other) const noexcept;
    /// Removes every column present in `other`.
    void subtract(const ColumnSet& other) noexcept;
    void unite(const ColumnSet& other) noexcept;
    std::vector<std::size_t> indices() const;

    friend bool operator==(const ColumnSet&, const ColumnSet&) = default;
    friend auto operator<=>(const ColumnSet& a, const ColumnSet& b) { return a.words_ <=> b.words_; }

private:
    std::size_t width_ = 0;
    std::vector<std::uint64_t> words_;
};

/// Binary incidence of enumerated paths over candidate columns: row r has a
/// one in column j iff variable j lies on path r (endpoints included).
class PathMatrix {
public:
    explicit PathMatrix(std::vector<std::string> columns);

    const std::vector<std::string>& columns() const noexcept { return columns_; }
    std::size_t column_count() const noexcept { return columns_.size(); }
    std::size_t row_count() const noexcept { return rows_.size(); }
    const std::vector<ColumnSet>& rows() const noexcept { return rows_; }
    bool at(std::size_t row, std::size_t col) const { return rows_[row].test(col); }

    /// Adds the path visiting the given column indices. Throws ArgumentError
    /// for fewer than two distinct columns or an out-of-range index.
    void add_path(std::span<const std::size_t> cols);
    /// Adds a row given as 0/1 entries, one per column.
    void add_row(const std::vector<int>& entries);

    std::size_t column_index(const std::string& name) const;

private:
    std::vector<std::string> columns_;
    std::vector<ColumnSet> rows_;
};

/// Minimum-cardinality hitting set over the rows, restricted to `allowed`
/// columns. Among minimum covers the lexicographically smallest ascending
/// index vector is returned. Empty optional when some row has no allowed
/// column (no cover exists). Branch-and-bound with a greedy upper bound and
/// a disjoint-row packing lower bound.
std::optional<std::vector<std::size_t>> minimum_cover(const std::vector<ColumnSet>& rows, const ColumnSet& allowed);

}  // namespace gensep
