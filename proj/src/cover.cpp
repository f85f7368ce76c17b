#include "gensep/cover.hpp"

#include "gensep/error.hpp"

#include <algorithm>
#include <bit>

namespace gensep {

std::size_t ColumnSet::count() const noexcept {
    std::size_t c = 0;
    for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
}

bool ColumnSet::none() const noexcept {
    return std::all_of(words_.begin(), words_.end(), [](auto w) { return w == 0; });
}

bool ColumnSet::intersects(const ColumnSet& other) const noexcept {
    for (std::size_t i = 0; i < words_.size(); ++i) {
        if (words_[i] & other.words_[i]) return true;
    }
    return false;
}

bool ColumnSet::subset_of(const ColumnSet& other) const noexcept {
    for (std::size_t i = 0; i < words_.size(); ++i) {
        if (words_[i] & ~other.words_[i]) return false;
    }
    return true;
}

void ColumnSet::subtract(const ColumnSet& other) noexcept {
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= ~other.words_[i];
}

void ColumnSet::unite(const ColumnSet& other) noexcept {
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= other.words_[i];
}

std::vector<std::size_t> ColumnSet::indices() const {
    std::vector<std::size_t> out;
    for (std::size_t w = 0; w < words_.size(); ++w) {
        std::uint64_t bits = words_[w];
        while (bits) {
            out.push_back(w * 64 + static_cast<std::size_t>(std::countr_zero(bits)));
            bits &= bits - 1;
        }
    }
    return out;
}

PathMatrix::PathMatrix(std::vector<std::string> columns) : columns_(std::move(columns)) {}

void PathMatrix::add_path(std::span<const std::size_t> cols) {
    ColumnSet row(columns_.size());
    for (auto c : cols) {
        if (c >= columns_.size()) throw ArgumentError("PathMatrix: column index out of range");
        row.set(c);
    }
    if (row.count() < 2) throw ArgumentError("PathMatrix: a path row needs at least its two endpoints");
    rows_.push_back(std::move(row));
}

void PathMatrix::add_row(const std::vector<int>& entries) {
    if (entries.size() != columns_.size()) throw ArgumentError("PathMatrix: row width mismatch");
    ColumnSet row(columns_.size());
    for (std::size_t j = 0; j < entries.size(); ++j) {
        if (entries[j] != 0) row.set(j);
    }
    rows_.push_back(std::move(row));
}

std::size_t PathMatrix::column_index(const std::string& name) const {
    auto it = std::find(columns_.begin(), columns_.end(), name);
    if (it == columns_.end()) throw ArgumentError("PathMatrix: unknown column '" + name + "'");
    return static_cast<std::size_t>(it - columns_.begin());
}

namespace {

/// Drops duplicate rows and rows that contain another row: covering the
/// smaller row covers the larger one.
std::vector<ColumnSet> reduce_rows(std::vector<ColumnSet> rows) {
    std::sort(rows.begin(), rows.end(), [](const ColumnSet& a, const ColumnSet& b) {
        const auto ca = a.count(), cb = b.count();
        return ca != cb ? ca < cb : a < b;
    });
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    std::vector<ColumnSet> kept;
    for (auto& r : rows) {
        const bool dominated = std::any_of(kept.begin(), kept.end(), [&](const ColumnSet& k) { return k.subset_of(r); });
        if (!dominated) kept.push_back(std::move(r));
    }
    return kept;
}

/// Size of a greedily built family of pairwise disjoint rows; any cover
/// needs a distinct column for each of them.
std::size_t packing_bound(const std::vector<ColumnSet>& rows) {
    std::vector<std::size_t> order(rows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return rows[a].count() < rows[b].count(); });
    ColumnSet used(rows.front().width());
    std::size_t bound = 0;
    for (auto i : order) {
        if (!rows[i].intersects(used)) {
            used.unite(rows[i]);
            ++bound;
        }
    }
    return bound;
}

std::size_t greedy_cover_size(const std::vector<ColumnSet>& rows) {
    const std::size_t width = rows.front().width();
    std::vector<char> covered(rows.size(), 0);
    std::size_t remaining = rows.size(), picks = 0;
    while (remaining > 0) {
        std::size_t best = 0, best_hits = 0;
        for (std::size_t c = 0; c < width; ++c) {
            std::size_t hits = 0;
            for (std::size_t r = 0; r < rows.size(); ++r) {
                if (!covered[r] && rows[r].test(c)) ++hits;
            }
            if (hits > best_hits) {
                best_hits = hits;
                best = c;
            }
        }
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (!covered[r] && rows[r].test(best)) {
                covered[r] = 1;
                --remaining;
            }
        }
        ++picks;
    }
    return picks;
}

/// Whether the (uncovered) rows can be hit with at most `budget` columns.
bool coverable(const std::vector<ColumnSet>& rows, std::size_t budget) {
    if (rows.empty()) return true;
    if (budget == 0) return false;
    std::size_t branch = 0;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto c = rows[r].count();
        if (c == 0) return false;
        if (c < rows[branch].count()) branch = r;
    }
    if (packing_bound(rows) > budget) return false;

    ColumnSet forbidden(rows.front().width());
    for (auto col : rows[branch].indices()) {
        std::vector<ColumnSet> next;
        next.reserve(rows.size());
        bool dead = false;
        for (const auto& r : rows) {
            if (r.test(col)) continue;
            ColumnSet reduced = r;
            reduced.subtract(forbidden);
            if (reduced.none()) {
                dead = true;
                break;
            }
            next.push_back(std::move(reduced));
        }
        if (!dead && coverable(next, budget - 1)) return true;
        // later siblings search covers without `col`
        forbidden.set(col);
    }
    return false;
}

}  // namespace

std::optional<std::vector<std::size_t>> minimum_cover(const std::vector<ColumnSet>& rows, const ColumnSet& allowed) {
    std::vector<ColumnSet> restricted;
    restricted.reserve(rows.size());
    ColumnSet disallowed(allowed.width());
    for (std::size_t c = 0; c < allowed.width(); ++c) {
        if (!allowed.test(c)) disallowed.set(c);
    }
    for (const auto& r : rows) {
        if (r.width() != allowed.width()) throw ArgumentError("minimum_cover: row width mismatch");
        ColumnSet reduced = r;
        reduced.subtract(disallowed);
        if (reduced.none()) return std::nullopt;
        restricted.push_back(std::move(reduced));
    }
    if (restricted.empty()) return std::vector<std::size_t>{};
    restricted = reduce_rows(std::move(restricted));

    const std::size_t upper = greedy_cover_size(restricted);
    std::size_t size = packing_bound(restricted);
    while (size < upper && !coverable(restricted, size)) ++size;

    // Fix columns in ascending order, keeping each one whenever a cover of
    // the optimal size still exists; this yields the lexicographically
    // smallest minimum cover.
    std::vector<std::size_t> chosen;
    std::vector<ColumnSet> remaining = restricted;
    for (std::size_t col = 0; col < allowed.width() && !remaining.empty(); ++col) {
        bool present = false;
        for (const auto& r : remaining) present = present || r.test(col);
        if (!present) continue;
        std::vector<ColumnSet> without_hit;
        for (const auto& r : remaining) {
            if (!r.test(col)) without_hit.push_back(r);
        }
        if (coverable(without_hit, size - chosen.size() - 1)) {
            chosen.push_back(col);
            remaining = std::move(without_hit);
        } else {
            for (auto& r : remaining) r.reset(col);
        }
    }
    return chosen;
}

}  // namespace gensep
