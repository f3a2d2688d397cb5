#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "audit/iw_mapper.hpp"

namespace audit {

// Items are compact ids; for cultural configurations they are the schema's
// cumulative (variable, level) offsets, so item order is canonical.
using Item = int;
using Transaction = std::vector<Item>;

struct Pattern {
    std::vector<Item> items;  // sorted, unique
    long count = 0;
    double support = 0;
};

/// Closed frequent itemsets (support >= min_support, no proper superset of
/// identical support), mined via FP-growth over an FP-tree with a closedness
/// post-filter on the frequent set. Singletons included.
std::vector<Pattern> mine_closed_itemsets(const std::vector<Transaction>& transactions,
                                          double min_support);

/// Exhaustive testing oracle. Enumerates every item subset via a
/// superset-count DP; guarded to <= 20 distinct items and <= 200 transactions.
std::vector<Pattern> brute_force_closed_itemsets(const std::vector<Transaction>& transactions,
                                                 double min_support);

// --- IW-plane grid ---------------------------------------------------------

struct GridCellKey {
    long ix = 0;
    long iy = 0;
    auto operator<=>(const GridCellKey&) const = default;
};

/// Half-open cells anchored at the origin: a point belongs to
/// (floor(z1/side), floor(z2/side)). Throws on non-finite coordinates.
std::map<GridCellKey, std::vector<uint64_t>> grid_assign(const std::vector<IWPoint>& points,
                                                         double side);

struct CellMiningResult {
    GridCellKey cell;
    size_t n_transactions = 0;
    std::vector<Pattern> patterns;
};

struct AggregationParams {
    double rho = 0.5;
    int min_cells = 2;
    // When false, the per-cell maximum support is taken over multi-item
    // patterns only (falls back to no filtering if a cell has none).
    bool singletons_in_max = true;
    std::function<std::string(const std::vector<Item>&)> itemset_string;
};

struct AggregatedPattern {
    std::vector<Item> items;
    std::string itemset_label;
    int n_cells = 0;
    double avg_support = 0;
    double support_min = 0, support_max = 0;
    double avg_cell_personas = 0;
};

/// Keeps, per cell, itemsets with support >= rho * max cell support, groups
/// them across cells, drops groups below min_cells, and reports per-group
/// statistics. Sorted by n_cells desc, avg support desc, itemset label asc.
std::vector<AggregatedPattern> filter_and_aggregate(const std::vector<CellMiningResult>& cells,
                                                    const AggregationParams& params);

}  // namespace audit
