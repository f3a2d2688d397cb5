#include "audit/pattern_miner.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <unordered_map>

namespace audit {

namespace {

long min_count_for(double min_support, size_t n_transactions) {
    if (!(min_support > 0.0) || min_support > 1.0) {
        throw ValidationError("min_support must be in (0, 1]");
    }
    double raw = min_support * static_cast<double>(n_transactions);
    long c = static_cast<long>(std::ceil(raw - 1e-9));
    return std::max<long>(c, 1);
}

Transaction canonical_transaction(const Transaction& t) {
    Transaction out = t;
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

struct FpNode {
    Item item = -1;
    long count = 0;
    FpNode* parent = nullptr;
    std::map<Item, std::unique_ptr<FpNode>> children;
    FpNode* next = nullptr;  // header chain
};

struct FpTree {
    FpNode root;
    // Items in rank order (most frequent first); header chain heads.
    std::vector<Item> items;
    std::unordered_map<Item, FpNode*> headers;
    std::unordered_map<Item, long> item_counts;

    void insert(const std::vector<Item>& ranked_items, long count) {
        FpNode* node = &root;
        for (Item item : ranked_items) {
            auto it = node->children.find(item);
            if (it == node->children.end()) {
                auto child = std::make_unique<FpNode>();
                child->item = item;
                child->parent = node;
                child->next = headers[item];
                headers[item] = child.get();
                it = node->children.emplace(item, std::move(child)).first;
            }
            it->second->count += count;
            node = it->second.get();
        }
    }
};

// Weighted transactions let conditional pattern bases reuse the same builder.
FpTree build_tree(const std::vector<std::pair<Transaction, long>>& transactions, long min_count) {
    FpTree tree;
    std::unordered_map<Item, long> counts;
    for (const auto& [t, w] : transactions) {
        for (Item item : t) counts[item] += w;
    }
    for (const auto& [item, count] : counts) {
        if (count >= min_count) {
            tree.items.push_back(item);
            tree.item_counts[item] = count;
        }
    }
    // Rank: frequency descending, then item ascending (deterministic).
    std::sort(tree.items.begin(), tree.items.end(), [&](Item a, Item b) {
        long ca = tree.item_counts[a], cb = tree.item_counts[b];
        if (ca != cb) return ca > cb;
        return a < b;
    });
    std::unordered_map<Item, size_t> rank;
    for (size_t i = 0; i < tree.items.size(); ++i) rank[tree.items[i]] = i;

    for (const auto& [t, w] : transactions) {
        std::vector<Item> kept;
        for (Item item : t) {
            if (rank.count(item)) kept.push_back(item);
        }
        std::sort(kept.begin(), kept.end(), [&](Item a, Item b) { return rank[a] < rank[b]; });
        if (!kept.empty()) tree.insert(kept, w);
    }
    return tree;
}

void fp_growth(const FpTree& tree, long min_count, std::vector<Item>& suffix,
               std::vector<std::pair<std::vector<Item>, long>>& out) {
    // Least frequent first, so each suffix extends toward the tree root.
    for (size_t i = tree.items.size(); i > 0; --i) {
        Item item = tree.items[i - 1];
        long support = tree.item_counts.at(item);

        suffix.push_back(item);
        std::vector<Item> itemset = suffix;
        std::sort(itemset.begin(), itemset.end());
        out.emplace_back(std::move(itemset), support);

        // Conditional pattern base: prefix paths above each occurrence.
        std::vector<std::pair<Transaction, long>> base;
        for (FpNode* node = tree.headers.at(item); node; node = node->next) {
            Transaction path;
            for (FpNode* up = node->parent; up && up->item != -1; up = up->parent) {
                path.push_back(up->item);
            }
            if (!path.empty()) base.emplace_back(std::move(path), node->count);
        }
        if (!base.empty()) {
            FpTree conditional = build_tree(base, min_count);
            if (!conditional.items.empty()) fp_growth(conditional, min_count, suffix, out);
        }
        suffix.pop_back();
    }
}

// Keep itemsets with no proper superset of identical support. Supersets with
// equal support are themselves frequent, so checking within the mined set is
// exhaustive.
std::vector<Pattern> filter_closed(std::vector<std::pair<std::vector<Item>, long>>& frequent,
                                   size_t n_transactions) {
    // Dense remap for 64-bit masks.
    std::map<Item, int> dense;
    for (const auto& [items, count] : frequent) {
        for (Item item : items) dense.emplace(item, 0);
    }
    bool use_masks = dense.size() <= 64;
    int next_bit = 0;
    for (auto& [item, bit] : dense) bit = next_bit++;

    std::map<long, std::vector<size_t>> by_count;
    std::vector<uint64_t> masks(frequent.size(), 0);
    for (size_t i = 0; i < frequent.size(); ++i) {
        by_count[frequent[i].second].push_back(i);
        if (use_masks) {
            for (Item item : frequent[i].first) masks[i] |= 1ull << dense[item];
        }
    }

    auto is_subset = [&](size_t a, size_t b) {
        if (use_masks) return (masks[a] & masks[b]) == masks[a];
        return std::includes(frequent[b].first.begin(), frequent[b].first.end(),
                             frequent[a].first.begin(), frequent[a].first.end());
    };

    std::vector<Pattern> out;
    for (const auto& [count, indices] : by_count) {
        for (size_t a : indices) {
            bool closed = true;
            for (size_t b : indices) {
                if (a == b || frequent[b].first.size() <= frequent[a].first.size()) continue;
                if (is_subset(a, b)) {
                    closed = false;
                    break;
                }
            }
            if (closed) {
                Pattern p;
                p.items = frequent[a].first;
                p.count = count;
                p.support = static_cast<double>(count) / static_cast<double>(n_transactions);
                out.push_back(std::move(p));
            }
        }
    }
    std::sort(out.begin(), out.end(),
              [](const Pattern& a, const Pattern& b) { return a.items < b.items; });
    return out;
}

}  // namespace

std::vector<Pattern> mine_closed_itemsets(const std::vector<Transaction>& transactions,
                                          double min_support) {
    if (transactions.empty()) throw ValidationError("cannot mine an empty dataset");
    long min_count = min_count_for(min_support, transactions.size());

    std::vector<std::pair<Transaction, long>> weighted;
    weighted.reserve(transactions.size());
    for (const auto& t : transactions) weighted.emplace_back(canonical_transaction(t), 1);

    FpTree tree = build_tree(weighted, min_count);
    std::vector<std::pair<std::vector<Item>, long>> frequent;
    std::vector<Item> suffix;
    fp_growth(tree, min_count, suffix, frequent);
    return filter_closed(frequent, transactions.size());
}

std::vector<Pattern> brute_force_closed_itemsets(const std::vector<Transaction>& transactions,
                                                 double min_support) {
    if (transactions.empty()) throw ValidationError("cannot mine an empty dataset");
    if (transactions.size() > 200) throw ValidationError("oracle instance too large (transactions)");
    long min_count = min_count_for(min_support, transactions.size());

    std::map<Item, int> dense;
    for (const auto& t : transactions) {
        for (Item item : t) dense.emplace(item, 0);
    }
    if (dense.size() > 20) throw ValidationError("oracle instance too large (items)");
    int next_bit = 0;
    for (auto& [item, bit] : dense) bit = next_bit++;
    std::vector<Item> bit_to_item(dense.size());
    for (const auto& [item, bit] : dense) bit_to_item[static_cast<size_t>(bit)] = item;

    const size_t m = dense.size();
    const size_t universe = 1ull << m;
    // f[s] starts as "# transactions whose item mask equals s" and the DP turns
    // it into "# transactions whose mask is a superset of s".
    std::vector<long> f(universe, 0);
    for (const auto& t : transactions) {
        uint64_t mask = 0;
        for (Item item : t) mask |= 1ull << dense[item];
        ++f[mask];
    }
    for (size_t bit = 0; bit < m; ++bit) {
        uint64_t b = 1ull << bit;
        for (size_t s = 0; s < universe; ++s) {
            if (!(s & b)) f[s] += f[s | b];
        }
    }

    std::vector<Pattern> out;
    for (size_t s = 1; s < universe; ++s) {
        if (f[s] < min_count) continue;
        bool closed = true;
        for (size_t bit = 0; bit < m; ++bit) {
            uint64_t b = 1ull << bit;
            if (!(s & b) && f[s | b] == f[s]) {
                closed = false;
                break;
            }
        }
        if (!closed) continue;
        Pattern p;
        for (size_t bit = 0; bit < m; ++bit) {
            if (s & (1ull << bit)) p.items.push_back(bit_to_item[bit]);
        }
        std::sort(p.items.begin(), p.items.end());
        p.count = f[s];
        p.support = static_cast<double>(f[s]) / static_cast<double>(transactions.size());
        out.push_back(std::move(p));
    }
    std::sort(out.begin(), out.end(),
              [](const Pattern& a, const Pattern& b) { return a.items < b.items; });
    return out;
}

std::map<GridCellKey, std::vector<uint64_t>> grid_assign(const std::vector<IWPoint>& points,
                                                         double side) {
    if (!(side > 0)) throw ValidationError("grid side must be positive");
    std::map<GridCellKey, std::vector<uint64_t>> cells;
    for (const auto& p : points) {
        if (!std::isfinite(p.z1) || !std::isfinite(p.z2)) {
            throw ValidationError("non-finite coordinates for config " + std::to_string(p.config_id));
        }
        GridCellKey key{static_cast<long>(std::floor(p.z1 / side)),
                        static_cast<long>(std::floor(p.z2 / side))};
        cells[key].push_back(p.config_id);
    }
    return cells;
}

std::vector<AggregatedPattern> filter_and_aggregate(const std::vector<CellMiningResult>& cells,
                                                    const AggregationParams& params) {
    if (params.rho < 0 || params.rho > 1) throw ValidationError("rho must be in [0, 1]");
    if (params.min_cells < 1) throw ValidationError("min_cells must be >= 1");

    auto label_of = [&](const std::vector<Item>& items) {
        if (params.itemset_string) return params.itemset_string(items);
        std::string s;
        for (size_t i = 0; i < items.size(); ++i) {
            if (i) s += ";";
            s += std::to_string(items[i]);
        }
        return s;
    };

    struct Accum {
        int n_cells = 0;
        double support_sum = 0;
        double support_min = 1, support_max = 0;
        double member_sum = 0;
    };
    std::map<std::vector<Item>, Accum> groups;

    for (const auto& cell : cells) {
        if (cell.patterns.empty()) continue;
        double s_max = 0;
        bool found = false;
        for (const auto& p : cell.patterns) {
            if (!params.singletons_in_max && p.items.size() < 2) continue;
            s_max = std::max(s_max, p.support);
            found = true;
        }
        if (!found) s_max = 0;  // no multi-item pattern: keep everything
        double threshold = params.rho * s_max - 1e-12;
        for (const auto& p : cell.patterns) {
            if (p.support < threshold) continue;
            Accum& acc = groups[p.items];
            acc.n_cells += 1;
            acc.support_sum += p.support;
            acc.support_min = std::min(acc.support_min, p.support);
            acc.support_max = std::max(acc.support_max, p.support);
            acc.member_sum += static_cast<double>(cell.n_transactions);
        }
    }

    std::vector<AggregatedPattern> out;
    for (const auto& [items, acc] : groups) {
        if (acc.n_cells < params.min_cells) continue;
        AggregatedPattern ap;
        ap.items = items;
        ap.itemset_label = label_of(items);
        ap.n_cells = acc.n_cells;
        ap.avg_support = acc.support_sum / acc.n_cells;
        ap.support_min = acc.support_min;
        ap.support_max = acc.support_max;
        ap.avg_cell_personas = acc.member_sum / acc.n_cells;
        out.push_back(std::move(ap));
    }
    std::sort(out.begin(), out.end(), [](const AggregatedPattern& a, const AggregatedPattern& b) {
        if (a.n_cells != b.n_cells) return a.n_cells > b.n_cells;
        if (a.avg_support != b.avg_support) return a.avg_support > b.avg_support;
        return a.itemset_label < b.itemset_label;
    });
    return out;
}

}  // namespace audit
