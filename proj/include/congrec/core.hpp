#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "congrec/errors.hpp"

namespace congrec {

using UserId = std::int32_t;
using ItemId = std::int32_t;

constexpr double kRatingMin = 1.0;
constexpr double kRatingMax = 5.0;

// Maps external string ids to dense contiguous ids. Dense ids follow the
// lexicographic order of the external ids, which makes the mapping a pure
// function of the id set and independent of record order.
class IdMap {
  public:
    IdMap() = default;

    // Names may contain duplicates; they are deduplicated and sorted.
    static IdMap from_names(std::vector<std::string> names) {
        std::sort(names.begin(), names.end());
        names.erase(std::unique(names.begin(), names.end()), names.end());
        IdMap m;
        m.names_ = std::move(names);
        m.index_.reserve(m.names_.size());
        for (std::size_t i = 0; i < m.names_.size(); ++i) {
            m.index_.emplace(m.names_[i], static_cast<std::int32_t>(i));
        }
        return m;
    }

    std::int32_t at(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) {
            throw ValidationError("unknown external id: " + name);
        }
        return it->second;
    }

    bool contains(const std::string& name) const { return index_.count(name) != 0; }

    const std::string& name(std::int32_t dense) const {
        return names_.at(static_cast<std::size_t>(dense));
    }

    std::int32_t size() const { return static_cast<std::int32_t>(names_.size()); }

    const std::vector<std::string>& names() const { return names_; }

  private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, std::int32_t> index_;
};

struct RatingEntry {
    UserId user;
    ItemId item;
    double value;

    friend bool operator==(const RatingEntry&, const RatingEntry&) = default;
};

// Sparse rating matrix with both user-major and item-major adjacency.
// Invariants: at most one entry per (user, item); values in [1, 5]; adjacency
// lists sorted by neighbor id.
class SparseRatings {
  public:
    SparseRatings() = default;

    SparseRatings(std::int32_t n_users, std::int32_t n_items,
                  std::vector<RatingEntry> entries)
        : n_users_(n_users), n_items_(n_items), entries_(std::move(entries)) {
        if (n_users < 0 || n_items < 0) {
            throw ConfigError("rating matrix dimensions must be non-negative");
        }
        std::sort(entries_.begin(), entries_.end(),
                  [](const RatingEntry& a, const RatingEntry& b) {
                      return std::tie(a.user, a.item) < std::tie(b.user, b.item);
                  });
        by_user_.assign(static_cast<std::size_t>(n_users_), {});
        by_item_.assign(static_cast<std::size_t>(n_items_), {});
        const RatingEntry* prev = nullptr;
        for (const auto& e : entries_) {
            if (e.user < 0 || e.user >= n_users_ || e.item < 0 || e.item >= n_items_) {
                throw ValidationError("rating entry (" + std::to_string(e.user) + ", " +
                                      std::to_string(e.item) + ") is out of range");
            }
            if (e.value < kRatingMin || e.value > kRatingMax) {
                throw ValidationError("rating value " + std::to_string(e.value) +
                                      " outside [1, 5] at (" + std::to_string(e.user) +
                                      ", " + std::to_string(e.item) + ")");
            }
            if (prev != nullptr && prev->user == e.user && prev->item == e.item) {
                throw ValidationError("duplicate rating for user " + std::to_string(e.user) +
                                      ", item " + std::to_string(e.item));
            }
            by_user_[static_cast<std::size_t>(e.user)].emplace_back(e.item, e.value);
            by_item_[static_cast<std::size_t>(e.item)].emplace_back(e.user, e.value);
            prev = &e;
        }
    }

    std::int32_t n_users() const { return n_users_; }
    std::int32_t n_items() const { return n_items_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    const std::vector<RatingEntry>& entries() const { return entries_; }

    // (item, value) pairs for one user, sorted by item id.
    std::span<const std::pair<ItemId, double>> user_ratings(UserId u) const {
        return by_user_.at(static_cast<std::size_t>(u));
    }

    // (user, value) pairs for one item, sorted by user id.
    std::span<const std::pair<UserId, double>> item_ratings(ItemId i) const {
        return by_item_.at(static_cast<std::size_t>(i));
    }

    std::size_t user_degree(UserId u) const { return user_ratings(u).size(); }
    std::size_t item_degree(ItemId i) const { return item_ratings(i).size(); }

    bool has(UserId u, ItemId i) const {
        auto row = user_ratings(u);
        auto it = std::lower_bound(row.begin(), row.end(), i,
                                   [](const auto& p, ItemId x) { return p.first < x; });
        return it != row.end() && it->first == i;
    }

  private:
    std::int32_t n_users_ = 0;
    std::int32_t n_items_ = 0;
    std::vector<RatingEntry> entries_;
    std::vector<std::vector<std::pair<ItemId, double>>> by_user_;
    std::vector<std::vector<std::pair<UserId, double>>> by_item_;
};

// Undirected friendship graph over dense user ids. Edges are stored in both
// adjacency lists; lists are sorted and deduplicated; self-loops are rejected.
class SocialGraph {
  public:
    SocialGraph() = default;

    explicit SocialGraph(std::int32_t n_users) : adj_(static_cast<std::size_t>(n_users)) {}

    static SocialGraph from_edges(std::int32_t n_users,
                                  const std::vector<std::pair<UserId, UserId>>& edges) {
        SocialGraph g(n_users);
        for (auto [a, b] : edges) {
            if (a < 0 || a >= n_users || b < 0 || b >= n_users) {
                throw ValidationError("trust edge (" + std::to_string(a) + ", " +
                                      std::to_string(b) + ") is out of range");
            }
            if (a == b) {
                throw ValidationError("self-referential trust edge for user " +
                                      std::to_string(a));
            }
            g.adj_[static_cast<std::size_t>(a)].push_back(b);
            g.adj_[static_cast<std::size_t>(b)].push_back(a);
        }
        for (auto& row : g.adj_) {
            std::sort(row.begin(), row.end());
            row.erase(std::unique(row.begin(), row.end()), row.end());
        }
        for (const auto& row : g.adj_) g.edge_count_ += row.size();
        g.edge_count_ /= 2;
        return g;
    }

    std::int32_t n_users() const { return static_cast<std::int32_t>(adj_.size()); }
    std::size_t edge_count() const { return edge_count_; }

    std::span<const UserId> neighbors(UserId u) const {
        return adj_.at(static_cast<std::size_t>(u));
    }

    std::size_t degree(UserId u) const { return neighbors(u).size(); }

    bool are_friends(UserId a, UserId b) const {
        auto row = neighbors(a);
        return std::binary_search(row.begin(), row.end(), b);
    }

    // All edges as (a, b) with a < b, in lexicographic order.
    std::vector<std::pair<UserId, UserId>> edges() const {
        std::vector<std::pair<UserId, UserId>> out;
        out.reserve(edge_count_);
        for (std::int32_t a = 0; a < n_users(); ++a) {
            for (UserId b : adj_[static_cast<std::size_t>(a)]) {
                if (a < b) out.emplace_back(a, b);
            }
        }
        return out;
    }

  private:
    std::vector<std::vector<UserId>> adj_;
    std::size_t edge_count_ = 0;
};

// Sparse symmetric user-user matrix (congruity, similarity, closeness).
// Absent pairs read as exactly 0 and explicit zeros are never stored, so
// "stored" and "nonzero" coincide. Each stored pair appears in both rows.
class UserPairMatrix {
  public:
    class Builder {
      public:
        explicit Builder(std::int32_t n_users) : n_(n_users) {}

        // Records value for the unordered pair {a, b}. Exact zeros are dropped.
        void set(UserId a, UserId b, double value) {
            if (a < 0 || a >= n_ || b < 0 || b >= n_) {
                throw ValidationError("pair (" + std::to_string(a) + ", " +
                                      std::to_string(b) + ") is out of range");
            }
            if (a == b) {
                throw ValidationError("diagonal pair (" + std::to_string(a) +
                                      ") is not representable");
            }
            if (value == 0.0) return;
            triplets_.emplace_back(a, b, value);
        }

        UserPairMatrix build() && {
            UserPairMatrix m;
            m.n_ = n_;
            m.rows_.assign(static_cast<std::size_t>(n_), {});
            for (auto& [a, b, v] : triplets_) {
                m.rows_[static_cast<std::size_t>(a)].emplace_back(b, v);
                m.rows_[static_cast<std::size_t>(b)].emplace_back(a, v);
            }
            for (std::size_t i = 0; i < m.rows_.size(); ++i) {
                auto& row = m.rows_[i];
                std::sort(row.begin(), row.end());
                for (std::size_t k = 1; k < row.size(); ++k) {
                    if (row[k].first == row[k - 1].first) {
                        throw ValidationError("pair (" + std::to_string(i) + ", " +
                                              std::to_string(row[k].first) +
                                              ") was set more than once");
                    }
                }
                m.stored_ += row.size();
            }
            m.stored_ /= 2;
            return m;
        }

      private:
        std::int32_t n_;
        std::vector<std::tuple<UserId, UserId, double>> triplets_;
    };

    UserPairMatrix() = default;

    explicit UserPairMatrix(std::int32_t n_users)
        : n_(n_users), rows_(static_cast<std::size_t>(n_users)) {}

    std::int32_t n_users() const { return n_; }

    // Number of stored unordered pairs.
    std::size_t stored_pairs() const { return stored_; }

    double value(UserId a, UserId b) const {
        auto row = this->row(a);
        auto it = std::lower_bound(row.begin(), row.end(), b,
                                   [](const auto& p, UserId x) { return p.first < x; });
        if (it != row.end() && it->first == b) return it->second;
        return 0.0;
    }

    bool has(UserId a, UserId b) const {
        auto row = this->row(a);
        auto it = std::lower_bound(row.begin(), row.end(), b,
                                   [](const auto& p, UserId x) { return p.first < x; });
        return it != row.end() && it->first == b;
    }

    // Stored (neighbor, value) pairs for one row, sorted by neighbor id.
    std::span<const std::pair<UserId, double>> row(UserId a) const {
        return rows_.at(static_cast<std::size_t>(a));
    }

    // All stored pairs as (a, b, value) with a < b, in lexicographic order.
    std::vector<std::tuple<UserId, UserId, double>> pairs() const {
        std::vector<std::tuple<UserId, UserId, double>> out;
        out.reserve(stored_);
        for (std::int32_t a = 0; a < n_; ++a) {
            for (const auto& [b, v] : rows_[static_cast<std::size_t>(a)]) {
                if (a < b) out.emplace_back(a, b, v);
            }
        }
        return out;
    }

  private:
    std::int32_t n_ = 0;
    std::vector<std::vector<std::pair<UserId, double>>> rows_;
    std::size_t stored_ = 0;
};

// Dense row-major matrix, just large enough for factor blocks.
class Matrix {
  public:
    Matrix() = default;
    Matrix(std::int32_t rows, std::int32_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols),
          data_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), fill) {}

    std::int32_t rows() const { return rows_; }
    std::int32_t cols() const { return cols_; }

    double* row(std::int32_t r) {
        return data_.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_);
    }
    const double* row(std::int32_t r) const {
        return data_.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_);
    }

    double& at(std::int32_t r, std::int32_t c) {
        return data_[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_) +
                     static_cast<std::size_t>(c)];
    }
    double at(std::int32_t r, std::int32_t c) const {
        return data_[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_) +
                     static_cast<std::size_t>(c)];
    }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

  private:
    std::int32_t rows_ = 0;
    std::int32_t cols_ = 0;
    std::vector<double> data_;
};

inline double dot(const double* a, const double* b, std::int32_t d) {
    double s = 0.0;
    for (std::int32_t k = 0; k < d; ++k) s += a[k] * b[k];
    return s;
}

}  // namespace congrec
