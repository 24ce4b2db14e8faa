#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "congrec/core.hpp"
#include "congrec/csv.hpp"
#include "congrec/errors.hpp"

namespace congrec {

// Records as they appear on disk, before id densification.
struct RawRating {
    std::string user;
    std::string item;
    double value;
};

struct RawEdge {
    std::string user;
    std::string friend_of;
};

struct RawHelpfulness {
    std::string rater;
    std::string author;
    int score;
};

// A helpfulness vote over dense ids: `rater` scored a review written by `author`.
struct HelpfulnessEvent {
    UserId rater;
    UserId author;
    int score;

    friend bool operator==(const HelpfulnessEvent&, const HelpfulnessEvent&) = default;
};

inline std::vector<RawRating> load_ratings_csv(const std::string& path) {
    std::vector<RawRating> out;
    for (const auto& row : read_csv(path, "user_id,item_id,rating")) {
        if (row.fields.size() != 3) {
            throw ParseError(path, row.line_number, "expected 3 fields, got " +
                                                        std::to_string(row.fields.size()));
        }
        double v = parse_double(row.fields[2], path, row.line_number);
        if (v < kRatingMin || v > kRatingMax) {
            throw ValidationError(path + ":" + std::to_string(row.line_number) +
                                  ": rating " + row.fields[2] + " outside [1, 5]");
        }
        out.push_back({row.fields[0], row.fields[1], v});
    }
    return out;
}

inline std::vector<RawEdge> load_trust_csv(const std::string& path) {
    std::vector<RawEdge> out;
    for (const auto& row : read_csv(path, "user_id,friend_id")) {
        if (row.fields.size() != 2) {
            throw ParseError(path, row.line_number, "expected 2 fields, got " +
                                                        std::to_string(row.fields.size()));
        }
        if (row.fields[0] == row.fields[1]) {
            throw ValidationError(path + ":" + std::to_string(row.line_number) +
                                  ": user " + row.fields[0] + " listed as their own friend");
        }
        out.push_back({row.fields[0], row.fields[1]});
    }
    return out;
}

inline std::vector<RawHelpfulness> load_helpfulness_csv(const std::string& path) {
    std::vector<RawHelpfulness> out;
    for (const auto& row : read_csv(path, "rater_id,author_id,score")) {
        if (row.fields.size() != 3) {
            throw ParseError(path, row.line_number, "expected 3 fields, got " +
                                                        std::to_string(row.fields.size()));
        }
        std::int64_t s = parse_int(row.fields[2], path, row.line_number);
        if (s < 1 || s > 5) {
            throw ValidationError(path + ":" + std::to_string(row.line_number) +
                                  ": helpfulness score " + row.fields[2] +
                                  " outside [1, 5]");
        }
        if (row.fields[0] == row.fields[1]) {
            throw ValidationError(path + ":" + std::to_string(row.line_number) +
                                  ": user " + row.fields[0] + " rated their own review");
        }
        out.push_back({row.fields[0], row.fields[1], static_cast<int>(s)});
    }
    return out;
}

// A fully densified dataset: ratings, friendships and helpfulness events share
// one dense user id space; items have their own.
struct DenseDataset {
    SparseRatings ratings;
    SocialGraph graph;
    std::vector<HelpfulnessEvent> events;
    IdMap users;
    IdMap items;
};

// Builds dense id maps and translates all records. The user id space is the
// union of users seen in any source, so a user known only from trust or
// helpfulness data still gets an id (preprocessing decides whether they stay).
// Duplicate (user, item) ratings are an input error, not a silent overwrite.
inline DenseDataset remap_ids(const std::vector<RawRating>& ratings,
                              const std::vector<RawEdge>& edges,
                              const std::vector<RawHelpfulness>& events) {
    std::vector<std::string> user_names;
    std::vector<std::string> item_names;
    user_names.reserve(ratings.size() + 2 * edges.size() + 2 * events.size());
    item_names.reserve(ratings.size());
    for (const auto& r : ratings) {
        user_names.push_back(r.user);
        item_names.push_back(r.item);
    }
    for (const auto& e : edges) {
        user_names.push_back(e.user);
        user_names.push_back(e.friend_of);
    }
    for (const auto& h : events) {
        user_names.push_back(h.rater);
        user_names.push_back(h.author);
    }

    DenseDataset d;
    d.users = IdMap::from_names(std::move(user_names));
    d.items = IdMap::from_names(std::move(item_names));

    std::vector<RatingEntry> entries;
    entries.reserve(ratings.size());
    for (const auto& r : ratings) {
        entries.push_back({d.users.at(r.user), d.items.at(r.item), r.value});
    }
    {
        auto sorted = entries;
        std::sort(sorted.begin(), sorted.end(),
                  [](const RatingEntry& a, const RatingEntry& b) {
                      return std::tie(a.user, a.item) < std::tie(b.user, b.item);
                  });
        for (std::size_t i = 1; i < sorted.size(); ++i) {
            if (sorted[i].user == sorted[i - 1].user && sorted[i].item == sorted[i - 1].item) {
                throw ValidationError("duplicate rating for user '" +
                                      d.users.name(sorted[i].user) + "', item '" +
                                      d.items.name(sorted[i].item) + "'");
            }
        }
    }
    d.ratings = SparseRatings(d.users.size(), d.items.size(), std::move(entries));

    std::vector<std::pair<UserId, UserId>> dense_edges;
    dense_edges.reserve(edges.size());
    for (const auto& e : edges) {
        dense_edges.emplace_back(d.users.at(e.user), d.users.at(e.friend_of));
    }
    d.graph = SocialGraph::from_edges(d.users.size(), dense_edges);

    d.events.reserve(events.size());
    for (const auto& h : events) {
        d.events.push_back({d.users.at(h.rater), d.users.at(h.author), h.score});
    }
    return d;
}

struct PreprocessConfig {
    int min_user_ratings = 3;
    int min_item_ratings = 3;
    bool require_friend = true;
};

struct RetainedUser {
    std::string external_id;
    UserId dense_id;
    int n_ratings;
    int n_friends;
};

struct PreprocessResult {
    DenseDataset data;
    std::vector<RetainedUser> report;
};

// Filters users and items jointly until the thresholds hold simultaneously:
// a user needs at least `min_user_ratings` ratings on surviving items and (if
// required) one surviving friend; an item needs `min_item_ratings` ratings
// from surviving users. Removing a user can strand an item and vice versa, so
// the pass repeats until nothing changes, then ids are re-densified in the
// same lexicographic order. Helpfulness events touching removed users are
// dropped.
inline PreprocessResult preprocess(const DenseDataset& in, const PreprocessConfig& cfg = {}) {
    if (cfg.min_user_ratings < 0 || cfg.min_item_ratings < 0) {
        throw ConfigError("preprocessing thresholds must be non-negative");
    }
    const std::int32_t n = in.users.size();
    const std::int32_t m = in.items.size();
    std::vector<char> user_alive(static_cast<std::size_t>(n), 1);
    std::vector<char> item_alive(static_cast<std::size_t>(m), 1);

    for (bool changed = true; changed;) {
        changed = false;
        for (UserId u = 0; u < n; ++u) {
            if (!user_alive[static_cast<std::size_t>(u)]) continue;
            int nr = 0;
            for (const auto& [item, value] : in.ratings.user_ratings(u)) {
                (void)value;
                if (item_alive[static_cast<std::size_t>(item)]) ++nr;
            }
            int nf = 0;
            for (UserId f : in.graph.neighbors(u)) {
                if (user_alive[static_cast<std::size_t>(f)]) ++nf;
            }
            if (nr < cfg.min_user_ratings || (cfg.require_friend && nf == 0)) {
                user_alive[static_cast<std::size_t>(u)] = 0;
                changed = true;
            }
        }
        for (ItemId i = 0; i < m; ++i) {
            if (!item_alive[static_cast<std::size_t>(i)]) continue;
            int nr = 0;
            for (const auto& [user, value] : in.ratings.item_ratings(i)) {
                (void)value;
                if (user_alive[static_cast<std::size_t>(user)]) ++nr;
            }
            if (nr < cfg.min_item_ratings) {
                item_alive[static_cast<std::size_t>(i)] = 0;
                changed = true;
            }
        }
    }

    std::vector<std::string> kept_users;
    std::vector<std::string> kept_items;
    for (UserId u = 0; u < n; ++u) {
        if (user_alive[static_cast<std::size_t>(u)]) kept_users.push_back(in.users.name(u));
    }
    for (ItemId i = 0; i < m; ++i) {
        if (item_alive[static_cast<std::size_t>(i)]) kept_items.push_back(in.items.name(i));
    }
    if (kept_users.empty() || kept_items.empty()) {
        throw DataError("preprocessing removed every " +
                        std::string(kept_users.empty() ? "user" : "item") +
                        "; thresholds are too strict for this data");
    }

    PreprocessResult out;
    out.data.users = IdMap::from_names(kept_users);
    out.data.items = IdMap::from_names(kept_items);

    // Old dense id -> new dense id, or -1 when dropped.
    std::vector<std::int32_t> user_new(static_cast<std::size_t>(n), -1);
    std::vector<std::int32_t> item_new(static_cast<std::size_t>(m), -1);
    for (UserId u = 0; u < n; ++u) {
        if (user_alive[static_cast<std::size_t>(u)]) {
            user_new[static_cast<std::size_t>(u)] = out.data.users.at(in.users.name(u));
        }
    }
    for (ItemId i = 0; i < m; ++i) {
        if (item_alive[static_cast<std::size_t>(i)]) {
            item_new[static_cast<std::size_t>(i)] = out.data.items.at(in.items.name(i));
        }
    }

    std::vector<RatingEntry> entries;
    for (const auto& e : in.ratings.entries()) {
        std::int32_t u = user_new[static_cast<std::size_t>(e.user)];
        std::int32_t i = item_new[static_cast<std::size_t>(e.item)];
        if (u >= 0 && i >= 0) entries.push_back({u, i, e.value});
    }
    out.data.ratings =
        SparseRatings(out.data.users.size(), out.data.items.size(), std::move(entries));

    std::vector<std::pair<UserId, UserId>> edges;
    for (auto [a, b] : in.graph.edges()) {
        std::int32_t na = user_new[static_cast<std::size_t>(a)];
        std::int32_t nb = user_new[static_cast<std::size_t>(b)];
        if (na >= 0 && nb >= 0) edges.emplace_back(na, nb);
    }
    out.data.graph = SocialGraph::from_edges(out.data.users.size(), edges);

    for (const auto& h : in.events) {
        std::int32_t r = user_new[static_cast<std::size_t>(h.rater)];
        std::int32_t a = user_new[static_cast<std::size_t>(h.author)];
        if (r >= 0 && a >= 0) out.data.events.push_back({r, a, h.score});
    }

    out.report.reserve(static_cast<std::size_t>(out.data.users.size()));
    for (UserId u = 0; u < out.data.users.size(); ++u) {
        out.report.push_back({out.data.users.name(u), u,
                              static_cast<int>(out.data.ratings.user_degree(u)),
                              static_cast<int>(out.data.graph.degree(u))});
    }
    return out;
}

inline void write_retained_report(const std::string& path,
                                  const std::vector<RetainedUser>& report) {
    CsvWriter w(path, "external_id,dense_id,n_ratings,n_friends");
    for (const auto& r : report) {
        w.row({r.external_id, std::to_string(r.dense_id), std::to_string(r.n_ratings),
               std::to_string(r.n_friends)});
    }
}

inline void write_ratings_csv(const std::string& path, const SparseRatings& ratings,
                              const IdMap& users, const IdMap& items) {
    CsvWriter w(path, "user_id,item_id,rating");
    for (const auto& e : ratings.entries()) {
        w.row({users.name(e.user), items.name(e.item), format_double(e.value)});
    }
}

inline void write_trust_csv(const std::string& path, const SocialGraph& graph,
                            const IdMap& users) {
    CsvWriter w(path, "user_id,friend_id");
    for (auto [a, b] : graph.edges()) {
        w.row({users.name(a), users.name(b)});
    }
}

inline void write_helpfulness_csv(const std::string& path,
                                  const std::vector<HelpfulnessEvent>& events,
                                  const IdMap& users) {
    CsvWriter w(path, "rater_id,author_id,score");
    for (const auto& h : events) {
        w.row({users.name(h.rater), users.name(h.author), std::to_string(h.score)});
    }
}

}  // namespace congrec
