#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "congrec/core.hpp"
#include "congrec/csv.hpp"
#include "congrec/errors.hpp"
#include "congrec/ingest.hpp"

namespace congrec {

// Score bands for helpfulness votes: {4, 5} endorse a review, {1, 2} pan it,
// anything else is neutral and ignored.
struct InteractionThresholds {
    std::vector<int> positive = {4, 5};
    std::vector<int> negative = {1, 2};

    void validate() const {
        for (int s : positive) {
            if (s < 1 || s > 5) throw ConfigError("positive score " + std::to_string(s) +
                                                  " outside [1, 5]");
        }
        for (int s : negative) {
            if (s < 1 || s > 5) throw ConfigError("negative score " + std::to_string(s) +
                                                  " outside [1, 5]");
            if (std::find(positive.begin(), positive.end(), s) != positive.end()) {
                throw ConfigError("score " + std::to_string(s) +
                                  " classified as both positive and negative");
            }
        }
    }

    // +1 endorsing, -1 panning, 0 neutral.
    int classify(int score) const {
        if (std::find(positive.begin(), positive.end(), score) != positive.end()) return 1;
        if (std::find(negative.begin(), negative.end(), score) != negative.end()) return -1;
        return 0;
    }
};

struct PairCounts {
    std::int64_t positive = 0;
    std::int64_t negative = 0;

    friend bool operator==(const PairCounts&, const PairCounts&) = default;
};

// Per-pair vote tallies. Votes are pooled over both directions of a pair:
// i rating j's review counts the same as j rating i's. Pairs with no
// classified votes are not stored.
class InteractionCounts {
  public:
    explicit InteractionCounts(std::int32_t n_users) : n_(n_users) {}

    std::int32_t n_users() const { return n_; }

    void add(UserId a, UserId b, int direction) {
        if (a == b) throw ValidationError("self-interaction for user " + std::to_string(a));
        if (a > b) std::swap(a, b);
        auto& c = counts_[{a, b}];
        if (direction > 0) ++c.positive;
        else if (direction < 0) ++c.negative;
    }

    PairCounts get(UserId a, UserId b) const {
        if (a > b) std::swap(a, b);
        auto it = counts_.find({a, b});
        return it == counts_.end() ? PairCounts{} : it->second;
    }

    // Sorted by (a, b); every stored pair has at least one classified vote.
    const std::map<std::pair<UserId, UserId>, PairCounts>& pairs() const { return counts_; }

  private:
    std::int32_t n_;
    std::map<std::pair<UserId, UserId>, PairCounts> counts_;
};

inline InteractionCounts count_interactions(std::int32_t n_users,
                                            const std::vector<HelpfulnessEvent>& events,
                                            const InteractionThresholds& thresholds = {}) {
    thresholds.validate();
    InteractionCounts counts(n_users);
    for (const auto& e : events) {
        if (e.rater < 0 || e.rater >= n_users || e.author < 0 || e.author >= n_users) {
            throw ValidationError("helpfulness event references user out of range");
        }
        int dir = thresholds.classify(e.score);
        if (dir != 0) counts.add(e.rater, e.author, dir);
    }
    return counts;
}

enum class StrengthKind {
    // 0 at x = 0, else max(0, 1 - 1/ln(x + 1)). Flat at 0 until x = 2, then
    // increasing toward 1. This keeps a single endorsement worthless.
    Clamped,
    // 1 - 1/(1 + ln(1 + x)): 0 at x = 0, strictly increasing, bounded by 1.
    BoundedAlternative,
};

inline double interaction_strength(std::int64_t x, StrengthKind kind = StrengthKind::Clamped) {
    if (x < 0) throw ConfigError("interaction count must be non-negative");
    if (x == 0) return 0.0;
    const double lx = std::log(static_cast<double>(x) + 1.0);
    switch (kind) {
        case StrengthKind::Clamped:
            return std::max(0.0, 1.0 - 1.0 / lx);
        case StrengthKind::BoundedAlternative:
            return 1.0 - 1.0 / (1.0 + lx);
    }
    throw ConfigError("unknown strength kind");
}

// Congruity for a pair is the strength of its positive votes minus the
// strength of its negative ones, always in [-1, 1]. Pairs whose two strengths
// cancel exactly (including the common p = n case) are not stored, matching
// the rule that absent means zero.
inline UserPairMatrix build_congruity(const InteractionCounts& counts,
                                      StrengthKind kind = StrengthKind::Clamped) {
    UserPairMatrix::Builder b(counts.n_users());
    for (const auto& [pair, c] : counts.pairs()) {
        double v = interaction_strength(c.positive, kind) -
                   interaction_strength(c.negative, kind);
        b.set(pair.first, pair.second, v);
    }
    return std::move(b).build();
}

// Every unordered user pair falls in exactly one bucket. Congruent means
// strictly positive congruity; pairs with no stored value count as
// incongruent, which is why stranger-incongruent dominates at scale.
struct PairTaxonomy {
    std::uint64_t friends_congruent = 0;
    std::uint64_t friends_incongruent = 0;
    std::uint64_t strangers_congruent = 0;
    std::uint64_t strangers_incongruent = 0;

    std::uint64_t total() const {
        return friends_congruent + friends_incongruent + strangers_congruent +
               strangers_incongruent;
    }

    friend bool operator==(const PairTaxonomy&, const PairTaxonomy&) = default;
};

inline PairTaxonomy pair_taxonomy(const UserPairMatrix& congruity, const SocialGraph& graph) {
    if (congruity.n_users() != graph.n_users()) {
        throw ConfigError("congruity matrix and social graph disagree on user count");
    }
    const std::uint64_t n = static_cast<std::uint64_t>(graph.n_users());
    PairTaxonomy t;
    for (auto [a, b] : graph.edges()) {
        if (congruity.value(a, b) > 0.0) ++t.friends_congruent;
        else ++t.friends_incongruent;
    }
    std::uint64_t congruent_total = 0;
    for (const auto& [a, b, v] : congruity.pairs()) {
        (void)a; (void)b;
        if (v > 0.0) ++congruent_total;
    }
    t.strangers_congruent = congruent_total - t.friends_congruent;
    const std::uint64_t all_pairs = n * (n - 1) / 2;
    t.strangers_incongruent =
        all_pairs - t.friends_congruent - t.friends_incongruent - t.strangers_congruent;
    return t;
}

// Euclidean norms of each user's full rating vector.
inline std::vector<double> user_rating_norms(const SparseRatings& ratings) {
    std::vector<double> norms(static_cast<std::size_t>(ratings.n_users()), 0.0);
    for (const auto& e : ratings.entries()) {
        norms[static_cast<std::size_t>(e.user)] += e.value * e.value;
    }
    for (double& v : norms) v = std::sqrt(v);
    return norms;
}

// Cosine similarity of two users' rating vectors: dot product over co-rated
// items divided by the product of their full-vector norms. Zero when they
// share no item or either has no ratings.
inline double cosine_pair(const SparseRatings& ratings, UserId a, UserId b,
                          const std::vector<double>& norms) {
    auto ra = ratings.user_ratings(a);
    auto rb = ratings.user_ratings(b);
    double dot = 0.0;
    std::size_t i = 0, j = 0;
    while (i < ra.size() && j < rb.size()) {
        if (ra[i].first < rb[j].first) ++i;
        else if (rb[j].first < ra[i].first) ++j;
        else {
            dot += ra[i].second * rb[j].second;
            ++i;
            ++j;
        }
    }
    double na = norms[static_cast<std::size_t>(a)];
    double nb = norms[static_cast<std::size_t>(b)];
    if (dot == 0.0 || na == 0.0 || nb == 0.0) return 0.0;
    return dot / (na * nb);
}

// Full pairwise cosine similarity over users that co-rated at least one item.
// Built by scanning item adjacency, so cost scales with co-rating pairs, not
// with all user pairs.
inline UserPairMatrix cosine_user_similarity(const SparseRatings& ratings) {
    std::unordered_map<std::uint64_t, double> dots;
    for (ItemId i = 0; i < ratings.n_items(); ++i) {
        auto col = ratings.item_ratings(i);
        for (std::size_t x = 0; x < col.size(); ++x) {
            for (std::size_t y = x + 1; y < col.size(); ++y) {
                std::uint64_t key = (static_cast<std::uint64_t>(
                                         static_cast<std::uint32_t>(col[x].first))
                                     << 32) |
                                    static_cast<std::uint32_t>(col[y].first);
                dots[key] += col[x].second * col[y].second;
            }
        }
    }
    auto norms = user_rating_norms(ratings);
    UserPairMatrix::Builder b(ratings.n_users());
    for (const auto& [key, dot] : dots) {
        UserId a = static_cast<UserId>(key >> 32);
        UserId c = static_cast<UserId>(key & 0xffffffffULL);
        double na = norms[static_cast<std::size_t>(a)];
        double nc = norms[static_cast<std::size_t>(c)];
        if (na > 0.0 && nc > 0.0) b.set(a, c, dot / (na * nc));
    }
    return std::move(b).build();
}

// One row per pair with at least one classified vote, dense-id order, which
// equals lexicographic external-id order.
inline void write_congruity_csv(const std::string& path, const InteractionCounts& counts,
                                StrengthKind kind, const IdMap& users) {
    CsvWriter w(path, "user_a,user_b,p,n,c");
    for (const auto& [pair, c] : counts.pairs()) {
        double v = interaction_strength(c.positive, kind) -
                   interaction_strength(c.negative, kind);
        w.row({users.name(pair.first), users.name(pair.second),
               std::to_string(c.positive), std::to_string(c.negative), format_double(v)});
    }
}

inline void write_taxonomy_csv(const std::string& path, const PairTaxonomy& t) {
    CsvWriter w(path, "bucket,count");
    w.row({"friends_congruent", std::to_string(t.friends_congruent)});
    w.row({"friends_incongruent", std::to_string(t.friends_incongruent)});
    w.row({"strangers_congruent", std::to_string(t.strangers_congruent)});
    w.row({"strangers_incongruent", std::to_string(t.strangers_incongruent)});
    w.row({"total", std::to_string(t.total())});
}

}  // namespace congrec
