#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <string>
#include <vector>

#include "congrec/core.hpp"
#include "congrec/errors.hpp"
#include "congrec/ingest.hpp"
#include "congrec/rng.hpp"

namespace congrec {

// Planted-structure generator. Users and items get latent factors whose inner
// products land in the rating scale; congruity is planted on the pairs with
// the most extreme latent cosines and realized as helpfulness events, so the
// full ingest pipeline reconstructs it; friendships are sampled with
// probability increasing in latent similarity.
struct SyntheticConfig {
    std::int32_t n_users = 200;
    std::int32_t n_items = 150;
    std::int32_t d = 5;
    std::uint64_t seed = 1;

    double rating_density = 0.08;
    double noise_sigma = 0.6;
    bool quantize = true;  // round ratings to integers (off: keep reals in [1, 5])
    double user_spread = 0.55;  // latent sd multiplier, scaled by 1/sqrt(d)
    double item_spread = 0.55;

    double congruity_density = 0.05;  // fraction of user pairs given planted congruity
    double congruity_scale = 0.7;     // target congruity = scale * latent cosine
    double congruity_noise = 0.0;     // sd of noise on cosines before pair selection
    double congruity_neg_fraction = 0.1;  // share of planted pairs taken from the low tail
    bool independent_congruity = false;   // plant congruity from a fresh latent draw

    double friend_density = 0.05;
    double friend_sharpness = 4.0;  // slope of the similarity-to-friendship link

    // 0 = unimodal latents. With k >= 2, users sit in k clusters displaced from
    // the common mean; two clusters are placed antipodally.
    std::int32_t n_clusters = 0;
    double cluster_amp = 2.5;
    double cluster_spread = 0.25;

    void validate() const {
        if (n_users < 1 || n_items < 1) {
            throw ConfigError("generator needs at least one user and one item");
        }
        if (d < 1) throw ConfigError("latent dimension must be at least 1");
        auto density = [](double v, const char* what) {
            if (v < 0.0 || v > 1.0) {
                throw ConfigError(std::string(what) + " must lie in [0, 1]");
            }
        };
        density(rating_density, "rating_density");
        density(congruity_density, "congruity_density");
        density(friend_density, "friend_density");
        density(congruity_neg_fraction, "congruity_neg_fraction");
        if (noise_sigma < 0.0) throw ConfigError("noise_sigma must be non-negative");
        if (user_spread < 0.0 || item_spread < 0.0) {
            throw ConfigError("latent spreads must be non-negative");
        }
        if (congruity_scale < 0.0 || congruity_scale > 0.9) {
            // At 0.9 a single pair already needs ~22000 events; beyond that the
            // realization blows up.
            throw ConfigError("congruity_scale must lie in [0, 0.9]");
        }
        if (congruity_noise < 0.0) throw ConfigError("congruity_noise must be non-negative");
        if (friend_sharpness < 0.0) throw ConfigError("friend_sharpness must be non-negative");
        if (n_clusters < 0 || n_clusters == 1) {
            throw ConfigError("n_clusters must be 0 or at least 2");
        }
        if (cluster_amp < 0.0 || cluster_spread < 0.0) {
            throw ConfigError("cluster parameters must be non-negative");
        }
    }
};

// Generated records in the on-disk schemas. External ids are zero-padded so
// lexicographic order equals numeric order; densification therefore preserves
// the generator's indexing.
struct SyntheticData {
    std::vector<RawRating> ratings;
    std::vector<RawEdge> trust;
    std::vector<RawHelpfulness> helpfulness;
};

// Smallest event count whose strength reaches c under the clamped strength
// function: ceil(e^(1/(1-c)) - 1). Counts of 0 or 1 have zero strength, so
// targets below the g(2) step are unrealizable and vanish.
inline std::int64_t strength_inverse(double c) {
    if (c <= 0.0) return 0;
    if (c >= 1.0) throw ConfigError("strength 1 is unreachable by finite counts");
    return static_cast<std::int64_t>(
        std::ceil(std::exp(1.0 / (1.0 - c)) - 1.0 - 1e-12));
}

namespace detail {

inline std::string pad_id(char prefix, std::int32_t idx, int width) {
    char buf[24];
    // Ids are nonnegative and widths come from id_width, so 23 chars suffice.
    std::snprintf(buf, sizeof(buf), "%c%0*d", prefix, std::min(width, 12), idx);
    return buf;
}

inline int id_width(std::int32_t count) {
    int w = 1;
    for (std::int32_t v = count - 1; v >= 10; v /= 10) ++w;
    return std::max(w, 4);
}

}  // namespace detail

inline SyntheticData generate_synthetic(const SyntheticConfig& cfg) {
    cfg.validate();
    const std::int32_t n = cfg.n_users;
    const std::int32_t m = cfg.n_items;
    const std::int32_t d = cfg.d;
    Rng rng(cfg.seed);
    const double mu = std::sqrt(3.0 / static_cast<double>(d));
    const double root_d = std::sqrt(static_cast<double>(d));

    // Latent factors. Draw order is fixed: cluster geometry, then U, then V.
    Matrix U(n, d);
    if (cfg.n_clusters >= 2) {
        const std::int32_t k = cfg.n_clusters;
        Matrix dirs(k, d);
        for (std::int32_t c = 0; c < k; ++c) {
            double norm = 0.0;
            for (std::int32_t x = 0; x < d; ++x) {
                dirs.at(c, x) = rng.gaussian();
                norm += dirs.at(c, x) * dirs.at(c, x);
            }
            norm = std::sqrt(norm);
            if (norm == 0.0) norm = 1.0;
            for (std::int32_t x = 0; x < d; ++x) dirs.at(c, x) /= norm;
        }
        if (k == 2) {
            for (std::int32_t x = 0; x < d; ++x) dirs.at(1, x) = -dirs.at(0, x);
        }
        std::vector<std::int32_t> assign(static_cast<std::size_t>(n));
        for (auto& a : assign) a = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(k)));
        const double spread = cfg.cluster_spread / root_d;
        for (std::int32_t i = 0; i < n; ++i) {
            for (std::int32_t x = 0; x < d; ++x) {
                U.at(i, x) = mu + cfg.cluster_amp * dirs.at(assign[static_cast<std::size_t>(i)], x) +
                             rng.gaussian() * spread;
            }
        }
    } else {
        const double spread = cfg.user_spread / root_d;
        for (double& v : U.data()) v = mu + rng.gaussian() * spread;
    }
    Matrix V(m, d);
    {
        const double spread = cfg.item_spread / root_d;
        for (double& v : V.data()) v = mu + rng.gaussian() * spread;
    }

    const int uw = detail::id_width(n);
    const int iw = detail::id_width(m);

    // Ratings over a sampled mask, noise drawn per observed entry.
    SyntheticData out;
    for (std::int32_t i = 0; i < n; ++i) {
        for (std::int32_t j = 0; j < m; ++j) {
            if (rng.uniform() >= cfg.rating_density) continue;
            double raw = dot(U.row(i), V.row(j), d);
            if (cfg.noise_sigma > 0.0) raw += rng.gaussian() * cfg.noise_sigma;
            if (cfg.quantize) raw = std::round(raw);
            const double r = std::min(kRatingMax, std::max(kRatingMin, raw));
            out.ratings.push_back({detail::pad_id('u', i, uw), detail::pad_id('i', j, iw), r});
        }
    }

    // Latent base for congruity: the user factors themselves, or a fresh,
    // unrelated draw when calibrating null behavior.
    Matrix Z = U;
    if (cfg.independent_congruity) {
        for (double& v : Z.data()) v = mu + rng.gaussian();
    }
    std::vector<double> col_mean(static_cast<std::size_t>(d), 0.0);
    for (std::int32_t i = 0; i < n; ++i) {
        for (std::int32_t x = 0; x < d; ++x) col_mean[static_cast<std::size_t>(x)] += Z.at(i, x);
    }
    for (double& v : col_mean) v /= static_cast<double>(n);
    for (std::int32_t i = 0; i < n; ++i) {
        for (std::int32_t x = 0; x < d; ++x) Z.at(i, x) -= col_mean[static_cast<std::size_t>(x)];
    }
    std::vector<double> z_norm(static_cast<std::size_t>(n), 0.0);
    for (std::int32_t i = 0; i < n; ++i) {
        z_norm[static_cast<std::size_t>(i)] = std::sqrt(dot(Z.row(i), Z.row(i), d));
        if (z_norm[static_cast<std::size_t>(i)] == 0.0) z_norm[static_cast<std::size_t>(i)] = 1.0;
    }
    auto latent_cos = [&](std::int32_t a, std::int32_t b) {
        return dot(Z.row(a), Z.row(b), d) /
               (z_norm[static_cast<std::size_t>(a)] * z_norm[static_cast<std::size_t>(b)]);
    };

    // Noisy cosines over the upper triangle, pair index p = lexicographic rank.
    const std::size_t n_pairs = static_cast<std::size_t>(n) * (static_cast<std::size_t>(n) - 1) / 2;
    std::vector<double> noisy(n_pairs);
    {
        std::size_t p = 0;
        for (std::int32_t a = 0; a < n; ++a) {
            for (std::int32_t b = a + 1; b < n; ++b, ++p) {
                double v = latent_cos(a, b);
                if (cfg.congruity_noise > 0.0) v += rng.gaussian() * cfg.congruity_noise;
                noisy[p] = std::min(1.0, std::max(-1.0, v));
            }
        }
    }

    // Select the top pairs as congruent and a tail slice as incongruent.
    const std::size_t want = static_cast<std::size_t>(
        cfg.congruity_density * static_cast<double>(n_pairs));
    const std::size_t n_neg = static_cast<std::size_t>(
        std::llround(cfg.congruity_neg_fraction * static_cast<double>(want)));
    const std::size_t n_pos = want - n_neg;
    std::vector<std::size_t> order(n_pairs);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (noisy[a] != noisy[b]) return noisy[a] < noisy[b];
        return a < b;
    });
    std::vector<char> selected(n_pairs, 0);
    for (std::size_t k = 0; k < n_pos && k < n_pairs; ++k) selected[order[n_pairs - 1 - k]] = 1;
    for (std::size_t k = 0; k < n_neg && k < n_pairs; ++k) selected[order[k]] = 1;

    // Realize planted congruity as helpfulness events: enough same-sign votes
    // that the reconstructed strength reaches the target, directions
    // alternating. Every fifth planted pair also gets one neutral vote, which
    // the counting stage must ignore.
    {
        std::size_t p = 0;
        std::size_t planted = 0;
        for (std::int32_t a = 0; a < n; ++a) {
            for (std::int32_t b = a + 1; b < n; ++b, ++p) {
                if (!selected[p]) continue;
                const double target = cfg.congruity_scale * noisy[p];
                const std::int64_t count = strength_inverse(std::fabs(target));
                if (count < 2) continue;
                const int score = target > 0.0 ? 5 : 1;
                const std::string ua = detail::pad_id('u', a, uw);
                const std::string ub = detail::pad_id('u', b, uw);
                for (std::int64_t e = 0; e < count; ++e) {
                    if (e % 2 == 0) out.helpfulness.push_back({ua, ub, score});
                    else out.helpfulness.push_back({ub, ua, score});
                }
                if (++planted % 5 == 0) out.helpfulness.push_back({ua, ub, 3});
            }
        }
    }

    // Friendships: Bernoulli per pair, probability scaled by a logistic link
    // on the clean latent cosine.
    {
        for (std::int32_t a = 0; a < n; ++a) {
            for (std::int32_t b = a + 1; b < n; ++b) {
                const double s = 1.0 / (1.0 + std::exp(-cfg.friend_sharpness * latent_cos(a, b)));
                const double prob = std::min(1.0, cfg.friend_density * 2.0 * s);
                if (rng.uniform() < prob) {
                    out.trust.push_back({detail::pad_id('u', a, uw), detail::pad_id('u', b, uw)});
                }
            }
        }
    }
    return out;
}

inline void write_synthetic_csvs(const SyntheticData& data, const std::string& ratings_path,
                                 const std::string& trust_path,
                                 const std::string& helpfulness_path) {
    {
        CsvWriter w(ratings_path, "user_id,item_id,rating");
        for (const auto& r : data.ratings) w.row({r.user, r.item, format_double(r.value)});
    }
    {
        CsvWriter w(trust_path, "user_id,friend_id");
        for (const auto& e : data.trust) w.row({e.user, e.friend_of});
    }
    {
        CsvWriter w(helpfulness_path, "rater_id,author_id,score");
        for (const auto& h : data.helpfulness) {
            w.row({h.rater, h.author, std::to_string(h.score)});
        }
    }
}

}  // namespace congrec
