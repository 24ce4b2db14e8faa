#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "congrec/core.hpp"
#include "congrec/csv.hpp"
#include "congrec/errors.hpp"
#include "congrec/rng.hpp"

namespace congrec {

// The five rating-prediction methods. All share one trainer; they differ only
// in the closeness matrix L that couples user factors.
enum class Variant : std::uint8_t {
    MF = 0,     // plain factorization, L empty
    SMF = 1,    // L = rating cosine similarity, all co-rating pairs
    SoReg = 2,  // L = rating cosine similarity, friend pairs only
    CR = 3,     // L = congruity, used raw
    CSRR = 4,   // L = delta * friendship + (1 - delta) * rescaled congruity
};

inline std::string to_string(Variant v) {
    switch (v) {
        case Variant::MF: return "mf";
        case Variant::SMF: return "smf";
        case Variant::SoReg: return "soreg";
        case Variant::CR: return "cr";
        case Variant::CSRR: return "csrr";
    }
    throw ConfigError("unknown variant");
}

inline Variant parse_variant(const std::string& s) {
    if (s == "mf") return Variant::MF;
    if (s == "smf") return Variant::SMF;
    if (s == "soreg") return Variant::SoReg;
    if (s == "cr") return Variant::CR;
    if (s == "csrr") return Variant::CSRR;
    throw ConfigError("unknown method '" + s + "'; valid methods: mf, smf, soreg, cr, csrr");
}

enum class GradientMode : std::uint8_t {
    // True gradient of the objective. With symmetric L each pair's closeness
    // term is reached from both of its rows, giving the closeness part an
    // overall factor 4 * gamma. Finite differences of the objective match this
    // mode.
    Full = 0,
    // Per-row update that only pulls a row toward its own listed neighbors,
    // leaving out the reverse-neighbor contribution: closeness factor
    // 2 * gamma. Equivalent to Full with gamma halved.
    RowLocal = 1,
};

inline std::string to_string(GradientMode m) {
    return m == GradientMode::Full ? "full" : "row-local";
}

inline GradientMode parse_gradient_mode(const std::string& s) {
    if (s == "full") return GradientMode::Full;
    if (s == "row-local") return GradientMode::RowLocal;
    throw ConfigError("unknown gradient mode '" + s +
                      "'; valid modes: full, row-local");
}

struct TrainConfig {
    std::int32_t d = 15;
    double lambda = 0.01;
    double gamma = 100.0;
    double delta = 0.3;
    double learning_rate = 5e-4;
    std::int32_t max_iters = 500;
    double tol = 1e-5;
    std::uint64_t seed = 42;
    double init_scale = 0.1;
    GradientMode gradient_mode = GradientMode::Full;
    bool clamp_predictions = false;
    bool clamp_closeness_nonnegative = false;

    void validate() const {
        if (d < 1) throw ConfigError("factor dimension must be at least 1");
        if (lambda < 0.0) throw ConfigError("lambda must be non-negative");
        if (gamma < 0.0) throw ConfigError("gamma must be non-negative");
        if (delta < 0.0 || delta > 1.0) throw ConfigError("delta must lie in [0, 1]");
        if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
        if (max_iters < 1) throw ConfigError("max iterations must be at least 1");
        if (tol < 0.0) throw ConfigError("tolerance must be non-negative");
        if (!(init_scale > 0.0)) throw ConfigError("init scale must be positive");
    }
};

// Matrices a variant's closeness construction may draw on. Only the ones the
// variant actually uses need to be present.
struct ClosenessInputs {
    const UserPairMatrix* congruity = nullptr;
    const UserPairMatrix* similarity = nullptr;
    const SocialGraph* graph = nullptr;
};

// Builds the user-coupling matrix L for a variant. Exact zeros are never
// stored, so at delta = 1 the blended variant degenerates to the pure
// friendship indicator and at gamma = 0 training is plain factorization.
inline UserPairMatrix build_closeness(Variant variant, std::int32_t n_users,
                                      const ClosenessInputs& in, double delta,
                                      bool clamp_nonnegative) {
    auto need = [&](const void* p, const char* what) {
        if (p == nullptr) {
            throw ConfigError(to_string(variant) + " requires " + what);
        }
    };
    auto check_n = [&](std::int32_t n, const char* what) {
        if (n != n_users) {
            throw ConfigError(std::string(what) + " is sized for " + std::to_string(n) +
                              " users, expected " + std::to_string(n_users));
        }
    };
    switch (variant) {
        case Variant::MF:
            return UserPairMatrix(n_users);
        case Variant::SMF: {
            need(in.similarity, "a similarity matrix");
            check_n(in.similarity->n_users(), "similarity matrix");
            return *in.similarity;
        }
        case Variant::SoReg: {
            need(in.similarity, "a similarity matrix");
            need(in.graph, "a social graph");
            check_n(in.similarity->n_users(), "similarity matrix");
            check_n(in.graph->n_users(), "social graph");
            UserPairMatrix::Builder b(n_users);
            for (auto [x, y] : in.graph->edges()) {
                b.set(x, y, in.similarity->value(x, y));
            }
            return std::move(b).build();
        }
        case Variant::CR: {
            need(in.congruity, "a congruity matrix");
            check_n(in.congruity->n_users(), "congruity matrix");
            if (!clamp_nonnegative) return *in.congruity;
            UserPairMatrix::Builder b(n_users);
            for (const auto& [x, y, v] : in.congruity->pairs()) {
                if (v > 0.0) b.set(x, y, v);
            }
            return std::move(b).build();
        }
        case Variant::CSRR: {
            need(in.congruity, "a congruity matrix");
            need(in.graph, "a social graph");
            check_n(in.congruity->n_users(), "congruity matrix");
            check_n(in.graph->n_users(), "social graph");
            if (delta < 0.0 || delta > 1.0) throw ConfigError("delta must lie in [0, 1]");
            // Support is the union of friend pairs and stored congruity pairs;
            // congruity is rescaled from [-1, 1] to [0, 1] before blending so
            // both components pull factors together, never apart.
            UserPairMatrix::Builder b(n_users);
            for (auto [x, y] : in.graph->edges()) {
                double c = in.congruity->value(x, y);
                b.set(x, y, delta + (1.0 - delta) * 0.5 * (c + 1.0));
            }
            for (const auto& [x, y, c] : in.congruity->pairs()) {
                if (in.graph->are_friends(x, y)) continue;
                b.set(x, y, (1.0 - delta) * 0.5 * (c + 1.0));
            }
            return std::move(b).build();
        }
    }
    throw ConfigError("unknown variant");
}

// J(U, V) = sum over observed (i,j) of (R_ij - U_i.V_j)^2
//         + gamma * sum over i, k in T_i of L_ik * ||U_i - U_k||^2
//         + lambda * (||U||_F^2 + ||V||_F^2)
// The closeness sum runs over stored directed entries, so every unordered pair
// contributes twice. gamma = 0 skips that term entirely.
inline double objective(const Matrix& U, const Matrix& V, const SparseRatings& ratings,
                        const UserPairMatrix& L, double lambda, double gamma) {
    const std::int32_t d = U.cols();
    double err = 0.0;
    for (const auto& e : ratings.entries()) {
        const double r = dot(U.row(e.user), V.row(e.item), d);
        err += (e.value - r) * (e.value - r);
    }
    double closeness = 0.0;
    if (gamma != 0.0) {
        for (std::int32_t i = 0; i < U.rows(); ++i) {
            for (const auto& [k, l] : L.row(i)) {
                double sq = 0.0;
                const double* ui = U.row(i);
                const double* uk = U.row(k);
                for (std::int32_t c = 0; c < d; ++c) {
                    const double diff = ui[c] - uk[c];
                    sq += diff * diff;
                }
                closeness += l * sq;
            }
        }
    }
    double ridge = 0.0;
    for (double v : U.data()) ridge += v * v;
    for (double v : V.data()) ridge += v * v;
    return err + gamma * closeness + lambda * ridge;
}

// Accumulates the gradient of the objective into dU, dV (overwritten).
inline void gradient(const Matrix& U, const Matrix& V, const SparseRatings& ratings,
                     const UserPairMatrix& L, double lambda, double gamma,
                     GradientMode mode, Matrix& dU, Matrix& dV) {
    const std::int32_t d = U.cols();
    dU = Matrix(U.rows(), d);
    dV = Matrix(V.rows(), d);
    for (const auto& e : ratings.entries()) {
        const double* ui = U.row(e.user);
        const double* vj = V.row(e.item);
        const double err = e.value - dot(ui, vj, d);
        double* gu = dU.row(e.user);
        double* gv = dV.row(e.item);
        for (std::int32_t c = 0; c < d; ++c) {
            gu[c] -= 2.0 * err * vj[c];
            gv[c] -= 2.0 * err * ui[c];
        }
    }
    if (gamma != 0.0) {
        const double factor = (mode == GradientMode::Full ? 4.0 : 2.0) * gamma;
        for (std::int32_t i = 0; i < U.rows(); ++i) {
            double* gu = dU.row(i);
            const double* ui = U.row(i);
            for (const auto& [k, l] : L.row(i)) {
                const double* uk = U.row(k);
                for (std::int32_t c = 0; c < d; ++c) {
                    gu[c] += factor * l * (ui[c] - uk[c]);
                }
            }
        }
    }
    if (lambda != 0.0) {
        for (std::size_t idx = 0; idx < dU.data().size(); ++idx) {
            dU.data()[idx] += 2.0 * lambda * U.data()[idx];
        }
        for (std::size_t idx = 0; idx < dV.data().size(); ++idx) {
            dV.data()[idx] += 2.0 * lambda * V.data()[idx];
        }
    }
}

struct FactorModel {
    Matrix user_factors;
    Matrix item_factors;
    Variant variant = Variant::MF;
    std::uint64_t config_hash = 0;
    // External ids of the rows, when known; empty for anonymous models. When
    // present they let a saved model score ratings given by external id.
    std::vector<std::string> user_names;
    std::vector<std::string> item_names;

    double predict(UserId u, ItemId i, bool clamp = false) const {
        if (u < 0 || u >= user_factors.rows() || i < 0 || i >= item_factors.rows()) {
            throw ValidationError("prediction requested for user " + std::to_string(u) +
                                  ", item " + std::to_string(i) + " outside the model");
        }
        double r = dot(user_factors.row(u), item_factors.row(i), user_factors.cols());
        if (clamp) r = std::min(kRatingMax, std::max(kRatingMin, r));
        return r;
    }
};

struct TraceEntry {
    std::int32_t iter;
    double objective;
    double delta_rel;

    friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

struct TrainResult {
    FactorModel model;
    std::vector<TraceEntry> trace;  // row 0 is the initial objective
    bool converged = false;
    std::int32_t iterations = 0;
};

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string canonical_config_string(const TrainConfig& cfg, Variant variant) {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "variant=%s;d=%d;lambda=%.17g;gamma=%.17g;delta=%.17g;lr=%.17g;"
                  "max_iters=%d;tol=%.17g;seed=%llu;init_scale=%.17g;mode=%s;"
                  "clamp_pred=%d;clamp_closeness=%d",
                  to_string(variant).c_str(), cfg.d, cfg.lambda, cfg.gamma, cfg.delta,
                  cfg.learning_rate, cfg.max_iters, cfg.tol,
                  static_cast<unsigned long long>(cfg.seed), cfg.init_scale,
                  to_string(cfg.gradient_mode).c_str(), cfg.clamp_predictions ? 1 : 0,
                  cfg.clamp_closeness_nonnegative ? 1 : 0);
    return buf;
}

// Full-batch fixed-step gradient descent. Stops early once the relative
// objective change drops below tol; throws DivergenceError the moment the
// objective stops being finite, naming the iteration.
inline TrainResult train(const SparseRatings& ratings, const UserPairMatrix& closeness,
                         const TrainConfig& cfg, Variant variant = Variant::MF) {
    cfg.validate();
    if (closeness.n_users() != ratings.n_users()) {
        throw ConfigError("closeness matrix is sized for " +
                          std::to_string(closeness.n_users()) + " users, ratings have " +
                          std::to_string(ratings.n_users()));
    }
    if (ratings.empty()) throw DataError("cannot train on an empty rating matrix");

    const std::int32_t n = ratings.n_users();
    const std::int32_t m = ratings.n_items();
    Rng rng(cfg.seed);
    Matrix U(n, cfg.d);
    Matrix V(m, cfg.d);
    for (double& v : U.data()) v = rng.gaussian() * cfg.init_scale;
    for (double& v : V.data()) v = rng.gaussian() * cfg.init_scale;

    TrainResult out;
    double prev = objective(U, V, ratings, closeness, cfg.lambda, cfg.gamma);
    if (!std::isfinite(prev)) throw DivergenceError(0, "objective not finite at init");
    out.trace.push_back({0, prev, 0.0});

    Matrix dU, dV;
    for (std::int32_t iter = 1; iter <= cfg.max_iters; ++iter) {
        gradient(U, V, ratings, closeness, cfg.lambda, cfg.gamma, cfg.gradient_mode, dU, dV);
        for (std::size_t idx = 0; idx < U.data().size(); ++idx) {
            U.data()[idx] -= cfg.learning_rate * dU.data()[idx];
        }
        for (std::size_t idx = 0; idx < V.data().size(); ++idx) {
            V.data()[idx] -= cfg.learning_rate * dV.data()[idx];
        }
        const double j = objective(U, V, ratings, closeness, cfg.lambda, cfg.gamma);
        if (!std::isfinite(j)) {
            throw DivergenceError(iter, "objective became non-finite at iteration " +
                                            std::to_string(iter) +
                                            "; reduce the learning rate");
        }
        const double delta_rel = std::fabs(prev - j) / std::max(std::fabs(prev), 1e-300);
        out.trace.push_back({iter, j, delta_rel});
        out.iterations = iter;
        prev = j;
        if (delta_rel < cfg.tol) {
            out.converged = true;
            break;
        }
    }

    out.model.user_factors = std::move(U);
    out.model.item_factors = std::move(V);
    out.model.variant = variant;
    out.model.config_hash = fnv1a64(canonical_config_string(cfg, variant));
    return out;
}

// --- model persistence ------------------------------------------------------

inline constexpr char kModelMagic[4] = {'C', 'G', 'R', 'M'};
inline constexpr std::uint32_t kModelVersion = 1;

inline void save_model(const std::string& path, const FactorModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot create " + path);
    auto put = [&](const void* p, std::size_t bytes) {
        out.write(static_cast<const char*>(p), static_cast<std::streamsize>(bytes));
    };
    put(kModelMagic, 4);
    std::uint32_t version = kModelVersion;
    put(&version, sizeof version);
    std::int32_t n = model.user_factors.rows();
    std::int32_t m = model.item_factors.rows();
    std::int32_t d = model.user_factors.cols();
    if (model.item_factors.cols() != d) {
        throw ConfigError("user and item factors disagree on dimension");
    }
    put(&n, sizeof n);
    put(&m, sizeof m);
    put(&d, sizeof d);
    std::uint8_t variant = static_cast<std::uint8_t>(model.variant);
    put(&variant, sizeof variant);
    put(&model.config_hash, sizeof model.config_hash);
    put(model.user_factors.data().data(), model.user_factors.data().size() * sizeof(double));
    put(model.item_factors.data().data(), model.item_factors.data().size() * sizeof(double));
    auto put_names = [&](const std::vector<std::string>& names, std::int32_t expected) {
        if (!names.empty() && static_cast<std::int32_t>(names.size()) != expected) {
            throw ConfigError("name list does not match factor row count");
        }
        std::uint64_t count = names.size();
        put(&count, sizeof count);
        for (const auto& s : names) {
            std::uint32_t len = static_cast<std::uint32_t>(s.size());
            put(&len, sizeof len);
            put(s.data(), s.size());
        }
    };
    put_names(model.user_names, n);
    put_names(model.item_names, m);
    if (!out) throw IoError("failed writing " + path);
}

inline FactorModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    auto get = [&](void* p, std::size_t bytes) {
        in.read(static_cast<char*>(p), static_cast<std::streamsize>(bytes));
        if (!in) throw ParseError(path, 0, "model file truncated");
    };
    char magic[4];
    get(magic, 4);
    if (std::string(magic, 4) != std::string(kModelMagic, 4)) {
        throw ParseError(path, 0, "not a factor model file");
    }
    std::uint32_t version = 0;
    get(&version, sizeof version);
    if (version != kModelVersion) {
        throw ParseError(path, 0, "unsupported model version " + std::to_string(version));
    }
    std::int32_t n = 0, m = 0, d = 0;
    get(&n, sizeof n);
    get(&m, sizeof m);
    get(&d, sizeof d);
    if (n < 0 || m < 0 || d < 1) throw ParseError(path, 0, "corrupt model dimensions");
    std::uint8_t variant = 0;
    get(&variant, sizeof variant);
    if (variant > static_cast<std::uint8_t>(Variant::CSRR)) {
        throw ParseError(path, 0, "corrupt variant tag");
    }
    FactorModel model;
    model.variant = static_cast<Variant>(variant);
    get(&model.config_hash, sizeof model.config_hash);
    model.user_factors = Matrix(n, d);
    model.item_factors = Matrix(m, d);
    get(model.user_factors.data().data(), model.user_factors.data().size() * sizeof(double));
    get(model.item_factors.data().data(), model.item_factors.data().size() * sizeof(double));
    auto get_names = [&](std::vector<std::string>& names, std::int32_t expected) {
        std::uint64_t count = 0;
        get(&count, sizeof count);
        if (count != 0 && count != static_cast<std::uint64_t>(expected)) {
            throw ParseError(path, 0, "corrupt name table");
        }
        names.resize(count);
        for (auto& s : names) {
            std::uint32_t len = 0;
            get(&len, sizeof len);
            if (len > 4096) throw ParseError(path, 0, "corrupt name length");
            s.resize(len);
            if (len > 0) get(s.data(), len);
        }
    };
    get_names(model.user_names, n);
    get_names(model.item_names, m);
    return model;
}

inline std::string format_double17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_trace_csv(const std::string& path, const std::vector<TraceEntry>& trace) {
    CsvWriter w(path, "iter,objective,delta_rel");
    for (const auto& t : trace) {
        w.row({std::to_string(t.iter), format_double17(t.objective),
               format_double17(t.delta_rel)});
    }
}

}  // namespace congrec
