#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tenseg/common.hpp"
#include "tenseg/tensor.hpp"

namespace tenseg {

// Matrix product state approximation of the order-(N+1) weight tensor of a
// linear pixel classifier. Site j carries shape [bond(j), F, bond(j+1)] with
// F = C*d the per-pixel feature dimension; the output tensor [bond(s), P,
// bond(s)] sits between sites s-1 and s (s = ceil(N/2)) and carries the
// P = K^dims * M prediction index. Contracting the chain against one
// patch's feature sequence yields the patch's P logits.
//
// The model is multilinear in its tensors, so gradients are analytic and
// come from cached left/right environment sweeps; no autodiff involved.
struct MpsModel {
    std::int64_t num_sites = 0;    // N
    std::int64_t feature_dim = 0;  // F = C*d
    std::int64_t output_dim = 0;   // P
    std::int64_t bond_dim = 1;     // beta
    std::int64_t output_slot = 0;  // output tensor sits after this many sites

    std::vector<DenseTensor> sites;
    DenseTensor output;

    // Bond extent between site j-1 and site j; the chain ends are 1-dim.
    std::int64_t bond(std::int64_t j) const {
        return (j == 0 || j == num_sites) ? 1 : bond_dim;
    }

    std::int64_t parameter_count() const {
        std::int64_t n = output.size();
        for (const auto& s : sites) n += s.size();
        return n;
    }
};

// Near-identity initialization: site[a,i,b] = delta_ab / F + eps * U(-1,1),
// output ~ output_eps * U(-1,1). With all-ones feature vectors every
// contracted site matrix is exactly the identity. The output tensor starts
// two orders quieter than the sites so early logits sit near the decision
// boundary and the first gradient steps move whole patches coherently
// before per-pixel structure appears. Draw order is sites in chain order,
// row-major within each tensor, then the output tensor; same seed gives
// bit-identical parameters.
inline MpsModel make_mps(std::int64_t num_sites, std::int64_t feature_dim,
                         std::int64_t output_dim, std::int64_t bond_dim, std::uint64_t seed,
                         double eps = 1e-2, double output_eps = 1e-4) {
    if (num_sites < 1 || feature_dim < 1 || output_dim < 1 || bond_dim < 1) {
        throw ConfigError("mps dimensions must be >= 1");
    }
    MpsModel m;
    m.num_sites = num_sites;
    m.feature_dim = feature_dim;
    m.output_dim = output_dim;
    m.bond_dim = bond_dim;
    m.output_slot = (num_sites + 1) / 2;
    Rng rng(seed);
    m.sites.reserve(static_cast<std::size_t>(num_sites));
    for (std::int64_t j = 0; j < num_sites; ++j) {
        const std::int64_t bl = m.bond(j);
        const std::int64_t br = m.bond(j + 1);
        DenseTensor site({bl, feature_dim, br});
        auto data = site.data();
        std::size_t w = 0;
        for (std::int64_t a = 0; a < bl; ++a)
            for (std::int64_t i = 0; i < feature_dim; ++i)
                for (std::int64_t b = 0; b < br; ++b, ++w) {
                    const double identity = (a == b) ? 1.0 / static_cast<double>(feature_dim) : 0.0;
                    data[w] = identity + eps * rng.uniform(-1.0, 1.0);
                }
        m.sites.push_back(std::move(site));
    }
    const std::int64_t bs = m.bond(m.output_slot);
    m.output = DenseTensor({bs, output_dim, bs});
    for (auto& v : m.output.data()) v = output_eps * rng.uniform(-1.0, 1.0);
    return m;
}

// Chain geometry from patch hyperparameters: N = K^dims sites, P = K^dims*M.
inline MpsModel make_mps_for_patches(std::int64_t patch_edge, std::int64_t classes,
                                     std::int64_t channels, std::int64_t local_dim,
                                     std::int64_t bond_dim, std::uint64_t seed, int dims = 2,
                                     double eps = 1e-2) {
    std::int64_t n = patch_edge * patch_edge;
    if (dims == 3) n *= patch_edge;
    return make_mps(n, channels * local_dim, n * classes, bond_dim, seed, eps);
}

// Shape-ledger parameter count: two edge sites of C*d*beta, N-2 interior
// sites of beta^2*C*d, and the central output tensor of beta^2*P.
inline std::int64_t param_count(std::int64_t patch_edge, std::int64_t classes,
                                std::int64_t channels, std::int64_t local_dim,
                                std::int64_t bond_dim, int dims = 2) {
    std::int64_t n = patch_edge * patch_edge;
    if (dims == 3) n *= patch_edge;
    const std::int64_t f = channels * local_dim;
    const std::int64_t p = n * classes;
    return 2 * (f * bond_dim) + (n - 2) * (bond_dim * bond_dim * f) + bond_dim * bond_dim * p;
}

namespace detail {

inline void check_features(const MpsModel& m, std::span<const double> features) {
    if (static_cast<std::int64_t>(features.size()) != m.num_sites * m.feature_dim) {
        throw DimensionError("feature sequence length " + std::to_string(features.size()) +
                             " != num_sites * feature_dim = " +
                             std::to_string(m.num_sites * m.feature_dim));
    }
}

// out[b] = sum_a l[a] * M[a,b]
inline std::vector<double> row_times_mat(std::span<const double> l, std::span<const double> mat,
                                         std::int64_t rows, std::int64_t cols) {
    std::vector<double> out(static_cast<std::size_t>(cols), 0.0);
    for (std::int64_t a = 0; a < rows; ++a) {
        const double la = l[static_cast<std::size_t>(a)];
        if (la == 0.0) continue;
        const std::size_t base = static_cast<std::size_t>(a * cols);
        for (std::int64_t b = 0; b < cols; ++b) out[static_cast<std::size_t>(b)] += la * mat[base + static_cast<std::size_t>(b)];
    }
    return out;
}

// out[a] = sum_b M[a,b] * r[b]
inline std::vector<double> mat_times_col(std::span<const double> mat, std::span<const double> r,
                                         std::int64_t rows, std::int64_t cols) {
    std::vector<double> out(static_cast<std::size_t>(rows), 0.0);
    for (std::int64_t a = 0; a < rows; ++a) {
        double acc = 0.0;
        const std::size_t base = static_cast<std::size_t>(a * cols);
        for (std::int64_t b = 0; b < cols; ++b) acc += mat[base + static_cast<std::size_t>(b)] * r[static_cast<std::size_t>(b)];
        out[static_cast<std::size_t>(a)] = acc;
    }
    return out;
}

}  // namespace detail

// Left/right partial contractions of the chain (output tensor excluded).
// left[j] is the row vector over bond j after absorbing sites 0..j-1;
// right[j] is the column vector over bond j after absorbing sites j..N-1.
// dot(left[j], right[j]) is independent of j.
struct EnvironmentCache {
    std::vector<std::vector<double>> site_matrices;  // M_j = site_j contracted with feature_j
    std::vector<std::vector<double>> left;           // N+1 entries
    std::vector<std::vector<double>> right;          // N+1 entries
};

inline EnvironmentCache compute_environments(const MpsModel& m, std::span<const double> features) {
    detail::check_features(m, features);
    const std::int64_t n = m.num_sites;
    EnvironmentCache env;
    env.site_matrices.resize(static_cast<std::size_t>(n));
    for (std::int64_t j = 0; j < n; ++j) {
        const std::int64_t bl = m.bond(j);
        const std::int64_t br = m.bond(j + 1);
        auto& mat = env.site_matrices[static_cast<std::size_t>(j)];
        mat.assign(static_cast<std::size_t>(bl * br), 0.0);
        contract_site_into(m.sites[static_cast<std::size_t>(j)].data(), bl, m.feature_dim, br,
                           features.subspan(static_cast<std::size_t>(j * m.feature_dim),
                                            static_cast<std::size_t>(m.feature_dim)),
                           mat);
    }
    env.left.resize(static_cast<std::size_t>(n + 1));
    env.right.resize(static_cast<std::size_t>(n + 1));
    env.left[0] = {1.0};
    for (std::int64_t j = 0; j < n; ++j) {
        env.left[static_cast<std::size_t>(j + 1)] =
            detail::row_times_mat(env.left[static_cast<std::size_t>(j)],
                                  env.site_matrices[static_cast<std::size_t>(j)], m.bond(j),
                                  m.bond(j + 1));
    }
    env.right[static_cast<std::size_t>(n)] = {1.0};
    for (std::int64_t j = n - 1; j >= 0; --j) {
        env.right[static_cast<std::size_t>(j)] =
            detail::mat_times_col(env.site_matrices[static_cast<std::size_t>(j)],
                                  env.right[static_cast<std::size_t>(j + 1)], m.bond(j),
                                  m.bond(j + 1));
    }
    return env;
}

// logits[m] = sum_{a,b} left[s][a] * output[a,m,b] * right[s][b]
inline std::vector<double> forward_from_env(const MpsModel& m, const EnvironmentCache& env) {
    const auto& l = env.left[static_cast<std::size_t>(m.output_slot)];
    const auto& r = env.right[static_cast<std::size_t>(m.output_slot)];
    const std::int64_t bs = m.bond(m.output_slot);
    const std::int64_t p = m.output_dim;
    std::vector<double> logits(static_cast<std::size_t>(p), 0.0);
    const auto od = m.output.data();
    for (std::int64_t a = 0; a < bs; ++a) {
        const double la = l[static_cast<std::size_t>(a)];
        if (la == 0.0) continue;
        for (std::int64_t mm = 0; mm < p; ++mm) {
            const std::size_t base = static_cast<std::size_t>((a * p + mm) * bs);
            double acc = 0.0;
            for (std::int64_t b = 0; b < bs; ++b) acc += od[base + static_cast<std::size_t>(b)] * r[static_cast<std::size_t>(b)];
            logits[static_cast<std::size_t>(mm)] += la * acc;
        }
    }
    return logits;
}

// Raw logits for one patch; no squashing.
inline std::vector<double> forward(const MpsModel& m, std::span<const double> features) {
    return forward_from_env(m, compute_environments(m, features));
}

struct MpsGradients {
    std::vector<DenseTensor> sites;
    DenseTensor output;

    static MpsGradients zeros_like(const MpsModel& m) {
        MpsGradients g;
        g.sites.reserve(m.sites.size());
        for (const auto& s : m.sites) g.sites.emplace_back(s.shape());
        g.output = DenseTensor(m.output.shape());
        return g;
    }

    void add(const MpsGradients& o) {
        for (std::size_t j = 0; j < sites.size(); ++j) {
            auto d = sites[j].data();
            const auto s = o.sites[j].data();
            for (std::size_t k = 0; k < d.size(); ++k) d[k] += s[k];
        }
        auto d = output.data();
        const auto s = o.output.data();
        for (std::size_t k = 0; k < d.size(); ++k) d[k] += s[k];
    }
};

// Accumulate d(sum_m upstream[m] * logits[m]) / d(parameters) into `grads`.
// For a site left of the output slot the gradient is the outer product of
// the left environment, the feature vector, and a right environment that
// has the output tensor and upstream contracted in (and mirrored on the
// other side). Cost O(N * beta^2 * F) per patch.
inline void backward_accumulate(const MpsModel& m, std::span<const double> features,
                                std::span<const double> upstream, const EnvironmentCache& env,
                                MpsGradients& grads) {
    if (static_cast<std::int64_t>(upstream.size()) != m.output_dim) {
        throw DimensionError("upstream gradient length " + std::to_string(upstream.size()) +
                             " != output_dim " + std::to_string(m.output_dim));
    }
    const std::int64_t n = m.num_sites;
    const std::int64_t s = m.output_slot;
    const std::int64_t bs = m.bond(s);
    const std::int64_t p = m.output_dim;
    const auto& lhalf = env.left[static_cast<std::size_t>(s)];
    const auto& rhalf = env.right[static_cast<std::size_t>(s)];
    const auto od = m.output.data();

    // Output tensor: outer product left x upstream x right.
    {
        auto gd = grads.output.data();
        std::size_t w = 0;
        for (std::int64_t a = 0; a < bs; ++a)
            for (std::int64_t mm = 0; mm < p; ++mm) {
                const double lu = lhalf[static_cast<std::size_t>(a)] * upstream[static_cast<std::size_t>(mm)];
                for (std::int64_t b = 0; b < bs; ++b, ++w) gd[w] += lu * rhalf[static_cast<std::size_t>(b)];
            }
    }

    // utilde[a] = sum_{m,b} output[a,m,b] * upstream[m] * rhalf[b]
    // vtilde[b] = sum_{a,m} lhalf[a] * output[a,m,b] * upstream[m]
    std::vector<double> utilde(static_cast<std::size_t>(bs), 0.0);
    std::vector<double> vtilde(static_cast<std::size_t>(bs), 0.0);
    {
        std::size_t w = 0;
        for (std::int64_t a = 0; a < bs; ++a)
            for (std::int64_t mm = 0; mm < p; ++mm) {
                const double u = upstream[static_cast<std::size_t>(mm)];
                const double lu = lhalf[static_cast<std::size_t>(a)] * u;
                for (std::int64_t b = 0; b < bs; ++b, ++w) {
                    utilde[static_cast<std::size_t>(a)] += od[w] * u * rhalf[static_cast<std::size_t>(b)];
                    vtilde[static_cast<std::size_t>(b)] += lu * od[w];
                }
            }
    }

    // Sites left of the slot, swept right-to-left with q = M_{j+1}...M_{s-1} utilde.
    {
        std::vector<double> q = utilde;
        for (std::int64_t j = s - 1; j >= 0; --j) {
            const std::int64_t bl = m.bond(j);
            const std::int64_t br = m.bond(j + 1);
            const auto& lpre = env.left[static_cast<std::size_t>(j)];
            auto gd = grads.sites[static_cast<std::size_t>(j)].data();
            const auto feat = features.subspan(static_cast<std::size_t>(j * m.feature_dim),
                                               static_cast<std::size_t>(m.feature_dim));
            std::size_t w = 0;
            for (std::int64_t a = 0; a < bl; ++a)
                for (std::int64_t i = 0; i < m.feature_dim; ++i) {
                    const double lf = lpre[static_cast<std::size_t>(a)] * feat[static_cast<std::size_t>(i)];
                    for (std::int64_t b = 0; b < br; ++b, ++w) gd[w] += lf * q[static_cast<std::size_t>(b)];
                }
            if (j > 0) {
                q = detail::mat_times_col(env.site_matrices[static_cast<std::size_t>(j)], q, bl, br);
            }
        }
    }

    // Sites right of the slot, swept left-to-right with q = vtilde M_s...M_{j-1}.
    {
        std::vector<double> q = vtilde;
        for (std::int64_t j = s; j < n; ++j) {
            const std::int64_t bl = m.bond(j);
            const std::int64_t br = m.bond(j + 1);
            const auto& rpost = env.right[static_cast<std::size_t>(j + 1)];
            auto gd = grads.sites[static_cast<std::size_t>(j)].data();
            const auto feat = features.subspan(static_cast<std::size_t>(j * m.feature_dim),
                                               static_cast<std::size_t>(m.feature_dim));
            std::size_t w = 0;
            for (std::int64_t a = 0; a < bl; ++a)
                for (std::int64_t i = 0; i < m.feature_dim; ++i) {
                    const double qf = q[static_cast<std::size_t>(a)] * feat[static_cast<std::size_t>(i)];
                    for (std::int64_t b = 0; b < br; ++b, ++w) gd[w] += qf * rpost[static_cast<std::size_t>(b)];
                }
            if (j + 1 < n) {
                q = detail::row_times_mat(q, env.site_matrices[static_cast<std::size_t>(j)], bl, br);
            }
        }
    }
}

inline MpsGradients backward(const MpsModel& m, std::span<const double> features,
                             std::span<const double> upstream) {
    MpsGradients g = MpsGradients::zeros_like(m);
    backward_accumulate(m, features, upstream, compute_environments(m, features), g);
    return g;
}

inline constexpr std::int64_t kMaterializeCapacity = std::int64_t{1} << 24;

// Explicit weight tensor, shape [F,...,F (N times), P]; oracle-scale only.
// forward(model, feats) equals the full contraction of this tensor with
// outer_product_chain of the per-site feature vectors.
inline DenseTensor materialize(const MpsModel& m) {
    const std::int64_t f = m.feature_dim;
    std::int64_t total = m.output_dim;
    for (std::int64_t j = 0; j < m.num_sites; ++j) {
        if (total > kMaterializeCapacity / f) {
            throw CapacityError("materialize would exceed " +
                                std::to_string(kMaterializeCapacity) + " entries");
        }
        total *= f;
    }
    const std::int64_t s = m.output_slot;

    // Left half: rows enumerate (i_0..i_{s-1}) row-major, columns bond(s).
    std::vector<double> lmat{1.0};
    std::int64_t lrows = 1;
    for (std::int64_t j = 0; j < s; ++j) {
        const std::int64_t bl = m.bond(j);
        const std::int64_t br = m.bond(j + 1);
        const auto sd = m.sites[static_cast<std::size_t>(j)].data();
        std::vector<double> next(static_cast<std::size_t>(lrows * f * br), 0.0);
        for (std::int64_t rrow = 0; rrow < lrows; ++rrow)
            for (std::int64_t a = 0; a < bl; ++a) {
                const double lv = lmat[static_cast<std::size_t>(rrow * bl + a)];
                if (lv == 0.0) continue;
                for (std::int64_t i = 0; i < f; ++i)
                    for (std::int64_t b = 0; b < br; ++b)
                        next[static_cast<std::size_t>((rrow * f + i) * br + b)] +=
                            lv * sd[static_cast<std::size_t>((a * f + i) * br + b)];
            }
        lmat.swap(next);
        lrows *= f;
    }

    // Right half: rows bond(s), columns enumerate (i_s..i_{N-1}) row-major.
    std::vector<double> rmat{1.0};
    std::int64_t rcols = 1;
    for (std::int64_t j = m.num_sites - 1; j >= s; --j) {
        const std::int64_t bl = m.bond(j);
        const std::int64_t br = m.bond(j + 1);
        const auto sd = m.sites[static_cast<std::size_t>(j)].data();
        std::vector<double> next(static_cast<std::size_t>(bl * f * rcols), 0.0);
        for (std::int64_t a = 0; a < bl; ++a)
            for (std::int64_t i = 0; i < f; ++i)
                for (std::int64_t b = 0; b < br; ++b) {
                    const double sv = sd[static_cast<std::size_t>((a * f + i) * br + b)];
                    if (sv == 0.0) continue;
                    for (std::int64_t col = 0; col < rcols; ++col)
                        next[static_cast<std::size_t>((a * f + i) * rcols + col)] +=
                            sv * rmat[static_cast<std::size_t>(b * rcols + col)];
                }
        rmat.swap(next);
        rcols *= f;
    }

    const std::int64_t bs = m.bond(s);
    const std::int64_t p = m.output_dim;
    std::vector<std::int64_t> shape(static_cast<std::size_t>(m.num_sites), f);
    shape.push_back(p);
    DenseTensor theta(std::move(shape));
    auto td = theta.data();
    const auto od = m.output.data();
    for (std::int64_t pre = 0; pre < lrows; ++pre)
        for (std::int64_t post = 0; post < rcols; ++post) {
            const std::size_t base = static_cast<std::size_t>((pre * rcols + post) * p);
            for (std::int64_t mm = 0; mm < p; ++mm) {
                double acc = 0.0;
                for (std::int64_t a = 0; a < bs; ++a) {
                    const double lv = lmat[static_cast<std::size_t>(pre * bs + a)];
                    if (lv == 0.0) continue;
                    for (std::int64_t b = 0; b < bs; ++b)
                        acc += lv * od[static_cast<std::size_t>((a * p + mm) * bs + b)] *
                               rmat[static_cast<std::size_t>(b * rcols + post)];
                }
                td[base + static_cast<std::size_t>(mm)] = acc;
            }
        }
    return theta;
}

// Mutable views over all parameters, sites in chain order then the output
// tensor; the optimizer and the checkpoint writer share this order.
inline std::vector<std::span<double>> parameter_spans(MpsModel& m) {
    std::vector<std::span<double>> spans;
    spans.reserve(m.sites.size() + 1);
    for (auto& s : m.sites) spans.push_back(s.data());
    spans.push_back(m.output.data());
    return spans;
}

inline std::vector<std::span<const double>> parameter_spans(const MpsModel& m) {
    std::vector<std::span<const double>> spans;
    spans.reserve(m.sites.size() + 1);
    for (const auto& s : m.sites) spans.push_back(s.data());
    spans.push_back(m.output.data());
    return spans;
}

inline std::vector<std::span<const double>> gradient_spans(const MpsGradients& g) {
    std::vector<std::span<const double>> spans;
    spans.reserve(g.sites.size() + 1);
    for (const auto& s : g.sites) spans.push_back(s.data());
    spans.push_back(g.output.data());
    return spans;
}

inline std::vector<std::span<double>> gradient_spans(MpsGradients& g) {
    std::vector<std::span<double>> spans;
    spans.reserve(g.sites.size() + 1);
    for (auto& s : g.sites) spans.push_back(s.data());
    spans.push_back(g.output.data());
    return spans;
}

inline bool all_finite(const MpsModel& m) {
    for (const auto& s : parameter_spans(m))
        for (double v : s)
            if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace tenseg
