#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "tenseg/common.hpp"
#include "tenseg/mps.hpp"
#include "tenseg/tensor.hpp"

using namespace tenseg;

namespace {

std::vector<double> random_features(Rng& rng, std::int64_t n, std::int64_t f) {
    std::vector<double> feats(static_cast<std::size_t>(n * f));
    for (auto& v : feats) v = rng.uniform(-1.0, 1.0);
    return feats;
}

// Independent oracle: contract the explicit weight tensor against the
// explicit global feature map, by direct summation.
std::vector<double> forward_oracle(const MpsModel& m, std::span<const double> feats) {
    const DenseTensor theta = materialize(m);
    std::vector<DenseTensor> locals;
    for (std::int64_t j = 0; j < m.num_sites; ++j) {
        std::vector<double> v(feats.begin() + j * m.feature_dim,
                              feats.begin() + (j + 1) * m.feature_dim);
        locals.emplace_back(std::vector<std::int64_t>{m.feature_dim}, std::move(v));
    }
    const DenseTensor phi = outer_product_chain(locals);
    std::vector<double> logits(static_cast<std::size_t>(m.output_dim), 0.0);
    const std::int64_t p = m.output_dim;
    for (std::int64_t flat = 0; flat < phi.size(); ++flat) {
        const double pv = phi[flat];
        for (std::int64_t mm = 0; mm < p; ++mm) {
            logits[static_cast<std::size_t>(mm)] += theta[flat * p + mm] * pv;
        }
    }
    return logits;
}

double max_rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double scale = 1e-30;
    for (double v : b) scale = std::max(scale, std::abs(v));
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
    }
    return worst;
}

}  // namespace

TEST_CASE("init is deterministic and shaped as specified") {
    const MpsModel a = make_mps_for_patches(8, 1, 1, 4, 4, 123);
    const MpsModel b = make_mps_for_patches(8, 1, 1, 4, 4, 123);
    REQUIRE(a.num_sites == 64);
    REQUIRE(a.output_dim == 64);
    REQUIRE(a.sites.front().shape() == std::vector<std::int64_t>{1, 4, 4});
    REQUIRE(a.sites.back().shape() == std::vector<std::int64_t>{4, 4, 1});
    REQUIRE(a.sites[10].shape() == std::vector<std::int64_t>{4, 4, 4});
    REQUIRE(a.output.shape() == std::vector<std::int64_t>{4, 64, 4});
    REQUIRE(a.output_slot == 32);
    for (std::size_t j = 0; j < a.sites.size(); ++j) {
        const auto da = a.sites[j].data();
        const auto db = b.sites[j].data();
        REQUIRE(std::equal(da.begin(), da.end(), db.begin()));
    }
    const MpsModel c = make_mps_for_patches(8, 1, 1, 4, 4, 124);
    CHECK(c.sites[0].data()[0] != a.sites[0].data()[0]);
}

TEST_CASE("eps=0 init with all-ones features gives identity chain") {
    const MpsModel m = make_mps(6, 3, 6, 2, 9, /*eps=*/0.0, /*output_eps=*/0.0);
    std::vector<double> ones(static_cast<std::size_t>(6 * 3), 1.0);
    const auto logits = forward(m, ones);
    for (double z : logits) {
        REQUIRE(std::isfinite(z));
        REQUIRE(std::abs(z) <= 1.0);  // output tensor is all zeros at eps=0
        CHECK(z == 0.0);
    }
    // The chain itself contracts to exactly 1 through the identity path.
    const auto env = compute_environments(m, ones);
    CHECK(env.left[6][0] == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("beta=1 all-ones sites with sum-1 features reproduce the output tensor") {
    MpsModel m = make_mps(4, 2, 4, 1, 5);
    for (auto& site : m.sites)
        for (auto& v : site.data()) v = 1.0;
    Rng rng(55);
    for (auto& v : m.output.data()) v = rng.uniform(-1, 1);
    // Linear-complement style features: [x, 1-x] sums to 1, so every
    // contracted site matrix is [[1]].
    std::vector<double> feats;
    for (int j = 0; j < 4; ++j) {
        const double x = rng.uniform();
        feats.push_back(x);
        feats.push_back(1.0 - x);
    }
    const auto logits = forward(m, feats);
    const auto od = m.output.data();
    for (std::size_t i = 0; i < logits.size(); ++i) {
        REQUIRE(logits[i] == Catch::Approx(od[i]).epsilon(1e-14).margin(1e-14));
    }
}

TEST_CASE("forward matches the materialize/outer-product oracle") {
    Rng rng(2024);
    int cases = 0;
    for (std::int64_t n = 1; n <= 6; ++n) {
        for (std::int64_t beta : {1, 2, 4}) {
            const MpsModel m = make_mps(n, 2, n, beta, 1000 + static_cast<std::uint64_t>(cases));
            const auto feats = random_features(rng, n, 2);
            const auto fast = forward(m, feats);
            const auto slow = forward_oracle(m, feats);
            REQUIRE(max_rel_diff(fast, slow) <= 1e-10);
            ++cases;
        }
    }
    CHECK(cases == 18);
}

TEST_CASE("forward is order-sensitive") {
    const MpsModel m = make_mps(4, 2, 4, 4, 77);
    Rng rng(78);
    auto feats = random_features(rng, 4, 2);
    const auto base = forward(m, feats);
    // Swap the feature vectors of sites 0 and 3.
    auto swapped = feats;
    std::swap_ranges(swapped.begin(), swapped.begin() + 2, swapped.begin() + 6);
    const auto permuted = forward(m, swapped);
    double diff = 0;
    for (std::size_t i = 0; i < base.size(); ++i) diff = std::max(diff, std::abs(base[i] - permuted[i]));
    CHECK(diff > 1e-8);
}

TEST_CASE("environment sweeps agree with each other and with forward") {
    const MpsModel m = make_mps(6, 3, 6, 3, 31);
    Rng rng(32);
    const auto feats = random_features(rng, 6, 3);
    const auto env = compute_environments(m, feats);
    // dot(left[j], right[j]) is the same full-chain scalar for every j.
    std::vector<double> dots;
    for (std::int64_t j = 0; j <= 6; ++j) {
        double d = 0;
        for (std::size_t k = 0; k < env.left[static_cast<std::size_t>(j)].size(); ++k)
            d += env.left[static_cast<std::size_t>(j)][k] * env.right[static_cast<std::size_t>(j)][k];
        dots.push_back(d);
    }
    for (double d : dots) REQUIRE(d == Catch::Approx(dots[0]).epsilon(1e-12));
    REQUIRE(forward_from_env(m, env) == forward(m, feats));
}

TEST_CASE("backward matches central finite differences") {
    MpsModel m = make_mps(6, 2, 6, 3, 404);
    Rng rng(405);
    const auto feats = random_features(rng, 6, 2);
    std::vector<double> upstream(static_cast<std::size_t>(m.output_dim));
    for (auto& u : upstream) u = rng.uniform(-1, 1);

    const MpsGradients grads = backward(m, feats, upstream);

    auto scalar = [&](const MpsModel& model) {
        const auto logits = forward(model, feats);
        double s = 0;
        for (std::size_t i = 0; i < logits.size(); ++i) s += upstream[i] * logits[i];
        return s;
    };

    const double h = 1e-5;
    auto check_tensor = [&](DenseTensor& param, const DenseTensor& grad) {
        auto pd = param.data();
        const auto gd = grad.data();
        for (std::size_t k = 0; k < pd.size(); ++k) {
            const double orig = pd[k];
            pd[k] = orig + h;
            const double hi = scalar(m);
            pd[k] = orig - h;
            const double lo = scalar(m);
            pd[k] = orig;
            const double fd = (hi - lo) / (2 * h);
            const double denom = std::max({1e-8, std::abs(fd), std::abs(gd[k])});
            REQUIRE(std::abs(fd - gd[k]) / denom <= 1e-4);
        }
    };
    for (std::size_t j = 0; j < m.sites.size(); ++j) check_tensor(m.sites[j], grads.sites[j]);
    check_tensor(m.output, grads.output);
}

TEST_CASE("zero upstream gives zero gradients") {
    const MpsModel m = make_mps(5, 2, 5, 2, 11);
    Rng rng(12);
    const auto feats = random_features(rng, 5, 2);
    std::vector<double> zero(static_cast<std::size_t>(m.output_dim), 0.0);
    const MpsGradients g = backward(m, feats, zero);
    for (const auto& s : gradient_spans(g))
        for (double v : s) REQUIRE(v == 0.0);
}

TEST_CASE("forward is multilinear in each tensor") {
    MpsModel m = make_mps(4, 2, 4, 3, 808);
    Rng rng(809);
    const auto feats = random_features(rng, 4, 2);
    const auto base = forward(m, feats);

    for (std::size_t j = 0; j < m.sites.size(); ++j) {
        for (auto& v : m.sites[j].data()) v *= 2.0;
        const auto doubled = forward(m, feats);
        for (std::size_t i = 0; i < base.size(); ++i) {
            REQUIRE(doubled[i] == Catch::Approx(2.0 * base[i]).epsilon(1e-12).margin(1e-300));
        }
        for (auto& v : m.sites[j].data()) v *= 0.5;
    }
    for (auto& v : m.output.data()) v *= 2.0;
    const auto doubled = forward(m, feats);
    for (std::size_t i = 0; i < base.size(); ++i) {
        REQUIRE(doubled[i] == Catch::Approx(2.0 * base[i]).epsilon(1e-12).margin(1e-300));
    }
}

TEST_CASE("materialize N=1 is the site times the output vector") {
    MpsModel m = make_mps(1, 3, 1, 1, 21);
    m.output.data()[0] = 1.0;  // P=1 with unit output: theta == the site
    const DenseTensor theta = materialize(m);
    REQUIRE(theta.shape() == std::vector<std::int64_t>{3, 1});
    for (std::int64_t i = 0; i < 3; ++i) {
        REQUIRE(theta[i] == m.sites[0].data()[static_cast<std::size_t>(i)]);
    }
}

TEST_CASE("materialize capacity guard") {
    const MpsModel m = make_mps(30, 2, 30, 1, 3);
    CHECK_THROWS_AS(materialize(m), CapacityError);
}

TEST_CASE("param_count formula") {
    CHECK(param_count(2, 1, 1, 2, 1, 2) == 12);
    CHECK(param_count(8, 1, 1, 4, 4, 2) == 5024);
    CHECK(param_count(32, 1, 1, 4, 20, 2) == 2044960);
    // Full-bond chain spans at least as many parameters as the explicit
    // tensor it can represent exactly: beta = (C*d)^(N/2) with N=4, d=2.
    CHECK(param_count(2, 1, 1, 2, 4, 2) >= 16 * 4);

    // The formula agrees with the tensors a model actually allocates.
    const MpsModel m = make_mps_for_patches(4, 1, 1, 4, 3, 99);
    CHECK(m.parameter_count() == param_count(4, 1, 1, 4, 3, 2));
    const MpsModel v = make_mps_for_patches(4, 1, 1, 4, 3, 99, 3);
    CHECK(v.parameter_count() == param_count(4, 1, 1, 4, 3, 3));
}

TEST_CASE("forward validates feature length") {
    const MpsModel m = make_mps(4, 2, 4, 2, 1);
    std::vector<double> wrong(7, 0.0);
    CHECK_THROWS_AS(forward(m, wrong), DimensionError);
    std::vector<double> feats(8, 0.0);
    std::vector<double> bad_upstream(3, 0.0);
    CHECK_THROWS_AS(backward(m, feats, bad_upstream), DimensionError);
}
