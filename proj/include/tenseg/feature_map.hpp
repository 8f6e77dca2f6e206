#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <span>
#include <string>
#include <vector>

#include "tenseg/common.hpp"

namespace tenseg {

enum class FeatureMapKind {
    BinomialSinusoidal,  // sqrt(C(d-1,i-1)) cos^(d-i)(pi x/2) sin^(i-1)(pi x/2)
    LinearComplement,    // [x, 1-x], d == 2
    Fourier,             // [sin(2^i pi x), cos(2^i pi x)], i = 1..d/2
};

inline std::string to_string(FeatureMapKind kind) {
    switch (kind) {
        case FeatureMapKind::BinomialSinusoidal: return "binomial-sinusoidal";
        case FeatureMapKind::LinearComplement: return "linear-complement";
        case FeatureMapKind::Fourier: return "fourier";
    }
    return "?";
}

inline FeatureMapKind feature_map_kind_from_string(const std::string& s) {
    if (s == "binomial-sinusoidal") return FeatureMapKind::BinomialSinusoidal;
    if (s == "linear-complement") return FeatureMapKind::LinearComplement;
    if (s == "fourier") return FeatureMapKind::Fourier;
    throw ConfigError("unknown feature map kind '" + s +
                      "' (expected binomial-sinusoidal, linear-complement, or fourier)");
}

// Non-learned per-pixel lift from a channel value in [0,1] to a d-vector.
class LocalFeatureMap {
public:
    LocalFeatureMap(FeatureMapKind kind, std::int64_t d) : kind_(kind), d_(d) {
        if (d_ < 2) {
            throw ConfigError("feature map dimension must be >= 2, got " + std::to_string(d_));
        }
        if (kind_ == FeatureMapKind::LinearComplement && d_ != 2) {
            throw ConfigError("linear-complement feature map requires d == 2, got " +
                              std::to_string(d_));
        }
        if (kind_ == FeatureMapKind::Fourier && d_ % 2 != 0) {
            throw ConfigError("fourier feature map requires even d, got " + std::to_string(d_));
        }
    }

    FeatureMapKind kind() const { return kind_; }
    std::int64_t dim() const { return d_; }

    // psi(x). Out-of-range inputs are clamped to [0,1]; 8-bit image data
    // rounds safely, so this warns once per run instead of failing.
    std::vector<double> apply(double x) const {
        std::vector<double> out(static_cast<std::size_t>(d_));
        apply_into(x, out);
        return out;
    }

    void apply_into(double x, std::span<double> out) const {
        x = clamp_input(x);
        switch (kind_) {
            case FeatureMapKind::BinomialSinusoidal: {
                const double theta = kHalfPi * x;
                const double c = std::cos(theta);
                const double s = std::sin(theta);
                for (std::int64_t i = 1; i <= d_; ++i) {
                    out[static_cast<std::size_t>(i - 1)] = std::sqrt(binomial(d_ - 1, i - 1)) *
                                                           pow_int(c, d_ - i) * pow_int(s, i - 1);
                }
                break;
            }
            case FeatureMapKind::LinearComplement:
                out[0] = x;
                out[1] = 1.0 - x;
                break;
            case FeatureMapKind::Fourier: {
                for (std::int64_t i = 1; i <= d_ / 2; ++i) {
                    const double w = std::ldexp(kPi, static_cast<int>(i)) * x;  // 2^i pi x
                    out[static_cast<std::size_t>(2 * (i - 1))] = std::sin(w);
                    out[static_cast<std::size_t>(2 * (i - 1) + 1)] = std::cos(w);
                }
                break;
            }
        }
    }

    // d psi / d x. Not consumed by training (model parameters are optimized,
    // not pixels); kept so the gradient path is complete end to end.
    std::vector<double> apply_derivative(double x) const {
        x = clamp_input(x);
        std::vector<double> out(static_cast<std::size_t>(d_), 0.0);
        switch (kind_) {
            case FeatureMapKind::BinomialSinusoidal: {
                const double theta = kHalfPi * x;
                const double c = std::cos(theta);
                const double s = std::sin(theta);
                for (std::int64_t i = 1; i <= d_; ++i) {
                    const std::int64_t p = d_ - i;
                    const std::int64_t q = i - 1;
                    const double coeff = std::sqrt(binomial(d_ - 1, i - 1));
                    double dtheta = 0.0;
                    if (p > 0) dtheta -= static_cast<double>(p) * pow_int(c, p - 1) * pow_int(s, q + 1);
                    if (q > 0) dtheta += static_cast<double>(q) * pow_int(c, p + 1) * pow_int(s, q - 1);
                    out[static_cast<std::size_t>(i - 1)] = coeff * dtheta * kHalfPi;
                }
                break;
            }
            case FeatureMapKind::LinearComplement:
                out[0] = 1.0;
                out[1] = -1.0;
                break;
            case FeatureMapKind::Fourier: {
                for (std::int64_t i = 1; i <= d_ / 2; ++i) {
                    const double freq = std::ldexp(kPi, static_cast<int>(i));
                    out[static_cast<std::size_t>(2 * (i - 1))] = freq * std::cos(freq * x);
                    out[static_cast<std::size_t>(2 * (i - 1) + 1)] = -freq * std::sin(freq * x);
                }
                break;
            }
        }
        return out;
    }

    // Per-pixel feature vector: channel 0's d entries first.
    std::vector<double> apply_channels(std::span<const double> pixel) const {
        std::vector<double> out(pixel.size() * static_cast<std::size_t>(d_));
        apply_channels_into(pixel, out);
        return out;
    }

    void apply_channels_into(std::span<const double> pixel, std::span<double> out) const {
        for (std::size_t c = 0; c < pixel.size(); ++c) {
            apply_into(pixel[c], out.subspan(c * static_cast<std::size_t>(d_),
                                             static_cast<std::size_t>(d_)));
        }
    }

private:
    static constexpr double kPi = 3.14159265358979323846264338327950288;
    static constexpr double kHalfPi = kPi / 2.0;

    static double clamp_input(double x) {
        if (x < 0.0 || x > 1.0) {
            warn_out_of_range();
            return x < 0.0 ? 0.0 : 1.0;
        }
        return x;
    }

    static void warn_out_of_range() {
        static std::atomic<bool> warned{false};
        if (!warned.exchange(true)) {
            std::cerr << "tenseg: feature map input outside [0,1]; clamping\n";
        }
    }

    static double binomial(std::int64_t n, std::int64_t k) {
        if (k < 0 || k > n) return 0.0;
        if (k > n - k) k = n - k;
        double r = 1.0;
        for (std::int64_t j = 1; j <= k; ++j) {
            r = r * static_cast<double>(n - k + j) / static_cast<double>(j);
        }
        return r;
    }

    static double pow_int(double base, std::int64_t e) {
        double r = 1.0;
        for (std::int64_t j = 0; j < e; ++j) r *= base;
        return r;
    }

    FeatureMapKind kind_;
    std::int64_t d_;
};

}  // namespace tenseg
