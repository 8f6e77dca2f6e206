#pragma once

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <vector>

#include "tenseg/common.hpp"

namespace tenseg {

// Dense row-major tensor of doubles. All computation runs in 64-bit;
// 32-bit appears only as an optional checkpoint storage format.
class DenseTensor {
public:
    DenseTensor() = default;

    explicit DenseTensor(std::vector<std::int64_t> shape)
        : shape_(std::move(shape)), data_(checked_size(shape_), 0.0) {}

    DenseTensor(std::vector<std::int64_t> shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (static_cast<std::int64_t>(data_.size()) != checked_size(shape_)) {
            throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                                 " does not match shape " + shape_string(shape_));
        }
    }

    std::int64_t rank() const { return static_cast<std::int64_t>(shape_.size()); }
    const std::vector<std::int64_t>& shape() const { return shape_; }
    std::int64_t extent(std::int64_t axis) const { return shape_[static_cast<std::size_t>(axis)]; }
    std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }

    double& operator[](std::int64_t flat) { return data_[static_cast<std::size_t>(flat)]; }
    double operator[](std::int64_t flat) const { return data_[static_cast<std::size_t>(flat)]; }

    // Row-major linearization: the last index varies fastest.
    std::int64_t offset_of(std::span<const std::int64_t> indices) const {
        std::int64_t off = 0;
        for (std::size_t k = 0; k < shape_.size(); ++k) {
            off = off * shape_[k] + indices[k];
        }
        return off;
    }

    std::vector<std::int64_t> indices_of(std::int64_t offset) const {
        std::vector<std::int64_t> idx(shape_.size(), 0);
        for (std::size_t k = shape_.size(); k-- > 0;) {
            idx[k] = offset % shape_[k];
            offset /= shape_[k];
        }
        return idx;
    }

    double& at(std::initializer_list<std::int64_t> indices) {
        return data_[static_cast<std::size_t>(offset_of(std::span<const std::int64_t>(indices.begin(), indices.size())))];
    }
    double at(std::initializer_list<std::int64_t> indices) const {
        return data_[static_cast<std::size_t>(offset_of(std::span<const std::int64_t>(indices.begin(), indices.size())))];
    }

    static std::string shape_string(const std::vector<std::int64_t>& shape) {
        std::ostringstream os;
        os << "[";
        for (std::size_t i = 0; i < shape.size(); ++i) {
            if (i) os << ",";
            os << shape[i];
        }
        os << "]";
        return os.str();
    }

private:
    static std::int64_t checked_size(const std::vector<std::int64_t>& shape) {
        std::int64_t n = 1;
        for (auto e : shape) {
            if (e < 1) {
                throw DimensionError("tensor extents must be >= 1, got " + shape_string(shape));
            }
            n *= e;
        }
        return n;
    }

    std::vector<std::int64_t> shape_;
    std::vector<double> data_;
};

// out[r] = sum_c m[r,c] * v[c]
inline DenseTensor matvec(const DenseTensor& m, const DenseTensor& v) {
    if (m.rank() != 2 || v.rank() != 1) {
        throw DimensionError("matvec expects rank-2 and rank-1 operands, got " +
                             DenseTensor::shape_string(m.shape()) + " and " +
                             DenseTensor::shape_string(v.shape()));
    }
    if (m.extent(1) != v.extent(0)) {
        throw DimensionError("matvec shape mismatch: " + DenseTensor::shape_string(m.shape()) +
                             " vs " + DenseTensor::shape_string(v.shape()));
    }
    const std::int64_t rows = m.extent(0);
    const std::int64_t cols = m.extent(1);
    DenseTensor out({rows});
    const auto md = m.data();
    const auto vd = v.data();
    for (std::int64_t r = 0; r < rows; ++r) {
        double acc = 0.0;
        for (std::int64_t c = 0; c < cols; ++c) {
            acc += md[static_cast<std::size_t>(r * cols + c)] * vd[static_cast<std::size_t>(c)];
        }
        out[r] = acc;
    }
    return out;
}

// Contract one MPS site over its physical index:
// out[a,b] = sum_i site[a,i,b] * feat[i].
inline void contract_site_into(std::span<const double> site, std::int64_t bl, std::int64_t phys,
                               std::int64_t br, std::span<const double> feat, std::span<double> out) {
    for (auto& x : out) x = 0.0;
    for (std::int64_t a = 0; a < bl; ++a) {
        for (std::int64_t i = 0; i < phys; ++i) {
            const double f = feat[static_cast<std::size_t>(i)];
            if (f == 0.0) continue;
            const std::size_t src = static_cast<std::size_t>((a * phys + i) * br);
            const std::size_t dst = static_cast<std::size_t>(a * br);
            for (std::int64_t b = 0; b < br; ++b) {
                out[dst + static_cast<std::size_t>(b)] += site[src + static_cast<std::size_t>(b)] * f;
            }
        }
    }
}

inline DenseTensor contract_site(const DenseTensor& site, const DenseTensor& feat) {
    if (site.rank() != 3 || feat.rank() != 1) {
        throw DimensionError("contract_site expects rank-3 site and rank-1 feature, got " +
                             DenseTensor::shape_string(site.shape()) + " and " +
                             DenseTensor::shape_string(feat.shape()));
    }
    if (site.extent(1) != feat.extent(0)) {
        throw DimensionError("contract_site physical index mismatch: site " +
                             DenseTensor::shape_string(site.shape()) + " vs feature " +
                             DenseTensor::shape_string(feat.shape()));
    }
    DenseTensor out({site.extent(0), site.extent(2)});
    contract_site_into(site.data(), site.extent(0), site.extent(1), site.extent(2), feat.data(),
                       out.data());
    return out;
}

// Oracle-scale only: the whole point of the MPS is that this object is
// exponentially large, so callers get a hard capacity gate.
inline constexpr std::int64_t kOuterProductCapacity = std::int64_t{1} << 24;

// Explicit global feature map: out[i1,...,iN] = prod_j v_j[i_j].
inline DenseTensor outer_product_chain(const std::vector<DenseTensor>& vectors) {
    if (vectors.empty()) {
        throw DimensionError("outer_product_chain requires at least one vector");
    }
    std::vector<std::int64_t> shape;
    std::int64_t total = 1;
    for (const auto& v : vectors) {
        if (v.rank() != 1) {
            throw DimensionError("outer_product_chain expects rank-1 inputs, got " +
                                 DenseTensor::shape_string(v.shape()));
        }
        if (total > kOuterProductCapacity / v.extent(0)) {
            throw CapacityError("outer_product_chain would exceed " +
                                std::to_string(kOuterProductCapacity) + " entries");
        }
        total *= v.extent(0);
        shape.push_back(v.extent(0));
    }
    std::vector<double> data{1.0};
    data.reserve(static_cast<std::size_t>(total));
    for (const auto& v : vectors) {
        const std::int64_t d = v.extent(0);
        std::vector<double> next(data.size() * static_cast<std::size_t>(d));
        for (std::size_t k = 0; k < data.size(); ++k) {
            for (std::int64_t i = 0; i < d; ++i) {
                next[k * static_cast<std::size_t>(d) + static_cast<std::size_t>(i)] = data[k] * v[i];
            }
        }
        data.swap(next);
    }
    return DenseTensor(std::move(shape), std::move(data));
}

}  // namespace tenseg
