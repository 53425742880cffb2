#pragma once

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ibgan::nd {

/// Dense row-major array of doubles. Shapes are lists of positive extents;
/// product(shape) always equals data.size().
struct Array {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Array() = default;

    Array(std::vector<std::size_t> s, std::vector<double> d)
        : shape(std::move(s)), data(std::move(d)) {
        if (count(shape) != data.size()) {
            throw std::invalid_argument("Array: shape/data size mismatch");
        }
    }

    static std::size_t count(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (std::size_t e : s) {
            if (e == 0) throw std::invalid_argument("Array: zero extent in shape");
            n *= e;
        }
        return n;
    }

    static Array zeros(std::vector<std::size_t> s) {
        std::size_t n = count(s);
        return Array(std::move(s), std::vector<double>(n, 0.0));
    }

    static Array full(std::vector<std::size_t> s, double v) {
        std::size_t n = count(s);
        return Array(std::move(s), std::vector<double>(n, v));
    }

    static Array scalar(double v) { return Array({1}, {v}); }

    static Array row(std::vector<double> v) {
        std::size_t n = v.size();
        return Array({1, n}, std::move(v));
    }

    static Array vec(std::vector<double> v) {
        std::size_t n = v.size();
        return Array({n}, std::move(v));
    }

    std::size_t size() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }

    bool same_shape(const Array& o) const { return shape == o.shape; }

    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    // 2-D access
    double& at(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * shape[1] + j]; }

    // 3-D access
    double& at(std::size_t i, std::size_t j, std::size_t k) {
        return data[(i * shape[1] + j) * shape[2] + k];
    }
    double at(std::size_t i, std::size_t j, std::size_t k) const {
        return data[(i * shape[1] + j) * shape[2] + k];
    }

    std::string shape_str() const {
        std::ostringstream os;
        os << '[';
        for (std::size_t i = 0; i < shape.size(); ++i) {
            if (i) os << 'x';
            os << shape[i];
        }
        os << ']';
        return os.str();
    }
};

inline void require_same_shape(const Array& a, const Array& b, const char* what) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument(std::string(what) + ": shape mismatch " +
                                    a.shape_str() + " vs " + b.shape_str());
    }
}

}  // namespace ibgan::nd
