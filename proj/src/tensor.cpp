#include "difpath/tensor.hpp"

#include <cmath>

namespace difpath {

const char* errc_name(errc c) noexcept {
    switch (c) {
        case errc::parameter: return "parameter";
        case errc::contract: return "contract";
        case errc::size: return "size";
        case errc::symmetry: return "symmetry";
        case errc::not_psd: return "not_psd";
        case errc::insufficient_data: return "insufficient_data";
        case errc::degenerate_data: return "degenerate_data";
        case errc::divergence: return "divergence";
        case errc::format: return "format";
        case errc::io: return "io";
        case errc::config: return "config";
    }
    return "unknown";
}

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) {
        n *= e;
    }
    return n;
}

Tensor::Tensor(std::vector<std::size_t> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
    require(data.size() == shape_numel(shape), errc::contract, "tensor data length does not match shape");
}

Tensor Tensor::full(std::vector<std::size_t> s, double v) {
    Tensor t(std::move(s));
    t.fill(v);
    return t;
}

bool Tensor::all_finite() const noexcept {
    for (double v : data) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

void Tensor::require_finite(const char* who) const {
    require(all_finite(), errc::contract, std::string(who) + ": non-finite tensor element");
}

void Tensor::fill(double v) {
    for (double& x : data) {
        x = v;
    }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* who) {
    require(a.same_shape(b), errc::contract, std::string(who) + ": shape mismatch");
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor out = a;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out.data[i] += b.data[i];
    }
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    Tensor out = a;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out.data[i] -= b.data[i];
    }
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    Tensor out = a;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out.data[i] *= b.data[i];
    }
    return out;
}

Tensor scale(const Tensor& a, double s) {
    Tensor out = a;
    for (double& v : out.data) {
        v *= s;
    }
    return out;
}

void axpy(double alpha, const Tensor& x, Tensor& y) {
    require_same_shape(x, y, "axpy");
    for (std::size_t i = 0; i < y.size(); ++i) {
        y.data[i] += alpha * x.data[i];
    }
}

double dot(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "dot");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += a.data[i] * b.data[i];
    }
    return acc;
}

double sum(const Tensor& a) {
    double acc = 0.0;
    for (double v : a.data) {
        acc += v;
    }
    return acc;
}

double mean(const Tensor& a) {
    require(a.size() > 0, errc::parameter, "mean: empty tensor");
    return sum(a) / static_cast<double>(a.size());
}

double variance(const Tensor& a) {
    require(a.size() > 0, errc::parameter, "variance: empty tensor");
    double m = mean(a);
    double acc = 0.0;
    for (double v : a.data) {
        acc += (v - m) * (v - m);
    }
    return acc / static_cast<double>(a.size());
}

double max_abs(const Tensor& a) {
    double m = 0.0;
    for (double v : a.data) {
        m = std::max(m, std::fabs(v));
    }
    return m;
}

double frobenius_norm(const Tensor& a) {
    double acc = 0.0;
    for (double v : a.data) {
        acc += v * v;
    }
    return std::sqrt(acc);
}

Tensor clamp(const Tensor& a, double lo, double hi) {
    Tensor out = a;
    for (double& v : out.data) {
        v = std::min(hi, std::max(lo, v));
    }
    return out;
}

}  // namespace difpath
