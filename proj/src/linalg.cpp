#include "difpath/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "difpath/kernels.hpp"

namespace difpath {

namespace {

void require_square(const Tensor& m, const char* who) {
    require(m.rank() == 2 && m.shape[0] == m.shape[1], errc::contract, std::string(who) + ": matrix must be square");
}

double off_diagonal_sq(const Tensor& a) {
    const std::size_t n = a.shape[0];
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            acc += 2.0 * a(i, j) * a(i, j);
        }
    }
    return acc;
}

}  // namespace

EigResult sym_eig(const Tensor& m, double tol) {
    require_square(m, "sym_eig");
    m.require_finite("sym_eig");
    const std::size_t n = m.shape[0];
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            require(std::fabs(m(i, j) - m(j, i)) <= tol, errc::symmetry,
                    "sym_eig: input asymmetric beyond tolerance");
        }
    }

    Tensor a = m;
    // enforce exact symmetry before rotating
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = 0.5 * (a(i, j) + a(j, i));
            a(i, j) = v;
            a(j, i) = v;
        }
    }
    Tensor v = identity(n);
    if (n == 0) {
        return {Tensor({0}), v};
    }

    const double fro = std::max(frobenius_norm(a), 1e-300);
    const double target = 1e-28 * fro * fro;
    const int max_sweeps = 64;
    for (int sweep = 0; sweep < max_sweeps && off_diagonal_sq(a) > target; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) {
                    continue;
                }
                const double app = a(p, p);
                const double aqq = a(q, q);
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                for (std::size_t i = 0; i < n; ++i) {
                    const double aip = a(i, p);
                    const double aiq = a(i, q);
                    a(i, p) = c * aip - s * aiq;
                    a(i, q) = s * aip + c * aiq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double api = a(p, i);
                    const double aqi = a(q, i);
                    a(p, i) = c * api - s * aqi;
                    a(q, i) = s * api + c * aqi;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vip = v(i, p);
                    const double viq = v(i, q);
                    v(i, p) = c * vip - s * viq;
                    v(i, q) = s * vip + c * viq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });

    EigResult res{Tensor({n}), Tensor({n, n})};
    for (std::size_t j = 0; j < n; ++j) {
        res.values[j] = a(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i) {
            res.vectors(i, j) = v(i, order[j]);
        }
    }
    return res;
}

Tensor psd_sqrt(const Tensor& m) {
    require_square(m, "psd_sqrt");
    const std::size_t n = m.shape[0];
    const double scale = std::max(1.0, max_abs(m));
    EigResult eig = sym_eig(m, 1e-8 * scale);
    for (std::size_t i = 0; i < n; ++i) {
        require(eig.values[i] >= -1e-8 * scale, errc::not_psd, "psd_sqrt: eigenvalue below -1e-8");
    }

    // s = V diag(sqrt(max(lambda, 0))) V^T
    Tensor scaled = eig.vectors;
    for (std::size_t j = 0; j < n; ++j) {
        const double r = std::sqrt(std::max(eig.values[j], 0.0));
        for (std::size_t i = 0; i < n; ++i) {
            scaled(i, j) *= r;
        }
    }
    Tensor s = matmul(scaled, transpose(eig.vectors));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = 0.5 * (s(i, j) + s(j, i));
            s(i, j) = v;
            s(j, i) = v;
        }
    }
    return s;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    require(a.rank() == 2 && b.rank() == 2 && a.shape[1] == b.shape[0], errc::contract,
            "matmul: inner dimensions must agree");
    Tensor c({a.shape[0], b.shape[1]});
    kernels::matmul(a.data.data(), b.data.data(), c.data.data(), a.shape[0], a.shape[1], b.shape[1]);
    return c;
}

Tensor transpose(const Tensor& a) {
    require(a.rank() == 2, errc::contract, "transpose: rank-2 tensor required");
    Tensor t({a.shape[1], a.shape[0]});
    for (std::size_t i = 0; i < a.shape[0]; ++i) {
        for (std::size_t j = 0; j < a.shape[1]; ++j) {
            t(j, i) = a(i, j);
        }
    }
    return t;
}

Tensor identity(std::size_t n) {
    Tensor t({n, n});
    for (std::size_t i = 0; i < n; ++i) {
        t(i, i) = 1.0;
    }
    return t;
}

double trace(const Tensor& a) {
    require(a.rank() == 2 && a.shape[0] == a.shape[1], errc::contract, "trace: square matrix required");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.shape[0]; ++i) {
        acc += a(i, i);
    }
    return acc;
}

}  // namespace difpath
