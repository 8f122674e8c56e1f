#include "difpath/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace difpath::kernels {

namespace {

// Per-element bodies shared by the parallel and serial entry points. Each
// output element runs the same inner-loop order, which makes the parallel
// kernels bit-identical to the reference.

inline double conv_out_at(const double* in, const double* w, const Conv2dShape& s, int oc, int oy, int ox) {
    double acc = 0.0;
    for (int ic = 0; ic < s.in_c; ++ic) {
        const double* in_ch = in + static_cast<std::size_t>(ic) * s.in_h * s.in_w;
        const double* w_ch = w + (static_cast<std::size_t>(oc) * s.in_c + ic) * s.k * s.k;
        for (int ky = 0; ky < s.k; ++ky) {
            const int iy = oy * s.stride - s.pad + ky;
            if (iy < 0 || iy >= s.in_h) {
                continue;
            }
            for (int kx = 0; kx < s.k; ++kx) {
                const int ix = ox * s.stride - s.pad + kx;
                if (ix < 0 || ix >= s.in_w) {
                    continue;
                }
                acc += in_ch[static_cast<std::size_t>(iy) * s.in_w + ix] * w_ch[ky * s.k + kx];
            }
        }
    }
    return acc;
}

inline double conv_din_at(const double* dout, const double* w, const Conv2dShape& s, int ic, int iy, int ix) {
    const int oh = s.out_h();
    const int ow = s.out_w();
    double acc = 0.0;
    for (int oc = 0; oc < s.out_c; ++oc) {
        const double* dout_ch = dout + static_cast<std::size_t>(oc) * oh * ow;
        const double* w_ch = w + (static_cast<std::size_t>(oc) * s.in_c + ic) * s.k * s.k;
        for (int ky = 0; ky < s.k; ++ky) {
            const int num_y = iy + s.pad - ky;
            if (num_y < 0 || num_y % s.stride != 0) {
                continue;
            }
            const int oy = num_y / s.stride;
            if (oy >= oh) {
                continue;
            }
            for (int kx = 0; kx < s.k; ++kx) {
                const int num_x = ix + s.pad - kx;
                if (num_x < 0 || num_x % s.stride != 0) {
                    continue;
                }
                const int ox = num_x / s.stride;
                if (ox >= ow) {
                    continue;
                }
                acc += dout_ch[static_cast<std::size_t>(oy) * ow + ox] * w_ch[ky * s.k + kx];
            }
        }
    }
    return acc;
}

// All dw entries for one output channel (single owner per oc slice).
inline void conv_dparams_slice(const double* in, const double* dout, double* dw, double* dbias,
                               const Conv2dShape& s, int oc) {
    const int oh = s.out_h();
    const int ow = s.out_w();
    const double* dout_ch = dout + static_cast<std::size_t>(oc) * oh * ow;
    double bias_acc = 0.0;
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            bias_acc += dout_ch[static_cast<std::size_t>(oy) * ow + ox];
        }
    }
    dbias[oc] += bias_acc;
    for (int ic = 0; ic < s.in_c; ++ic) {
        const double* in_ch = in + static_cast<std::size_t>(ic) * s.in_h * s.in_w;
        double* dw_ch = dw + (static_cast<std::size_t>(oc) * s.in_c + ic) * s.k * s.k;
        for (int ky = 0; ky < s.k; ++ky) {
            for (int kx = 0; kx < s.k; ++kx) {
                double acc = 0.0;
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy * s.stride - s.pad + ky;
                    if (iy < 0 || iy >= s.in_h) {
                        continue;
                    }
                    for (int ox = 0; ox < ow; ++ox) {
                        const int ix = ox * s.stride - s.pad + kx;
                        if (ix < 0 || ix >= s.in_w) {
                            continue;
                        }
                        acc += in_ch[static_cast<std::size_t>(iy) * s.in_w + ix] *
                               dout_ch[static_cast<std::size_t>(oy) * ow + ox];
                    }
                }
                dw_ch[ky * s.k + kx] += acc;
            }
        }
    }
}

inline double convt_out_at(const double* in, const double* w, const ConvT2dShape& s, int c2, int y, int x) {
    double acc = 0.0;
    for (int c1 = 0; c1 < s.in_c; ++c1) {
        const double* in_ch = in + static_cast<std::size_t>(c1) * s.in_h * s.in_w;
        const double* w_ch = w + (static_cast<std::size_t>(c1) * s.out_c + c2) * s.k * s.k;
        for (int ky = 0; ky < s.k; ++ky) {
            const int num_y = y + s.pad - ky;
            if (num_y < 0 || num_y % s.stride != 0) {
                continue;
            }
            const int iy = num_y / s.stride;
            if (iy >= s.in_h) {
                continue;
            }
            for (int kx = 0; kx < s.k; ++kx) {
                const int num_x = x + s.pad - kx;
                if (num_x < 0 || num_x % s.stride != 0) {
                    continue;
                }
                const int ix = num_x / s.stride;
                if (ix >= s.in_w) {
                    continue;
                }
                acc += in_ch[static_cast<std::size_t>(iy) * s.in_w + ix] * w_ch[ky * s.k + kx];
            }
        }
    }
    return acc;
}

inline double convt_din_at(const double* dout, const double* w, const ConvT2dShape& s, int c1, int iy, int ix) {
    const int oh = s.out_h();
    const int ow = s.out_w();
    double acc = 0.0;
    for (int c2 = 0; c2 < s.out_c; ++c2) {
        const double* dout_ch = dout + static_cast<std::size_t>(c2) * oh * ow;
        const double* w_ch = w + (static_cast<std::size_t>(c1) * s.out_c + c2) * s.k * s.k;
        for (int ky = 0; ky < s.k; ++ky) {
            const int y = iy * s.stride - s.pad + ky;
            if (y < 0 || y >= oh) {
                continue;
            }
            for (int kx = 0; kx < s.k; ++kx) {
                const int x = ix * s.stride - s.pad + kx;
                if (x < 0 || x >= ow) {
                    continue;
                }
                acc += dout_ch[static_cast<std::size_t>(y) * ow + x] * w_ch[ky * s.k + kx];
            }
        }
    }
    return acc;
}

inline void convt_dparams_slice(const double* in, const double* dout, double* dw, double* dbias,
                                const ConvT2dShape& s, int c1) {
    const int oh = s.out_h();
    const int ow = s.out_w();
    const double* in_ch = in + static_cast<std::size_t>(c1) * s.in_h * s.in_w;
    for (int c2 = 0; c2 < s.out_c; ++c2) {
        const double* dout_ch = dout + static_cast<std::size_t>(c2) * oh * ow;
        double* dw_ch = dw + (static_cast<std::size_t>(c1) * s.out_c + c2) * s.k * s.k;
        for (int ky = 0; ky < s.k; ++ky) {
            for (int kx = 0; kx < s.k; ++kx) {
                double acc = 0.0;
                for (int iy = 0; iy < s.in_h; ++iy) {
                    const int y = iy * s.stride - s.pad + ky;
                    if (y < 0 || y >= oh) {
                        continue;
                    }
                    for (int ix = 0; ix < s.in_w; ++ix) {
                        const int x = ix * s.stride - s.pad + kx;
                        if (x < 0 || x >= ow) {
                            continue;
                        }
                        acc += in_ch[static_cast<std::size_t>(iy) * s.in_w + ix] *
                               dout_ch[static_cast<std::size_t>(y) * ow + x];
                    }
                }
                dw_ch[ky * s.k + kx] += acc;
            }
        }
    }
}

inline double matmul_at(const double* a, const double* b, std::size_t k, std::size_t n, std::size_t i, std::size_t j) {
    double acc = 0.0;
    for (std::size_t p = 0; p < k; ++p) {
        acc += a[i * k + p] * b[p * n + j];
    }
    return acc;
}

}  // namespace

void conv2d_forward(const double* in, const double* w, const double* bias, double* out, const Conv2dShape& s) {
    const int oh = s.out_h();
    const int ow = s.out_w();
#pragma omp parallel for collapse(2) schedule(static)
    for (int oc = 0; oc < s.out_c; ++oc) {
        for (int oy = 0; oy < oh; ++oy) {
            double* row = out + (static_cast<std::size_t>(oc) * oh + oy) * ow;
            const double b = bias != nullptr ? bias[oc] : 0.0;
            for (int ox = 0; ox < ow; ++ox) {
                row[ox] = b + conv_out_at(in, w, s, oc, oy, ox);
            }
        }
    }
}

void conv2d_backward_input(const double* dout, const double* w, double* din, const Conv2dShape& s) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int ic = 0; ic < s.in_c; ++ic) {
        for (int iy = 0; iy < s.in_h; ++iy) {
            double* row = din + (static_cast<std::size_t>(ic) * s.in_h + iy) * s.in_w;
            for (int ix = 0; ix < s.in_w; ++ix) {
                row[ix] = conv_din_at(dout, w, s, ic, iy, ix);
            }
        }
    }
}

void conv2d_backward_params(const double* in, const double* dout, double* dw, double* dbias, const Conv2dShape& s) {
#pragma omp parallel for schedule(static)
    for (int oc = 0; oc < s.out_c; ++oc) {
        conv_dparams_slice(in, dout, dw, dbias, s, oc);
    }
}

void convt2d_forward(const double* in, const double* w, const double* bias, double* out, const ConvT2dShape& s) {
    const int oh = s.out_h();
    const int ow = s.out_w();
#pragma omp parallel for collapse(2) schedule(static)
    for (int c2 = 0; c2 < s.out_c; ++c2) {
        for (int y = 0; y < oh; ++y) {
            double* row = out + (static_cast<std::size_t>(c2) * oh + y) * ow;
            const double b = bias != nullptr ? bias[c2] : 0.0;
            for (int x = 0; x < ow; ++x) {
                row[x] = b + convt_out_at(in, w, s, c2, y, x);
            }
        }
    }
}

void convt2d_backward_input(const double* dout, const double* w, double* din, const ConvT2dShape& s) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int c1 = 0; c1 < s.in_c; ++c1) {
        for (int iy = 0; iy < s.in_h; ++iy) {
            double* row = din + (static_cast<std::size_t>(c1) * s.in_h + iy) * s.in_w;
            for (int ix = 0; ix < s.in_w; ++ix) {
                row[ix] = convt_din_at(dout, w, s, c1, iy, ix);
            }
        }
    }
}

void convt2d_backward_params(const double* in, const double* dout, double* dw, double* dbias, const ConvT2dShape& s) {
#pragma omp parallel for schedule(static)
    for (int c1 = 0; c1 < s.in_c; ++c1) {
        convt_dparams_slice(in, dout, dw, dbias, s, c1);
    }
    const int oh = s.out_h();
    const int ow = s.out_w();
#pragma omp parallel for schedule(static)
    for (int c2 = 0; c2 < s.out_c; ++c2) {
        const double* dout_ch = dout + static_cast<std::size_t>(c2) * oh * ow;
        double acc = 0.0;
        for (int i = 0; i < oh * ow; ++i) {
            acc += dout_ch[i];
        }
        dbias[c2] += acc;
    }
}

void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            c[i * n + j] = matmul_at(a, b, k, n, i, j);
        }
    }
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    std::exception_ptr first_error = nullptr;
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) {
        try {
            fn(i);
        } catch (...) {
#pragma omp critical(difpath_parallel_for_error)
            if (first_error == nullptr) {
                first_error = std::current_exception();
            }
        }
    }
    if (first_error != nullptr) {
        std::rethrow_exception(first_error);
    }
}

namespace serial {

void conv2d_forward(const double* in, const double* w, const double* bias, double* out, const Conv2dShape& s) {
    const int oh = s.out_h();
    const int ow = s.out_w();
    for (int oc = 0; oc < s.out_c; ++oc) {
        for (int oy = 0; oy < oh; ++oy) {
            double* row = out + (static_cast<std::size_t>(oc) * oh + oy) * ow;
            const double b = bias != nullptr ? bias[oc] : 0.0;
            for (int ox = 0; ox < ow; ++ox) {
                row[ox] = b + conv_out_at(in, w, s, oc, oy, ox);
            }
        }
    }
}

void conv2d_backward_input(const double* dout, const double* w, double* din, const Conv2dShape& s) {
    for (int ic = 0; ic < s.in_c; ++ic) {
        for (int iy = 0; iy < s.in_h; ++iy) {
            double* row = din + (static_cast<std::size_t>(ic) * s.in_h + iy) * s.in_w;
            for (int ix = 0; ix < s.in_w; ++ix) {
                row[ix] = conv_din_at(dout, w, s, ic, iy, ix);
            }
        }
    }
}

void conv2d_backward_params(const double* in, const double* dout, double* dw, double* dbias, const Conv2dShape& s) {
    for (int oc = 0; oc < s.out_c; ++oc) {
        conv_dparams_slice(in, dout, dw, dbias, s, oc);
    }
}

void convt2d_forward(const double* in, const double* w, const double* bias, double* out, const ConvT2dShape& s) {
    const int oh = s.out_h();
    const int ow = s.out_w();
    for (int c2 = 0; c2 < s.out_c; ++c2) {
        for (int y = 0; y < oh; ++y) {
            double* row = out + (static_cast<std::size_t>(c2) * oh + y) * ow;
            const double b = bias != nullptr ? bias[c2] : 0.0;
            for (int x = 0; x < ow; ++x) {
                row[x] = b + convt_out_at(in, w, s, c2, y, x);
            }
        }
    }
}

void convt2d_backward_input(const double* dout, const double* w, double* din, const ConvT2dShape& s) {
    for (int c1 = 0; c1 < s.in_c; ++c1) {
        for (int iy = 0; iy < s.in_h; ++iy) {
            double* row = din + (static_cast<std::size_t>(c1) * s.in_h + iy) * s.in_w;
            for (int ix = 0; ix < s.in_w; ++ix) {
                row[ix] = convt_din_at(dout, w, s, c1, iy, ix);
            }
        }
    }
}

void convt2d_backward_params(const double* in, const double* dout, double* dw, double* dbias, const ConvT2dShape& s) {
    for (int c1 = 0; c1 < s.in_c; ++c1) {
        convt_dparams_slice(in, dout, dw, dbias, s, c1);
    }
    const int oh = s.out_h();
    const int ow = s.out_w();
    for (int c2 = 0; c2 < s.out_c; ++c2) {
        const double* dout_ch = dout + static_cast<std::size_t>(c2) * oh * ow;
        double acc = 0.0;
        for (int i = 0; i < oh * ow; ++i) {
            acc += dout_ch[i];
        }
        dbias[c2] += acc;
    }
}

void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            c[i * n + j] = matmul_at(a, b, k, n, i, j);
        }
    }
}

}  // namespace serial

}  // namespace difpath::kernels
