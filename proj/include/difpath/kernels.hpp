#pragma once

#include <cstddef>
#include <exception>
#include <functional>

namespace difpath::kernels {

// 2-D convolution geometry, NCHW single image: in (in_c, in_h, in_w),
// weight (out_c, in_c, k, k), out (out_c, out_h, out_w).
struct Conv2dShape {
    int in_c{1};
    int out_c{1};
    int in_h{0};
    int in_w{0};
    int k{3};
    int stride{1};
    int pad{1};

    int out_h() const { return (in_h + 2 * pad - k) / stride + 1; }
    int out_w() const { return (in_w + 2 * pad - k) / stride + 1; }
};

// Transposed convolution: out_h = (in_h - 1) * stride - 2 * pad + k + out_pad.
// Weight layout (in_c, out_c, k, k), the adjoint orientation.
struct ConvT2dShape {
    int in_c{1};
    int out_c{1};
    int in_h{0};
    int in_w{0};
    int k{3};
    int stride{2};
    int pad{1};
    int out_pad{1};

    int out_h() const { return (in_h - 1) * stride - 2 * pad + k + out_pad; }
    int out_w() const { return (in_w - 1) * stride - 2 * pad + k + out_pad; }
};

// OpenMP kernels. Every output element is owned by exactly one iteration, so
// results are bit-identical to the serial reference for any thread count.
void conv2d_forward(const double* in, const double* w, const double* bias, double* out, const Conv2dShape& s);
void conv2d_backward_input(const double* dout, const double* w, double* din, const Conv2dShape& s);
void conv2d_backward_params(const double* in, const double* dout, double* dw, double* dbias, const Conv2dShape& s);

void convt2d_forward(const double* in, const double* w, const double* bias, double* out, const ConvT2dShape& s);
void convt2d_backward_input(const double* dout, const double* w, double* din, const ConvT2dShape& s);
void convt2d_backward_params(const double* in, const double* dout, double* dw, double* dbias, const ConvT2dShape& s);

// c (m x n) = a (m x k) * b (k x n)
void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// Serial reference implementations, kept for the kernel equivalence tests and
// the benchmark tool.
namespace serial {
void conv2d_forward(const double* in, const double* w, const double* bias, double* out, const Conv2dShape& s);
void conv2d_backward_input(const double* dout, const double* w, double* din, const Conv2dShape& s);
void conv2d_backward_params(const double* in, const double* dout, double* dw, double* dbias, const Conv2dShape& s);

void convt2d_forward(const double* in, const double* w, const double* bias, double* out, const ConvT2dShape& s);
void convt2d_backward_input(const double* dout, const double* w, double* din, const ConvT2dShape& s);
void convt2d_backward_params(const double* in, const double* dout, double* dw, double* dbias, const ConvT2dShape& s);

void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
}  // namespace serial

}  // namespace difpath::kernels
