#pragma once

#include <cstddef>

#include "taac/errors.hpp"
#include "taac/parallel.hpp"
#include "taac/tensor.hpp"

// Batched dense kernels. Every output element is accumulated serially by a
// single invocation, so results do not depend on thread count or backend.
// taac::reference holds plain-loop twins used as test oracles and as the
// serial baseline in the kernel benchmark.

namespace taac::kernels {

inline std::size_t conv_out_len(std::size_t len, std::size_t k, std::size_t stride, std::size_t pad) {
    if (len + 2 * pad < k) {
        throw DimensionError("conv1d: input length " + std::to_string(len) + " with pad " +
                             std::to_string(pad) + " shorter than kernel " + std::to_string(k));
    }
    return (len + 2 * pad - k) / stride + 1;
}

// y[N,out] = x[N,in] * W[out,in]^T + b[out]
// Four output chains run interleaved so the additions pipeline instead of
// serializing on FP-add latency; each chain is still the plain left-to-right
// sum over i, so results are bit-identical to the one-chain form.
template <class T>
void fc_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, Tensor<T>& y) {
    const std::size_t n = x.shape[0], in = x.shape[1], out = w.shape[0];
    if (w.shape[1] != in) {
        throw DimensionError("fc: input " + x.shape_str() + " vs weight " + w.shape_str());
    }
    y = Tensor<T>({n, out});
    const T* xp = x.ptr();
    const T* wp = w.ptr();
    const T* bp = b.ptr();
    T* yp = y.ptr();
    par_for(n, [&](std::size_t r) {
        const T* xr = xp + r * in;
        T* yr = yp + r * out;
        std::size_t o = 0;
        for (; o + 4 <= out; o += 4) {
            const T* w0 = wp + (o + 0) * in;
            const T* w1 = wp + (o + 1) * in;
            const T* w2 = wp + (o + 2) * in;
            const T* w3 = wp + (o + 3) * in;
            T a0 = bp[o + 0], a1 = bp[o + 1], a2 = bp[o + 2], a3 = bp[o + 3];
            for (std::size_t i = 0; i < in; ++i) {
                const T xi = xr[i];
                a0 += xi * w0[i];
                a1 += xi * w1[i];
                a2 += xi * w2[i];
                a3 += xi * w3[i];
            }
            yr[o + 0] = a0;
            yr[o + 1] = a1;
            yr[o + 2] = a2;
            yr[o + 3] = a3;
        }
        for (; o < out; ++o) {
            const T* wr = wp + o * in;
            T acc = bp[o];
            for (std::size_t i = 0; i < in; ++i) acc += xr[i] * wr[i];
            yr[o] = acc;
        }
    });
}

// dx[N,in] = dy[N,out] * W[out,in]
// Row-axpy form: dx[r,:] sums dy[r,o] * W[o,:] for o ascending. Each dx
// element receives the same additions in the same order as a per-element
// dot product over o, and the inner loop is element-independent, so it
// vectorizes without touching any summation order.
template <class T>
void fc_backward_input(const Tensor<T>& dy, const Tensor<T>& w, Tensor<T>& dx) {
    const std::size_t n = dy.shape[0], out = dy.shape[1], in = w.shape[1];
    dx = Tensor<T>({n, in});
    const T* dyp = dy.ptr();
    const T* wp = w.ptr();
    T* dxp = dx.ptr();
    par_for(n, [&](std::size_t r) {
        const T* dyr = dyp + r * out;
        T* dxr = dxp + r * in;
        for (std::size_t o = 0; o < out; ++o) {
            const T s = dyr[o];
            const T* wr = wp + o * in;
            for (std::size_t i = 0; i < in; ++i) dxr[i] += s * wr[i];
        }
    });
}

// dW[out,in] += dy^T x ; db[out] += column sums of dy.
// Batch accumulation runs in index order inside each output element: row o
// of dW gathers the examples r ascending as axpy steps over contiguous x
// rows, which keeps the per-element order of the dot form and vectorizes.
template <class T>
void fc_backward_params(const Tensor<T>& x, const Tensor<T>& dy, Tensor<T>& dw, Tensor<T>& db) {
    const std::size_t n = x.shape[0], in = x.shape[1], out = dy.shape[1];
    const T* xp = x.ptr();
    const T* dyp = dy.ptr();
    T* dwp = dw.ptr();
    T* dbp = db.ptr();
    par_for(out, [&](std::size_t o) {
        // batch total per element lands in the scratch row first, so the
        // existing gradient receives exactly one rounded addition
        static thread_local std::vector<T> acc;
        acc.assign(in, T(0));
        for (std::size_t r = 0; r < n; ++r) {
            const T s = dyp[r * out + o];
            const T* xr = xp + r * in;
            for (std::size_t i = 0; i < in; ++i) acc[i] += s * xr[i];
        }
        T* dwr = dwp + o * in;
        for (std::size_t i = 0; i < in; ++i) dwr[i] += acc[i];
        T bacc = 0;
        for (std::size_t r = 0; r < n; ++r) bacc += dyp[r * out + o];
        dbp[o] += bacc;
    });
}

// Cross-correlation. x[N,Cin,L], k[Cout,Cin,K] -> y[N,Cout,Lout]
template <class T>
void conv1d_forward(const Tensor<T>& x, const Tensor<T>& k, std::size_t stride, std::size_t pad,
                    Tensor<T>& y) {
    const std::size_t n = x.shape[0], cin = x.shape[1], len = x.shape[2];
    const std::size_t cout = k.shape[0], kk = k.shape[2];
    if (k.shape[1] != cin) {
        throw DimensionError("conv1d: input " + x.shape_str() + " vs kernels " + k.shape_str());
    }
    const std::size_t lout = conv_out_len(len, kk, stride, pad);
    y = Tensor<T>({n, cout, lout});
    const T* xp = x.ptr();
    const T* kp = k.ptr();
    T* yp = y.ptr();
    const long long sl = static_cast<long long>(stride);
    const long long ll = static_cast<long long>(len);
    // Each output row accumulates one (ci, j) tap at a time across all valid
    // positions, with the padding bounds hoisted out of the inner loop. Per
    // output element the taps arrive in (ci, j) order, exactly as in the
    // per-element dot form, so the restructuring changes no sums.
    par_for(n * cout, [&](std::size_t row) {
        const std::size_t co = row % cout;
        const std::size_t r = row / cout;
        T* yr = yp + row * lout;
        for (std::size_t ci = 0; ci < cin; ++ci) {
            const T* xr = xp + (r * cin + ci) * len;
            const T* kr = kp + (co * cin + ci) * kk;
            for (std::size_t j = 0; j < kk; ++j) {
                const long long base = static_cast<long long>(j) - static_cast<long long>(pad);
                if (base >= ll) continue;
                // valid t: 0 <= t*stride + base < len
                const std::size_t t0 =
                    base < 0 ? static_cast<std::size_t>((-base + sl - 1) / sl) : 0;
                const std::size_t t1 = std::min(
                    lout, static_cast<std::size_t>((ll - 1 - base) / sl) + 1);
                if (t1 <= t0) continue;
                const T s = kr[j];
                const std::size_t count = t1 - t0;
                T* yv = yr + t0;
                const T* xv = xr + static_cast<std::size_t>(
                                       static_cast<long long>(t0) * sl + base);
                if (stride == 1) {
                    for (std::size_t t = 0; t < count; ++t) yv[t] += xv[t] * s;
                } else {
                    for (std::size_t t = 0; t < count; ++t) yv[t] += xv[t * stride] * s;
                }
            }
        }
    });
}

// Scatter of the forward taps: x[t*stride - pad + j] fed y[t], so dx at that
// position gathers dy[t] * k[j]. Per dx element the (co, j) tap order of the
// per-element gather is preserved; positions touched by one (co, j) pair are
// distinct, so the inner loop stays element-independent and vectorizable.
template <class T>
void conv1d_backward_input(const Tensor<T>& dy, const Tensor<T>& k, std::size_t stride,
                           std::size_t pad, std::size_t len, Tensor<T>& dx) {
    const std::size_t n = dy.shape[0], cout = dy.shape[1], lout = dy.shape[2];
    const std::size_t cin = k.shape[1], kk = k.shape[2];
    dx = Tensor<T>({n, cin, len});
    const T* dyp = dy.ptr();
    const T* kp = k.ptr();
    T* dxp = dx.ptr();
    const long long sl = static_cast<long long>(stride);
    const long long ll = static_cast<long long>(len);
    par_for(n * cin, [&](std::size_t row) {
        const std::size_t ci = row % cin;
        const std::size_t r = row / cin;
        T* dxr = dxp + row * len;
        for (std::size_t co = 0; co < cout; ++co) {
            const T* dyr = dyp + (r * cout + co) * lout;
            const T* kr = kp + (co * cin + ci) * kk;
            for (std::size_t j = 0; j < kk; ++j) {
                const long long base = static_cast<long long>(j) - static_cast<long long>(pad);
                if (base >= ll) continue;
                const std::size_t t0 =
                    base < 0 ? static_cast<std::size_t>((-base + sl - 1) / sl) : 0;
                const std::size_t t1 = std::min(
                    lout, static_cast<std::size_t>((ll - 1 - base) / sl) + 1);
                if (t1 <= t0) continue;
                const T s = kr[j];
                const std::size_t count = t1 - t0;
                const T* dv = dyr + t0;
                T* xv = dxr + static_cast<std::size_t>(
                                  static_cast<long long>(t0) * sl + base);
                if (stride == 1) {
                    for (std::size_t t = 0; t < count; ++t) xv[t] += dv[t] * s;
                } else {
                    for (std::size_t t = 0; t < count; ++t) xv[t * stride] += dv[t] * s;
                }
            }
        }
    });
}

// Per dk element the contributions arrive in (r, t) order, matching the
// per-element reduction; the short tap loop runs innermost over contiguous
// x so the window bounds hoist out of it.
template <class T>
void conv1d_backward_kernels(const Tensor<T>& x, const Tensor<T>& dy, std::size_t stride,
                             std::size_t pad, Tensor<T>& dk) {
    const std::size_t n = x.shape[0], cin = x.shape[1], len = x.shape[2];
    const std::size_t cout = dy.shape[1], lout = dy.shape[2];
    const std::size_t kk = dk.shape[2];
    const T* xp = x.ptr();
    const T* dyp = dy.ptr();
    T* dkp = dk.ptr();
    const long long ll = static_cast<long long>(len);
    par_for(cout * cin, [&](std::size_t row) {
        const std::size_t ci = row % cin;
        const std::size_t co = row / cin;
        // batch total per tap lands in the scratch first, so the existing
        // gradient receives exactly one rounded addition
        static thread_local std::vector<T> acc;
        acc.assign(kk, T(0));
        for (std::size_t r = 0; r < n; ++r) {
            const T* xr = xp + (r * cin + ci) * len;
            const T* dyr = dyp + (r * cout + co) * lout;
            for (std::size_t t = 0; t < lout; ++t) {
                // window: 0 <= t*stride + j - pad < len
                const long long xbase =
                    static_cast<long long>(t * stride) - static_cast<long long>(pad);
                const std::size_t j0 =
                    xbase < 0 ? static_cast<std::size_t>(-xbase) : 0;
                const std::size_t j1 =
                    xbase >= ll ? 0
                                : std::min(kk, static_cast<std::size_t>(ll - xbase));
                if (j1 <= j0) continue;
                const T s = dyr[t];
                const T* xv = xr + static_cast<std::size_t>(xbase + static_cast<long long>(j0));
                T* dv = acc.data() + j0;
                for (std::size_t j = 0; j < j1 - j0; ++j) dv[j] += s * xv[j];
            }
        }
        T* dkr = dkp + row * kk;
        for (std::size_t j = 0; j < kk; ++j) dkr[j] += acc[j];
    });
}

// Non-overlapping average pool, kernel = stride = w. Tail shorter than w is
// dropped, mirroring the length formula (L / w).
template <class T>
void avgpool1d_forward(const Tensor<T>& x, std::size_t w, Tensor<T>& y) {
    const std::size_t n = x.shape[0], c = x.shape[1], len = x.shape[2];
    const std::size_t lout = len / w;
    if (lout == 0) {
        throw DimensionError("avgpool: length " + std::to_string(len) + " shorter than window " +
                             std::to_string(w));
    }
    y = Tensor<T>({n, c, lout});
    const T* xp = x.ptr();
    T* yp = y.ptr();
    const T inv = T(1) / static_cast<T>(w);
    par_for(n * c * lout, [&](std::size_t idx) {
        const std::size_t t = idx % lout;
        const std::size_t ch = (idx / lout) % c;
        const std::size_t r = idx / (lout * c);
        const T* xr = xp + (r * c + ch) * len + t * w;
        T acc = 0;
        for (std::size_t j = 0; j < w; ++j) acc += xr[j];
        yp[idx] = acc * inv;
    });
}

template <class T>
void avgpool1d_backward(const Tensor<T>& dy, std::size_t w, std::size_t len, Tensor<T>& dx) {
    const std::size_t n = dy.shape[0], c = dy.shape[1], lout = dy.shape[2];
    dx = Tensor<T>({n, c, len});
    const T* dyp = dy.ptr();
    T* dxp = dx.ptr();
    const T inv = T(1) / static_cast<T>(w);
    par_for(n * c * len, [&](std::size_t idx) {
        const std::size_t p = idx % len;
        const std::size_t t = p / w;
        dxp[idx] = (t < lout) ? dyp[(idx / len) * lout + t] * inv : T(0);
    });
}

}  // namespace taac::kernels

namespace taac::reference {

// Textbook serial versions, accumulation order identical to the production
// kernels. Tests assert bitwise equality; the benchmark uses them as the
// serial baseline.

template <class T>
void fc_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, Tensor<T>& y) {
    const std::size_t n = x.shape[0], in = x.shape[1], out = w.shape[0];
    y = Tensor<T>({n, out});
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t o = 0; o < out; ++o) {
            T acc = b.data[o];
            for (std::size_t i = 0; i < in; ++i) acc += x.data[r * in + i] * w.data[o * in + i];
            y.data[r * out + o] = acc;
        }
    }
}

template <class T>
void conv1d_forward(const Tensor<T>& x, const Tensor<T>& k, std::size_t stride, std::size_t pad,
                    Tensor<T>& y) {
    const std::size_t n = x.shape[0], cin = x.shape[1], len = x.shape[2];
    const std::size_t cout = k.shape[0], kk = k.shape[2];
    const std::size_t lout = kernels::conv_out_len(len, kk, stride, pad);
    y = Tensor<T>({n, cout, lout});
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t co = 0; co < cout; ++co)
            for (std::size_t t = 0; t < lout; ++t) {
                T acc = 0;
                for (std::size_t ci = 0; ci < cin; ++ci)
                    for (std::size_t j = 0; j < kk; ++j) {
                        const long long p =
                            static_cast<long long>(t * stride + j) - static_cast<long long>(pad);
                        if (p >= 0 && p < static_cast<long long>(len))
                            acc += x.data[(r * cin + ci) * len + p] * k.data[(co * cin + ci) * kk + j];
                    }
                y.data[(r * cout + co) * lout + t] = acc;
            }
}

}  // namespace taac::reference
