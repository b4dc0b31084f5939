#include "deskstage/autodiff/ops.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

namespace deskstage::autodiff {

namespace {

template <typename T>
using NodePtr = std::shared_ptr<Node<T>>;

template <typename T>
using RowMajor = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
void require_defined(const Tensor<T>& t, const char* op) {
    if (!t.defined()) throw AutodiffError(std::string(op) + ": undefined input");
}

template <typename T>
void require_same(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
    require_defined(a, op);
    require_defined(b, op);
    if (a.shape() != b.shape()) {
        throw AutodiffError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                            " vs " + shape_string(b.shape()));
    }
}

template <typename T>
void require_rank(const Tensor<T>& t, std::size_t rank, const char* op) {
    require_defined(t, op);
    if (t.rank() != rank) {
        throw AutodiffError(std::string(op) + ": expected rank " + std::to_string(rank) +
                            ", got shape " + shape_string(t.shape()));
    }
}

/// Number of elements per leading index and per channel for [N, C, ...].
struct ChannelLayout {
    int batch;
    int channels;
    std::size_t inner;
};

template <typename T>
ChannelLayout channel_layout(const Tensor<T>& x, const char* op) {
    require_defined(x, op);
    if (x.rank() < 2) throw AutodiffError(std::string(op) + ": need at least [N, C]");
    std::size_t inner = 1;
    for (std::size_t i = 2; i < x.rank(); ++i) inner *= static_cast<std::size_t>(x.dim(i));
    return {x.dim(0), x.dim(1), inner};
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    require_same(a, b, "add");
    std::vector<T> out(a.size());
    auto av = a.data();
    auto bv = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
    NodePtr<T> an = a.node();
    NodePtr<T> bn = b.node();
    return make_result<T>("add", a.shape(), std::move(out), {a, b}, [an, bn](Node<T>& self) {
        for (auto* in : {an.get(), bn.get()}) {
            if (!in->requires_grad) continue;
            in->ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) in->grad[i] += self.grad[i];
        }
    });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
    require_same(a, b, "sub");
    std::vector<T> out(a.size());
    auto av = a.data();
    auto bv = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
    NodePtr<T> an = a.node();
    NodePtr<T> bn = b.node();
    return make_result<T>("sub", a.shape(), std::move(out), {a, b}, [an, bn](Node<T>& self) {
        if (an->requires_grad) {
            an->ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) bn->grad[i] -= self.grad[i];
        }
    });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    require_same(a, b, "mul");
    std::vector<T> out(a.size());
    auto av = a.data();
    auto bv = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
    NodePtr<T> an = a.node();
    NodePtr<T> bn = b.node();
    return make_result<T>("mul", a.shape(), std::move(out), {a, b}, [an, bn](Node<T>& self) {
        if (an->requires_grad) {
            an->ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i] * bn->value[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) bn->grad[i] += self.grad[i] * an->value[i];
        }
    });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
    require_defined(a, "scale");
    std::vector<T> out(a.size());
    auto av = a.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * factor;
    NodePtr<T> an = a.node();
    return make_result<T>("scale", a.shape(), std::move(out), {a}, [an, factor](Node<T>& self) {
        an->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i] * factor;
    });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
    require_defined(a, "sum");
    T total = T(0);
    for (T v : a.data()) total += v;
    NodePtr<T> an = a.node();
    return make_result<T>("sum", {1}, {total}, {a}, [an](Node<T>& self) {
        an->ensure_grad();
        for (auto& g : an->grad) g += self.grad[0];
    });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a) {
    require_defined(a, "mean");
    if (a.size() == 0) throw AutodiffError("mean of an empty tensor");
    return scale(sum(a), T(1) / static_cast<T>(a.size()));
}

template <typename T>
Tensor<T> add_channel_bias(const Tensor<T>& x, const Tensor<T>& bias) {
    const auto layout = channel_layout(x, "add_channel_bias");
    require_rank(bias, 1, "add_channel_bias");
    if (bias.dim(0) != layout.channels) {
        throw AutodiffError("add_channel_bias: bias has " + std::to_string(bias.dim(0)) +
                            " entries for " + std::to_string(layout.channels) + " channels");
    }
    std::vector<T> out(x.data().begin(), x.data().end());
    auto bv = bias.data();
    for (int n = 0; n < layout.batch; ++n) {
        for (int c = 0; c < layout.channels; ++c) {
            T* p = out.data() + (static_cast<std::size_t>(n) * layout.channels + c) * layout.inner;
            for (std::size_t i = 0; i < layout.inner; ++i) p[i] += bv[c];
        }
    }
    NodePtr<T> xn = x.node();
    NodePtr<T> bn = bias.node();
    return make_result<T>("add_channel_bias", x.shape(), std::move(out), {x, bias},
                          [xn, bn, layout](Node<T>& self) {
        if (xn->requires_grad) {
            xn->ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) xn->grad[i] += self.grad[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (int n = 0; n < layout.batch; ++n) {
                for (int c = 0; c < layout.channels; ++c) {
                    const T* g = self.grad.data() +
                                 (static_cast<std::size_t>(n) * layout.channels + c) * layout.inner;
                    T acc = T(0);
                    for (std::size_t i = 0; i < layout.inner; ++i) acc += g[i];
                    bn->grad[c] += acc;
                }
            }
        }
    });
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias, int stride,
                 int pad) {
    require_rank(x, 4, "conv2d");
    require_rank(weight, 4, "conv2d");
    const int batch = x.dim(0);
    const int in_c = x.dim(1);
    const int in_h = x.dim(2);
    const int in_w = x.dim(3);
    const int out_c = weight.dim(0);
    const int kh = weight.dim(2);
    const int kw = weight.dim(3);
    if (weight.dim(1) != in_c) {
        throw AutodiffError("conv2d: weight expects " + std::to_string(weight.dim(1)) +
                            " input channels, got " + std::to_string(in_c));
    }
    if (stride < 1 || pad < 0 || kh < 1 || kw < 1) throw AutodiffError("conv2d: invalid geometry");
    if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != out_c)) {
        throw AutodiffError("conv2d: bias shape " + shape_string(bias.shape()));
    }
    const int out_h = (in_h + 2 * pad - kh) / stride + 1;
    const int out_w = (in_w + 2 * pad - kw) / stride + 1;
    if (in_h + 2 * pad < kh || in_w + 2 * pad < kw || out_h < 1 || out_w < 1) {
        throw AutodiffError("conv2d: kernel larger than padded input");
    }

    const std::size_t k_size = static_cast<std::size_t>(in_c) * kh * kw;
    const std::size_t p_size = static_cast<std::size_t>(out_h) * out_w;
    const std::size_t in_plane = static_cast<std::size_t>(in_h) * in_w;
    auto cols = std::make_shared<std::vector<T>>(static_cast<std::size_t>(batch) * k_size * p_size);

    auto xv = x.data();
    for (int n = 0; n < batch; ++n) {
        T* col = cols->data() + static_cast<std::size_t>(n) * k_size * p_size;
        const T* img = xv.data() + static_cast<std::size_t>(n) * in_c * in_plane;
        for (int c = 0; c < in_c; ++c) {
            for (int ki = 0; ki < kh; ++ki) {
                for (int kj = 0; kj < kw; ++kj) {
                    T* row = col + ((static_cast<std::size_t>(c) * kh + ki) * kw + kj) * p_size;
                    for (int oy = 0; oy < out_h; ++oy) {
                        const int iy = oy * stride - pad + ki;
                        T* dst = row + static_cast<std::size_t>(oy) * out_w;
                        if (iy < 0 || iy >= in_h) {
                            std::fill(dst, dst + out_w, T(0));
                            continue;
                        }
                        const T* src = img + c * in_plane + static_cast<std::size_t>(iy) * in_w;
                        for (int ox = 0; ox < out_w; ++ox) {
                            const int ix = ox * stride - pad + kj;
                            dst[ox] = (ix >= 0 && ix < in_w) ? src[ix] : T(0);
                        }
                    }
                }
            }
        }
    }

    std::vector<T> out(static_cast<std::size_t>(batch) * out_c * p_size);
    Eigen::Map<const RowMajor<T>> wmat(weight.data().data(), out_c, static_cast<Eigen::Index>(k_size));
    for (int n = 0; n < batch; ++n) {
        Eigen::Map<const RowMajor<T>> col(cols->data() + static_cast<std::size_t>(n) * k_size * p_size,
                                          static_cast<Eigen::Index>(k_size),
                                          static_cast<Eigen::Index>(p_size));
        Eigen::Map<RowMajor<T>> y(out.data() + static_cast<std::size_t>(n) * out_c * p_size, out_c,
                                  static_cast<Eigen::Index>(p_size));
        y.noalias() = wmat * col;
        if (bias.defined()) {
            auto bv = bias.data();
            for (int o = 0; o < out_c; ++o) y.row(o).array() += bv[o];
        }
    }

    NodePtr<T> xn = x.node();
    NodePtr<T> wn = weight.node();
    NodePtr<T> bn = bias.defined() ? bias.node() : nullptr;
    std::vector<Tensor<T>> inputs{x, weight};
    if (bias.defined()) inputs.push_back(bias);
    return make_result<T>(
        "conv2d", {batch, out_c, out_h, out_w}, std::move(out), std::move(inputs),
        [=](Node<T>& self) {
            Eigen::Map<const RowMajor<T>> wm(wn->value.data(), out_c, static_cast<Eigen::Index>(k_size));
            RowMajor<T> dcol;
            for (int n = 0; n < batch; ++n) {
                Eigen::Map<const RowMajor<T>> g(self.grad.data() + static_cast<std::size_t>(n) * out_c * p_size,
                                                out_c, static_cast<Eigen::Index>(p_size));
                Eigen::Map<const RowMajor<T>> col(cols->data() + static_cast<std::size_t>(n) * k_size * p_size,
                                                  static_cast<Eigen::Index>(k_size),
                                                  static_cast<Eigen::Index>(p_size));
                if (wn->requires_grad) {
                    wn->ensure_grad();
                    Eigen::Map<RowMajor<T>> dw(wn->grad.data(), out_c, static_cast<Eigen::Index>(k_size));
                    dw.noalias() += g * col.transpose();
                }
                if (bn && bn->requires_grad) {
                    bn->ensure_grad();
                    for (int o = 0; o < out_c; ++o) {
                        const T* row = g.data() + static_cast<std::size_t>(o) * p_size;
                        T acc = T(0);
                        for (std::size_t p = 0; p < p_size; ++p) acc += row[p];
                        bn->grad[o] += acc;
                    }
                }
                if (xn->requires_grad) {
                    xn->ensure_grad();
                    dcol.noalias() = wm.transpose() * g;
                    T* dimg = xn->grad.data() + static_cast<std::size_t>(n) * in_c * in_plane;
                    for (int c = 0; c < in_c; ++c) {
                        for (int ki = 0; ki < kh; ++ki) {
                            for (int kj = 0; kj < kw; ++kj) {
                                const T* row = dcol.data() +
                                               ((static_cast<std::size_t>(c) * kh + ki) * kw + kj) * p_size;
                                for (int oy = 0; oy < out_h; ++oy) {
                                    const int iy = oy * stride - pad + ki;
                                    if (iy < 0 || iy >= in_h) continue;
                                    T* dst = dimg + c * in_plane + static_cast<std::size_t>(iy) * in_w;
                                    const T* src = row + static_cast<std::size_t>(oy) * out_w;
                                    for (int ox = 0; ox < out_w; ++ox) {
                                        const int ix = ox * stride - pad + kj;
                                        if (ix >= 0 && ix < in_w) dst[ix] += src[ox];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        });
}

template <typename T>
Tensor<T> demodulate(const Tensor<T>& weight, const Tensor<T>& scales, T eps) {
    require_rank(weight, 4, "demodulate");
    require_rank(scales, 1, "demodulate");
    const int out_c = weight.dim(0);
    const int in_c = weight.dim(1);
    const std::size_t taps = static_cast<std::size_t>(weight.dim(2)) * weight.dim(3);
    if (scales.dim(0) != in_c) {
        throw AutodiffError("demodulate: " + std::to_string(scales.dim(0)) + " scales for " +
                            std::to_string(in_c) + " input channels");
    }
    if (eps < T(0)) throw AutodiffError("demodulate: eps must be non-negative");
    for (T s : scales.data()) {
        if (!std::isfinite(s)) throw AutodiffError("demodulate: non-finite scale");
    }

    auto wv = weight.data();
    auto sv = scales.data();
    const std::size_t slice = static_cast<std::size_t>(in_c) * taps;
    std::vector<T> modulated(wv.size());
    auto inv_norm = std::make_shared<std::vector<T>>(static_cast<std::size_t>(out_c));
    std::vector<T> out(wv.size());
    for (int o = 0; o < out_c; ++o) {
        T sq = T(0);
        for (int i = 0; i < in_c; ++i) {
            for (std::size_t k = 0; k < taps; ++k) {
                const std::size_t idx = o * slice + i * taps + k;
                modulated[idx] = sv[i] * wv[idx];
                sq += modulated[idx] * modulated[idx];
            }
        }
        const T denom = std::sqrt(sq + eps);
        if (denom == T(0)) {
            throw AutodiffError("demodulate: output channel " + std::to_string(o) +
                                " has zero norm and eps is 0");
        }
        (*inv_norm)[o] = T(1) / denom;
        for (std::size_t j = 0; j < slice; ++j) out[o * slice + j] = modulated[o * slice + j] * (*inv_norm)[o];
    }

    NodePtr<T> wn = weight.node();
    NodePtr<T> sn = scales.node();
    auto mod = std::make_shared<std::vector<T>>(std::move(modulated));
    return make_result<T>("demodulate", weight.shape(), std::move(out), {weight, scales},
                          [=](Node<T>& self) {
        std::vector<T> dmod(slice);
        for (int o = 0; o < out_c; ++o) {
            const T r = (*inv_norm)[o];
            const T* g = self.grad.data() + o * slice;
            const T* a = mod->data() + o * slice;
            T dot = T(0);
            for (std::size_t j = 0; j < slice; ++j) dot += g[j] * a[j];
            const T r3 = r * r * r;
            for (std::size_t j = 0; j < slice; ++j) dmod[j] = g[j] * r - a[j] * dot * r3;
            if (wn->requires_grad) {
                wn->ensure_grad();
                for (int i = 0; i < in_c; ++i) {
                    for (std::size_t k = 0; k < taps; ++k) {
                        wn->grad[o * slice + i * taps + k] += dmod[i * taps + k] * sn->value[i];
                    }
                }
            }
            if (sn->requires_grad) {
                sn->ensure_grad();
                for (int i = 0; i < in_c; ++i) {
                    T acc = T(0);
                    for (std::size_t k = 0; k < taps; ++k) {
                        acc += dmod[i * taps + k] * wn->value[o * slice + i * taps + k];
                    }
                    sn->grad[i] += acc;
                }
            }
        }
    });
}

namespace {

struct LerpTap {
    int i0;
    int i1;
    double t;
};

std::vector<LerpTap> upsample_taps(int in_size) {
    std::vector<LerpTap> taps(static_cast<std::size_t>(2 * in_size));
    for (int o = 0; o < 2 * in_size; ++o) {
        double src = (o + 0.5) * 0.5 - 0.5;
        if (src < 0.0) src = 0.0;
        const int i0 = std::min(static_cast<int>(src), in_size - 1);
        const int i1 = std::min(i0 + 1, in_size - 1);
        taps[o] = {i0, i1, src - i0};
    }
    return taps;
}

}  // namespace

template <typename T>
Tensor<T> bilinear_upsample_2x(const Tensor<T>& x) {
    require_rank(x, 4, "bilinear_upsample_2x");
    const int batch = x.dim(0), ch = x.dim(1), h = x.dim(2), w = x.dim(3);
    if (h < 1 || w < 1) throw AutodiffError("bilinear_upsample_2x: empty input");
    const auto rows = upsample_taps(h);
    const auto cols = upsample_taps(w);
    const int oh = 2 * h, ow = 2 * w;
    std::vector<T> out(static_cast<std::size_t>(batch) * ch * oh * ow);
    auto xv = x.data();
    for (int p = 0; p < batch * ch; ++p) {
        const T* src = xv.data() + static_cast<std::size_t>(p) * h * w;
        T* dst = out.data() + static_cast<std::size_t>(p) * oh * ow;
        for (int oy = 0; oy < oh; ++oy) {
            const auto& r = rows[oy];
            const T ty = static_cast<T>(r.t);
            for (int ox = 0; ox < ow; ++ox) {
                const auto& c = cols[ox];
                const T tx = static_cast<T>(c.t);
                const T top = src[r.i0 * w + c.i0] * (T(1) - tx) + src[r.i0 * w + c.i1] * tx;
                const T bot = src[r.i1 * w + c.i0] * (T(1) - tx) + src[r.i1 * w + c.i1] * tx;
                dst[oy * ow + ox] = top * (T(1) - ty) + bot * ty;
            }
        }
    }
    NodePtr<T> xn = x.node();
    return make_result<T>("bilinear_upsample_2x", {batch, ch, oh, ow}, std::move(out), {x},
                          [=](Node<T>& self) {
        xn->ensure_grad();
        for (int p = 0; p < batch * ch; ++p) {
            T* dsrc = xn->grad.data() + static_cast<std::size_t>(p) * h * w;
            const T* g = self.grad.data() + static_cast<std::size_t>(p) * oh * ow;
            for (int oy = 0; oy < oh; ++oy) {
                const auto& r = rows[oy];
                const T ty = static_cast<T>(r.t);
                for (int ox = 0; ox < ow; ++ox) {
                    const auto& c = cols[ox];
                    const T tx = static_cast<T>(c.t);
                    const T v = g[oy * ow + ox];
                    dsrc[r.i0 * w + c.i0] += v * (T(1) - ty) * (T(1) - tx);
                    dsrc[r.i0 * w + c.i1] += v * (T(1) - ty) * tx;
                    dsrc[r.i1 * w + c.i0] += v * ty * (T(1) - tx);
                    dsrc[r.i1 * w + c.i1] += v * ty * tx;
                }
            }
        }
    });
}

template <typename T>
Tensor<T> avg_pool_2x(const Tensor<T>& x) {
    require_rank(x, 4, "avg_pool_2x");
    const int batch = x.dim(0), ch = x.dim(1), h = x.dim(2), w = x.dim(3);
    if (h % 2 || w % 2 || h == 0 || w == 0) {
        throw AutodiffError("avg_pool_2x: spatial size must be even, got " + shape_string(x.shape()));
    }
    const int oh = h / 2, ow = w / 2;
    std::vector<T> out(static_cast<std::size_t>(batch) * ch * oh * ow);
    auto xv = x.data();
    for (int p = 0; p < batch * ch; ++p) {
        const T* src = xv.data() + static_cast<std::size_t>(p) * h * w;
        T* dst = out.data() + static_cast<std::size_t>(p) * oh * ow;
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                const T* s = src + 2 * oy * w + 2 * ox;
                dst[oy * ow + ox] = T(0.25) * (s[0] + s[1] + s[w] + s[w + 1]);
            }
        }
    }
    NodePtr<T> xn = x.node();
    return make_result<T>("avg_pool_2x", {batch, ch, oh, ow}, std::move(out), {x},
                          [=](Node<T>& self) {
        xn->ensure_grad();
        for (int p = 0; p < batch * ch; ++p) {
            T* d = xn->grad.data() + static_cast<std::size_t>(p) * h * w;
            const T* g = self.grad.data() + static_cast<std::size_t>(p) * oh * ow;
            for (int oy = 0; oy < oh; ++oy) {
                for (int ox = 0; ox < ow; ++ox) {
                    const T v = T(0.25) * g[oy * ow + ox];
                    T* s = d + 2 * oy * w + 2 * ox;
                    s[0] += v;
                    s[1] += v;
                    s[w] += v;
                    s[w + 1] += v;
                }
            }
        }
    });
}

template <typename T>
Tensor<T> concat(const Tensor<T>& a, const Tensor<T>& b) {
    const auto la = channel_layout(a, "concat");
    const auto lb = channel_layout(b, "concat");
    Shape rest_a(a.shape().begin() + 2, a.shape().end());
    Shape rest_b(b.shape().begin() + 2, b.shape().end());
    if (la.batch != lb.batch || rest_a != rest_b) {
        throw AutodiffError("concat: incompatible shapes " + shape_string(a.shape()) + " and " +
                            shape_string(b.shape()));
    }
    const std::size_t block_a = static_cast<std::size_t>(la.channels) * la.inner;
    const std::size_t block_b = static_cast<std::size_t>(lb.channels) * lb.inner;
    std::vector<T> out(a.size() + b.size());
    auto av = a.data();
    auto bv = b.data();
    for (int n = 0; n < la.batch; ++n) {
        T* dst = out.data() + n * (block_a + block_b);
        std::copy_n(av.data() + n * block_a, block_a, dst);
        std::copy_n(bv.data() + n * block_b, block_b, dst + block_a);
    }
    Shape shape = a.shape();
    shape[1] = la.channels + lb.channels;
    NodePtr<T> an = a.node();
    NodePtr<T> bn = b.node();
    const int batch = la.batch;
    return make_result<T>("concat", std::move(shape), std::move(out), {a, b}, [=](Node<T>& self) {
        for (int n = 0; n < batch; ++n) {
            const T* g = self.grad.data() + n * (block_a + block_b);
            if (an->requires_grad) {
                an->ensure_grad();
                for (std::size_t i = 0; i < block_a; ++i) an->grad[n * block_a + i] += g[i];
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                for (std::size_t i = 0; i < block_b; ++i) bn->grad[n * block_b + i] += g[block_a + i];
            }
        }
    });
}

template <typename T>
Tensor<T> fully_connected(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
    require_rank(x, 2, "fully_connected");
    require_rank(weight, 2, "fully_connected");
    const int batch = x.dim(0);
    const int in_f = x.dim(1);
    const int out_f = weight.dim(0);
    if (weight.dim(1) != in_f) {
        throw AutodiffError("fully_connected: weight " + shape_string(weight.shape()) +
                            " does not accept input " + shape_string(x.shape()));
    }
    if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != out_f)) {
        throw AutodiffError("fully_connected: bias shape " + shape_string(bias.shape()));
    }
    std::vector<T> out(static_cast<std::size_t>(batch) * out_f);
    Eigen::Map<const RowMajor<T>> xm(x.data().data(), batch, in_f);
    Eigen::Map<const RowMajor<T>> wm(weight.data().data(), out_f, in_f);
    Eigen::Map<RowMajor<T>> ym(out.data(), batch, out_f);
    ym.noalias() = xm * wm.transpose();
    if (bias.defined()) {
        auto bv = bias.data();
        for (int n = 0; n < batch; ++n) {
            for (int o = 0; o < out_f; ++o) ym(n, o) += bv[o];
        }
    }
    NodePtr<T> xn = x.node();
    NodePtr<T> wn = weight.node();
    NodePtr<T> bn = bias.defined() ? bias.node() : nullptr;
    std::vector<Tensor<T>> inputs{x, weight};
    if (bias.defined()) inputs.push_back(bias);
    return make_result<T>("fully_connected", {batch, out_f}, std::move(out), std::move(inputs),
                          [=](Node<T>& self) {
        Eigen::Map<const RowMajor<T>> g(self.grad.data(), batch, out_f);
        if (xn->requires_grad) {
            xn->ensure_grad();
            Eigen::Map<const RowMajor<T>> w(wn->value.data(), out_f, in_f);
            Eigen::Map<RowMajor<T>> dx(xn->grad.data(), batch, in_f);
            dx.noalias() += g * w;
        }
        if (wn->requires_grad) {
            wn->ensure_grad();
            Eigen::Map<const RowMajor<T>> xv(xn->value.data(), batch, in_f);
            Eigen::Map<RowMajor<T>> dw(wn->grad.data(), out_f, in_f);
            dw.noalias() += g.transpose() * xv;
        }
        if (bn && bn->requires_grad) {
            bn->ensure_grad();
            for (int n = 0; n < batch; ++n) {
                for (int o = 0; o < out_f; ++o) bn->grad[o] += g(n, o);
            }
        }
    });
}

template <typename T>
Tensor<T> pixel_norm(const Tensor<T>& x, T eps) {
    const auto layout = channel_layout(x, "pixel_norm");
    if (!(eps > T(0))) throw AutodiffError("pixel_norm: eps must be positive");
    const std::size_t locations = static_cast<std::size_t>(layout.batch) * layout.inner;
    auto inv = std::make_shared<std::vector<T>>(locations);
    std::vector<T> out(x.size());
    auto xv = x.data();
    const std::size_t block = static_cast<std::size_t>(layout.channels) * layout.inner;
    for (int n = 0; n < layout.batch; ++n) {
        for (std::size_t p = 0; p < layout.inner; ++p) {
            T sq = T(0);
            for (int c = 0; c < layout.channels; ++c) {
                const T v = xv[n * block + c * layout.inner + p];
                sq += v * v;
            }
            const T r = T(1) / std::sqrt(sq / static_cast<T>(layout.channels) + eps);
            (*inv)[n * layout.inner + p] = r;
            for (int c = 0; c < layout.channels; ++c) {
                const std::size_t idx = n * block + c * layout.inner + p;
                out[idx] = xv[idx] * r;
            }
        }
    }
    NodePtr<T> xn = x.node();
    return make_result<T>("pixel_norm", x.shape(), std::move(out), {x}, [=](Node<T>& self) {
        xn->ensure_grad();
        const T inv_c = T(1) / static_cast<T>(layout.channels);
        for (int n = 0; n < layout.batch; ++n) {
            for (std::size_t p = 0; p < layout.inner; ++p) {
                const T r = (*inv)[n * layout.inner + p];
                T dot = T(0);
                for (int c = 0; c < layout.channels; ++c) {
                    const std::size_t idx = n * block + c * layout.inner + p;
                    dot += self.grad[idx] * xn->value[idx];
                }
                const T coeff = dot * r * r * r * inv_c;
                for (int c = 0; c < layout.channels; ++c) {
                    const std::size_t idx = n * block + c * layout.inner + p;
                    xn->grad[idx] += self.grad[idx] * r - xn->value[idx] * coeff;
                }
            }
        }
    });
}

template <typename T>
Tensor<T> prelu(const Tensor<T>& x, const Tensor<T>& slopes) {
    const auto layout = channel_layout(x, "prelu");
    require_rank(slopes, 1, "prelu");
    if (slopes.dim(0) != layout.channels) {
        throw AutodiffError("prelu: " + std::to_string(slopes.dim(0)) + " slopes for " +
                            std::to_string(layout.channels) + " channels");
    }
    std::vector<T> out(x.size());
    auto xv = x.data();
    auto sv = slopes.data();
    const std::size_t block = static_cast<std::size_t>(layout.channels) * layout.inner;
    for (int n = 0; n < layout.batch; ++n) {
        for (int c = 0; c < layout.channels; ++c) {
            const std::size_t base = n * block + c * layout.inner;
            for (std::size_t i = 0; i < layout.inner; ++i) {
                const T v = xv[base + i];
                out[base + i] = v >= T(0) ? v : sv[c] * v;
            }
        }
    }
    NodePtr<T> xn = x.node();
    NodePtr<T> sn = slopes.node();
    return make_result<T>("prelu", x.shape(), std::move(out), {x, slopes}, [=](Node<T>& self) {
        if (xn->requires_grad) xn->ensure_grad();
        if (sn->requires_grad) sn->ensure_grad();
        for (int n = 0; n < layout.batch; ++n) {
            for (int c = 0; c < layout.channels; ++c) {
                const std::size_t base = n * block + c * layout.inner;
                const T slope = sn->value[c];
                T dslope = T(0);
                for (std::size_t i = 0; i < layout.inner; ++i) {
                    const T v = xn->value[base + i];
                    const T g = self.grad[base + i];
                    if (v >= T(0)) {
                        if (xn->requires_grad) xn->grad[base + i] += g;
                    } else {
                        if (xn->requires_grad) xn->grad[base + i] += g * slope;
                        dslope += g * v;
                    }
                }
                if (sn->requires_grad) sn->grad[c] += dslope;
            }
        }
    });
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T slope) {
    require_defined(x, "leaky_relu");
    std::vector<T> out(x.size());
    auto xv = x.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] >= T(0) ? xv[i] : slope * xv[i];
    NodePtr<T> xn = x.node();
    return make_result<T>("leaky_relu", x.shape(), std::move(out), {x}, [=](Node<T>& self) {
        xn->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            xn->grad[i] += xn->value[i] >= T(0) ? self.grad[i] : slope * self.grad[i];
        }
    });
}

template <typename T>
Tensor<T> l1(const Tensor<T>& a, const Tensor<T>& b) {
    require_same(a, b, "l1");
    if (a.size() == 0) throw AutodiffError("l1 of empty tensors");
    auto av = a.data();
    auto bv = b.data();
    T total = T(0);
    for (std::size_t i = 0; i < av.size(); ++i) total += std::abs(av[i] - bv[i]);
    const T inv_n = T(1) / static_cast<T>(av.size());
    NodePtr<T> an = a.node();
    NodePtr<T> bn = b.node();
    return make_result<T>("l1", {1}, {total * inv_n}, {a, b}, [=](Node<T>& self) {
        const T g = self.grad[0] * inv_n;
        if (an->requires_grad) an->ensure_grad();
        if (bn->requires_grad) bn->ensure_grad();
        for (std::size_t i = 0; i < an->value.size(); ++i) {
            const T d = an->value[i] - bn->value[i];
            const T s = d > T(0) ? g : (d < T(0) ? -g : T(0));
            if (an->requires_grad) an->grad[i] += s;
            if (bn->requires_grad) bn->grad[i] -= s;
        }
    });
}

template <typename T>
Tensor<T> mse(const Tensor<T>& a, const Tensor<T>& b) {
    require_same(a, b, "mse");
    if (a.size() == 0) throw AutodiffError("mse of empty tensors");
    auto av = a.data();
    auto bv = b.data();
    T total = T(0);
    for (std::size_t i = 0; i < av.size(); ++i) {
        const T d = av[i] - bv[i];
        total += d * d;
    }
    const T inv_n = T(1) / static_cast<T>(av.size());
    NodePtr<T> an = a.node();
    NodePtr<T> bn = b.node();
    return make_result<T>("mse", {1}, {total * inv_n}, {a, b}, [=](Node<T>& self) {
        const T g = T(2) * self.grad[0] * inv_n;
        if (an->requires_grad) an->ensure_grad();
        if (bn->requires_grad) bn->ensure_grad();
        for (std::size_t i = 0; i < an->value.size(); ++i) {
            const T d = (an->value[i] - bn->value[i]) * g;
            if (an->requires_grad) an->grad[i] += d;
            if (bn->requires_grad) bn->grad[i] -= d;
        }
    });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
    require_defined(x, "reshape");
    if (numel(shape) != x.size()) {
        throw AutodiffError("reshape: " + shape_string(x.shape()) + " -> " + shape_string(shape));
    }
    if (shape.size() > 4) throw AutodiffError("tensors have at most 4 dimensions");
    std::vector<T> out(x.data().begin(), x.data().end());
    NodePtr<T> xn = x.node();
    return make_result<T>("reshape", std::move(shape), std::move(out), {x}, [xn](Node<T>& self) {
        xn->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) xn->grad[i] += self.grad[i];
    });
}

template <typename T>
Tensor<T> broadcast_spatial(const Tensor<T>& code, int height, int width) {
    require_rank(code, 2, "broadcast_spatial");
    if (height < 1 || width < 1) throw AutodiffError("broadcast_spatial: empty target size");
    const int batch = code.dim(0), ch = code.dim(1);
    const std::size_t plane = static_cast<std::size_t>(height) * width;
    std::vector<T> out(static_cast<std::size_t>(batch) * ch * plane);
    auto cv = code.data();
    for (int p = 0; p < batch * ch; ++p) std::fill_n(out.data() + p * plane, plane, cv[p]);
    NodePtr<T> cn = code.node();
    return make_result<T>("broadcast_spatial", {batch, ch, height, width}, std::move(out), {code},
                          [=](Node<T>& self) {
        cn->ensure_grad();
        for (int p = 0; p < batch * ch; ++p) {
            T acc = T(0);
            const T* g = self.grad.data() + p * plane;
            for (std::size_t i = 0; i < plane; ++i) acc += g[i];
            cn->grad[p] += acc;
        }
    });
}

template <typename T>
Tensor<T> pad_replicate(const Tensor<T>& x, int top, int bottom, int left, int right) {
    require_rank(x, 4, "pad_replicate");
    if (top < 0 || bottom < 0 || left < 0 || right < 0) throw AutodiffError("pad_replicate: negative pad");
    const int planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
    const int oh = h + top + bottom, ow = w + left + right;
    std::vector<T> out(static_cast<std::size_t>(planes) * oh * ow);
    auto xv = x.data();
    auto src_index = [=](int oy, int ox) {
        const int iy = std::clamp(oy - top, 0, h - 1);
        const int ix = std::clamp(ox - left, 0, w - 1);
        return static_cast<std::size_t>(iy) * w + ix;
    };
    for (int p = 0; p < planes; ++p) {
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                out[(static_cast<std::size_t>(p) * oh + oy) * ow + ox] =
                    xv[static_cast<std::size_t>(p) * h * w + src_index(oy, ox)];
            }
        }
    }
    NodePtr<T> xn = x.node();
    return make_result<T>("pad_replicate", {x.dim(0), x.dim(1), oh, ow}, std::move(out), {x},
                          [=](Node<T>& self) {
        xn->ensure_grad();
        for (int p = 0; p < planes; ++p) {
            for (int oy = 0; oy < oh; ++oy) {
                for (int ox = 0; ox < ow; ++ox) {
                    xn->grad[static_cast<std::size_t>(p) * h * w + src_index(oy, ox)] +=
                        self.grad[(static_cast<std::size_t>(p) * oh + oy) * ow + ox];
                }
            }
        }
    });
}

template <typename T>
Tensor<T> crop(const Tensor<T>& x, int y0, int x0, int h, int w) {
    require_rank(x, 4, "crop");
    const int planes = x.dim(0) * x.dim(1), ih = x.dim(2), iw = x.dim(3);
    if (y0 < 0 || x0 < 0 || h < 1 || w < 1 || y0 + h > ih || x0 + w > iw) {
        throw AutodiffError("crop: window outside " + shape_string(x.shape()));
    }
    std::vector<T> out(static_cast<std::size_t>(planes) * h * w);
    auto xv = x.data();
    for (int p = 0; p < planes; ++p) {
        for (int y = 0; y < h; ++y) {
            std::copy_n(xv.data() + (static_cast<std::size_t>(p) * ih + y0 + y) * iw + x0, w,
                        out.data() + (static_cast<std::size_t>(p) * h + y) * w);
        }
    }
    NodePtr<T> xn = x.node();
    return make_result<T>("crop", {x.dim(0), x.dim(1), h, w}, std::move(out), {x}, [=](Node<T>& self) {
        xn->ensure_grad();
        for (int p = 0; p < planes; ++p) {
            for (int y = 0; y < h; ++y) {
                T* dst = xn->grad.data() + (static_cast<std::size_t>(p) * ih + y0 + y) * iw + x0;
                const T* g = self.grad.data() + (static_cast<std::size_t>(p) * h + y) * w;
                for (int x = 0; x < w; ++x) dst[x] += g[x];
            }
        }
    });
}

#define DESKSTAGE_INSTANTIATE_OPS(T)                                                         \
    template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                             \
    template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                             \
    template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                             \
    template Tensor<T> scale(const Tensor<T>&, T);                                          \
    template Tensor<T> sum(const Tensor<T>&);                                               \
    template Tensor<T> mean(const Tensor<T>&);                                              \
    template Tensor<T> add_channel_bias(const Tensor<T>&, const Tensor<T>&);                \
    template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int, int); \
    template Tensor<T> demodulate(const Tensor<T>&, const Tensor<T>&, T);                   \
    template Tensor<T> bilinear_upsample_2x(const Tensor<T>&);                              \
    template Tensor<T> avg_pool_2x(const Tensor<T>&);                                       \
    template Tensor<T> concat(const Tensor<T>&, const Tensor<T>&);                          \
    template Tensor<T> fully_connected(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&); \
    template Tensor<T> pixel_norm(const Tensor<T>&, T);                                     \
    template Tensor<T> prelu(const Tensor<T>&, const Tensor<T>&);                           \
    template Tensor<T> leaky_relu(const Tensor<T>&, T);                                     \
    template Tensor<T> l1(const Tensor<T>&, const Tensor<T>&);                              \
    template Tensor<T> mse(const Tensor<T>&, const Tensor<T>&);                             \
    template Tensor<T> reshape(const Tensor<T>&, Shape);                                    \
    template Tensor<T> broadcast_spatial(const Tensor<T>&, int, int);                       \
    template Tensor<T> pad_replicate(const Tensor<T>&, int, int, int, int);                 \
    template Tensor<T> crop(const Tensor<T>&, int, int, int, int);

DESKSTAGE_INSTANTIATE_OPS(float)
DESKSTAGE_INSTANTIATE_OPS(double)

#undef DESKSTAGE_INSTANTIATE_OPS

}  // namespace deskstage::autodiff
