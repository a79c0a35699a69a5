// Copyright 2026 The PEN Authors
// SPDX-License-Identifier: Apache-2.0

#include "pen/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Core>

#include "pen/errors.hpp"

namespace pen::nn {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ColMatrix = Eigen::MatrixXd;

// Rows of the im2col buffer per chunk; bounds the scratch memory of large feature maps.
constexpr std::size_t kIm2ColRows = 16384;

void require_rank(const Tensor& x, std::size_t rank, const char* op) {
    if (x.shape().size() != rank) {
        throw DimensionError(std::string(op) + ": expected a rank-" + std::to_string(rank) + " tensor, got " +
                             to_string(x.shape()));
    }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shapes " + to_string(a.shape()) + " and " + to_string(b.shape()) +
                             " differ");
    }
}

struct ConvGeometry {
    std::size_t batch, in_ch, out_ch, rows, cols, k;
    [[nodiscard]] std::size_t hw() const { return rows * cols; }
    [[nodiscard]] std::size_t taps() const { return k * k; }
    [[nodiscard]] std::size_t chunk() const { return std::max<std::size_t>(1, kIm2ColRows / hw()); }
};

// im2col for samples [b0, b0 + nb): row (b - b0) * HW + s, column c * k^2 + tap.
void im2col(const ConvGeometry& g, const double* x, std::size_t b0, std::size_t nb, ColMatrix& cols) {
    const auto pad = static_cast<long>(g.k / 2);
    const auto rows = static_cast<long>(g.rows);
    const auto ncols = static_cast<long>(g.cols);
    cols.resize(static_cast<Eigen::Index>(nb * g.hw()), static_cast<Eigen::Index>(g.in_ch * g.taps()));
    for (std::size_t c = 0; c < g.in_ch; ++c) {
        for (std::size_t t = 0; t < g.taps(); ++t) {
            const long dr = static_cast<long>(t / g.k) - pad;
            const long dc = static_cast<long>(t % g.k) - pad;
            double* dst = cols.col(static_cast<Eigen::Index>(c * g.taps() + t)).data();
            for (std::size_t bb = 0; bb < nb; ++bb) {
                const double* src = x + ((b0 + bb) * g.in_ch + c) * g.hw();
                for (long r = 0; r < rows; ++r) {
                    const long sr = r + dr;
                    for (long q = 0; q < ncols; ++q) {
                        const long sq = q + dc;
                        *dst++ = (sr >= 0 && sr < rows && sq >= 0 && sq < ncols) ? src[sr * ncols + sq] : 0.0;
                    }
                }
            }
        }
    }
}

void col2im_add(const ConvGeometry& g, const ColMatrix& dcols, std::size_t b0, std::size_t nb, double* dx) {
    const auto pad = static_cast<long>(g.k / 2);
    const auto rows = static_cast<long>(g.rows);
    const auto ncols = static_cast<long>(g.cols);
    for (std::size_t c = 0; c < g.in_ch; ++c) {
        for (std::size_t t = 0; t < g.taps(); ++t) {
            const long dr = static_cast<long>(t / g.k) - pad;
            const long dc = static_cast<long>(t % g.k) - pad;
            const double* src = dcols.col(static_cast<Eigen::Index>(c * g.taps() + t)).data();
            for (std::size_t bb = 0; bb < nb; ++bb) {
                double* dst = dx + ((b0 + bb) * g.in_ch + c) * g.hw();
                for (long r = 0; r < rows; ++r) {
                    const long sr = r + dr;
                    for (long q = 0; q < ncols; ++q, ++src) {
                        const long sq = q + dc;
                        if (sr >= 0 && sr < rows && sq >= 0 && sq < ncols) dst[sr * ncols + sq] += *src;
                    }
                }
            }
        }
    }
}

}  // namespace

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias) {
    require_rank(x, 2, "linear");
    require_rank(w, 2, "linear");
    const std::size_t batch = x.shape()[0];
    const std::size_t in = w.shape()[0];
    const std::size_t out = w.shape()[1];
    if (x.shape()[1] != in || bias.size() != out) {
        throw DimensionError("linear: input " + to_string(x.shape()) + ", weights " + to_string(w.shape()) +
                             ", bias " + to_string(bias.shape()) + " do not fit");
    }
    const auto b = static_cast<Eigen::Index>(batch);
    const auto n = static_cast<Eigen::Index>(in);
    const auto m = static_cast<Eigen::Index>(out);
    std::vector<double> y(batch * out);
    Eigen::Map<RowMatrix> ym(y.data(), b, m);
    ym.noalias() = Eigen::Map<const RowMatrix>(x.data().data(), b, n) * Eigen::Map<const RowMatrix>(w.data().data(), n, m);
    ym.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(bias.data().data(), m);

    return Tensor::from_op({batch, out}, std::move(y), {x, w, bias}, [b, n, m](Node& self) {
        Eigen::Map<const RowMatrix> gy(self.grad.data(), b, m);
        Node& xn = *self.parents[0];
        Node& wn = *self.parents[1];
        Node& bn = *self.parents[2];
        if (xn.requires_grad) {
            Eigen::Map<RowMatrix>(xn.grad.data(), b, n).noalias() += gy * Eigen::Map<const RowMatrix>(wn.value.data(), n, m).transpose();
        }
        if (wn.requires_grad) {
            Eigen::Map<RowMatrix>(wn.grad.data(), n, m).noalias() += Eigen::Map<const RowMatrix>(xn.value.data(), b, n).transpose() * gy;
        }
        if (bn.requires_grad) {
            Eigen::Map<Eigen::RowVectorXd>(bn.grad.data(), m) += gy.colwise().sum();
        }
    });
}

Tensor conv2d(const Tensor& x, const Tensor& kernel, const Tensor& bias) {
    require_rank(x, 4, "conv2d");
    require_rank(kernel, 4, "conv2d");
    const auto& ks = kernel.shape();
    const ConvGeometry g{x.shape()[0], x.shape()[1], ks[0], x.shape()[2], x.shape()[3], ks[2]};
    if (ks[1] != g.in_ch || ks[2] != ks[3] || g.k % 2 == 0 || bias.size() != g.out_ch) {
        throw DimensionError("conv2d: input " + to_string(x.shape()) + ", kernel " + to_string(ks) + ", bias " +
                             to_string(bias.shape()) + " do not fit");
    }
    const auto co = static_cast<Eigen::Index>(g.out_ch);
    const auto ck = static_cast<Eigen::Index>(g.in_ch * g.taps());
    Eigen::Map<const RowMatrix> wmat(kernel.data().data(), co, ck);
    std::vector<double> y(g.batch * g.out_ch * g.hw());
    ColMatrix cols;
    ColMatrix tmp;
    for (std::size_t b0 = 0; b0 < g.batch; b0 += g.chunk()) {
        const std::size_t nb = std::min(g.chunk(), g.batch - b0);
        im2col(g, x.data().data(), b0, nb, cols);
        tmp.noalias() = cols * wmat.transpose();
        for (std::size_t bb = 0; bb < nb; ++bb) {
            for (std::size_t c = 0; c < g.out_ch; ++c) {
                const double* src = tmp.col(static_cast<Eigen::Index>(c)).data() + bb * g.hw();
                double* dst = y.data() + ((b0 + bb) * g.out_ch + c) * g.hw();
                const double bc = bias.data()[c];
                for (std::size_t s = 0; s < g.hw(); ++s) dst[s] = src[s] + bc;
            }
        }
    }

    return Tensor::from_op({g.batch, g.out_ch, g.rows, g.cols}, std::move(y), {x, kernel, bias},
                           [g, co, ck](Node& self) {
        Node& xn = *self.parents[0];
        Node& kn = *self.parents[1];
        Node& bn = *self.parents[2];
        Eigen::Map<const RowMatrix> wmat(kn.value.data(), co, ck);
        ColMatrix cols;
        ColMatrix gy;
        ColMatrix dcols;
        for (std::size_t b0 = 0; b0 < g.batch; b0 += g.chunk()) {
            const std::size_t nb = std::min(g.chunk(), g.batch - b0);
            gy.resize(static_cast<Eigen::Index>(nb * g.hw()), co);
            for (std::size_t bb = 0; bb < nb; ++bb) {
                for (std::size_t c = 0; c < g.out_ch; ++c) {
                    const double* src = self.grad.data() + ((b0 + bb) * g.out_ch + c) * g.hw();
                    std::copy(src, src + g.hw(), gy.col(static_cast<Eigen::Index>(c)).data() + bb * g.hw());
                }
            }
            if (bn.requires_grad) {
                Eigen::Map<Eigen::RowVectorXd>(bn.grad.data(), co) += gy.colwise().sum();
            }
            if (kn.requires_grad) {
                im2col(g, xn.value.data(), b0, nb, cols);
                Eigen::Map<RowMatrix>(kn.grad.data(), co, ck).noalias() += gy.transpose() * cols;
            }
            if (xn.requires_grad) {
                dcols.noalias() = gy * wmat;
                col2im_add(g, dcols, b0, nb, xn.grad.data());
            }
        }
    });
}

Tensor prelu(const Tensor& x, const Tensor& slope) {
    if (slope.size() != 1) throw DimensionError("prelu: slope must hold exactly one value");
    const double a = slope.data()[0];
    std::vector<double> y(x.data().begin(), x.data().end());
    for (double& v : y) {
        if (v < 0.0) v *= a;
    }
    return Tensor::from_op(x.shape(), std::move(y), {x, slope}, [](Node& self) {
        Node& xn = *self.parents[0];
        Node& sn = *self.parents[1];
        const double a = sn.value[0];
        double ds = 0.0;
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            const double z = xn.value[i];
            const double g = self.grad[i];
            if (z < 0.0) {
                ds += g * z;
                if (xn.requires_grad) xn.grad[i] += a * g;
            } else if (xn.requires_grad) {
                xn.grad[i] += g;
            }
        }
        if (sn.requires_grad) sn.grad[0] += ds;
    });
}

Tensor sigmoid(const Tensor& x) {
    // Keeps the result strictly inside (0, 1) even where exp saturates.
    constexpr double lo = std::numeric_limits<double>::min();
    constexpr double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2;
    std::vector<double> y(x.size());
    const auto in = x.data();
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double z = in[i];
        const double s = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
        y[i] = std::clamp(s, lo, hi);
    }
    return Tensor::from_op(x.shape(), std::move(y), {x}, [](Node& self) {
        Node& xn = *self.parents[0];
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            const double s = self.value[i];
            xn.grad[i] += self.grad[i] * s * (1.0 - s);
        }
    });
}

Tensor clamp(const Tensor& x, double lo, double hi) {
    std::vector<double> y(x.data().begin(), x.data().end());
    for (double& v : y) v = std::clamp(v, lo, hi);
    return Tensor::from_op(x.shape(), std::move(y), {x}, [lo, hi](Node& self) {
        Node& xn = *self.parents[0];
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            const double v = xn.value[i];
            if (v >= lo && v <= hi) xn.grad[i] += self.grad[i];
        }
    });
}

Tensor avg_pool2d(const Tensor& x, std::size_t k) {
    require_rank(x, 4, "avg_pool2d");
    const auto& s = x.shape();
    if (k == 0 || s[2] % k != 0 || s[3] % k != 0) {
        throw DimensionError("avg_pool2d: window " + std::to_string(k) + " does not tile " + to_string(s));
    }
    const std::size_t planes = s[0] * s[1];
    const std::size_t rows = s[2];
    const std::size_t cols = s[3];
    const std::size_t orows = rows / k;
    const std::size_t ocols = cols / k;
    const double inv = 1.0 / static_cast<double>(k * k);
    std::vector<double> y(planes * orows * ocols, 0.0);
    const auto in = x.data();
    for (std::size_t p = 0; p < planes; ++p) {
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) {
                y[(p * orows + r / k) * ocols + c / k] += in[(p * rows + r) * cols + c] * inv;
            }
        }
    }
    return Tensor::from_op({s[0], s[1], orows, ocols}, std::move(y), {x},
                           [planes, rows, cols, orows, ocols, k, inv](Node& self) {
        Node& xn = *self.parents[0];
        for (std::size_t p = 0; p < planes; ++p) {
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t c = 0; c < cols; ++c) {
                    xn.grad[(p * rows + r) * cols + c] += self.grad[(p * orows + r / k) * ocols + c / k] * inv;
                }
            }
        }
    });
}

Tensor upsample_nearest2d(const Tensor& x, std::size_t factor) {
    require_rank(x, 4, "upsample_nearest2d");
    if (factor == 0) throw DimensionError("upsample_nearest2d: factor must be positive");
    const auto& s = x.shape();
    const std::size_t planes = s[0] * s[1];
    const std::size_t rows = s[2];
    const std::size_t cols = s[3];
    const std::size_t orows = rows * factor;
    const std::size_t ocols = cols * factor;
    std::vector<double> y(planes * orows * ocols);
    const auto in = x.data();
    for (std::size_t p = 0; p < planes; ++p) {
        for (std::size_t r = 0; r < orows; ++r) {
            for (std::size_t c = 0; c < ocols; ++c) {
                y[(p * orows + r) * ocols + c] = in[(p * rows + r / factor) * cols + c / factor];
            }
        }
    }
    return Tensor::from_op({s[0], s[1], orows, ocols}, std::move(y), {x},
                           [planes, rows, cols, orows, ocols, factor](Node& self) {
        Node& xn = *self.parents[0];
        for (std::size_t p = 0; p < planes; ++p) {
            for (std::size_t r = 0; r < orows; ++r) {
                for (std::size_t c = 0; c < ocols; ++c) {
                    xn.grad[(p * rows + r / factor) * cols + c / factor] += self.grad[(p * orows + r) * ocols + c];
                }
            }
        }
    });
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    std::vector<double> y(a.size());
    const auto av = a.data();
    const auto bv = b.data();
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] + bv[i];
    return Tensor::from_op(a.shape(), std::move(y), {a, b}, [](Node& self) {
        for (auto& p : self.parents) {
            if (!p->requires_grad) continue;
            for (std::size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i];
        }
    });
}

Tensor add_channel_broadcast(const Tensor& x, const Tensor& y) {
    require_rank(x, 4, "add_channel_broadcast");
    require_rank(y, 4, "add_channel_broadcast");
    const auto& s = x.shape();
    const auto& t = y.shape();
    if (t[0] != s[0] || t[1] != 1 || t[2] != s[2] || t[3] != s[3]) {
        throw DimensionError("add_channel_broadcast: cannot broadcast " + to_string(t) + " onto " + to_string(s));
    }
    const std::size_t batch = s[0];
    const std::size_t ch = s[1];
    const std::size_t hw = s[2] * s[3];
    std::vector<double> out(x.data().begin(), x.data().end());
    const auto yv = y.data();
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t c = 0; c < ch; ++c) {
            for (std::size_t i = 0; i < hw; ++i) out[(b * ch + c) * hw + i] += yv[b * hw + i];
        }
    }
    return Tensor::from_op(s, std::move(out), {x, y}, [batch, ch, hw](Node& self) {
        Node& xn = *self.parents[0];
        Node& yn = *self.parents[1];
        for (std::size_t b = 0; b < batch; ++b) {
            for (std::size_t c = 0; c < ch; ++c) {
                for (std::size_t i = 0; i < hw; ++i) {
                    const double g = self.grad[(b * ch + c) * hw + i];
                    if (xn.requires_grad) xn.grad[(b * ch + c) * hw + i] += g;
                    if (yn.requires_grad) yn.grad[b * hw + i] += g;
                }
            }
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    std::vector<double> y(a.size());
    const auto av = a.data();
    const auto bv = b.data();
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] * bv[i];
    return Tensor::from_op(a.shape(), std::move(y), {a, b}, [](Node& self) {
        Node& an = *self.parents[0];
        Node& bn = *self.parents[1];
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            if (an.requires_grad) an.grad[i] += self.grad[i] * bn.value[i];
            if (bn.requires_grad) bn.grad[i] += self.grad[i] * an.value[i];
        }
    });
}

Tensor reshape(const Tensor& x, Shape shape) {
    if (numel(shape) != x.size()) {
        throw DimensionError("reshape: cannot view " + to_string(x.shape()) + " as " + to_string(shape));
    }
    std::vector<double> y(x.data().begin(), x.data().end());
    return Tensor::from_op(std::move(shape), std::move(y), {x}, [](Node& self) {
        Node& xn = *self.parents[0];
        for (std::size_t i = 0; i < self.grad.size(); ++i) xn.grad[i] += self.grad[i];
    });
}

Tensor sum(const Tensor& x) {
    double s = 0.0;
    for (double v : x.data()) s += v;
    return Tensor::from_op({}, {s}, {x}, [](Node& self) {
        Node& xn = *self.parents[0];
        for (double& g : xn.grad) g += self.grad[0];
    });
}

Tensor mean(const Tensor& x) {
    if (x.size() == 0) throw DimensionError("mean of an empty tensor");
    const double inv = 1.0 / static_cast<double>(x.size());
    double s = 0.0;
    for (double v : x.data()) s += v;
    return Tensor::from_op({}, {s * inv}, {x}, [inv](Node& self) {
        Node& xn = *self.parents[0];
        for (double& g : xn.grad) g += self.grad[0] * inv;
    });
}

Tensor external_objective(const Tensor& x, const ExternalFunction& fn) {
    auto result = fn(x.data(), x.shape());
    if (result.grad.size() != x.size()) {
        throw DimensionError("external_objective: gradient has " + std::to_string(result.grad.size()) +
                             " entries for an input of " + std::to_string(x.size()));
    }
    return Tensor::from_op({}, {result.value}, {x}, [grad = std::move(result.grad)](Node& self) {
        Node& xn = *self.parents[0];
        for (std::size_t i = 0; i < grad.size(); ++i) xn.grad[i] += self.grad[0] * grad[i];
    });
}

}  // namespace pen::nn
