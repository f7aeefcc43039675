// Copyright 2026 The infer-bev Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "infer/autodiff/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

namespace infer::ad {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
using NodePtr = std::shared_ptr<Node<T>>;

template <typename T>
void require_rank(const Tensor<T>& t, std::size_t rank, const char* op, const char* what) {
  if (!t.defined()) {
    throw ShapeError(std::string(op) + ": " + what + " is undefined");
  }
  if (t.shape().size() != rank) {
    throw ShapeError(std::string(op) + ": " + what + " must have rank " + std::to_string(rank) + ", got " +
                     shape_string(t.shape()));
  }
}

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

struct ConvGeometry {
  std::size_t channels, height, width, kh, kw, stride, pad, out_h, out_w;

  [[nodiscard]] std::size_t patch() const { return channels * kh * kw; }
  [[nodiscard]] std::size_t pixels() const { return out_h * out_w; }
};

// Per-thread scratch buffers, grown on demand and reused across calls. Contents are
// overwritten before use. Every operand handed to Eigen lives here: its vectorized
// kernels peel unaligned heads at runtime, so operands at varying heap alignments
// would change the summation order from one run to the next.
template <typename T>
T* scratch(std::size_t slot, std::size_t count) {
  thread_local std::vector<T, Eigen::aligned_allocator<T>> buffers[5];
  auto& b = buffers[slot];
  if (b.size() < count) {
    b.resize(count);
  }
  return b.data();
}

template <typename T>
const T* aligned_copy(std::size_t slot, const T* src, std::size_t count) {
  T* dst = scratch<T>(slot, count);
  std::copy(src, src + count, dst);
  return dst;
}

struct OutputSpan {
  std::size_t lo;
  std::size_t hi;
};

// Output columns whose stride-1 tap at kernel column j falls inside the input row.
OutputSpan stride1_span(std::size_t j, std::size_t pad, std::size_t width, std::size_t out_w) {
  const std::size_t lo = std::min(out_w, pad > j ? pad - j : 0);
  const std::size_t hi = width + pad >= j ? std::min(out_w, width + pad - j) : 0;
  return {lo, std::max(lo, hi)};
}

template <typename T>
void im2col(const T* x, const ConvGeometry& g, T* col) {
  const auto h = static_cast<std::ptrdiff_t>(g.height);
  const auto w = static_cast<std::ptrdiff_t>(g.width);
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t i = 0; i < g.kh; ++i) {
      for (std::size_t j = 0; j < g.kw; ++j) {
        T* row = col + ((c * g.kh + i) * g.kw + j) * g.pixels();
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const auto y = static_cast<std::ptrdiff_t>(oy * g.stride + i) - static_cast<std::ptrdiff_t>(g.pad);
          T* dst = row + oy * g.out_w;
          if (y < 0 || y >= h) {
            std::fill(dst, dst + g.out_w, T{0});
            continue;
          }
          const T* src = x + (c * g.height + static_cast<std::size_t>(y)) * g.width;
          if (g.stride == 1) {
            const auto r = stride1_span(j, g.pad, g.width, g.out_w);
            std::fill(dst, dst + r.lo, T{0});
            std::copy(src + (r.lo + j - g.pad), src + (r.hi + j - g.pad), dst + r.lo);
            std::fill(dst + r.hi, dst + g.out_w, T{0});
            continue;
          }
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const auto xx = static_cast<std::ptrdiff_t>(ox * g.stride + j) - static_cast<std::ptrdiff_t>(g.pad);
            dst[ox] = (xx < 0 || xx >= w) ? T{0} : src[xx];
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* col, const ConvGeometry& g, T* dx) {
  const auto h = static_cast<std::ptrdiff_t>(g.height);
  const auto w = static_cast<std::ptrdiff_t>(g.width);
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t i = 0; i < g.kh; ++i) {
      for (std::size_t j = 0; j < g.kw; ++j) {
        const T* row = col + ((c * g.kh + i) * g.kw + j) * g.pixels();
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const auto y = static_cast<std::ptrdiff_t>(oy * g.stride + i) - static_cast<std::ptrdiff_t>(g.pad);
          if (y < 0 || y >= h) {
            continue;
          }
          const T* src = row + oy * g.out_w;
          T* dst = dx + (c * g.height + static_cast<std::size_t>(y)) * g.width;
          if (g.stride == 1) {
            const auto r = stride1_span(j, g.pad, g.width, g.out_w);
            T* d = dst + (r.lo + j - g.pad);
            for (std::size_t ox = r.lo; ox < r.hi; ++ox) {
              *d++ += src[ox];
            }
            continue;
          }
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const auto xx = static_cast<std::ptrdiff_t>(ox * g.stride + j) - static_cast<std::ptrdiff_t>(g.pad);
            if (xx >= 0 && xx < w) {
              dst[xx] += src[ox];
            }
          }
        }
      }
    }
  }
}

// Output range [lo, hi) whose tap at kernel offset k lands inside an input of length n (stride 1).
template <typename T, typename Fwd, typename Deriv>
Tensor<T> unary(Tape<T>& tape, const Tensor<T>& x, Fwd fwd, Deriv deriv_from_in_out) {
  const auto in = x.value();
  std::vector<T> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    out[i] = fwd(in[i]);
  }
  std::function<void(Node<T>&)> bw;
  if (tape.needs_record({&x})) {
    bw = [xn = x.node_ptr(), deriv_from_in_out](Node<T>& self) {
      T* gx = xn->grad_buffer();
      for (std::size_t i = 0; i < self.value.size(); ++i) {
        gx[i] += self.grad[i] * deriv_from_in_out(xn->value[i], self.value[i]);
      }
    };
  }
  return tape.emit(x.shape(), std::move(out), std::move(bw));
}

template <typename T>
T sigmoid_scalar(T v) {
  if (v >= T{0}) {
    return T{1} / (T{1} + std::exp(-v));
  }
  const T e = std::exp(v);
  return e / (T{1} + e);
}

/// Aligned-corner source index and weight for one output coordinate.
struct LerpTap {
  std::size_t lo;
  std::size_t hi;
  double frac;
};

std::vector<LerpTap> aligned_corner_taps(std::size_t in) {
  const std::size_t out = in * 2;
  std::vector<LerpTap> taps(out);
  const double scale = in > 1 ? static_cast<double>(in - 1) / static_cast<double>(out - 1) : 0.0;
  for (std::size_t o = 0; o < out; ++o) {
    const double pos = static_cast<double>(o) * scale;
    const auto lo = std::min(static_cast<std::size_t>(pos), in - 1);
    taps[o] = LerpTap{lo, std::min(lo + 1, in - 1), pos - static_cast<double>(lo)};
  }
  return taps;
}

}  // namespace

template <typename T>
Tensor<T> conv2d(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                 std::size_t stride, std::size_t pad) {
  require_rank(x, 4, "conv2d", "input");
  require_rank(weight, 4, "conv2d", "weight");
  if (stride == 0) {
    throw ShapeError("conv2d: stride must be positive");
  }
  const std::size_t n = x.dim(0);
  const std::size_t filters = weight.dim(0);
  if (weight.dim(1) != x.dim(1)) {
    throw ShapeError("conv2d: input has " + std::to_string(x.dim(1)) + " channels but weight " +
                     shape_string(weight.shape()) + " expects " + std::to_string(weight.dim(1)));
  }
  if (bias.defined() && (bias.shape().size() != 1 || bias.dim(0) != filters)) {
    throw ShapeError("conv2d: bias " + shape_string(bias.shape()) + " does not match " + std::to_string(filters) +
                     " filters");
  }
  const std::size_t kh = weight.dim(2);
  const std::size_t kw = weight.dim(3);
  if (x.dim(2) + 2 * pad < kh || x.dim(3) + 2 * pad < kw) {
    throw ShapeError("conv2d: kernel " + shape_string(weight.shape()) + " larger than padded input " +
                     shape_string(x.shape()));
  }
  const ConvGeometry g{x.dim(1),
                       x.dim(2),
                       x.dim(3),
                       kh,
                       kw,
                       stride,
                       pad,
                       (x.dim(2) + 2 * pad - kh) / stride + 1,
                       (x.dim(3) + 2 * pad - kw) / stride + 1};

  std::vector<T> out(n * filters * g.pixels());
  T* col = scratch<T>(0, g.patch() * g.pixels());
  const Eigen::Map<const RowMat<T>> w(aligned_copy<T>(2, weight.value().data(), filters * g.patch()),
                                      static_cast<Eigen::Index>(filters), static_cast<Eigen::Index>(g.patch()));
  T* result = scratch<T>(3, filters * g.pixels());
  const std::size_t in_stride = g.channels * g.height * g.width;
  for (std::size_t b = 0; b < n; ++b) {
    im2col(x.value().data() + b * in_stride, g, col);
    const Eigen::Map<const RowMat<T>> cm(col, static_cast<Eigen::Index>(g.patch()),
                                         static_cast<Eigen::Index>(g.pixels()));
    Eigen::Map<RowMat<T>> om(result, static_cast<Eigen::Index>(filters), static_cast<Eigen::Index>(g.pixels()));
    om.noalias() = w * cm;
    if (bias.defined()) {
      for (std::size_t f = 0; f < filters; ++f) {
        om.row(static_cast<Eigen::Index>(f)).array() += bias.value()[f];
      }
    }
    std::copy(result, result + filters * g.pixels(), out.data() + b * filters * g.pixels());
  }

  std::function<void(Node<T>&)> bw;
  if (tape.needs_record({&x, &weight, &bias})) {
    bw = [xn = x.node_ptr(), wn = weight.node_ptr(), bn = bias.node_ptr(), g, n, filters, in_stride](Node<T>& self) {
      T* col = scratch<T>(0, g.patch() * g.pixels());
      T* dcol = scratch<T>(1, g.patch() * g.pixels());
      const Eigen::Map<const RowMat<T>> w(aligned_copy<T>(2, wn->value.data(), filters * g.patch()),
                                          static_cast<Eigen::Index>(filters), static_cast<Eigen::Index>(g.patch()));
      for (std::size_t b = 0; b < n; ++b) {
        const Eigen::Map<const RowMat<T>> dout(
            aligned_copy<T>(3, self.grad.data() + b * filters * g.pixels(), filters * g.pixels()),
            static_cast<Eigen::Index>(filters), static_cast<Eigen::Index>(g.pixels()));
        if (wn->requires_grad) {
          im2col(xn->value.data() + b * in_stride, g, col);
          const Eigen::Map<const RowMat<T>> cm(col, static_cast<Eigen::Index>(g.patch()),
                                               static_cast<Eigen::Index>(g.pixels()));
          T* dw_buf = scratch<T>(4, filters * g.patch());
          Eigen::Map<RowMat<T>> dw(dw_buf, static_cast<Eigen::Index>(filters), static_cast<Eigen::Index>(g.patch()));
          dw.noalias() = dout * cm.transpose();
          T* acc = wn->grad_buffer();
          for (std::size_t i = 0; i < filters * g.patch(); ++i) {
            acc[i] += dw_buf[i];
          }
        }
        if (bn && bn->requires_grad) {
          T* db = bn->grad_buffer();
          for (std::size_t f = 0; f < filters; ++f) {
            db[f] += dout.row(static_cast<Eigen::Index>(f)).sum();
          }
        }
        if (xn->requires_grad) {
          Eigen::Map<RowMat<T>> dc(dcol, static_cast<Eigen::Index>(g.patch()),
                                   static_cast<Eigen::Index>(g.pixels()));
          dc.noalias() = w.transpose() * dout;
          col2im_add(dcol, g, xn->grad_buffer() + b * in_stride);
        }
      }
    };
  }
  return tape.emit(Shape{n, filters, g.out_h, g.out_w}, std::move(out), std::move(bw));
}

template <typename T>
Tensor<T> maxpool2(Tape<T>& tape, const Tensor<T>& x) {
  require_rank(x, 4, "maxpool2", "input");
  const std::size_t h = x.dim(2);
  const std::size_t w = x.dim(3);
  if (h % 2 != 0 || w % 2 != 0) {
    throw ShapeError("maxpool2: spatial dims must be even, got " + shape_string(x.shape()));
  }
  const std::size_t planes = x.dim(0) * x.dim(1);
  const std::size_t oh = h / 2;
  const std::size_t ow = w / 2;
  std::vector<T> out(planes * oh * ow);
  std::vector<std::size_t> source(out.size());
  const T* in = x.value().data();
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t r = 0; r < oh; ++r) {
      for (std::size_t c = 0; c < ow; ++c) {
        const std::size_t base = p * h * w + 2 * r * w + 2 * c;
        const std::size_t cand[4] = {base, base + 1, base + w, base + w + 1};
        std::size_t best = cand[0];
        for (int k = 1; k < 4; ++k) {
          if (in[cand[k]] > in[best]) {
            best = cand[k];
          }
        }
        const std::size_t o = (p * oh + r) * ow + c;
        out[o] = in[best];
        source[o] = best;
      }
    }
  }
  std::function<void(Node<T>&)> bw;
  if (tape.needs_record({&x})) {
    bw = [xn = x.node_ptr(), source = std::move(source)](Node<T>& self) {
      T* gx = xn->grad_buffer();
      for (std::size_t o = 0; o < source.size(); ++o) {
        gx[source[o]] += self.grad[o];
      }
    };
  }
  return tape.emit(Shape{x.dim(0), x.dim(1), oh, ow}, std::move(out), std::move(bw));
}

template <typename T>
Tensor<T> bilinear_up2(Tape<T>& tape, const Tensor<T>& x) {
  require_rank(x, 4, "bilinear_up2", "input");
  const std::size_t h = x.dim(2);
  const std::size_t w = x.dim(3);
  const std::size_t planes = x.dim(0) * x.dim(1);
  const auto rows = aligned_corner_taps(h);
  const auto cols = aligned_corner_taps(w);
  const std::size_t oh = 2 * h;
  const std::size_t ow = 2 * w;
  std::vector<T> out(planes * oh * ow);
  const T* in = x.value().data();
  for (std::size_t p = 0; p < planes; ++p) {
    const T* src = in + p * h * w;
    T* dst = out.data() + p * oh * ow;
    for (std::size_t r = 0; r < oh; ++r) {
      const auto& tr = rows[r];
      const T fr = static_cast<T>(tr.frac);
      for (std::size_t c = 0; c < ow; ++c) {
        const auto& tc = cols[c];
        const T fc = static_cast<T>(tc.frac);
        const T top = src[tr.lo * w + tc.lo] * (T{1} - fc) + src[tr.lo * w + tc.hi] * fc;
        const T bottom = src[tr.hi * w + tc.lo] * (T{1} - fc) + src[tr.hi * w + tc.hi] * fc;
        dst[r * ow + c] = top * (T{1} - fr) + bottom * fr;
      }
    }
  }
  std::function<void(Node<T>&)> bw;
  if (tape.needs_record({&x})) {
    bw = [xn = x.node_ptr(), rows, cols, planes, h, w, oh, ow](Node<T>& self) {
      T* gx = xn->grad_buffer();
      for (std::size_t p = 0; p < planes; ++p) {
        T* dsrc = gx + p * h * w;
        const T* gout = self.grad.data() + p * oh * ow;
        for (std::size_t r = 0; r < oh; ++r) {
          const auto& tr = rows[r];
          const T fr = static_cast<T>(tr.frac);
          for (std::size_t c = 0; c < ow; ++c) {
            const auto& tc = cols[c];
            const T fc = static_cast<T>(tc.frac);
            const T g = gout[r * ow + c];
            dsrc[tr.lo * w + tc.lo] += g * (T{1} - fr) * (T{1} - fc);
            dsrc[tr.lo * w + tc.hi] += g * (T{1} - fr) * fc;
            dsrc[tr.hi * w + tc.lo] += g * fr * (T{1} - fc);
            dsrc[tr.hi * w + tc.hi] += g * fr * fc;
          }
        }
      }
    };
  }
  return tape.emit(Shape{x.dim(0), x.dim(1), oh, ow}, std::move(out), std::move(bw));
}

template <typename T>
Tensor<T> relu(Tape<T>& tape, const Tensor<T>& x) {
  return unary(
      tape, x, [](T v) { return v > T{0} ? v : T{0}; }, [](T in, T) { return in > T{0} ? T{1} : T{0}; });
}

template <typename T>
Tensor<T> sigmoid(Tape<T>& tape, const Tensor<T>& x) {
  return unary(tape, x, sigmoid_scalar<T>, [](T, T out) { return out * (T{1} - out); });
}

template <typename T>
Tensor<T> tanh(Tape<T>& tape, const Tensor<T>& x) {
  return unary(
      tape, x, [](T v) { return std::tanh(v); }, [](T, T out) { return T{1} - out * out; });
}

template <typename T>
Tensor<T> add(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "add");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = a.value()[i] + b.value()[i];
  }
  std::function<void(Node<T>&)> bw;
  if (tape.needs_record({&a, &b})) {
    bw = [an = a.node_ptr(), bn = b.node_ptr()](Node<T>& self) {
      for (auto* in : {an.get(), bn.get()}) {
        if (in->requires_grad) {
          T* g = in->grad_buffer();
          for (std::size_t i = 0; i < self.grad.size(); ++i) {
            g[i] += self.grad[i];
          }
        }
      }
    };
  }
  return tape.emit(a.shape(), std::move(out), std::move(bw));
}

template <typename T>
Tensor<T> mul(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "mul");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = a.value()[i] * b.value()[i];
  }
  std::function<void(Node<T>&)> bw;
  if (tape.needs_record({&a, &b})) {
    bw = [an = a.node_ptr(), bn = b.node_ptr()](Node<T>& self) {
      if (an->requires_grad) {
        T* g = an->grad_buffer();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
          g[i] += self.grad[i] * bn->value[i];
        }
      }
      if (bn->requires_grad) {
        T* g = bn->grad_buffer();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
          g[i] += self.grad[i] * an->value[i];
        }
      }
    };
  }
  return tape.emit(a.shape(), std::move(out), std::move(bw));
}

template <typename T>
Tensor<T> scale(Tape<T>& tape, const Tensor<T>& a, T factor) {
  return unary(
      tape, a, [factor](T v) { return v * factor; }, [factor](T, T) { return factor; });
}

template <typename T>
Tensor<T> concat_channels(Tape<T>& tape, const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) {
    throw ShapeError("concat_channels: no inputs");
  }
  for (const auto& p : parts) {
    require_rank(p, 4, "concat_channels", "input");
    if (p.dim(0) != parts[0].dim(0) || p.dim(2) != parts[0].dim(2) || p.dim(3) != parts[0].dim(3)) {
      throw ShapeError("concat_channels: " + shape_string(p.shape()) + " incompatible with " +
                       shape_string(parts[0].shape()));
    }
  }
  const std::size_t n = parts[0].dim(0);
  const std::size_t plane = parts[0].dim(2) * parts[0].dim(3);
  std::size_t total = 0;
  for (const auto& p : parts) {
    total += p.dim(1);
  }
  std::vector<T> out(n * total * plane);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t block = p.dim(1) * plane;
    for (std::size_t b = 0; b < n; ++b) {
      std::copy_n(p.value().data() + b * block, block, out.data() + (b * total + offset) * plane);
    }
    offset += p.dim(1);
  }
  bool record = false;
  for (const auto& p : parts) {
    record = record || tape.needs_record({&p});
  }
  std::function<void(Node<T>&)> bw;
  if (record) {
    std::vector<NodePtr<T>> nodes;
    for (const auto& p : parts) {
      nodes.push_back(p.node_ptr());
    }
    bw = [nodes = std::move(nodes), n, total, plane](Node<T>& self) {
      std::size_t off = 0;
      for (const auto& in : nodes) {
        const std::size_t ch = in->shape[1];
        if (in->requires_grad) {
          T* g = in->grad_buffer();
          for (std::size_t b = 0; b < n; ++b) {
            const T* src = self.grad.data() + (b * total + off) * plane;
            T* dst = g + b * ch * plane;
            for (std::size_t i = 0; i < ch * plane; ++i) {
              dst[i] += src[i];
            }
          }
        }
        off += ch;
      }
    };
  }
  return tape.emit(Shape{n, total, parts[0].dim(2), parts[0].dim(3)}, std::move(out), std::move(bw));
}

template <typename T>
Tensor<T> slice_channels(Tape<T>& tape, const Tensor<T>& x, std::size_t begin, std::size_t count) {
  require_rank(x, 4, "slice_channels", "input");
  const std::size_t channels = x.dim(1);
  if (begin + count > channels || count == 0) {
    throw ShapeError("slice_channels: range [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                     ") outside " + std::to_string(channels) + " channels");
  }
  const std::size_t n = x.dim(0);
  const std::size_t plane = x.dim(2) * x.dim(3);
  std::vector<T> out(n * count * plane);
  for (std::size_t b = 0; b < n; ++b) {
    std::copy_n(x.value().data() + (b * channels + begin) * plane, count * plane, out.data() + b * count * plane);
  }
  std::function<void(Node<T>&)> bw;
  if (tape.needs_record({&x})) {
    bw = [xn = x.node_ptr(), n, channels, begin, count, plane](Node<T>& self) {
      T* g = xn->grad_buffer();
      for (std::size_t b = 0; b < n; ++b) {
        const T* src = self.grad.data() + b * count * plane;
        T* dst = g + (b * channels + begin) * plane;
        for (std::size_t i = 0; i < count * plane; ++i) {
          dst[i] += src[i];
        }
      }
    };
  }
  return tape.emit(Shape{n, count, x.dim(2), x.dim(3)}, std::move(out), std::move(bw));
}

template <typename T>
Tensor<T> sum(Tape<T>& tape, const Tensor<T>& x) {
  T total{0};
  for (const T v : x.value()) {
    total += v;
  }
  std::function<void(Node<T>&)> bw;
  if (tape.needs_record({&x})) {
    bw = [xn = x.node_ptr()](Node<T>& self) {
      T* g = xn->grad_buffer();
      for (std::size_t i = 0; i < xn->value.size(); ++i) {
        g[i] += self.grad[0];
      }
    };
  }
  return tape.emit(Shape{}, std::vector<T>{total}, std::move(bw));
}

template <typename T>
Tensor<T> mse_loss(Tape<T>& tape, const Tensor<T>& pred, const Tensor<T>& target) {
  require_same_shape(pred, target, "mse_loss");
  const std::size_t count = pred.numel();
  T acc{0};
  for (std::size_t i = 0; i < count; ++i) {
    const T d = pred.value()[i] - target.value()[i];
    acc += d * d;
  }
  const T inv = T{1} / static_cast<T>(count);
  std::function<void(Node<T>&)> bw;
  if (tape.needs_record({&pred, &target})) {
    bw = [pn = pred.node_ptr(), tn = target.node_ptr(), inv](Node<T>& self) {
      const T up = self.grad[0] * T{2} * inv;
      if (pn->requires_grad) {
        T* g = pn->grad_buffer();
        for (std::size_t i = 0; i < pn->value.size(); ++i) {
          g[i] += up * (pn->value[i] - tn->value[i]);
        }
      }
      if (tn->requires_grad) {
        T* g = tn->grad_buffer();
        for (std::size_t i = 0; i < tn->value.size(); ++i) {
          g[i] -= up * (pn->value[i] - tn->value[i]);
        }
      }
    };
  }
  return tape.emit(Shape{}, std::vector<T>{acc * inv}, std::move(bw));
}

template <typename T>
Tensor<T> safety_loss(Tape<T>& tape, const Tensor<T>& pred, const Tensor<T>& obstacle_mask) {
  require_same_shape(pred, obstacle_mask, "safety_loss");
  for (const T m : obstacle_mask.value()) {
    if (m < T{0}) {
      throw std::invalid_argument("safety_loss: obstacle mask must be non-negative");
    }
  }
  T acc{0};
  for (std::size_t i = 0; i < pred.numel(); ++i) {
    const T v = obstacle_mask.value()[i] * pred.value()[i];
    acc += v * v;
  }
  const T norm = std::sqrt(acc);
  std::function<void(Node<T>&)> bw;
  if (tape.needs_record({&pred})) {
    bw = [pn = pred.node_ptr(), mn = obstacle_mask.node_ptr(), norm](Node<T>& self) {
      if (norm <= T{0}) {
        return;
      }
      const T up = self.grad[0] / norm;
      T* g = pn->grad_buffer();
      for (std::size_t i = 0; i < pn->value.size(); ++i) {
        const T m = mn->value[i];
        g[i] += up * m * m * pn->value[i];
      }
    };
  }
  return tape.emit(Shape{}, std::vector<T>{norm}, std::move(bw));
}

template <typename T>
ConvLstmState<T> zero_lstm_state(std::size_t batch, std::size_t filters, std::size_t height, std::size_t width) {
  return ConvLstmState<T>{Tensor<T>::zeros(Shape{batch, filters, height, width}),
                          Tensor<T>::zeros(Shape{batch, filters, height, width})};
}

template <typename T>
ConvLstmState<T> conv_lstm_step(Tape<T>& tape, const Tensor<T>& x, const ConvLstmState<T>& state,
                                const ConvLstmWeights<T>& weights) {
  require_rank(x, 4, "conv_lstm_step", "input");
  require_rank(state.hidden, 4, "conv_lstm_step", "hidden state");
  require_same_shape(state.hidden, state.cell, "conv_lstm_step (hidden vs cell)");
  const std::size_t filters = weights.filters();
  if (state.hidden.dim(1) != filters) {
    throw ShapeError("conv_lstm_step: state has " + std::to_string(state.hidden.dim(1)) +
                     " channels, weights expect " + std::to_string(filters));
  }
  if (state.hidden.dim(0) != x.dim(0) || state.hidden.dim(2) != x.dim(2) || state.hidden.dim(3) != x.dim(3)) {
    throw ShapeError("conv_lstm_step: state " + shape_string(state.hidden.shape()) +
                     " spatially incompatible with input " + shape_string(x.shape()));
  }
  const std::size_t k = weights.input_weight.dim(2);
  if (k % 2 == 0) {
    throw ShapeError("conv_lstm_step: kernel must be odd for same padding");
  }
  const std::size_t pad = k / 2;
  const Tensor<T> gates =
      add(tape, conv2d(tape, x, weights.input_weight, weights.bias, 1, pad),
          conv2d(tape, state.hidden, weights.hidden_weight, Tensor<T>{}, 1, pad));
  const Tensor<T> i = sigmoid(tape, slice_channels(tape, gates, 0, filters));
  const Tensor<T> f = sigmoid(tape, slice_channels(tape, gates, filters, filters));
  const Tensor<T> o = sigmoid(tape, slice_channels(tape, gates, 2 * filters, filters));
  const Tensor<T> g = tanh(tape, slice_channels(tape, gates, 3 * filters, filters));
  const Tensor<T> c = add(tape, mul(tape, f, state.cell), mul(tape, i, g));
  const Tensor<T> h = mul(tape, o, tanh(tape, c));
  return ConvLstmState<T>{h, c};
}

#define INFER_AD_INSTANTIATE(T)                                                                                  \
  template Tensor<T> conv2d(Tape<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, std::size_t,       \
                            std::size_t);                                                                       \
  template Tensor<T> maxpool2(Tape<T>&, const Tensor<T>&);                                                      \
  template Tensor<T> bilinear_up2(Tape<T>&, const Tensor<T>&);                                                  \
  template Tensor<T> relu(Tape<T>&, const Tensor<T>&);                                                          \
  template Tensor<T> sigmoid(Tape<T>&, const Tensor<T>&);                                                       \
  template Tensor<T> tanh(Tape<T>&, const Tensor<T>&);                                                          \
  template Tensor<T> add(Tape<T>&, const Tensor<T>&, const Tensor<T>&);                                         \
  template Tensor<T> mul(Tape<T>&, const Tensor<T>&, const Tensor<T>&);                                         \
  template Tensor<T> scale(Tape<T>&, const Tensor<T>&, T);                                                      \
  template Tensor<T> concat_channels(Tape<T>&, const std::vector<Tensor<T>>&);                                  \
  template Tensor<T> slice_channels(Tape<T>&, const Tensor<T>&, std::size_t, std::size_t);                      \
  template Tensor<T> sum(Tape<T>&, const Tensor<T>&);                                                           \
  template Tensor<T> mse_loss(Tape<T>&, const Tensor<T>&, const Tensor<T>&);                                    \
  template Tensor<T> safety_loss(Tape<T>&, const Tensor<T>&, const Tensor<T>&);                                 \
  template ConvLstmState<T> zero_lstm_state(std::size_t, std::size_t, std::size_t, std::size_t);                \
  template ConvLstmState<T> conv_lstm_step(Tape<T>&, const Tensor<T>&, const ConvLstmState<T>&,                 \
                                           const ConvLstmWeights<T>&);

INFER_AD_INSTANTIATE(float)
INFER_AD_INSTANTIATE(double)

#undef INFER_AD_INSTANTIATE

}  // namespace infer::ad
