// Copyright 2026 The Melanoscope Authors. All Rights Reserved.
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

// Float32 kernels for the ONNX interpreter. Layouts follow the operator
// definitions: activations are NCHW, Conv weights are [M, C/group, kH, kW].

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>
#include <unordered_map>

#include <Eigen/Core>

#include "absl/strings/str_cat.h"
#include "onnx.pb.h"
#include "onnx_runtime.h"

namespace melanoscope::onnxrt {
namespace {

using RowMatrix =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMap = Eigen::Map<const RowMatrix>;

// Upper bound on im2col scratch, in floats (64 MiB).
constexpr int64_t kIm2ColBudget = int64_t{16} << 20;

const onnx::AttributeProto* FindAttr(const onnx::NodeProto& node,
                                     const char* name) {
  for (const auto& a : node.attribute()) {
    if (a.name() == name) return &a;
  }
  return nullptr;
}

int64_t GetInt(const onnx::NodeProto& node, const char* name, int64_t def) {
  const auto* a = FindAttr(node, name);
  return a ? a->i() : def;
}

float GetFloat(const onnx::NodeProto& node, const char* name, float def) {
  const auto* a = FindAttr(node, name);
  return a ? a->f() : def;
}

std::vector<int64_t> GetInts(const onnx::NodeProto& node, const char* name,
                             std::vector<int64_t> def) {
  const auto* a = FindAttr(node, name);
  if (!a) return def;
  return {a->ints().begin(), a->ints().end()};
}

std::string GetString(const onnx::NodeProto& node, const char* name,
                      const std::string& def) {
  const auto* a = FindAttr(node, name);
  return a ? a->s() : def;
}

absl::Status NeedInputs(const std::vector<const Tensor*>& in, size_t n) {
  if (in.size() < n) {
    return absl::InvalidArgumentError(
        absl::StrCat("expected ", n, " inputs, got ", in.size()));
  }
  for (size_t k = 0; k < n; ++k) {
    if (in[k] == nullptr) {
      return absl::InvalidArgumentError(absl::StrCat("input ", k, " is missing"));
    }
    if (in[k]->type != Tensor::Type::kFloat) {
      return absl::InvalidArgumentError(absl::StrCat("input ", k, " must be float"));
    }
  }
  return absl::OkStatus();
}

absl::Status NeedRank(const Tensor& t, size_t rank, const char* what) {
  if (t.shape.size() != rank) {
    return absl::InvalidArgumentError(absl::StrCat(
        what, " must have rank ", rank, ", got ", ShapeString(t.shape)));
  }
  return absl::OkStatus();
}

// Spatial window parameters shared by Conv and pooling.
struct Window {
  int64_t kh, kw, sh, sw, dh, dw, pt, pl, pb, pr;
};

absl::StatusOr<Window> ReadWindow(const onnx::NodeProto& node, int64_t kh,
                                  int64_t kw, int64_t h, int64_t w) {
  Window win{};
  win.kh = kh;
  win.kw = kw;
  const auto strides = GetInts(node, "strides", {1, 1});
  const auto dil = GetInts(node, "dilations", {1, 1});
  auto pads = GetInts(node, "pads", {0, 0, 0, 0});
  if (strides.size() != 2 || dil.size() != 2 || pads.size() != 4) {
    return absl::UnimplementedError("only 2-D spatial windows are supported");
  }
  win.sh = strides[0];
  win.sw = strides[1];
  win.dh = dil[0];
  win.dw = dil[1];
  if (win.sh <= 0 || win.sw <= 0 || win.dh <= 0 || win.dw <= 0) {
    return absl::InvalidArgumentError("strides and dilations must be positive");
  }
  const std::string auto_pad = GetString(node, "auto_pad", "NOTSET");
  if (auto_pad == "VALID") {
    pads = {0, 0, 0, 0};
  } else if (auto_pad == "SAME_UPPER" || auto_pad == "SAME_LOWER") {
    auto same = [&](int64_t in, int64_t k, int64_t s, int64_t d,
                    int64_t* lo, int64_t* hi) {
      const int64_t out = (in + s - 1) / s;
      const int64_t total =
          std::max<int64_t>(0, (out - 1) * s + (k - 1) * d + 1 - in);
      *lo = auto_pad == "SAME_UPPER" ? total / 2 : total - total / 2;
      *hi = total - *lo;
    };
    same(h, kh, win.sh, win.dh, &pads[0], &pads[2]);
    same(w, kw, win.sw, win.dw, &pads[1], &pads[3]);
  } else if (auto_pad != "NOTSET") {
    return absl::UnimplementedError(absl::StrCat("auto_pad ", auto_pad));
  }
  win.pt = pads[0];
  win.pl = pads[1];
  win.pb = pads[2];
  win.pr = pads[3];
  return win;
}

absl::Status ConvOp(const onnx::NodeProto& node,
                    const std::vector<const Tensor*>& in,
                    std::vector<Tensor>& out) {
  if (auto st = NeedInputs(in, 2); !st.ok()) return st;
  const Tensor& x = *in[0];
  const Tensor& wt = *in[1];
  if (auto st = NeedRank(x, 4, "Conv input"); !st.ok()) return st;
  if (auto st = NeedRank(wt, 4, "Conv weight"); !st.ok()) return st;
  const int64_t n = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3];
  const int64_t m = wt.shape[0], kh = wt.shape[2], kw = wt.shape[3];
  const int64_t group = GetInt(node, "group", 1);
  if (group <= 0 || c % group != 0 || m % group != 0 ||
      wt.shape[1] != c / group) {
    return absl::InvalidArgumentError(absl::StrCat(
        "weight ", ShapeString(wt.shape), " incompatible with input ",
        ShapeString(x.shape), " and group ", group));
  }
  const Tensor* bias = in.size() > 2 ? in[2] : nullptr;
  if (bias && (bias->type != Tensor::Type::kFloat ||
               bias->NumElements() != m)) {
    return absl::InvalidArgumentError("bias length must equal output channels");
  }
  auto win_or = ReadWindow(node, kh, kw, h, w);
  if (!win_or.ok()) return win_or.status();
  const Window win = *win_or;
  const int64_t oh = (h + win.pt + win.pb - win.dh * (kh - 1) - 1) / win.sh + 1;
  const int64_t ow = (w + win.pl + win.pr - win.dw * (kw - 1) - 1) / win.sw + 1;
  if (oh <= 0 || ow <= 0) {
    return absl::InvalidArgumentError("Conv window larger than padded input");
  }

  Tensor y = Tensor::Float({n, m, oh, ow});
  const int64_t cg = c / group;
  const int64_t mg = m / group;
  const int64_t k = cg * kh * kw;
  const int64_t rows_per_block =
      std::clamp<int64_t>(kIm2ColBudget / std::max<int64_t>(1, k * ow), 1, oh);
  std::vector<float> col(static_cast<size_t>(k * rows_per_block * ow));

  for (int64_t b = 0; b < n; ++b) {
    for (int64_t g = 0; g < group; ++g) {
      ConstRowMap wm(wt.f.data() + g * mg * k, mg, k);
      for (int64_t oy0 = 0; oy0 < oh; oy0 += rows_per_block) {
        const int64_t rb = std::min(rows_per_block, oh - oy0);
        const int64_t cols = rb * ow;
        // im2col: row (ci, ky, kx), column (oy, ox).
        for (int64_t ci = 0; ci < cg; ++ci) {
          const float* plane = x.f.data() + ((b * c) + g * cg + ci) * h * w;
          for (int64_t ky = 0; ky < kh; ++ky) {
            for (int64_t kx = 0; kx < kw; ++kx) {
              float* dst = col.data() + ((ci * kh + ky) * kw + kx) * cols;
              for (int64_t r = 0; r < rb; ++r) {
                const int64_t iy = (oy0 + r) * win.sh - win.pt + ky * win.dh;
                float* drow = dst + r * ow;
                if (iy < 0 || iy >= h) {
                  std::fill(drow, drow + ow, 0.0f);
                  continue;
                }
                const float* src = plane + iy * w;
                for (int64_t ox = 0; ox < ow; ++ox) {
                  const int64_t ix = ox * win.sw - win.pl + kx * win.dw;
                  drow[ox] = (ix >= 0 && ix < w) ? src[ix] : 0.0f;
                }
              }
            }
          }
        }
        ConstRowMap cm(col.data(), k, cols);
        Eigen::Map<RowMatrix, 0, Eigen::OuterStride<>> ym(
            y.f.data() + ((b * m + g * mg) * oh + oy0) * ow, mg, cols,
            Eigen::OuterStride<>(oh * ow));
        ym.noalias() = wm * cm;
      }
    }
  }
  if (bias) {
    for (int64_t b = 0; b < n; ++b) {
      for (int64_t mi = 0; mi < m; ++mi) {
        float* p = y.f.data() + (b * m + mi) * oh * ow;
        const float bv = bias->f[mi];
        for (int64_t q = 0; q < oh * ow; ++q) p[q] += bv;
      }
    }
  }
  out[0] = std::move(y);
  return absl::OkStatus();
}

absl::Status PoolOp(const onnx::NodeProto& node,
                    const std::vector<const Tensor*>& in,
                    std::vector<Tensor>& out, bool is_max) {
  if (auto st = NeedInputs(in, 1); !st.ok()) return st;
  const Tensor& x = *in[0];
  if (auto st = NeedRank(x, 4, "pool input"); !st.ok()) return st;
  const auto kernel = GetInts(node, "kernel_shape", {});
  if (kernel.size() != 2) {
    return absl::InvalidArgumentError("kernel_shape must have two entries");
  }
  const int64_t n = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3];
  auto win_or = ReadWindow(node, kernel[0], kernel[1], h, w);
  if (!win_or.ok()) return win_or.status();
  const Window win = *win_or;
  const bool ceil_mode = GetInt(node, "ceil_mode", 0) != 0;
  const bool include_pad = GetInt(node, "count_include_pad", 0) != 0;

  auto out_dim = [&](int64_t size, int64_t pad_lo, int64_t pad_hi, int64_t k,
                     int64_t s, int64_t d) {
    const int64_t span = size + pad_lo + pad_hi - d * (k - 1) - 1;
    int64_t o = (ceil_mode ? (span + s - 1) / s : span / s) + 1;
    // A window may not start in the trailing padding.
    if (ceil_mode && (o - 1) * s >= size + pad_lo) --o;
    return o;
  };
  const int64_t oh = out_dim(h, win.pt, win.pb, win.kh, win.sh, win.dh);
  const int64_t ow = out_dim(w, win.pl, win.pr, win.kw, win.sw, win.dw);
  if (oh <= 0 || ow <= 0) {
    return absl::InvalidArgumentError("pool window larger than padded input");
  }
  Tensor y = Tensor::Float({n, c, oh, ow});
  for (int64_t p = 0; p < n * c; ++p) {
    const float* src = x.f.data() + p * h * w;
    float* dst = y.f.data() + p * oh * ow;
    for (int64_t oy = 0; oy < oh; ++oy) {
      for (int64_t ox = 0; ox < ow; ++ox) {
        float acc = is_max ? -std::numeric_limits<float>::infinity() : 0.0f;
        int64_t count = 0;
        int64_t padded_count = 0;
        for (int64_t ky = 0; ky < win.kh; ++ky) {
          const int64_t iy = oy * win.sh - win.pt + ky * win.dh;
          for (int64_t kx = 0; kx < win.kw; ++kx) {
            const int64_t ix = ox * win.sw - win.pl + kx * win.dw;
            if (iy >= -win.pt && iy < h + win.pb && ix >= -win.pl &&
                ix < w + win.pr) {
              ++padded_count;
            }
            if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
            const float v = src[iy * w + ix];
            acc = is_max ? std::max(acc, v) : acc + v;
            ++count;
          }
        }
        if (!is_max) {
          const int64_t denom = include_pad ? padded_count : count;
          acc = denom > 0 ? acc / static_cast<float>(denom) : 0.0f;
        }
        dst[oy * ow + ox] = acc;
      }
    }
  }
  out[0] = std::move(y);
  return absl::OkStatus();
}

absl::Status MaxPoolOp(const onnx::NodeProto& node,
                       const std::vector<const Tensor*>& in,
                       std::vector<Tensor>& out) {
  if (out.size() > 1) {
    return absl::UnimplementedError("MaxPool indices output");
  }
  return PoolOp(node, in, out, true);
}

absl::Status AveragePoolOp(const onnx::NodeProto& node,
                           const std::vector<const Tensor*>& in,
                           std::vector<Tensor>& out) {
  return PoolOp(node, in, out, false);
}

absl::Status GlobalAveragePoolOp(const onnx::NodeProto& node,
                                 const std::vector<const Tensor*>& in,
                                 std::vector<Tensor>& out) {
  if (auto st = NeedInputs(in, 1); !st.ok()) return st;
  const Tensor& x = *in[0];
  if (x.shape.size() < 3) {
    return absl::InvalidArgumentError("GlobalAveragePool needs rank >= 3");
  }
  std::vector<int64_t> shape = {x.shape[0], x.shape[1]};
  int64_t spatial = 1;
  for (size_t d = 2; d < x.shape.size(); ++d) {
    spatial *= x.shape[d];
    shape.push_back(1);
  }
  Tensor y = Tensor::Float(shape);
  for (int64_t p = 0; p < x.shape[0] * x.shape[1]; ++p) {
    double sum = 0.0;
    for (int64_t q = 0; q < spatial; ++q) sum += x.f[p * spatial + q];
    y.f[p] = static_cast<float>(sum / static_cast<double>(spatial));
  }
  out[0] = std::move(y);
  return absl::OkStatus();
}

absl::Status GemmOp(const onnx::NodeProto& node,
                    const std::vector<const Tensor*>& in,
                    std::vector<Tensor>& out) {
  if (auto st = NeedInputs(in, 2); !st.ok()) return st;
  const Tensor& a = *in[0];
  const Tensor& b = *in[1];
  if (auto st = NeedRank(a, 2, "Gemm A"); !st.ok()) return st;
  if (auto st = NeedRank(b, 2, "Gemm B"); !st.ok()) return st;
  const bool ta = GetInt(node, "transA", 0) != 0;
  const bool tb = GetInt(node, "transB", 0) != 0;
  const float alpha = GetFloat(node, "alpha", 1.0f);
  const float beta = GetFloat(node, "beta", 1.0f);
  ConstRowMap am(a.f.data(), a.shape[0], a.shape[1]);
  ConstRowMap bm(b.f.data(), b.shape[0], b.shape[1]);
  const int64_t m = ta ? a.shape[1] : a.shape[0];
  const int64_t k = ta ? a.shape[0] : a.shape[1];
  const int64_t kb = tb ? b.shape[1] : b.shape[0];
  const int64_t n = tb ? b.shape[0] : b.shape[1];
  if (k != kb) {
    return absl::InvalidArgumentError(absl::StrCat(
        "inner dimensions differ: A ", ShapeString(a.shape), " B ",
        ShapeString(b.shape)));
  }
  Tensor y = Tensor::Float({m, n});
  Eigen::Map<RowMatrix> ym(y.f.data(), m, n);
  if (ta && tb) {
    ym.noalias() = am.transpose() * bm.transpose();
  } else if (ta) {
    ym.noalias() = am.transpose() * bm;
  } else if (tb) {
    ym.noalias() = am * bm.transpose();
  } else {
    ym.noalias() = am * bm;
  }
  if (alpha != 1.0f) ym *= alpha;
  const Tensor* c = in.size() > 2 ? in[2] : nullptr;
  if (c) {
    if (c->type != Tensor::Type::kFloat) {
      return absl::InvalidArgumentError("Gemm C must be float");
    }
    // Unidirectional broadcast of C to [m, n].
    std::vector<int64_t> cs = c->shape;
    while (cs.size() < 2) cs.insert(cs.begin(), 1);
    if (cs.size() != 2 || (cs[0] != 1 && cs[0] != m) ||
        (cs[1] != 1 && cs[1] != n)) {
      return absl::InvalidArgumentError(
          absl::StrCat("Gemm C shape ", ShapeString(c->shape),
                       " does not broadcast to [", m, ",", n, "]"));
    }
    for (int64_t r = 0; r < m; ++r) {
      for (int64_t q = 0; q < n; ++q) {
        const int64_t idx = (cs[0] == 1 ? 0 : r) * cs[1] + (cs[1] == 1 ? 0 : q);
        ym(r, q) += beta * c->f[idx];
      }
    }
  }
  out[0] = std::move(y);
  return absl::OkStatus();
}

absl::Status MatMulOp(const onnx::NodeProto& node,
                      const std::vector<const Tensor*>& in,
                      std::vector<Tensor>& out) {
  if (auto st = NeedInputs(in, 2); !st.ok()) return st;
  const Tensor& a = *in[0];
  const Tensor& b = *in[1];
  if (a.shape.size() < 2 || b.shape.size() != 2) {
    return absl::UnimplementedError(absl::StrCat(
        "MatMul supports [...,M,K] x [K,N], got ", ShapeString(a.shape), " x ",
        ShapeString(b.shape)));
  }
  const int64_t k = a.shape.back();
  if (k != b.shape[0]) {
    return absl::InvalidArgumentError("MatMul inner dimensions differ");
  }
  const int64_t rows = a.NumElements() / k;
  const int64_t n = b.shape[1];
  std::vector<int64_t> shape(a.shape.begin(), a.shape.end() - 1);
  shape.push_back(n);
  Tensor y = Tensor::Float(shape);
  Eigen::Map<RowMatrix> ym(y.f.data(), rows, n);
  ym.noalias() = ConstRowMap(a.f.data(), rows, k) * ConstRowMap(b.f.data(), k, n);
  out[0] = std::move(y);
  return absl::OkStatus();
}

template <typename F>
absl::Status Elementwise(const std::vector<const Tensor*>& in,
                         std::vector<Tensor>& out, F f) {
  if (auto st = NeedInputs(in, 1); !st.ok()) return st;
  Tensor y = *in[0];
  for (float& v : y.f) v = f(v);
  out[0] = std::move(y);
  return absl::OkStatus();
}

absl::Status ReluOp(const onnx::NodeProto&, const std::vector<const Tensor*>& in,
                    std::vector<Tensor>& out) {
  return Elementwise(in, out, [](float v) { return v > 0.0f ? v : 0.0f; });
}

absl::Status SigmoidOp(const onnx::NodeProto&,
                       const std::vector<const Tensor*>& in,
                       std::vector<Tensor>& out) {
  return Elementwise(in, out,
                     [](float v) { return 1.0f / (1.0f + std::exp(-v)); });
}

absl::Status PassThroughOp(const onnx::NodeProto&,
                           const std::vector<const Tensor*>& in,
                           std::vector<Tensor>& out) {
  if (in.empty() || in[0] == nullptr) {
    return absl::InvalidArgumentError("missing input");
  }
  out[0] = *in[0];
  // Dropout's optional mask output: all elements kept.
  for (size_t o = 1; o < out.size(); ++o) {
    out[o] = Tensor::Float(in[0]->shape);
    std::fill(out[o].f.begin(), out[o].f.end(), 1.0f);
  }
  return absl::OkStatus();
}

template <typename F>
absl::Status Broadcast(const std::vector<const Tensor*>& in,
                       std::vector<Tensor>& out, F f) {
  if (auto st = NeedInputs(in, 2); !st.ok()) return st;
  const Tensor& a = *in[0];
  const Tensor& b = *in[1];
  const size_t rank = std::max(a.shape.size(), b.shape.size());
  std::vector<int64_t> as(rank, 1), bs(rank, 1), ys(rank);
  std::copy(a.shape.begin(), a.shape.end(), as.end() - a.shape.size());
  std::copy(b.shape.begin(), b.shape.end(), bs.end() - b.shape.size());
  for (size_t d = 0; d < rank; ++d) {
    if (as[d] != bs[d] && as[d] != 1 && bs[d] != 1) {
      return absl::InvalidArgumentError(absl::StrCat(
          "shapes ", ShapeString(a.shape), " and ", ShapeString(b.shape),
          " do not broadcast"));
    }
    ys[d] = std::max(as[d], bs[d]);
  }
  // Element strides, zero along broadcast dimensions.
  std::vector<int64_t> sa(rank), sb(rank);
  int64_t ra = 1, rb = 1;
  for (size_t d = rank; d-- > 0;) {
    sa[d] = as[d] == 1 ? 0 : ra;
    sb[d] = bs[d] == 1 ? 0 : rb;
    ra *= as[d];
    rb *= bs[d];
  }
  Tensor y = Tensor::Float(ys);
  std::vector<int64_t> idx(rank, 0);
  int64_t ia = 0, ib = 0;
  for (float& v : y.f) {
    v = f(a.f[ia], b.f[ib]);
    for (size_t d = rank; d-- > 0;) {
      ia += sa[d];
      ib += sb[d];
      if (++idx[d] < ys[d]) break;
      ia -= sa[d] * ys[d];
      ib -= sb[d] * ys[d];
      idx[d] = 0;
    }
  }
  out[0] = std::move(y);
  return absl::OkStatus();
}

absl::Status AddOp(const onnx::NodeProto&, const std::vector<const Tensor*>& in,
                   std::vector<Tensor>& out) {
  return Broadcast(in, out, [](float x, float y) { return x + y; });
}

absl::Status SubOp(const onnx::NodeProto&, const std::vector<const Tensor*>& in,
                   std::vector<Tensor>& out) {
  return Broadcast(in, out, [](float x, float y) { return x - y; });
}

absl::Status MulOp(const onnx::NodeProto&, const std::vector<const Tensor*>& in,
                   std::vector<Tensor>& out) {
  return Broadcast(in, out, [](float x, float y) { return x * y; });
}

absl::Status DivOp(const onnx::NodeProto&, const std::vector<const Tensor*>& in,
                   std::vector<Tensor>& out) {
  return Broadcast(in, out, [](float x, float y) { return x / y; });
}

absl::Status FlattenOp(const onnx::NodeProto& node,
                       const std::vector<const Tensor*>& in,
                       std::vector<Tensor>& out) {
  if (auto st = NeedInputs(in, 1); !st.ok()) return st;
  const Tensor& x = *in[0];
  const int64_t rank = static_cast<int64_t>(x.shape.size());
  int64_t axis = GetInt(node, "axis", 1);
  if (axis < 0) axis += rank;
  if (axis < 0 || axis > rank) {
    return absl::InvalidArgumentError(absl::StrCat("Flatten axis ", axis));
  }
  int64_t outer = 1;
  for (int64_t d = 0; d < axis; ++d) outer *= x.shape[d];
  Tensor y = x;
  y.shape = {outer, outer == 0 ? 0 : x.NumElements() / outer};
  out[0] = std::move(y);
  return absl::OkStatus();
}

absl::Status ReshapeOp(const onnx::NodeProto& node,
                       const std::vector<const Tensor*>& in,
                       std::vector<Tensor>& out) {
  if (in.size() < 2 || in[0] == nullptr || in[1] == nullptr ||
      in[1]->type != Tensor::Type::kInt64) {
    return absl::InvalidArgumentError("Reshape needs data and an int64 shape");
  }
  const Tensor& x = *in[0];
  const bool allow_zero = GetInt(node, "allowzero", 0) != 0;
  std::vector<int64_t> shape = in[1]->i;
  int64_t known = 1;
  int infer = -1;
  for (size_t d = 0; d < shape.size(); ++d) {
    if (shape[d] == 0 && !allow_zero) {
      if (d >= x.shape.size()) {
        return absl::InvalidArgumentError("Reshape copies a missing dimension");
      }
      shape[d] = x.shape[d];
    }
    if (shape[d] == -1) {
      if (infer >= 0) {
        return absl::InvalidArgumentError("Reshape has two -1 dimensions");
      }
      infer = static_cast<int>(d);
    } else {
      known *= shape[d];
    }
  }
  if (infer >= 0) {
    if (known == 0 || x.NumElements() % known != 0) {
      return absl::InvalidArgumentError("Reshape cannot infer dimension");
    }
    shape[infer] = x.NumElements() / known;
  }
  Tensor y = x;
  y.shape = shape;
  if (y.NumElements() != x.NumElements()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "cannot reshape ", ShapeString(x.shape), " to ", ShapeString(shape)));
  }
  out[0] = std::move(y);
  return absl::OkStatus();
}

absl::Status SoftmaxOp(const onnx::NodeProto& node,
                       const std::vector<const Tensor*>& in,
                       std::vector<Tensor>& out) {
  if (auto st = NeedInputs(in, 1); !st.ok()) return st;
  const Tensor& x = *in[0];
  const int64_t rank = static_cast<int64_t>(x.shape.size());
  int64_t axis = GetInt(node, "axis", -1);
  if (axis < 0) axis += rank;
  if (axis < 0 || axis >= rank) {
    return absl::InvalidArgumentError(absl::StrCat("Softmax axis ", axis));
  }
  int64_t outer = 1, inner = 1;
  for (int64_t d = 0; d < axis; ++d) outer *= x.shape[d];
  for (int64_t d = axis + 1; d < rank; ++d) inner *= x.shape[d];
  const int64_t len = x.shape[axis];
  Tensor y = x;
  for (int64_t o = 0; o < outer; ++o) {
    for (int64_t q = 0; q < inner; ++q) {
      float* base = y.f.data() + o * len * inner + q;
      float mx = -std::numeric_limits<float>::infinity();
      for (int64_t k = 0; k < len; ++k) mx = std::max(mx, base[k * inner]);
      double sum = 0.0;
      for (int64_t k = 0; k < len; ++k) {
        base[k * inner] = std::exp(base[k * inner] - mx);
        sum += base[k * inner];
      }
      for (int64_t k = 0; k < len; ++k) {
        base[k * inner] = static_cast<float>(base[k * inner] / sum);
      }
    }
  }
  out[0] = std::move(y);
  return absl::OkStatus();
}

absl::Status BatchNormOp(const onnx::NodeProto& node,
                         const std::vector<const Tensor*>& in,
                         std::vector<Tensor>& out) {
  if (auto st = NeedInputs(in, 5); !st.ok()) return st;
  if (out.size() > 1) {
    return absl::UnimplementedError("BatchNormalization training outputs");
  }
  const Tensor& x = *in[0];
  if (x.shape.size() < 2) {
    return absl::InvalidArgumentError("BatchNormalization needs rank >= 2");
  }
  const int64_t n = x.shape[0], c = x.shape[1];
  for (size_t k = 1; k < 5; ++k) {
    if (in[k]->NumElements() != c) {
      return absl::InvalidArgumentError("BatchNormalization parameter length");
    }
  }
  const float eps = GetFloat(node, "epsilon", 1e-5f);
  const int64_t spatial = c == 0 || n == 0 ? 0 : x.NumElements() / (n * c);
  Tensor y = x;
  for (int64_t ci = 0; ci < c; ++ci) {
    const float scale = in[1]->f[ci] / std::sqrt(in[4]->f[ci] + eps);
    const float shift = in[2]->f[ci] - in[3]->f[ci] * scale;
    for (int64_t b = 0; b < n; ++b) {
      float* p = y.f.data() + (b * c + ci) * spatial;
      for (int64_t q = 0; q < spatial; ++q) p[q] = p[q] * scale + shift;
    }
  }
  out[0] = std::move(y);
  return absl::OkStatus();
}

}  // namespace

OpFn FindOp(const std::string& op_type) {
  static const auto* const kOps = new std::unordered_map<std::string, OpFn>{
      {"Add", &AddOp},
      {"AveragePool", &AveragePoolOp},
      {"BatchNormalization", &BatchNormOp},
      {"Conv", &ConvOp},
      {"Div", &DivOp},
      {"Dropout", &PassThroughOp},
      {"Flatten", &FlattenOp},
      {"Gemm", &GemmOp},
      {"GlobalAveragePool", &GlobalAveragePoolOp},
      {"Identity", &PassThroughOp},
      {"MatMul", &MatMulOp},
      {"MaxPool", &MaxPoolOp},
      {"Mul", &MulOp},
      {"Relu", &ReluOp},
      {"Reshape", &ReshapeOp},
      {"Sigmoid", &SigmoidOp},
      {"Softmax", &SoftmaxOp},
      {"Sub", &SubOp},
  };
  auto it = kOps->find(op_type);
  return it == kOps->end() ? nullptr : it->second;
}

}  // namespace melanoscope::onnxrt
