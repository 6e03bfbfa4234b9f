# Copyright 2026 The Melanoscope Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Writes the small ONNX models and onnxruntime reference logits used by the
C++ interpreter tests.

    python3 tools/gen_onnx_fixtures.py tests/fixtures

Inputs are a closed-form pattern (see `pattern_input`) that the C++ tests
recompute, so only the expected logits are stored.
"""

import argparse
import json
import math
import pathlib

import numpy as np
import onnx
import onnxruntime as ort
import torch
from onnx import TensorProto, helper, numpy_helper
from torch import nn


def pattern_input(n, c=3, h=224, w=224):
    """x[b,k,y,x] = sin(0.37*(b+1) + 0.11*k + 0.013*y + 0.007*x) * 2."""
    b = np.arange(n).reshape(n, 1, 1, 1)
    k = np.arange(c).reshape(1, c, 1, 1)
    y = np.arange(h).reshape(1, 1, h, 1)
    x = np.arange(w).reshape(1, 1, 1, w)
    v = np.sin(0.37 * (b + 1) + 0.11 * k + 0.013 * y + 0.007 * x) * 2.0
    return v.astype(np.float32)


class TinyVgg(nn.Module):
    """VGG-style stack: conv blocks, then a three-layer fully connected head."""

    def __init__(self, classes):
        super().__init__()
        self.features = nn.Sequential(
            nn.Conv2d(3, 8, 3, padding=1), nn.BatchNorm2d(8), nn.ReLU(),
            nn.MaxPool2d(2),
            nn.Conv2d(8, 16, 3, padding=1, stride=2), nn.ReLU(),
            nn.MaxPool2d(3, stride=2, ceil_mode=True),
            nn.Conv2d(16, 16, 3, padding=1, groups=4), nn.ReLU(),
            nn.AvgPool2d(2),
        )
        self.pool = nn.AdaptiveAvgPool2d(1)
        self.head = nn.Sequential(
            nn.Linear(16, 32), nn.ReLU(), nn.Dropout(0.5),
            nn.Linear(32, 16), nn.ReLU(), nn.Dropout(0.5),
            nn.Linear(16, classes),
        )

    def forward(self, x):
        x = self.pool(self.features(x))
        return self.head(torch.flatten(x, 1))


def elementwise_graph(path):
    """Hand-built graph covering the ops the exporter folds away."""
    rng = np.random.default_rng(11)

    def init(name, arr):
        return numpy_helper.from_array(np.asarray(arr, dtype=np.float32), name)

    inits = [
        init("bn_scale", rng.uniform(0.5, 1.5, 3)),
        init("bn_bias", rng.uniform(-0.1, 0.1, 3)),
        init("bn_mean", rng.uniform(-0.2, 0.2, 3)),
        init("bn_var", rng.uniform(0.5, 1.5, 3)),
        init("conv_w", rng.normal(0, 0.05, (4, 3, 8, 8))),
        init("conv_b", rng.normal(0, 0.1, 4)),
        init("fc_w", rng.normal(0, 0.5, (4, 3))),
        init("fc_b", rng.normal(0, 0.1, 3)),
        init("shift", rng.normal(0, 0.1, 3)),
        init("divisor", rng.uniform(0.5, 2.0, 3)),
        numpy_helper.from_array(np.array([-1, 4], dtype=np.int64), "shape"),
    ]
    nodes = [
        helper.make_node("Constant", [], ["gain"],
                         value=helper.make_tensor("g", TensorProto.FLOAT, [],
                                                  [1.25])),
        helper.make_node("Mul", ["input", "gain"], ["scaled"]),
        helper.make_node("BatchNormalization",
                         ["scaled", "bn_scale", "bn_bias", "bn_mean", "bn_var"],
                         ["normed"], epsilon=1e-5),
        helper.make_node("Relu", ["normed"], ["act"]),
        helper.make_node("Conv", ["act", "conv_w", "conv_b"], ["conv"],
                         kernel_shape=[8, 8], strides=[8, 8]),
        helper.make_node("GlobalAveragePool", ["conv"], ["gap"]),
        helper.make_node("Reshape", ["gap", "shape"], ["flat"]),
        helper.make_node("MatMul", ["flat", "fc_w"], ["mm"]),
        helper.make_node("Add", ["mm", "fc_b"], ["biased"]),
        helper.make_node("Sub", ["biased", "shift"], ["shifted"]),
        helper.make_node("Div", ["shifted", "divisor"], ["ratio"]),
        helper.make_node("Sigmoid", ["ratio"], ["sig"]),
        helper.make_node("Identity", ["sig"], ["same"]),
        helper.make_node("Dropout", ["same"], ["kept"]),
        helper.make_node("Softmax", ["kept"], ["logits"], axis=1),
    ]
    graph = helper.make_graph(
        nodes, "elementwise",
        [helper.make_tensor_value_info("input", TensorProto.FLOAT,
                                       ["n", 3, 224, 224])],
        [helper.make_tensor_value_info("logits", TensorProto.FLOAT, ["n", 3])],
        inits)
    model = helper.make_model(graph, opset_imports=[helper.make_opsetid("", 13)])
    model.ir_version = 8
    onnx.checker.check_model(model)
    onnx.save(model, str(path))


def export(model, path, batch, dynamic, size=224):
    model.eval()
    dummy = torch.from_numpy(pattern_input(batch, h=size, w=size))
    axes = {"input": {0: "n"}, "logits": {0: "n"}} if dynamic else None
    torch.onnx.export(model, dummy, str(path), input_names=["input"],
                      output_names=["logits"], dynamic_axes=axes,
                      opset_version=13, dynamo=False)
    onnx.checker.check_model(onnx.load(str(path)))


def reference(path, batch):
    sess = ort.InferenceSession(str(path), providers=["CPUExecutionProvider"])
    x = pattern_input(batch)
    return sess.run(None, {"input": x})[0]


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("out", type=pathlib.Path)
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    torch.manual_seed(7)

    refs = {}
    models = [
        ("tiny_multiclass.onnx", TinyVgg(3), 3, True),
        ("tiny_binary_fixed2.onnx", TinyVgg(2), 2, False),
    ]
    for name, model, batch, dynamic in models:
        # Non-trivial running statistics; the exporter folds them into the conv.
        bn = model.features[1]
        with torch.no_grad():
            bn.running_mean.uniform_(-0.2, 0.2)
            bn.running_var.uniform_(0.5, 1.5)
        path = args.out / name
        export(model, path, batch, dynamic)
        refs[name] = {"batch": batch,
                      "logits": reference(path, batch).astype(float).tolist()}

    path = args.out / "elementwise_ops.onnx"
    elementwise_graph(path)
    refs[path.name] = {"batch": 2,
                       "logits": reference(path, 2).astype(float).tolist()}

    # Wrong input geometry and wrong output width, for load-time errors.
    export(TinyVgg(3), args.out / "tiny_input64.onnx", 1, True, size=64)
    export(TinyVgg(4), args.out / "tiny_width4.onnx", 1, True)

    with open(args.out / "onnx_reference.json", "w") as f:
        json.dump({"input": "sin(0.37*(b+1) + 0.11*c + 0.013*y + 0.007*x) * 2",
                   "models": refs}, f, indent=1)
        f.write("\n")
    assert math.isfinite(sum(sum(r) for v in refs.values() for r in v["logits"]))


if __name__ == "__main__":
    main()
