#!/usr/bin/env python3
"""Train the small convnet committed under assets/ and export it.

Dev-time script: needs torch, which the package itself does not depend on.
Trains on the synthetic class-patterned dataset, verifies the exported
graph against the torch model, and reports float-vs-quantized top-1
agreement on held-out data.

Usage: python tools/train_smallnet.py [--out assets/smallnet.json]
"""

import argparse
from pathlib import Path

import numpy as np
import torch
import torch.nn as nn

from axemu import (
    LayerGraph,
    Layout,
    Node,
    NodeKind,
    Signedness,
    Tensor4,
    exact_lut,
    run,
    save_model,
    synthetic_cifar10,
    transform,
)


class SmallNet(nn.Module):
    def __init__(self):
        super().__init__()
        self.conv1 = nn.Conv2d(3, 8, 3, padding="same")
        self.conv2 = nn.Conv2d(8, 16, 3, padding="same")
        self.head = nn.Linear(8 * 8 * 16, 10)

    def forward(self, x):
        x = torch.relu(self.conv1(x))
        x = torch.max_pool2d(x, 2)
        x = torch.relu(self.conv2(x))
        x = torch.max_pool2d(x, 2)
        # match the exporter's NHWC flatten order
        x = x.permute(0, 2, 3, 1).reshape(x.shape[0], -1)
        return self.head(x)


def export_graph(model: SmallNet) -> LayerGraph:
    def conv_hwcn(conv):
        return conv.weight.detach().numpy().transpose(2, 3, 1, 0).astype(np.float32)

    def vec(param):
        return param.detach().numpy().astype(np.float32)

    return LayerGraph([
        Node("in", NodeKind.INPUT, [], {"shape": (32, 32, 3)}),
        Node("conv1", NodeKind.CONV2D, ["in"], {
            "filters": conv_hwcn(model.conv1), "bias": vec(model.conv1.bias),
            "strides": (1, 1), "dilations": (1, 1), "padding": "same",
        }),
        Node("relu1", NodeKind.RELU, ["conv1"]),
        Node("pool1", NodeKind.MAXPOOL, ["relu1"], {"pool": (2, 2), "strides": (2, 2)}),
        Node("conv2", NodeKind.CONV2D, ["pool1"], {
            "filters": conv_hwcn(model.conv2), "bias": vec(model.conv2.bias),
            "strides": (1, 1), "dilations": (1, 1), "padding": "same",
        }),
        Node("relu2", NodeKind.RELU, ["conv2"]),
        Node("pool2", NodeKind.MAXPOOL, ["relu2"], {"pool": (2, 2), "strides": (2, 2)}),
        Node("flat", NodeKind.FLATTEN, ["pool2"]),
        Node("head", NodeKind.DENSE, ["flat"], {
            "weights": vec(model.head.weight).T.copy(), "bias": vec(model.head.bias),
        }),
        Node("probs", NodeKind.SOFTMAX, ["head"]),
    ])


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default="assets/smallnet.json")
    parser.add_argument("--epochs", type=int, default=6)
    args = parser.parse_args()

    torch.manual_seed(0)
    images, labels = synthetic_cifar10(8000, seed=1)
    x = torch.from_numpy(images.transpose(0, 3, 1, 2).copy())
    y = torch.from_numpy(labels.astype(np.int64))
    x_train, y_train = x[:6000], y[:6000]
    x_val, y_val = x[6000:], y[6000:]

    model = SmallNet()
    opt = torch.optim.Adam(model.parameters(), lr=2e-3)
    loss_fn = nn.CrossEntropyLoss()
    for epoch in range(args.epochs):
        model.train()
        perm = torch.randperm(len(x_train))
        total = 0.0
        for i in range(0, len(x_train), 128):
            idx = perm[i : i + 128]
            opt.zero_grad()
            loss = loss_fn(model(x_train[idx]), y_train[idx])
            loss.backward()
            opt.step()
            total += loss.item() * len(idx)
        model.eval()
        with torch.no_grad():
            acc = (model(x_val).argmax(1) == y_val).float().mean()
        print(f"epoch {epoch}: loss {total / len(x_train):.4f} val acc {acc:.4f}")

    model.eval()
    g = export_graph(model)

    # exporter sanity: the axemu float graph must match torch
    probe = images[7000:7100]
    with torch.no_grad():
        torch_logits = model(torch.from_numpy(probe.transpose(0, 3, 1, 2).copy())).numpy()
    trace = {}
    run(g, Tensor4(probe, Layout.NHWC), trace=trace)
    ax_logits = trace["head"]
    worst = np.abs(ax_logits - torch_logits).max() / max(np.abs(torch_logits).max(), 1e-9)
    print(f"export check: max relative logit difference vs torch = {worst:.2e}")
    assert worst < 1e-4

    # float vs exact-table quantized agreement on held-out data
    tg, _ = transform(g, exact_lut(Signedness.SIGNED))
    eval_imgs, _ = synthetic_cifar10(1000, seed=7)
    batch = Tensor4(eval_imgs, Layout.NHWC)
    float_top1 = run(g, batch).data.reshape(1000, -1).argmax(1)
    ax_top1 = run(tg, batch).data.reshape(1000, -1).argmax(1)
    agreement = (float_top1 == ax_top1).mean()
    print(f"float vs exact-table top-1 agreement: {agreement:.4f}")

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(g, out)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
