"""Writes the UNet inference fixture used by the Rust test suite.

Builds the reference UNet in torch with random weights (base 8 features),
runs it on a random magnitude tensor with the same preprocessing as the
Rust engine (divide by max, zero-pad to multiples of 16, crop, softplus)
and stores weights, input and expected output.

    python scripts/make_unet_fixture.py crates/earfield/tests/fixtures
"""

import struct
import sys
from pathlib import Path

import torch
from torch import nn
import torch.nn.functional as F


class DoubleConv(nn.Module):
    def __init__(self, cin, cout):
        super().__init__()
        self.conv1 = nn.Conv2d(cin, cout, 3, padding=1)
        self.norm1 = nn.BatchNorm2d(cout, eps=1e-5)
        self.conv2 = nn.Conv2d(cout, cout, 3, padding=1)
        self.norm2 = nn.BatchNorm2d(cout, eps=1e-5)

    def forward(self, x):
        x = F.relu(self.norm1(self.conv1(x)))
        return F.relu(self.norm2(self.conv2(x)))


class Up(nn.Module):
    def __init__(self, cin, cout):
        super().__init__()
        self.up = nn.Conv2d(cin, cout, 3, padding=1)
        self.conv1 = nn.Conv2d(2 * cout, cout, 3, padding=1)
        self.norm1 = nn.BatchNorm2d(cout, eps=1e-5)
        self.conv2 = nn.Conv2d(cout, cout, 3, padding=1)
        self.norm2 = nn.BatchNorm2d(cout, eps=1e-5)

    def forward(self, x, skip):
        x = self.up(F.interpolate(x, scale_factor=2, mode="nearest"))
        x = torch.cat([x, skip], dim=1)
        x = F.relu(self.norm1(self.conv1(x)))
        return F.relu(self.norm2(self.conv2(x)))


class UNet(nn.Module):
    def __init__(self, base):
        super().__init__()
        self.base = base
        self.enc1 = DoubleConv(2, base)
        self.enc2 = DoubleConv(base, 2 * base)
        self.enc3 = DoubleConv(2 * base, 4 * base)
        self.enc4 = DoubleConv(4 * base, 8 * base)
        self.mid = DoubleConv(8 * base, 16 * base)
        self.dec1 = Up(16 * base, 8 * base)
        self.dec2 = Up(8 * base, 4 * base)
        self.dec3 = Up(4 * base, 2 * base)
        self.dec4 = Up(2 * base, base)
        self.head = nn.Conv2d(base, 2, 1)

    def forward(self, x):
        s1 = self.enc1(x)
        s2 = self.enc2(F.max_pool2d(s1, 2))
        s3 = self.enc3(F.max_pool2d(s2, 2))
        s4 = self.enc4(F.max_pool2d(s3, 2))
        x = self.mid(F.max_pool2d(s4, 2))
        x = self.dec1(x, s4)
        x = self.dec2(x, s3)
        x = self.dec3(x, s2)
        x = self.dec4(x, s1)
        return self.head(x)


def predict(net, mags):
    """mags: (2, T, F) tensor of raw magnitudes."""
    _, t, f = mags.shape
    peak = mags.max()
    x = mags / peak if peak > 0 else mags
    h = max(1, -(-t // 16)) * 16
    w = max(1, -(-f // 16)) * 16
    x = F.pad(x, (0, w - f, 0, h - t))
    with torch.no_grad():
        y = net(x.unsqueeze(0))[0]
    return F.softplus(y[:, :t, :f])


def write_weights(path, net):
    layers = [(k, v) for k, v in net.state_dict().items() if not k.endswith("num_batches_tracked")]
    out = bytearray(b"UNETW1\0\0")
    out += struct.pack("<I", len(layers))
    out += struct.pack("<5I", 4, 4, net.base, 2, 2)
    for name, tensor in layers:
        kind = 1 if ".norm" in name else 0
        data = tensor.detach().to(torch.float32).contiguous()
        encoded = name.encode()
        out += struct.pack("<H", len(encoded)) + encoded
        out += struct.pack("<BB", kind, data.dim())
        out += struct.pack(f"<{data.dim()}I", *data.shape)
        out += data.numpy().astype("<f4").tobytes()
    Path(path).write_bytes(bytes(out))


def write_tensor(path, tensor):
    _, t, f = tensor.shape
    out = bytearray(b"HLBL1\0\0\0") + struct.pack("<II", t, f)
    out += tensor.detach().to(torch.float32).contiguous().numpy().astype("<f4").tobytes()
    Path(path).write_bytes(bytes(out))


def main():
    out_dir = Path(sys.argv[1] if len(sys.argv) > 1 else "crates/earfield/tests/fixtures")
    out_dir.mkdir(parents=True, exist_ok=True)
    torch.manual_seed(0)
    net = UNet(8)
    with torch.no_grad():
        for module in net.modules():
            if isinstance(module, nn.BatchNorm2d):
                module.weight.uniform_(0.5, 1.5)
                module.bias.uniform_(-0.1, 0.1)
                module.running_mean.uniform_(-0.05, 0.05)
                module.running_var.uniform_(0.5, 1.5)
        # spread the output so the comparison is not dominated by the bias
        net.head.weight.mul_(20.0)
    net.eval()
    mags = torch.rand(2, 20, 33, dtype=torch.float32) * 3.0
    expected = predict(net, mags)
    write_weights(out_dir / "unet_tiny.weights", net)
    write_tensor(out_dir / "unet_input.lbl", mags)
    write_tensor(out_dir / "unet_expected.lbl", expected)
    print(f"wrote fixture to {out_dir}; output range {expected.min():.4f}..{expected.max():.4f}")


if __name__ == "__main__":
    main()
