"""Parameter counts per architecture, walked from layer shapes alone.

Used once to freeze the golden values in test_hybrid.cpp.
Run: python3 param_count.py [p n h]
"""
import sys

KERNELS = {1: [4], 3: [4, 3, 2]}
ARCHS = {
    "LSTM1": ("lstm", 1, 0), "LSTM2": ("lstm", 2, 0),
    "LSTM1-S-CNN1": ("s", 1, 1), "LSTM2-S-CNN3": ("s", 2, 3),
    "CNN1-S-LSTM1": ("s", 1, 1), "CNN3-S-LSTM2": ("s", 2, 3),
    "LSTM1-P-CNN1": ("stack", 1, 1), "LSTM2-P-CNN3": ("stack", 2, 3),
    "LSTM1-SP-CNN1": ("stack", 1, 1), "LSTM2-SP-CNN3": ("stack", 2, 3),
    "CNN1-SP-LSTM1": ("stack", 1, 1), "CNN3-SP-LSTM2": ("stack", 2, 3),
}


def lstm(p):
    # four gates, each W [p x p], U [p x p], b [p]
    return 4 * (p * p + p * p + p)


def conv(depth):
    # single channel between layers: kernel [1 x 1 x k] + bias [1]
    return sum(k + 1 for k in KERNELS[depth])


def count(arch, p, n, h):
    kind, lstm_depth, cnn_depth = ARCHS[arch]
    stream = lstm_depth * lstm(p) + (conv(cnn_depth) if cnn_depth else 0)
    rows = 2 * p if kind == "stack" else p
    head_in = 3 * rows * n
    head_out = p * h
    return 3 * stream + head_in * head_out + head_out


if __name__ == "__main__":
    p, n, h = (int(a) for a in sys.argv[1:4]) if len(sys.argv) == 4 else (8, 21, 9)
    for arch in ARCHS:
        print(f"{arch} {count(arch, p, n, h)}")
