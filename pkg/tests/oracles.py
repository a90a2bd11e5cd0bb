"""Independent reference implementations the tests check the package against.

Everything here is scalar or loop-based and written straight from the
defining formulas (sRGB standard, Lab definition, loss definitions, layer
parameter arithmetic). Nothing imports the package, so agreement between
these and the library is evidence, not tautology. Expected values frozen
into the test modules were produced by these functions.
"""

from __future__ import annotations

import math

# sRGB D65 constants, same published roundings the standard lists.
_M = (
    (0.4124564, 0.3575761, 0.1804375),
    (0.2126729, 0.7151522, 0.0721750),
    (0.0193339, 0.1191920, 0.9503041),
)
_WHITE = (0.95047, 1.0, 1.08883)
_D = 6.0 / 29.0


def _expand(c8: float) -> float:
    u = c8 / 255.0
    return u / 12.92 if u <= 0.04045 else math.pow((u + 0.055) / 1.055, 2.4)


def _compress(lin: float) -> float:
    lin = max(lin, 0.0)
    return lin * 12.92 if lin <= 0.0031308 else 1.055 * math.pow(lin, 1.0 / 2.4) - 0.055


def _f(t: float) -> float:
    return math.pow(t, 1.0 / 3.0) if t > _D**3 else t / (3.0 * _D * _D) + 4.0 / 29.0


def _finv(t: float) -> float:
    return t**3 if t > _D else 3.0 * _D * _D * (t - 4.0 / 29.0)


def srgb_to_lab(r8: int, g8: int, b8: int) -> tuple[float, float, float]:
    """One pixel, 8-bit sRGB to Lab, scalar arithmetic throughout."""
    rl, gl, bl = _expand(r8), _expand(g8), _expand(b8)
    xyz = [_M[i][0] * rl + _M[i][1] * gl + _M[i][2] * bl for i in range(3)]
    fx, fy, fz = (_f(xyz[i] / _WHITE[i]) for i in range(3))
    return 116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)


def _solve3(m: tuple, v: list[float]) -> list[float]:
    """Cramer's rule for a 3x3 system, used to invert XYZ -> linear RGB."""

    def det(a):
        return (
            a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
            - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
        )

    d = det(m)
    cols = []
    for k in range(3):
        mk = [[m[i][j] if j != k else v[i] for j in range(3)] for i in range(3)]
        cols.append(det(mk) / d)
    return cols


def lab_to_srgb(L: float, a: float, b: float) -> tuple[int, int, int]:
    """One pixel, Lab back to quantized 8-bit sRGB with clamping."""
    fy = (L + 16.0) / 116.0
    fx = fy + a / 500.0
    fz = fy - b / 200.0
    xyz = [_finv(f) * w for f, w in zip((fx, fy, fz), _WHITE)]
    lin = _solve3(_M, xyz)
    out = []
    for c in lin:
        v = _compress(c) * 255.0
        out.append(int(min(max(round(v), 0), 255)))
    return tuple(out)


def huber(r: float, delta: float = 1.0) -> float:
    if abs(r) <= delta:
        return 0.5 * r * r
    return delta * abs(r) - 0.5 * delta * delta


def cross_entropy(logits, labels) -> float:
    """Mean pixel-wise negative log softmax; logits is [H][W][C], labels [H][W]."""
    total = 0.0
    count = 0
    for row_l, row_t in zip(logits, labels):
        for vec, target in zip(row_l, row_t):
            m = max(vec)
            lse = m + math.log(sum(math.exp(v - m) for v in vec))
            total += lse - vec[int(target)]
            count += 1
    return total / count


def instance_norm(feats, eps: float = 1e-5):
    """Reference IN over a [N][C][H][W] nested list, population variance."""
    out = []
    for n_block in feats:
        out_n = []
        for plane in n_block:
            vals = [v for row in plane for v in row]
            mean = sum(vals) / len(vals)
            var = sum((v - mean) ** 2 for v in vals) / len(vals)
            s = math.sqrt(var + eps)
            out_n.append([[(v - mean) / s for v in row] for row in plane])
        out.append(out_n)
    return out


def encode_label(label: int, num_classes: int) -> float:
    return 2.0 * label / (num_classes - 1) - 1.0


def voc_color(index: int) -> tuple[int, int, int]:
    """Standard VOC colormap: bit-reversal accumulation of the index bits."""
    r = g = b = 0
    i = index
    for shift in range(7, -1, -1):
        r |= (i & 1) << shift
        g |= ((i >> 1) & 1) << shift
        b |= ((i >> 2) & 1) << shift
        i >>= 3
    return r, g, b


def conv_params(c_in: int, c_out: int, k: int) -> int:
    """Conv or transposed conv with bias; transposed has the same count."""
    return c_out * c_in * k * k + c_out


def residual_unit_params(c: int, k: int = 3) -> int:
    return 2 * conv_params(c, c, k)


def gridnet_param_count(
    depths=(16, 32, 64, 128, 256), columns: int = 6, num_classes: int = 60, k: int = 3
) -> int:
    """Parameter total implied by the grid wiring, from layer arithmetic alone.

    Column 0 owns a lateral unit only on row 0 (rows below receive pure
    downsampling); every other column owns one lateral unit per row. The
    first half of the columns adds a down conv per row transition, the
    second half an up conv per transition.
    """
    rows = len(depths)
    half = columns // 2
    total = conv_params(1, depths[0], k)  # stem
    total += conv_params(depths[0], num_classes, 1)  # head
    for j in range(columns):
        for i in range(rows):
            if j >= half or i == 0 or j > 0:
                total += residual_unit_params(depths[i], k)
            if j < half and i > 0:
                total += conv_params(depths[i - 1], depths[i], k)
            if j >= half and i < rows - 1:
                total += conv_params(depths[i + 1], depths[i], k)
    return total


def colornet_param_count(depths=(32, 64, 128, 256, 512), out_ch: int = 2, k: int = 3) -> int:
    """Parameter total implied by the two-stream U-Net wiring.

    The encoder is counted once: both streams run the same parameter set.
    """
    total = 0
    prev = 1
    for d in depths:
        total += conv_params(prev, d, k) + conv_params(d, d, k)
        prev = d
    for d in depths[:-1]:
        total += conv_params(2 * d, d, 1)  # fusion of IN(gray) with semantic
    dec_in = [2 * d for d in reversed(depths)]
    for i in range(len(depths) - 1):
        c_out = depths[len(depths) - 2 - i]
        total += conv_params(dec_in[i], c_out, k) + conv_params(c_out, c_out, k)
    total += conv_params(dec_in[-1], dec_in[-1] // 2, k)
    total += conv_params(dec_in[-1] // 2, out_ch, k)
    return total
