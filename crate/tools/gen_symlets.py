"""Generate least-asymmetric (symlet) scaling filters by spectral factorization.

Orders up to 20 follow the root selection of the PyWavelets tabulation
(reconstruction low-pass filter, the widely used MATLAB table) but are rebuilt
in extended precision so that orthonormality holds to rounding. Higher orders
are computed here: roots of the Daubechies half-band polynomial are found in extended
precision and, among all real-valued root selections, the one whose frequency
response has the smallest least-squares deviation from linear phase is kept.

Usage: python3 tools/gen_symlets.py > crates/core/src/wavelet/symlet_table.rs
"""
import itertools
import sys

import mpmath as mp
import numpy as np

mp.mp.dps = 120
ORDERS = list(range(2, 21)) + [30, 32, 34, 36]


def half_band_roots(n):
    coeffs = [mp.binomial(n - 1 + k, k) for k in range(n)]
    # polyroots expects highest degree first
    return mp.polyroots(list(reversed(coeffs)), maxsteps=2000, extraprec=2000)


def z_roots(y):
    s = 2 - 4 * y
    disc = mp.sqrt(s * s - 4)
    z1 = (s + disc) / 2
    z2 = (s - disc) / 2
    return (z1, z2) if abs(z1) < abs(z2) else (z2, z1)


def groups(n):
    ys = half_band_roots(n)
    real, cplx = [], []
    for y in ys:
        if abs(mp.im(y)) < mp.mpf(10) ** (-60):
            real.append(mp.re(y))
        elif mp.im(y) > 0:
            cplx.append(y)
    out = []
    for y in real:
        zi, zo = z_roots(mp.mpc(y))
        out.append(([zi], [zo]))
    for y in cplx:
        zi, zo = z_roots(y)
        out.append(([zi, mp.conj(zi)], [zo, mp.conj(zo)]))
    return out


def phase_contrib(roots, w):
    e = np.exp(1j * w)
    tot = np.zeros_like(w)
    for r in roots:
        tot += np.unwrap(np.angle(e - complex(r)))
    return tot


def build_filter(n, chosen):
    poly = [mp.mpf(1)]
    for _ in range(n):
        poly = np.convolve(poly, [mp.mpf(1), mp.mpf(1)]).tolist()
    for r in chosen:
        poly = np.convolve(poly, [mp.mpf(1), -r]).tolist()
    h = [mp.re(c) for c in poly]
    s = sum(h)
    return [c * mp.sqrt(2) / s for c in h]


def symlet(n):
    gs = groups(n)
    w = np.linspace(1e-3, np.pi - 1e-3, 600)
    inner = np.array([phase_contrib(g[0], w) for g in gs])
    outer = np.array([phase_contrib(g[1], w) for g in gs])
    base = inner.sum(axis=0) + n * w / 2
    diff = outer - inner
    design = np.vstack([np.ones_like(w), w]).T
    proj = design @ np.linalg.pinv(design)
    best, best_bits = None, None
    m = len(gs)
    all_bits = np.array(list(itertools.product([0, 1], repeat=m)), dtype=float) if m else np.zeros((1, 0))
    for start in range(0, len(all_bits), 8192):
        bits = all_bits[start:start + 8192]
        ph = base[None, :] + bits @ diff
        res = ph - ph @ proj.T
        cost = (res ** 2).sum(axis=1)
        i = int(np.argmin(cost))
        if best is None or cost[i] < best - 1e-12:
            best, best_bits = cost[i], bits[i]
    chosen = []
    for g, b in zip(gs, best_bits):
        chosen.extend(g[1] if b > 0.5 else g[0])
    h = build_filter(n, chosen)
    return h


def reference_selection(n):
    import pywt

    ref = np.array(pywt.Wavelet(f"sym{n}").rec_lo)
    roots = np.roots(ref[::-1])
    chosen = []
    for inner, outer in groups(n):
        di = np.abs(roots - complex(inner[0])).min()
        do = np.abs(roots - complex(outer[0])).min()
        chosen.extend(inner if di < do else outer)
    h = np.array([float(c) for c in build_filter(n, chosen)])
    if np.abs(h - ref).max() > 1e-8:
        h = h[::-1]
    assert np.abs(h - ref).max() < 1e-8, n
    return [float(v) for v in h]


def scaling_filter(n):
    if n <= 20:
        return reference_selection(n)
    return [float(c) for c in symlet(n)]


def main():
    out = sys.stdout
    out.write("// Generated by tools/gen_symlets.py. Do not edit by hand.\n\n")
    out.write("/// Symlet scaling (low-pass decomposition) filters, indexed by order.\n")
    out.write("pub(crate) static SYMLETS: &[(usize, &[f64])] = &[\n")
    for n in ORDERS:
        vals = scaling_filter(n)
        out.write(f"    (\n        {n},\n        &[\n")
        for v in vals:
            out.write(f"            {v!r},\n")
        out.write("        ],\n    ),\n")
        sys.stderr.write(f"sym{n}: sum2={sum(x*x for x in vals):.16f}\n")
    out.write("];\n")


if __name__ == "__main__":
    main()
