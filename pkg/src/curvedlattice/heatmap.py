"""Cubehelix color mapping and P6 PPM heatmap output.

The cubehelix scheme traces a helix around the gray diagonal of the RGB
cube, which keeps perceived brightness monotone in the mapped value — the
property that makes intensity grids readable in grayscale print.  Standard
parameters here: start 0.5, rotations −1.5, hue 1.0, gamma 1.0.  PPM (P6)
is written raw: a text header and three bytes per pixel, no library needed
on either end.
"""

from __future__ import annotations

import numpy as np

from .observables import LdosGrid

_START = 0.5
_ROTATIONS = -1.5
_HUE = 1.0
_GAMMA = 1.0

# RGB projections of the helix basis vectors
_PR = (-0.14861, 1.78277)
_PG = (-0.29227, -0.90649)
_PB = (1.97294, 0.0)


def cubehelix_rgb(values) -> np.ndarray:
    """Map values in [0, 1] to RGB bytes; out-of-range input is clamped.

    v = 0 maps to black, v = 1 to white, with monotone luminance between.
    """
    v = np.clip(np.asarray(values, dtype=float), 0.0, 1.0)
    lam = v**_GAMMA
    phi = 2.0 * np.pi * (_START / 3.0 + _ROTATIONS * v)
    amp = _HUE * lam * (1.0 - lam) / 2.0
    cphi, sphi = np.cos(phi), np.sin(phi)
    channels = [
        lam + amp * (p0 * cphi + p1 * sphi) for p0, p1 in (_PR, _PG, _PB)
    ]
    rgb = np.stack(channels, axis=-1)
    return np.clip(np.rint(rgb * 255.0), 0, 255).astype(np.uint8)


def cubehelix(v: float) -> tuple[int, int, int]:
    """Single-value convenience wrapper around :func:`cubehelix_rgb`."""
    r, g, b = cubehelix_rgb(float(v))
    return int(r), int(g), int(b)


def render_ppm(grid: LdosGrid) -> bytes:
    """Render an LDOS grid as a P6 PPM image.

    Orientation: x axis = site index, y axis = energy with row 0 at the top
    of the energy grid (E_max), matching how the spectra are plotted.
    """
    values = np.asarray(grid.values, dtype=float)
    img = cubehelix_rgb(values.T[::-1, :])  # (n_E, L, 3), row 0 = E_max
    header = f"P6\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii")
    return header + img.tobytes()


def write_ppm(path, grid: LdosGrid) -> None:
    with open(path, "wb") as fh:
        fh.write(render_ppm(grid))
