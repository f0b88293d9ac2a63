"""Sub-sampled Fourier forward operator A = S F and k-space mask generation.

k-space uses a centered layout (DC at grid center) and a unitary FFT
normalization, so the operator norm of A is exactly 1. Selected samples are
read out in row-major order over the mask grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

Array = np.ndarray

MASK_KINDS = ("uniform-random", "variable-density", "radial-lines", "center-weighted")


def fft2_unitary(f: Array) -> Array:
    """Centered, unitary 2D DFT."""
    f = np.asarray(f)
    if f.ndim != 2 or f.shape[0] < 2 or f.shape[1] < 2:
        raise ValueError(f"expected 2D grid with dims >= 2, got shape {f.shape}")
    return np.fft.fftshift(np.fft.fft2(np.fft.ifftshift(f), norm="ortho"))


def ifft2_unitary(F: Array) -> Array:
    """Inverse of :func:`fft2_unitary`."""
    F = np.asarray(F)
    if F.ndim != 2 or F.shape[0] < 2 or F.shape[1] < 2:
        raise ValueError(f"expected 2D grid with dims >= 2, got shape {F.shape}")
    return np.fft.fftshift(np.fft.ifft2(np.fft.ifftshift(F), norm="ortho"))


@dataclass(frozen=True)
class SamplingMask:
    """Boolean k-space selection grid. ``selected`` has shape (n1, n2)."""

    selected: Array
    kind: str = "custom"
    fraction: float = 1.0
    seed: int = 0
    center_radius: int = 0

    def __post_init__(self):
        sel = np.asarray(self.selected, dtype=bool)
        if sel.ndim != 2 or sel.shape[0] < 2 or sel.shape[1] < 2:
            raise ValueError(f"mask must be 2D with dims >= 2, got shape {sel.shape}")
        if not sel.any():
            raise ValueError("mask must select at least one coefficient")
        object.__setattr__(self, "selected", sel)

    @property
    def shape(self) -> tuple[int, int]:
        return self.selected.shape

    @property
    def num_samples(self) -> int:
        return int(self.selected.sum())


@dataclass
class KSpaceChannel:
    """Sampled Fourier coefficients f in C^m for one measurement channel."""

    samples: Array
    mask: SamplingMask
    noise_sigma: float = 0.0

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=complex)
        if self.samples.ndim != 1 or self.samples.size != self.mask.num_samples:
            raise ValueError(
                f"expected {self.mask.num_samples} samples, got shape {self.samples.shape}"
            )


def apply_forward(r: Array, mask: SamplingMask) -> Array:
    """A r = extract selected coefficients of the unitary FFT, row-major order."""
    r = np.asarray(r)
    if r.shape != mask.shape:
        raise ValueError(f"field shape {r.shape} does not match mask shape {mask.shape}")
    return fft2_unitary(r)[mask.selected]


def apply_adjoint(f: Array, mask: SamplingMask) -> Array:
    """A* f = scatter samples into k-space (zeros elsewhere), inverse FFT."""
    f = np.asarray(f, dtype=complex)
    if f.ndim != 1 or f.size != mask.num_samples:
        raise ValueError(f"expected {mask.num_samples} samples, got shape {f.shape}")
    F = np.zeros(mask.shape, dtype=complex)
    F[mask.selected] = f
    return ifft2_unitary(F)


def _kspace_radius(shape: tuple[int, int]) -> Array:
    n1, n2 = shape
    i = np.arange(n1) - n1 // 2
    j = np.arange(n2) - n2 // 2
    return np.sqrt(i[:, None] ** 2 + j[None, :] ** 2)


def _center_block(shape: tuple[int, int], radius: int) -> Array:
    return _kspace_radius(shape) <= radius


def make_mask(
    kind: str,
    fraction: float,
    seed: int,
    shape: tuple[int, int],
    center_radius: int = 4,
) -> SamplingMask:
    """Deterministically generate a sampling mask.

    Kinds:
      - uniform-random: m locations drawn uniformly without replacement.
      - variable-density: density decays with k-space radius; a center disk
        (radius ``center_radius``) is always fully sampled.
      - radial-lines: spokes through the center, added until m pixels are hit.
      - center-weighted: fully sampled center disk plus uniform-random
        samples elsewhere.

    Total count is round(fraction * n) for every kind.
    """
    if kind not in MASK_KINDS:
        raise ValueError(f"unknown mask kind {kind!r}; choose from {MASK_KINDS}")
    if not (0.0 < fraction <= 1.0):
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    n1, n2 = shape
    n = n1 * n2
    m = max(1, int(round(fraction * n)))
    rng = np.random.default_rng(seed)
    sel = np.zeros(shape, dtype=bool)

    if m >= n:
        sel[:] = True
    elif kind == "uniform-random":
        idx = rng.choice(n, size=m, replace=False)
        sel.flat[idx] = True
    elif kind in ("variable-density", "center-weighted"):
        center = _center_block(shape, center_radius)
        if center.sum() >= m:
            # fraction too small for the full center disk: take the innermost m
            r = _kspace_radius(shape)
            order = np.argsort(r, axis=None, kind="stable")
            sel.flat[order[:m]] = True
        else:
            sel |= center
            rest = np.flatnonzero(~sel.ravel())
            k = m - int(sel.sum())
            if kind == "center-weighted":
                pick = rng.choice(rest, size=k, replace=False)
            else:
                r = _kspace_radius(shape).ravel()[rest]
                w = 1.0 / (1.0 + (r / max(center_radius, 1)) ** 2)
                pick = rng.choice(rest, size=k, replace=False, p=w / w.sum())
            sel.flat[pick] = True
    elif kind == "radial-lines":
        # walk spokes outward from the center, accumulating pixels until m hit
        c1, c2 = n1 // 2, n2 // 2
        rmax = int(np.ceil(np.hypot(n1, n2)))
        phase0 = rng.uniform(0, np.pi)
        golden = np.pi * (3.0 - np.sqrt(5.0))
        spoke = 0
        count = 0
        while count < m:
            theta = phase0 + spoke * golden
            for t in range(rmax):
                i = int(round(c1 + t * np.cos(theta)))
                j = int(round(c2 + t * np.sin(theta)))
                if not (0 <= i < n1 and 0 <= j < n2):
                    break
                if not sel[i, j]:
                    sel[i, j] = True
                    count += 1
                    if count >= m:
                        break
            spoke += 1

    return SamplingMask(
        selected=sel, kind=kind, fraction=fraction, seed=seed, center_radius=center_radius
    )
