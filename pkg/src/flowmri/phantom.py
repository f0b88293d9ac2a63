"""Synthetic ground truth: a rising sphere in Stokes flow, encoded into
four-channel velocity-sensitive k-space data with background phase and noise."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .fourier import KSpaceChannel, SamplingMask, apply_forward
from .sequential import MeasurementSet

Array = np.ndarray


@dataclass
class PhantomSpec:
    shape: tuple[int, int] = (64, 64)
    center: tuple[float, float] = (32.0, 32.0)  # (x0, z0) in pixels
    radius: float = 10.0
    rise_speed: float = 1.0  # translation speed along z
    c_fluid: float = 1.0
    c_bubble: float = 0.2
    background_amplitude: float = 0.6  # radians
    background_cutoff: int = 3  # k-space radius of the low-pass spectrum
    zeta: float = 0.5  # radians per unit velocity
    frames: int = 8
    frame_displacement: tuple[float, float] = (0.0, 2.0)

    def __post_init__(self):
        if self.radius <= 1:
            raise ValueError("sphere radius must exceed 1 pixel")
        if self.c_fluid == self.c_bubble:
            raise ValueError("fluid and bubble levels must differ")


@dataclass
class GroundTruth:
    magnitude: Array
    velocity: dict[str, Array]  # components "x" and "z"
    phases: dict[str, list[Array]]  # per component: [phi1..phi4]
    labels: Array  # True inside the sphere
    background_phase: Array


def stokes_velocity(spec: PhantomSpec) -> tuple[Array, Array]:
    """Exterior Stokes field of a rigid sphere translating at speed U along z,
    evaluated on the 2D slice through the sphere center; zero inside.

    v_r = U cos(th) (3R/(2r) - R^3/(2 r^3)),
    v_th = -U sin(th) (3R/(4r) + R^3/(4 r^3)),  for r >= R.
    """
    n1, n2 = spec.shape
    x0, z0 = spec.center
    U, R = spec.rise_speed, spec.radius
    # axis 0 = x (rows), axis 1 = z (columns)
    x = np.arange(n1)[:, None] - x0
    z = np.arange(n2)[None, :] - z0
    r = np.hypot(x, z)
    safe_r = np.maximum(r, 1e-12)
    cos_t = z / safe_r  # theta measured from the +z translation axis
    # signed sin(theta): sign carries the azimuthal direction in the slice
    sin_t = x / safe_r
    v_r = U * cos_t * (3 * R / (2 * safe_r) - R**3 / (2 * safe_r**3))
    v_t = -U * np.abs(sin_t) * (3 * R / (4 * safe_r) + R**3 / (4 * safe_r**3))
    sx = np.sign(sin_t)
    # e_r = (sin_t, cos_t); e_theta = (sx*cos_t, -|sin_t|)
    vx = v_r * sin_t + v_t * sx * cos_t
    vz = v_r * cos_t - v_t * np.abs(sin_t)
    inside = r < R
    vx[inside] = 0.0
    vz[inside] = 0.0
    return vx, vz


def _background_phase(spec: PhantomSpec, rng: np.random.Generator) -> Array:
    """Smooth random phase from a seeded low-frequency spectrum."""
    n1, n2 = spec.shape
    i = np.arange(n1) - n1 // 2
    j = np.arange(n2) - n2 // 2
    low = (i[:, None] ** 2 + j[None, :] ** 2) <= spec.background_cutoff**2
    spectrum = np.zeros((n1, n2), dtype=complex)
    k = int(low.sum())
    spectrum[low] = rng.standard_normal(k) + 1j * rng.standard_normal(k)
    raw = np.real(np.fft.ifft2(np.fft.ifftshift(spectrum)))
    peak = np.max(np.abs(raw))
    if peak == 0 or spec.background_amplitude == 0:
        return np.zeros((n1, n2))
    return spec.background_amplitude * raw / peak


def ground_truth(spec: PhantomSpec, seed: int = 0) -> GroundTruth:
    vx, vz = stokes_velocity(spec)
    vmax = max(np.max(np.abs(vx)), np.max(np.abs(vz)))
    if spec.zeta * vmax > np.pi / 2:
        raise ValueError(
            f"no-wrap margin violated: zeta*max|v| = {spec.zeta * vmax:.4f} > pi/2"
        )
    n1, n2 = spec.shape
    x = np.arange(n1)[:, None] - spec.center[0]
    z = np.arange(n2)[None, :] - spec.center[1]
    inside = np.hypot(x, z) < spec.radius
    magnitude = np.where(inside, spec.c_bubble, spec.c_fluid)

    rng = np.random.default_rng(seed)
    phi_bg = _background_phase(spec, rng)
    phases = {}
    velocity = {"x": vx, "z": vz}
    for comp in ("x", "z"):
        phi_v = spec.zeta * velocity[comp]
        phases[comp] = [phi_bg + phi_v, phi_bg - phi_v, phi_bg.copy(), phi_bg.copy()]
    return GroundTruth(
        magnitude=magnitude,
        velocity=velocity,
        phases=phases,
        labels=inside,
        background_phase=phi_bg,
    )


def synthesize_channels(
    spec: PhantomSpec,
    mask: SamplingMask,
    sigma: float,
    seed: int,
    components: tuple[str, ...] = ("x", "z"),
) -> tuple[dict[str, MeasurementSet], GroundTruth]:
    """Build noisy undersampled four-channel data for each velocity component.

    Noise is complex Gaussian with std sigma per real component, drawn from
    an insulated stream per (seed, component, channel).
    """
    if mask.shape != spec.shape:
        raise ValueError(f"mask shape {mask.shape} does not match phantom {spec.shape}")
    truth = ground_truth(spec, seed=seed)
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0xC0FFEE)))
    sets = {}
    for comp in components:
        channels = []
        for phi in truth.phases[comp]:
            clean = apply_forward(truth.magnitude * np.exp(1j * phi), mask)
            noise = sigma * (
                rng.standard_normal(clean.shape) + 1j * rng.standard_normal(clean.shape)
            )
            channels.append(KSpaceChannel(samples=clean + noise, mask=mask, noise_sigma=sigma))
        sets[comp] = MeasurementSet(channels=channels, zeta=spec.zeta, component=comp)
    return sets, truth


def generate_sequence(
    spec: PhantomSpec, mask: SamplingMask, sigma: float, seed: int
) -> list[tuple[dict[str, MeasurementSet], GroundTruth]]:
    """Synthesize each frame independently, advancing the sphere center."""
    out = []
    for k in range(spec.frames):
        cx = spec.center[0] + k * spec.frame_displacement[0]
        cz = spec.center[1] + k * spec.frame_displacement[1]
        n1, n2 = spec.shape
        if not (0 <= cx < n1 and 0 <= cz < n2):
            raise ValueError(f"sphere center leaves the grid at frame {k}: ({cx}, {cz})")
        frame_spec = replace(spec, center=(cx, cz))
        out.append(synthesize_channels(frame_spec, mask, sigma, seed=seed + 1000 * k))
    return out
