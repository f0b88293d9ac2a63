# %% [markdown]
# # Sampling operators and the flow phantom
#
# This walkthrough builds the pieces the reconstruction pipelines rest on:
# the centered unitary Fourier sampling operator, k-space masks, and the
# rising-sphere phantom with its velocity-encoded phases.

# %%
import numpy as np

from flowmri.fourier import apply_adjoint, apply_forward, make_mask
from flowmri.phantom import PhantomSpec, ground_truth, stokes_velocity, synthesize_channels
from flowmri.sequential import compute_velocity

# %% [markdown]
# ## Masks
#
# Four mask families are available. The benchmark configuration keeps 11% of
# k-space with a fully sampled center disk, which anchors the low
# frequencies that carry most of the image energy.

# %%
shape = (64, 64)
for kind in ("uniform-random", "variable-density", "radial-lines", "center-weighted"):
    mask = make_mask(kind, 0.11, 7, shape, 4)
    print(f"{kind:18s} keeps {mask.num_samples}/{mask.selected.size} coefficients")

mask = make_mask("center-weighted", 0.11, 7, shape, 4)

# %% [markdown]
# ## The forward operator
#
# `apply_forward` is the unitary FFT followed by row-major extraction of the
# selected coefficients; `apply_adjoint` scatters samples back and inverts
# the FFT. The pair is an exact adjoint, the operator norm is 1, and on the
# sample set the composition is the identity.

# %%
rng = np.random.default_rng(0)
r = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
f = rng.standard_normal(mask.num_samples) + 1j * rng.standard_normal(mask.num_samples)

lhs = np.vdot(apply_forward(r, mask), f)
rhs = np.vdot(r, apply_adjoint(f, mask))
print("adjoint identity error:", abs(lhs - rhs))
print("AA* = I on samples:", np.max(np.abs(apply_forward(apply_adjoint(f, mask), mask) - f)))

# %% [markdown]
# ## The phantom
#
# A sphere of radius 10 px rises through viscous fluid at unit speed. The
# exterior velocity is the exact analytic Stokes field on the slice through
# the sphere center; the interior translates rigidly (zero in the co-moving
# frame used here). The magnitude is two-level: fluid 1.0, bubble 0.2.

# %%
spec = PhantomSpec()
vx, vz = stokes_velocity(spec)
print("peak speeds:", np.abs(vx).max(), np.abs(vz).max())

truth = ground_truth(spec, seed=7)
print("magnitude levels:", sorted(set(np.unique(truth.magnitude))))
print("background phase range:", truth.background_phase.min(), truth.background_phase.max())

# %% [markdown]
# The four channel phases share a smooth background and encode the velocity
# antisymmetrically in the flow pair. The double-difference formula recovers
# the velocity exactly from the clean phases.

# %%
for comp in ("x", "z"):
    phis = truth.phases[comp]
    v = compute_velocity(*phis, zeta=spec.zeta)
    print(f"component {comp}: encoding error {np.max(np.abs(v - truth.velocity[comp])):.2e}")

# %% [markdown]
# ## Noisy undersampled data
#
# `synthesize_channels` applies the forward operator to each channel image
# and adds complex Gaussian noise (std sigma per real component) from an
# insulated, seeded stream — the whole corpus is reproducible bit-for-bit.

# %%
sigma = 0.065  # about 30 dB data SNR at this configuration
sets, _ = synthesize_channels(spec, mask, sigma=sigma, seed=7)
data = sets["x"]
clean = apply_forward(truth.magnitude * np.exp(1j * truth.phases["x"][0]), mask)
snr = 10 * np.log10(np.mean(np.abs(clean) ** 2) / (2 * sigma**2))
print(f"channel SNR: {snr:.1f} dB over {mask.num_samples} samples")
