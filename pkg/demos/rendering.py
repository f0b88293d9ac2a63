# %% [markdown]
# # Rendering reconstructions
#
# Turn field files into figures: grayscale magnitudes and labels, a signed
# blue-white-red colormap for velocities and phases, and quiver SVGs for
# planar flow. All output is deterministic — fixed palettes, no timestamps —
# and each figure gets a sidecar recording the normalization range.

# %%
from pathlib import Path

import numpy as np

from flowmri.phantom import PhantomSpec, ground_truth, stokes_velocity
from flowmri.render import render_gray, render_quiver, render_signed

out_dir = Path("demo_figures")
out_dir.mkdir(exist_ok=True)

spec = PhantomSpec()
truth = ground_truth(spec, seed=7)
vx, vz = stokes_velocity(spec)

# %% [markdown]
# ## Grayscale: magnitude and segmentation

# %%
render_gray(truth.magnitude, out_dir / "magnitude.png")
render_gray(truth.labels.astype(float), out_dir / "labels.png")
print((out_dir / "magnitude.png.range.txt").read_text())

# %% [markdown]
# ## Signed colormap: velocity components and phases
#
# Negative values render blue, zero white, positive red, symmetric about
# zero so the sign structure of the flow is legible at a glance.

# %%
render_signed(vx, out_dir / "velocity_x.png")
render_signed(vz, out_dir / "velocity_z.png")
render_signed(truth.phases["z"][0], out_dir / "phase_flow_plus.png")

# %% [markdown]
# ## Quiver: the planar flow field
#
# Arrows on a stride-4 grid; zero-velocity pixels (the rigid bubble
# interior in this frame) draw nothing.

# %%
render_quiver(vx, vz, out_dir / "flow.svg", stride=4)
print("wrote", sorted(p.name for p in out_dir.iterdir()))

# %% [markdown]
# The same renderers back the `flowmri render` subcommand, which reads any
# saved field container and dispatches on its declared kind:
#
# ```sh
# flowmri render --field run/joint_x_velocity.vmri --style signed-colormap --out velocity.png
# flowmri render --field run/joint_x_velocity.vmri --field-y other_component.vmri \
#     --style quiver --out flow.svg
# ```
