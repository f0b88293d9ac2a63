"""End-to-end acceptance checks for the reconstruction toolkit.

Each test pins one externally-observable guarantee: operator correctness,
gradient consistency, solver accuracy against independent oracles, recovery
in exactly-invertible regimes, reconstruction quality ordering on the
benchmark phantom, noise-floor behaviour at zero flow, monotone residuals
with discrepancy stopping, valid duality certificates, and bit-identical
pipeline determinism.
"""

import filecmp
import time

import numpy as np
import pytest

from flowmri import cli
from flowmri.fourier import apply_forward, make_mask
from flowmri.joint import fidelity_grad_phi, fidelity_grad_u, run_joint
from flowmri.metrics import dice, mse
from flowmri.pdhg import PdhgConfig, pdhg_solve, real_dot
from flowmri.phantom import PhantomSpec, synthesize_channels
from flowmri.grids import grad, grad_adjoint
from flowmri.sequential import run_sequential, run_zero_fill

from conftest import (
    BENCH_FRACTION,
    BENCH_SEED,
    BENCH_SEQ_ALPHA,
    pinned_joint_params,
    random_channel,
    thirty_db_sigma,
)
from test_pdhg import rof_dual_oracle, rof_problem


def test_operator_adjoints_and_isometry():
    """Sampling and gradient operators pass randomized adjoint tests at
    1e-12 relative tolerance across 100 instances, in under 5 seconds."""
    start = time.monotonic()
    rng = np.random.default_rng(100)
    for i in range(100):
        shape = (int(rng.integers(4, 17)), int(rng.integers(4, 17)))
        mask = make_mask(
            "uniform-random", float(rng.uniform(0.1, 1.0)), int(rng.integers(10_000)), shape, 0
        )
        r = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        f = rng.standard_normal(mask.num_samples) + 1j * rng.standard_normal(mask.num_samples)
        from flowmri.fourier import apply_adjoint

        lhs = real_dot(apply_forward(r, mask), f)
        rhs = real_dot(r, apply_adjoint(f, mask))
        scale = max(abs(lhs), abs(rhs), 1.0)
        assert abs(lhs - rhs) <= 1e-12 * scale

        x = rng.standard_normal(shape)
        y = rng.standard_normal((2,) + shape)
        lhs = float(np.sum(grad(x) * y))
        rhs = float(np.sum(x * grad_adjoint(y)))
        scale = max(abs(lhs), abs(rhs), 1.0)
        assert abs(lhs - rhs) <= 1e-12 * scale

        # the fully-sampled operator is an isometry
        full = make_mask("uniform-random", 1.0, 0, shape, 0)
        assert abs(
            np.linalg.norm(apply_forward(r, full)) - np.linalg.norm(r)
        ) <= 1e-12 * np.linalg.norm(r)
    assert time.monotonic() - start < 5.0


def test_fidelity_gradients_match_finite_differences():
    """Analytic magnitude/phase gradients of the data term agree with central
    finite differences to 1e-5 on 20 random 6x6 instances, under 10 seconds."""
    start = time.monotonic()
    rng = np.random.default_rng(200)
    for i in range(20):
        ch = random_channel(rng)
        shape = ch.mask.shape
        u = rng.uniform(0.2, 1.5, shape)
        phi = rng.standard_normal(shape)

        def fid(uu, pp):
            res = apply_forward(uu * np.exp(1j * pp), ch.mask) - ch.samples
            return 0.5 * float(np.sum(np.abs(res) ** 2))

        gu = fidelity_grad_u(u, phi, ch)
        gp = fidelity_grad_phi(u, phi, ch)
        h = 1e-6
        for _ in range(6):
            a, b = int(rng.integers(shape[0])), int(rng.integers(shape[1]))
            e = np.zeros(shape)
            e[a, b] = 1.0
            fd_u = (fid(u + h * e, phi) - fid(u - h * e, phi)) / (2 * h)
            fd_p = (fid(u, phi + h * e) - fid(u, phi - h * e)) / (2 * h)
            assert gu[a, b] == pytest.approx(fd_u, abs=1e-5)
            assert gp[a, b] == pytest.approx(fd_p, abs=1e-5)
    assert time.monotonic() - start < 10.0


def test_denoising_solver_matches_independent_oracle():
    """The saddle-point solver reproduces an independent dual
    projected-gradient solution to 1e-6, and the two-pixel closed form to
    1e-8."""
    rng = np.random.default_rng(300)
    g = rng.standard_normal((4, 4))
    alpha = 0.3
    expected = rof_dual_oracle(g, alpha, iters=50_000)
    x, _, _ = pdhg_solve(
        rof_problem(g, alpha), np.zeros_like(g), PdhgConfig(max_iters=20_000, rel_tol=1e-12)
    )
    assert np.max(np.abs(x - expected)) <= 1e-6

    toy = np.array([[0.0], [1.0]])
    x, _, _ = pdhg_solve(
        rof_problem(toy, 0.25), np.zeros_like(toy), PdhgConfig(max_iters=50_000, rel_tol=1e-14)
    )
    assert np.max(np.abs(x - np.array([[0.25], [0.75]]))) <= 1e-8


def test_exact_inversion_regime(bench_spec):
    """With full sampling and no noise every method recovers the velocity in
    the fluid to 1e-6 MSE, and the joint model segments the bubble exactly,
    within two minutes."""
    start = time.monotonic()
    mask = make_mask("uniform-random", 1.0, 0, bench_spec.shape, 0)
    sets, truth = synthesize_channels(bench_spec, mask, sigma=0.0, seed=BENCH_SEED)
    data = sets["x"]
    fluid = ~truth.labels

    zf = run_zero_fill(data)
    assert mse(zf.velocity, truth.velocity["x"], region=fluid) <= 1e-6

    seq = run_sequential(data, alpha=1e-4)
    assert mse(seq.velocity, truth.velocity["x"], region=fluid) <= 1e-6

    params = pinned_joint_params(stop_rule="fixed_iters", outer_max=40)
    state, velocity, labels, _ = run_joint(data, params)
    assert mse(velocity, truth.velocity["x"], region=fluid) <= 1e-6
    # labels mark the fluid; the bubble is the complement
    assert dice(~labels[0], truth.labels) == 1.0
    assert time.monotonic() - start < 120.0


def test_joint_model_beats_sequential_baseline(joint_x, seq_x, bench_truth):
    """On the benchmark undersampled phantom the joint reconstruction beats
    the per-channel TV baseline on every magnitude channel, every phase
    channel, and the velocity map, with at least a 5% aggregate margin."""
    state, velocity, _, _ = joint_x
    truth = bench_truth
    fluid = ~truth.labels

    joint_u = [mse(u, truth.magnitude) for u in state.u]
    seq_u = [mse(m, truth.magnitude) for m in seq_x.magnitudes]
    joint_p = [
        mse(p, t, region=fluid) for p, t in zip(state.phi, truth.phases["x"])
    ]
    seq_p = [
        mse(p, t, region=fluid) for p, t in zip(seq_x.phases, truth.phases["x"])
    ]
    for a, b in zip(joint_u, seq_u):
        assert a < b
    for a, b in zip(joint_p, seq_p):
        assert a < b
    assert sum(joint_u) <= 0.95 * sum(seq_u)
    assert sum(joint_p) <= 0.95 * sum(seq_p)

    joint_v = mse(velocity, truth.velocity["x"], region=fluid)
    seq_v = mse(seq_x.velocity, truth.velocity["x"], region=fluid)
    assert joint_v <= 0.95 * seq_v


def test_zero_flow_velocity_stays_at_noise_level(bench_spec, bench_mask):
    """With no flow at all, the reconstructed velocity is noise-limited: its
    MSE stays below the discrepancy noise level scaled into velocity units,
    and well below (5x) the zero-fill baseline; a constant phase offset
    shared by all channels leaves the velocity unchanged to 1e-10."""
    spec = PhantomSpec(
        shape=bench_spec.shape,
        radius=bench_spec.radius,
        rise_speed=0.0,
        zeta=bench_spec.zeta,
        background_amplitude=bench_spec.background_amplitude,
    )
    sigma = thirty_db_sigma(bench_spec, bench_mask)
    sets, truth = synthesize_channels(spec, bench_mask, sigma=sigma, seed=BENCH_SEED)
    data = sets["x"]
    assert np.all(truth.velocity["x"] == 0.0)

    m = bench_mask.num_samples
    noise_level_velocity = 1e-3 * sigma * np.sqrt(4.0 * m) / (2.0 * spec.zeta)

    _, velocity, _, _ = run_joint(data, pinned_joint_params())
    joint_mse = float(np.mean(velocity**2))
    assert joint_mse <= noise_level_velocity

    zf_mse = float(np.mean(run_zero_fill(data).velocity ** 2))
    assert 5.0 * joint_mse <= zf_mse

    # a global phase offset is invisible to the velocity formula
    from flowmri.sequential import compute_velocity

    phis = truth.phases["x"]
    base = compute_velocity(*phis, zeta=spec.zeta)
    shifted = compute_velocity(*[p + 0.37 for p in phis], zeta=spec.zeta)
    assert np.max(np.abs(shifted - base)) <= 1e-10


def test_residual_semiconvergence_and_discrepancy_stop(joint_x, joint_x_fixed10):
    """The data residual never increases over ten fixed outer iterations, and
    the discrepancy rule fires within the 50-iteration budget."""
    _, _, _, hist10 = joint_x_fixed10
    res = hist10.residual
    assert len(res) == 10
    for a, b in zip(res, res[1:]):
        assert b <= a + 1e-12

    _, _, _, hist = joint_x
    assert hist.stopped_by == "discrepancy"
    assert hist.stopped_at is not None and hist.stopped_at <= 50


def test_duality_certificates_stay_tight(joint_x, bench_spec):
    """Every recorded Fenchel gap for the magnitude and label TV subproblems
    is bounded by 1e-4 per pixel."""
    _, _, _, history = joint_x
    n = bench_spec.shape[0] * bench_spec.shape[1]
    tol = 1e-4 * n
    assert history.fenchel_gap_p and history.fenchel_gap_q
    for gaps in history.fenchel_gap_p + history.fenchel_gap_q:
        for g in gaps:
            assert -1e-9 <= g <= tol


def test_pipeline_is_bit_identical(tmp_path):
    """Two pipeline runs with identical settings produce byte-identical
    artifacts: every container file, the history trace, and both reports."""
    dirs = [tmp_path / "run_a", tmp_path / "run_b"]
    for d in dirs:
        code = cli.main(
            [
                "pipeline",
                "--fraction", str(BENCH_FRACTION),
                "--seed", str(BENCH_SEED),
                "--sigma", "0.065",
                "--seq-alpha", str(BENCH_SEQ_ALPHA),
                "--out-dir", str(d),
            ]
        )
        assert code == 0
    names_a = sorted(p.name for p in dirs[0].iterdir())
    names_b = sorted(p.name for p in dirs[1].iterdir())
    assert names_a == names_b
    assert any(name.endswith(".vmri") for name in names_a)
    for name in ("report.txt", "report.csv", "joint_history.csv"):
        assert name in names_a
    for name in names_a:
        assert filecmp.cmp(dirs[0] / name, dirs[1] / name, shallow=False), name
