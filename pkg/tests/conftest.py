"""Shared fixtures: the pinned 64x64 phantom benchmark configuration.

The benchmark fixture (11% center-weighted mask, seed 7, ~30 dB data SNR,
sequential alpha 0.03, joint defaults with discrepancy factor 1.9) is used
by several reconstruction tests and by the acceptance suite; it is solved
once per session.
"""

from __future__ import annotations

import numpy as np
import pytest

from flowmri.fourier import apply_forward, make_mask
from flowmri.joint import JointParams, run_joint
from flowmri.phantom import PhantomSpec, ground_truth, synthesize_channels
from flowmri.sequential import run_sequential, run_zero_fill

BENCH_SEED = 7
BENCH_FRACTION = 0.11
BENCH_SEQ_ALPHA = 0.03
BENCH_NU = 1.9
TARGET_SNR_DB = 30.0


def thirty_db_sigma(spec: PhantomSpec, mask) -> float:
    """Noise std per real component giving ~30 dB data SNR on the phantom."""
    truth = ground_truth(spec, seed=BENCH_SEED)
    clean = [
        apply_forward(truth.magnitude * np.exp(1j * p), mask)
        for p in truth.phases["x"]
    ]
    power = np.mean([np.mean(np.abs(c) ** 2) for c in clean])
    return float(np.sqrt(power / (2.0 * 10.0 ** (TARGET_SNR_DB / 10.0))))


def pinned_joint_params(**overrides) -> JointParams:
    """The benchmark joint configuration: library defaults plus the
    discrepancy factor calibrated on this phantom."""
    kwargs = dict(nu=BENCH_NU)
    kwargs.update(overrides)
    return JointParams(**kwargs)


@pytest.fixture(scope="session")
def bench_spec():
    return PhantomSpec()


@pytest.fixture(scope="session")
def bench_mask(bench_spec):
    return make_mask("center-weighted", BENCH_FRACTION, BENCH_SEED, bench_spec.shape, 4)


@pytest.fixture(scope="session")
def bench_sigma(bench_spec, bench_mask):
    return thirty_db_sigma(bench_spec, bench_mask)


@pytest.fixture(scope="session")
def bench_data(bench_spec, bench_mask, bench_sigma):
    """(sets, truth): noisy undersampled channels for components x and z."""
    return synthesize_channels(bench_spec, bench_mask, bench_sigma, seed=BENCH_SEED)


@pytest.fixture(scope="session")
def bench_truth(bench_data):
    return bench_data[1]


@pytest.fixture(scope="session")
def seq_x(bench_data):
    return run_sequential(bench_data[0]["x"], alpha=BENCH_SEQ_ALPHA)


@pytest.fixture(scope="session")
def seq_z(bench_data):
    return run_sequential(bench_data[0]["z"], alpha=BENCH_SEQ_ALPHA)


@pytest.fixture(scope="session")
def zf_x(bench_data):
    return run_zero_fill(bench_data[0]["x"])


@pytest.fixture(scope="session")
def joint_x(bench_data):
    """Joint solve on component x with discrepancy stopping.

    Returns (state, velocity, labels, history).
    """
    return run_joint(bench_data[0]["x"], pinned_joint_params())


@pytest.fixture(scope="session")
def joint_z(bench_data):
    return run_joint(bench_data[0]["z"], pinned_joint_params())


@pytest.fixture(scope="session")
def joint_x_fixed10(bench_data):
    """Ten fixed outer iterations on component x (residual-trend probe)."""
    params = pinned_joint_params(stop_rule="fixed_iters", outer_max=10)
    return run_joint(bench_data[0]["x"], params)


def random_channel(rng, shape=(6, 6), fraction=0.5):
    """Small random measurement channel with a uniform-random mask."""
    from flowmri.fourier import KSpaceChannel

    mask = make_mask("uniform-random", fraction, int(rng.integers(1 << 30)), shape, 0)
    f = rng.standard_normal(mask.num_samples) + 1j * rng.standard_normal(mask.num_samples)
    return KSpaceChannel(samples=f, mask=mask, noise_sigma=0.0)
