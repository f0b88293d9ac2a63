"""Binary file container for masks, datasets, fields and ground truth.

Layout (byte-exact, little-endian throughout):

    bytes 0..3   magic b"VMRI"
    bytes 4..7   uint32 LE: header length H
    bytes 8..8+H UTF-8 JSON header (sorted keys, compact separators)
    remainder    payload

Header always carries "format_version" (major, readers reject unknown
majors) and "type" in {"mask", "dataset", "field", "truth"}.

Payloads:
  mask:    packbits of the boolean grid, row-major.
  field:   n1*n2 float64, row-major.
  dataset: 4*m complex128 (interleaved re, im) in channel order
           (flow+, flow-, noflow+, noflow-).
  truth:   concatenated float64 sections as listed in the header.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .fourier import KSpaceChannel, SamplingMask
from .phantom import GroundTruth
from .sequential import CHANNEL_NAMES, MeasurementSet

MAGIC = b"VMRI"
FORMAT_VERSION = 1

FIELD_KINDS = ("magnitude", "phase", "label", "velocity")


class FileFormatError(ValueError):
    """Malformed or truncated container file."""


def _write(path, header: dict, payload: bytes) -> None:
    header = dict(header, format_version=FORMAT_VERSION)
    raw = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(raw)))
        fh.write(raw)
        fh.write(payload)


def _read(path) -> tuple[dict, bytes]:
    data = Path(path).read_bytes()
    if len(data) < 8 or data[:4] != MAGIC:
        raise FileFormatError(f"{path}: not a VMRI container")
    (hlen,) = struct.unpack("<I", data[4:8])
    if len(data) < 8 + hlen:
        raise FileFormatError(f"{path}: truncated header")
    try:
        header = json.loads(data[8 : 8 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FileFormatError(f"{path}: invalid header: {exc}") from exc
    if header.get("format_version") != FORMAT_VERSION:
        raise FileFormatError(
            f"{path}: unsupported format version {header.get('format_version')}"
        )
    return header, data[8 + hlen :]


def _expect_payload(path, payload: bytes, nbytes: int) -> bytes:
    if len(payload) != nbytes:
        raise FileFormatError(
            f"{path}: payload length {len(payload)} does not match header ({nbytes} expected)"
        )
    return payload


# ---------------------------------------------------------------------------
# masks


def save_mask(path, mask: SamplingMask) -> None:
    header = {
        "type": "mask",
        "dims": list(mask.shape),
        "kind": mask.kind,
        "fraction": mask.fraction,
        "seed": mask.seed,
        "center_radius": mask.center_radius,
    }
    _write(path, header, np.packbits(mask.selected.ravel()).tobytes())


def load_mask(path) -> SamplingMask:
    header, payload = _read(path)
    if header.get("type") != "mask":
        raise FileFormatError(f"{path}: expected mask file, got {header.get('type')!r}")
    n1, n2 = header["dims"]
    nbytes = (n1 * n2 + 7) // 8
    payload = _expect_payload(path, payload, nbytes)
    bits = np.unpackbits(np.frombuffer(payload, dtype=np.uint8))[: n1 * n2]
    return SamplingMask(
        selected=bits.reshape(n1, n2).astype(bool),
        kind=header["kind"],
        fraction=header["fraction"],
        seed=header["seed"],
        center_radius=header.get("center_radius", 0),
    )


# ---------------------------------------------------------------------------
# fields


def save_field(path, values: np.ndarray, kind: str, units: str = "") -> None:
    if kind not in FIELD_KINDS:
        raise ValueError(f"unknown field kind {kind!r}")
    values = np.asarray(values, dtype=float)
    header = {"type": "field", "dims": list(values.shape), "kind": kind, "units": units}
    _write(path, header, values.astype("<f8").tobytes())


def load_field(path) -> tuple[np.ndarray, dict]:
    header, payload = _read(path)
    if header.get("type") != "field":
        raise FileFormatError(f"{path}: expected field file, got {header.get('type')!r}")
    n1, n2 = header["dims"]
    payload = _expect_payload(path, payload, n1 * n2 * 8)
    values = np.frombuffer(payload, dtype="<f8").reshape(n1, n2).copy()
    return values, header


# ---------------------------------------------------------------------------
# datasets


def save_dataset(
    path,
    data: MeasurementSet,
    mask_file: str,
    seed: int = 0,
    frame: int = 0,
) -> None:
    sigma = max(ch.noise_sigma for ch in data.channels)
    header = {
        "type": "dataset",
        "dims": list(data.shape),
        "channels": list(CHANNEL_NAMES),
        "zeta": data.zeta,
        "sigma": sigma,
        "mask_file": mask_file,
        "seed": seed,
        "frame": frame,
        "component": data.component,
    }
    payload = b"".join(
        ch.samples.astype("<c16").tobytes() for ch in data.channels
    )
    _write(path, header, payload)


def load_dataset(path) -> MeasurementSet:
    header, payload = _read(path)
    if header.get("type") != "dataset":
        raise FileFormatError(f"{path}: expected dataset file, got {header.get('type')!r}")
    mask_path = Path(path).parent / header["mask_file"]
    mask = load_mask(mask_path)
    m = mask.num_samples
    payload = _expect_payload(path, payload, 4 * m * 16)
    flat = np.frombuffer(payload, dtype="<c16")
    channels = [
        KSpaceChannel(
            samples=flat[j * m : (j + 1) * m].copy(),
            mask=mask,
            noise_sigma=header["sigma"],
        )
        for j in range(4)
    ]
    return MeasurementSet(
        channels=channels, zeta=header["zeta"], component=header.get("component", "")
    )


# ---------------------------------------------------------------------------
# ground-truth sidecar


def save_truth(path, truth: GroundTruth) -> None:
    sections = [("magnitude", truth.magnitude), ("labels", truth.labels.astype(float))]
    sections.append(("background_phase", truth.background_phase))
    for comp in sorted(truth.velocity):
        sections.append((f"velocity_{comp}", truth.velocity[comp]))
        for j, phi in enumerate(truth.phases[comp]):
            sections.append((f"phase_{comp}_{j + 1}", phi))
    dims = list(truth.magnitude.shape)
    header = {
        "type": "truth",
        "dims": dims,
        "sections": [name for name, _ in sections],
    }
    payload = b"".join(np.asarray(a, dtype="<f8").tobytes() for _, a in sections)
    _write(path, header, payload)


def load_truth(path) -> GroundTruth:
    header, payload = _read(path)
    if header.get("type") != "truth":
        raise FileFormatError(f"{path}: expected truth file, got {header.get('type')!r}")
    n1, n2 = header["dims"]
    size = n1 * n2 * 8
    names = header["sections"]
    payload = _expect_payload(path, payload, size * len(names))
    arrays = {}
    for i, name in enumerate(names):
        arrays[name] = (
            np.frombuffer(payload[i * size : (i + 1) * size], dtype="<f8")
            .reshape(n1, n2)
            .copy()
        )
    comps = sorted(
        {name.split("_")[1] for name in names if name.startswith("velocity_")}
    )
    return GroundTruth(
        magnitude=arrays["magnitude"],
        velocity={c: arrays[f"velocity_{c}"] for c in comps},
        phases={
            c: [arrays[f"phase_{c}_{j + 1}"] for j in range(4)] for c in comps
        },
        labels=arrays["labels"] > 0.5,
        background_phase=arrays["background_phase"],
    )
