"""Monte Carlo channel generation for the secure SWIPT downlink.

A scenario is one transmitter (``n_t`` antennas), one information receiver
(``n_i`` antennas) and ``k`` energy receivers (``n_e`` antennas each).
Channels are quasi-static flat Rayleigh fading with a single power-law
path-loss model; every draw is a pure function of ``(seed, trial_index)``
via a counter-based generator, so trials can run in any order and in
parallel.

All powers inside :class:`ScenarioConfig` are linear watts; the JSON file
format carries them in dBm (keys suffixed ``_dbm``), rate targets in
bit/s/Hz and distances in meters.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

__all__ = [
    "REFERENCE_DISTANCE_M",
    "ScenarioConfig",
    "ChannelSet",
    "dbm_to_watts",
    "watts_to_dbm",
    "path_loss",
    "draw_channels",
]

# Reference distance d0 of the path-loss power law; receivers must be
# farther away than this.
REFERENCE_DISTANCE_M = 1.0


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    if watts <= 0:
        raise ValueError(f"cannot express {watts} W in dBm")
    return 10.0 * np.log10(watts) + 30.0


def path_loss(d: float, gamma: float, a0: float = 1.0) -> float:
    """Linear path-loss gain a0 * (d/d0)^(-gamma) at distance ``d`` meters."""
    if d <= REFERENCE_DISTANCE_M:
        raise ValueError(
            f"distance must exceed the reference distance "
            f"{REFERENCE_DISTANCE_M} m, got {d}"
        )
    return a0 * (d / REFERENCE_DISTANCE_M) ** (-gamma)


@dataclass
class ScenarioConfig:
    """All scenario parameters plus the Monte Carlo seed.

    Per-receiver quantities (``d_e``, ``sigma2_e``, ``eta``, ``mu``) are
    lists of length ``k``.  ``c0_bits`` is the secrecy target used by the
    single-receiver solvers, ``r0_bits`` the one used by the weighted-sum
    solver; exactly one may be set, or both when they agree.
    """

    n_t: int
    n_i: int
    n_e: int
    k: int
    d_i: float
    d_e: list[float]
    gamma: float
    a0: float
    sigma2_i: float
    sigma2_e: list[float]
    p: float
    eta: list[float]
    mu: list[float]
    seed: int
    c0_bits: float | None = None
    r0_bits: float | None = None

    def __post_init__(self):
        if min(self.n_t, self.n_i, self.n_e) < 1 or self.k < 1:
            raise ValueError("antenna counts and receiver count must be >= 1")
        for name in ("d_e", "sigma2_e", "eta", "mu"):
            if len(getattr(self, name)) != self.k:
                raise ValueError(f"{name} must have one entry per energy receiver")
        if self.p <= 0 or self.sigma2_i <= 0 or min(self.sigma2_e) <= 0:
            raise ValueError("powers and noise variances must be positive")
        if self.d_i <= REFERENCE_DISTANCE_M or min(self.d_e) <= REFERENCE_DISTANCE_M:
            raise ValueError("distances must exceed the reference distance")
        if not all(0 < e <= 1 for e in self.eta):
            raise ValueError("energy conversion efficiencies must lie in (0, 1]")
        if min(self.mu) < 0:
            raise ValueError("energy weights must be nonnegative")
        if self.c0_bits is None and self.r0_bits is None:
            raise ValueError("one of c0_bits / r0_bits must be set")

    @property
    def target_bits(self) -> float:
        """The secrecy target in bit/s/Hz, whichever key carries it."""
        if self.c0_bits is not None and self.r0_bits is not None:
            if abs(self.c0_bits - self.r0_bits) > 1e-12:
                raise ValueError("c0_bits and r0_bits disagree")
        return self.c0_bits if self.c0_bits is not None else self.r0_bits

    def with_target_bits(self, bits: float) -> "ScenarioConfig":
        which = "r0_bits" if self.c0_bits is None else "c0_bits"
        return replace(self, **{which: bits})

    @classmethod
    def from_dict(cls, raw: dict) -> "ScenarioConfig":
        """Build from the JSON document layout (dBm keys, per-ER lists).

        Scalars are accepted for the per-receiver fields and broadcast
        across all ``k`` receivers.
        """
        raw = dict(raw)
        k = int(raw.get("k", 1))

        def per_er(value, default=None):
            if value is None:
                value = default
            if isinstance(value, (int, float)):
                return [float(value)] * k
            return [float(v) for v in value]

        sigma2_e = [dbm_to_watts(v) for v in per_er(raw["sigma2_e_dbm"])]
        return cls(
            n_t=int(raw["n_t"]),
            n_i=int(raw["n_i"]),
            n_e=int(raw["n_e"]),
            k=k,
            d_i=float(raw["d_i"]),
            d_e=per_er(raw["d_e"]),
            gamma=float(raw.get("gamma", 3.0)),
            a0=float(raw.get("a0", 1.0)),
            sigma2_i=dbm_to_watts(float(raw["sigma2_i_dbm"])),
            sigma2_e=sigma2_e,
            p=dbm_to_watts(float(raw["p_dbm"])),
            eta=per_er(raw.get("eta"), default=1.0),
            mu=per_er(raw.get("mu"), default=1.0),
            seed=int(raw.get("seed", 0)),
            c0_bits=None if raw.get("c0_bits") is None else float(raw["c0_bits"]),
            r0_bits=None if raw.get("r0_bits") is None else float(raw["r0_bits"]),
        )

    @classmethod
    def from_json(cls, path: str | Path) -> "ScenarioConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return {
            "n_t": self.n_t,
            "n_i": self.n_i,
            "n_e": self.n_e,
            "k": self.k,
            "d_i": self.d_i,
            "d_e": list(self.d_e),
            "gamma": self.gamma,
            "a0": self.a0,
            "sigma2_i_dbm": watts_to_dbm(self.sigma2_i),
            "sigma2_e_dbm": [watts_to_dbm(v) for v in self.sigma2_e],
            "p_dbm": watts_to_dbm(self.p),
            "eta": list(self.eta),
            "mu": list(self.mu),
            "seed": self.seed,
            "c0_bits": self.c0_bits,
            "r0_bits": self.r0_bits,
        }


@dataclass
class ChannelSet:
    """One Monte Carlo draw, noise-normalized and raw.

    ``h = raw_h / sigma_i`` and ``g[j] = raw_g[j] / sigma_e[j]`` entrywise,
    so unit-variance noise can be assumed everywhere downstream.
    """

    h: np.ndarray
    g: list[np.ndarray]
    raw_h: np.ndarray
    raw_g: list[np.ndarray]
    config: ScenarioConfig
    trial_index: int = 0


def _complex_gaussian(rng: np.random.Generator, rows: int, cols: int,
                      variance: float) -> np.ndarray:
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal((rows, cols))
                    + 1j * rng.standard_normal((rows, cols)))


def draw_channels(config: ScenarioConfig, trial_index: int = 0) -> ChannelSet:
    """Draw one channel realization, deterministic in (seed, trial_index).

    Entries of the raw matrices are i.i.d. circularly symmetric complex
    Gaussian with variance equal to the path-loss gain at the receiver's
    distance.  A counter-based Philox stream keyed by (seed, trial_index)
    makes distinct trials independent and order-insensitive.
    """
    rng = np.random.Generator(
        np.random.Philox(key=np.array(
            [np.uint64(config.seed & 0xFFFFFFFFFFFFFFFF),
             np.uint64(trial_index & 0xFFFFFFFFFFFFFFFF)], dtype=np.uint64))
    )
    loss_i = path_loss(config.d_i, config.gamma, config.a0)
    raw_h = _complex_gaussian(rng, config.n_t, config.n_i, loss_i)
    raw_g = []
    for d in config.d_e:
        loss_e = path_loss(d, config.gamma, config.a0)
        raw_g.append(_complex_gaussian(rng, config.n_t, config.n_e, loss_e))
    h = raw_h / np.sqrt(config.sigma2_i)
    g = [m / np.sqrt(s2) for m, s2 in zip(raw_g, config.sigma2_e)]
    return ChannelSet(h=h, g=g, raw_h=raw_h, raw_g=raw_g, config=config,
                      trial_index=trial_index)
