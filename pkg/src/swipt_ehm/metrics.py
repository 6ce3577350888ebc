"""Harvested energy, capacities, secrecy rates and their concave surrogates.

Unit discipline: every rate in this module is in nats per channel use.
Targets quoted in bit/s/Hz are converted once at the interface by
multiplying with ``ln 2``; bits-valued results are nats divided by ``ln 2``
exactly.

All log-determinants are evaluated through the eigenvalues of the
(Hermitian-symmetrized) PSD Gram matrix, never through determinant
products.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import hermitianize

__all__ = [
    "LN2",
    "CovarianceTriple",
    "bits_to_nats",
    "nats_to_bits",
    "lndet_i_gram",
    "whitened_gram_gradient",
    "harvested_energy",
    "secrecy_capacity_p1",
    "secrecy_rate_p2",
    "secrecy_rate_multi",
    "taylor_surrogate_s1",
    "taylor_surrogate_s2",
]

LN2 = float(np.log(2.0))


def bits_to_nats(bits: float) -> float:
    return bits * LN2

def nats_to_bits(nats: float) -> float:
    return nats / LN2


@dataclass
class CovarianceTriple:
    """Transmit covariances: information, energy, artificial noise.

    ``v`` may be None for the single-receiver problems; it is treated as
    zero everywhere.
    """

    w_i: np.ndarray
    w_e: np.ndarray
    v: np.ndarray | None = None

    @property
    def v_or_zero(self) -> np.ndarray:
        return self.v if self.v is not None else np.zeros_like(self.w_i)

    @property
    def total(self) -> np.ndarray:
        return self.w_i + self.w_e + self.v_or_zero

    @property
    def trace(self) -> float:
        return float(np.trace(self.total).real)


def lndet_i_gram(a: np.ndarray, w: np.ndarray | None) -> float:
    """ln det(I + A^H W A) for PSD ``w``, via Gram eigenvalues."""
    if w is None:
        return 0.0
    # eigvalsh reads one triangle only, so the analytic Hermitian symmetry
    # of the Gram matrix is enough
    eigs = np.linalg.eigvalsh(a.conj().T @ w @ a)
    return float(np.sum(np.log1p(np.maximum(eigs, 0.0))))


def whitened_gram_gradient(a: np.ndarray, w: np.ndarray | None) -> np.ndarray:
    """A (I + A^H W A)^{-1} A^H, the gradient of ``lndet_i_gram`` in W."""
    n = a.shape[1]
    w_eff = np.zeros((a.shape[0], a.shape[0]), dtype=complex) if w is None else w
    inner = np.eye(n) + hermitianize(a.conj().T @ w_eff @ a)
    return hermitianize(a @ np.linalg.solve(inner, a.conj().T))


def harvested_energy(g: list[np.ndarray], triple: CovarianceTriple,
                     mu: list[float], eta: list[float],
                     sigma2_e: list[float]) -> float:
    """Weighted-sum harvested energy in watts.

    sum_k sigma2_e[k] * mu[k] * eta[k] * Tr[G_k^H (W_I + W_E + V) G_k],
    linear in each covariance block.
    """
    if not (len(g) == len(mu) == len(eta) == len(sigma2_e)):
        raise ValueError("per-receiver argument lengths disagree")
    total = triple.total
    if total.shape != (g[0].shape[0], g[0].shape[0]):
        raise ValueError(
            f"covariance shape {total.shape} does not match "
            f"transmit dimension {g[0].shape[0]}"
        )
    out = 0.0
    for gk, mk, ek, s2 in zip(g, mu, eta, sigma2_e):
        out += s2 * mk * ek * float(np.trace(gk.conj().T @ total @ gk).real)
    return out


def secrecy_capacity_p1(h: np.ndarray, g: np.ndarray, w_i: np.ndarray) -> float:
    """Secrecy capacity (nats) when both receivers cancel the energy signal.

    ln det(I + H^H W_I H) - ln det(I + G^H W_I G).
    """
    return lndet_i_gram(h, w_i) - lndet_i_gram(g, w_i)


def secrecy_rate_p2(h: np.ndarray, g: np.ndarray, w_i: np.ndarray,
                    w_e: np.ndarray) -> float:
    """Secrecy rate (nats) when the IR cannot cancel the energy signal.

    The IR sees W_E as interference; the eavesdropper cancels it.
    Evaluated as ln det(I + H^H (W_I+W_E) H) - ln det(I + H^H W_E H)
    - ln det(I + G^H W_I G).
    """
    return (lndet_i_gram(h, w_i + w_e) - lndet_i_gram(h, w_e)
            - lndet_i_gram(g, w_i))


def secrecy_rate_multi(h: np.ndarray, g: list[np.ndarray],
                       triple: CovarianceTriple,
                       we_cancellation: bool = False) -> float:
    """Worst-case secrecy rate (nats) with multiple energy receivers.

    The IR is jammed by W_E + V (only V when ``we_cancellation``); each
    eavesdropper is assumed to cancel the known energy signal, so its
    channel is whitened by V alone.
    """
    v = triple.v_or_zero
    ir_interference = v if we_cancellation else triple.w_e + v
    c_i = (lndet_i_gram(h, triple.w_i + ir_interference)
           - lndet_i_gram(h, ir_interference))
    c_e = max(lndet_i_gram(gk, triple.w_i + v) - lndet_i_gram(gk, v)
              for gk in g)
    return c_i - c_e


def taylor_surrogate_s1(h: np.ndarray, g: np.ndarray, w_i: np.ndarray,
                        w_i0: np.ndarray) -> float:
    """Concave minorant of :func:`secrecy_capacity_p1` around ``w_i0``.

    The eavesdropper log-det is linearized at the expansion point; the
    surrogate equals the true capacity iff ``w_i == w_i0`` and never
    exceeds it.
    """
    grad = whitened_gram_gradient(g, w_i0)
    lin = float(np.trace(grad @ (w_i - w_i0)).real)
    return lndet_i_gram(h, w_i) - lndet_i_gram(g, w_i0) - lin


def taylor_surrogate_s2(h: np.ndarray, g: np.ndarray,
                        w_i: np.ndarray, w_e: np.ndarray,
                        w_i0: np.ndarray, w_e0: np.ndarray) -> float:
    """Concave minorant of :func:`secrecy_rate_p2` around (w_i0, w_e0).

    Jointly concave in (W_I, W_E): the two convex log-det terms are
    linearized at the expansion point.
    """
    grad_e = whitened_gram_gradient(h, w_e0)
    grad_i = whitened_gram_gradient(g, w_i0)
    return (lndet_i_gram(h, w_i + w_e)
            - lndet_i_gram(h, w_e0)
            - float(np.trace(grad_e @ (w_e - w_e0)).real)
            - lndet_i_gram(g, w_i0)
            - float(np.trace(grad_i @ (w_i - w_i0)).real))
