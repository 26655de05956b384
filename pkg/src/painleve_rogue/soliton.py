"""Extremal N-soliton evaluation.

Two independent evaluators:

* ``darboux_evaluate`` adds one eigenvalue at a time through the dressing
  recursion.  Binary64 is vectorized over grid points; higher precision runs
  the same recursion in mpmath.
* ``oracle_evaluate`` solves the linear system that the residue conditions
  impose on a partial-fraction ansatz for M(z).

Both use theta(z; x, t) = z x + z^2 t.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import mpmath
import numpy as np

from .errors import (DataIOError, IllConditionedError, PrecisionExhaustedError,
                     ValidationError)
from .spectral import SpectralData

LADDER = (53, 128, 256, 512)
CONDITION_LIMIT = 1e14


@dataclass(frozen=True)
class PrecisionPolicy:
    """``fixed`` evaluates at ``bits``; ``auto`` climbs LADDER up to ``max_bits``.

    In auto mode a level is accepted when the extremality identity holds at
    the focusing point, or elsewhere when two successive levels agree to
    ``rtol``.
    """

    mode: str = "fixed"
    bits: int = 53
    max_bits: int = 512
    rtol: float = 1e-8

    def __post_init__(self):
        if self.mode not in ("fixed", "auto"):
            raise ValidationError(f"precision mode must be fixed or auto, got {self.mode!r}")
        if self.bits < 53 or self.max_bits < 53:
            raise ValidationError("mantissa bits must be at least 53")

    @classmethod
    def auto(cls, max_bits: int = 512, rtol: float = 1e-8) -> "PrecisionPolicy":
        return cls("auto", 53, max_bits, rtol)


BINARY64 = PrecisionPolicy()


# ---------------------------------------------------------------- dressing

def _darboux_binary64(lam, p, x, t):
    """Dressing recursion vectorized over the broadcast shape of (x, t).

    Row n of W holds the seed vector of eigenvalue n, already dressed by
    the first j factors chi_1..chi_j.  Each step peels off the current row
    as q_j and applies chi_j to the remaining rows.
    """
    x, t = np.broadcast_arrays(np.asarray(x, float), np.asarray(t, float))
    shape = x.shape
    x, t = x.ravel(), t.ravel()
    psi = np.zeros(x.shape, complex)
    N = len(lam)
    if N == 0:
        return psi.reshape(shape)
    th = lam[:, None] * x[None, :] + (lam ** 2)[:, None] * t[None, :]
    a = 1j * th
    b = -1j * th + np.log(p)[:, None]
    s = np.maximum(a.real, b.real)
    W = np.stack([np.exp(a - s), np.exp(b - s)], axis=1)  # (N, 2, P)
    W /= np.sqrt((np.abs(W) ** 2).sum(axis=1))[:, None, :]
    lamc = lam.conj()
    for j in range(N):
        q = W[j]
        psi += 2j * (lam[j] - lamc[j]) * q[0].conj() * q[1]
        if j + 1 < N:
            rest = W[j + 1:]
            k = (lamc[j] - lam[j]) / (lam[j + 1:] - lamc[j])
            proj = rest[:, 0] * q[0].conj() + rest[:, 1] * q[1].conj()
            rest = rest + (k[:, None] * proj)[:, None, :] * q[None, :, :]
            rest /= np.sqrt((np.abs(rest) ** 2).sum(axis=1))[:, None, :]
            W[j + 1:] = rest
    return psi.reshape(shape)


def _darboux_mp(lam, p, x, t, bits):
    with mpmath.workprec(bits):
        L = [mpmath.mpc(complex(z)) for z in lam]
        x, t = mpmath.mpf(float(x)), mpmath.mpf(float(t))
        W = []
        for z, pz in zip(L, p):
            th = z * x + z * z * t
            a, b = 1j * th, -1j * th + mpmath.log(mpmath.mpc(complex(pz)))
            s = max(a.real, b.real)
            u, w = mpmath.exp(a - s), mpmath.exp(b - s)
            nr = mpmath.sqrt(abs(u) ** 2 + abs(w) ** 2)
            W.append([u / nr, w / nr])
        psi = mpmath.mpc(0)
        N = len(L)
        for j in range(N):
            q1, q2 = W[j]
            lj, ljc = L[j], mpmath.conj(L[j])
            psi += 2j * (lj - ljc) * mpmath.conj(q1) * q2
            for n in range(j + 1, N):
                k = (ljc - lj) / (L[n] - ljc)
                u, w = W[n]
                pr = u * mpmath.conj(q1) + w * mpmath.conj(q2)
                u, w = u + k * pr * q1, w + k * pr * q2
                nr = mpmath.sqrt(abs(u) ** 2 + abs(w) ** 2)
                W[n] = [u / nr, w / nr]
        return complex(psi)


def dressing_factor(lam: complex, q, z) -> np.ndarray:
    """chi(z) = I + (conj(lam) - lam) / (z - conj(lam)) * q q^H / |q|^2.

    Depends on q only through the projector q q^H / |q|^2, hence the unit
    normalization of q in the recursion loses nothing.
    """
    q = np.asarray(q, complex).reshape(2)
    P = np.outer(q, q.conj()) / np.vdot(q, q).real
    return np.eye(2) + (np.conj(lam) - lam) / (z - np.conj(lam)) * P


def _darboux_at(data: SpectralData, x, t, bits):
    if bits <= 53:
        return complex(_darboux_binary64(data.eigenvalues, data.darboux_params, x, t))
    return _darboux_mp(data.eigenvalues, data.darboux_params, x, t, bits)


def extremal_peak(data: SpectralData) -> float:
    """Maximal modulus 2 sum Im(lam_n) attainable by the N-soliton."""
    return 2.0 * float(np.sum(data.eigenvalues.imag))


def _extremality_applies(data: SpectralData, x, t) -> bool:
    p = data.darboux_params
    return x == 0 and t == 0 and bool(np.all(p == 1.0))


def _climb(data, x, t, policy, evaluate):
    levels = [b for b in LADDER if b <= policy.max_bits]
    peak = extremal_peak(data)
    floor = 1e-6 * peak
    prev = None
    for bits in levels:
        val = evaluate(bits)
        if not np.isfinite(val):
            prev = None
            continue
        if _extremality_applies(data, x, t):
            if abs(abs(val) - peak) <= policy.rtol * peak:
                return val
        elif prev is not None and abs(val - prev) <= policy.rtol * max(abs(val), floor):
            return val
        prev = val
    raise PrecisionExhaustedError(
        f"no agreement to rtol={policy.rtol:g} at (x, t) = ({x}, {t}) up to {levels[-1]} bits")


def darboux_evaluate(data: SpectralData, x: float, t: float,
                     precision: PrecisionPolicy = BINARY64) -> complex:
    """psi_N(x, t) by the dressing recursion."""
    if data.n == 0:
        return 0j
    if precision.mode == "fixed":
        val = _darboux_at(data, x, t, precision.bits)
        if not np.isfinite(val):
            raise PrecisionExhaustedError(f"non-finite value at {precision.bits} bits")
        return val
    return _climb(data, x, t, precision, lambda b: _darboux_at(data, x, t, b))


# ------------------------------------------------------------------ oracle

def _swap_balance(logC, S, gap):
    """Pick which poles to swap so every effective residue weight is O(1).

    ``S[n, l]`` is Re log((lam_n - lam_l)/(lam_n - conj lam_l)) with zero
    diagonal; ``gap[n]`` is log|lam_n - conj lam_n|.  Returns the boolean
    mask of swapped poles found by greedy single flips from the sign of
    Re log C.
    """
    def worst(U):
        s = S @ U.astype(float)
        k = np.where(U, -logC.real - 2.0 * (s - gap), logC.real + 2.0 * s)
        return np.max(np.abs(k))

    U = logC.real > 0
    best = worst(U)
    improved = True
    while improved:
        improved = False
        for n in range(len(U)):
            V = U.copy()
            V[n] = not V[n]
            w = worst(V)
            if w < best - 1e-12:
                U, best, improved = V, w, True
    return U


def _oracle_system(lam, logc, x, t, swap=None):
    N = len(lam)
    lamc = lam.conj()
    logC = logc + 2j * (lam * x + lam ** 2 * t)
    d_same = lam[:, None] - lam[None, :]
    d_conj = lam[:, None] - lamc[None, :]
    np.fill_diagonal(d_same, 1.0)
    S = np.log(d_same) - np.log(d_conj)
    np.fill_diagonal(S, 0.0)
    gap = np.log(lam - lamc)
    if swap is None:
        swap = _swap_balance(logC, S.real, gap.real)
    # log a_swap(lam_n) for unswapped poles, log a_swap'(lam_n) for swapped ones
    loga = S @ swap.astype(complex) - np.where(swap, gap, 0.0)
    logK = np.where(swap, -logC - 2.0 * loga, logC + 2.0 * loga)
    K = np.exp(logK)

    # Unknown slot n: residue at lam_n; slot N+n: residue at conj lam_n.
    # M11 = 1 + sum_unswapped f/(z-lam) + sum_swapped s/(z-conj lam)
    # M12 = sum_unswapped s/(z-conj lam) + sum_swapped f/(z-lam)
    inv_at_lam = 1.0 / (lam[:, None] - lamc[None, :])       # z = lam_n, pole conj lam_l
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_same = 1.0 / (lam[:, None] - lam[None, :])
        inv_cc = 1.0 / (lamc[:, None] - lamc[None, :])
    np.fill_diagonal(inv_same, 0.0)
    np.fill_diagonal(inv_cc, 0.0)
    inv_at_conj = 1.0 / (lamc[:, None] - lam[None, :])      # z = conj lam_n, pole lam_l
    m11_lam = np.hstack([np.where(~swap, inv_same, 0), np.where(swap, inv_at_lam, 0)])
    m12_lam = np.hstack([np.where(swap, inv_same, 0), np.where(~swap, inv_at_lam, 0)])
    m11_conj = np.hstack([np.where(~swap, inv_at_conj, 0), np.where(swap, inv_cc, 0)])
    m12_conj = np.hstack([np.where(swap, inv_at_conj, 0), np.where(~swap, inv_cc, 0)])

    # unswapped: f_n = K M12(lam_n), s_n = -conj K M11(conj lam_n)
    # swapped:   f_n = K M11(lam_n), s_n = -conj K M12(conj lam_n)
    sw = swap[:, None]
    row_f = np.where(sw, m11_lam, m12_lam)
    rr_f = np.where(swap, 1.0, 0.0)
    row_s = np.where(sw, m12_conj, m11_conj)
    rr_s = np.where(swap, 0.0, 1.0)
    kf, ks = K, -K.conj()

    A = np.zeros((2 * N, 2 * N), complex)
    r = np.zeros(2 * N, complex)
    for block, rows, rr, kk in ((0, row_f, rr_f, kf), (N, row_s, rr_s, ks)):
        big = np.abs(kk) > 1
        # u = kk (row.u + rr), divided through by kk when |kk| > 1
        scale = np.where(big, 1.0, kk)
        A[block:block + N] = -scale[:, None] * rows
        diag = np.where(big, 1.0 / np.where(big, kk, 1.0), 1.0)
        A[block + np.arange(N), block + np.arange(N)] += diag
        r[block:block + N] = np.where(big, rr, kk * rr)
    return A, r, swap


def _oracle_psi(sol, swap):
    N = len(swap)
    return 2j * (np.sum(sol[N:][~swap]) + np.sum(sol[:N][swap]))


def oracle_evaluate(data: SpectralData, x: float, t: float,
                    precision: PrecisionPolicy = BINARY64) -> complex:
    """psi_N(x, t) from the residue-condition linear system.

    Poles whose weight e^{2i theta} c_n is large are swapped into the upper
    triangular frame (a standard conjugation by the partial Blaschke
    product), which leaves psi unchanged and keeps the system well scaled.
    """
    if data.n == 0:
        return 0j
    if data.log_norming is None:
        raise ValidationError("oracle needs norming constants")
    lam = data.eigenvalues
    A, r, swap = _oracle_system(lam, data.log_norming, float(x), float(t))
    bits = precision.bits if precision.mode == "fixed" else precision.max_bits
    if bits <= 53:
        cond = np.linalg.cond(A)
        if not np.isfinite(cond) or cond > CONDITION_LIMIT:
            raise IllConditionedError(f"residue system condition {cond:.3g}", condition=float(cond))
        return complex(_oracle_psi(np.linalg.solve(A, r), swap))
    with mpmath.workprec(bits):
        sol = mpmath.lu_solve(mpmath.matrix(A.tolist()), mpmath.matrix(r.tolist()))
        return complex(_oracle_psi(np.array([complex(v) for v in sol]), swap))


# ------------------------------------------------------------------- fields

@dataclass
class WaveField:
    """Samples psi[i, j] at (x[j], t[i]) with the frame they are expressed in."""

    x: np.ndarray
    t: np.ndarray
    values: np.ndarray
    frame: dict = field(default_factory=lambda: {"kind": "raw"})
    mass: Optional[np.ndarray] = None

    def __post_init__(self):
        self.x = np.atleast_1d(np.asarray(self.x, float))
        self.t = np.atleast_1d(np.asarray(self.t, float))
        self.values = np.asarray(self.values, complex).reshape(len(self.t), len(self.x))
        if self.mass is not None:
            self.mass = np.asarray(self.mass, float).reshape(self.values.shape)

    def to_csv(self, path):
        cols = "x,t,re_psi,im_psi,abs_psi" + (",mass" if self.mass is not None else "")
        lines = [cols]
        for i, tv in enumerate(self.t):
            for j, xv in enumerate(self.x):
                v = self.values[i, j]
                row = [float(xv), float(tv), float(v.real), float(v.imag), float(abs(v))]
                if self.mass is not None:
                    row.append(float(self.mass[i, j]))
                lines.append(",".join(repr(a) for a in row))
        _write_text(path, "\n".join(lines) + "\n")
        _write_text(str(path) + ".json", json.dumps({"frame": self.frame, "nx": len(self.x),
                                                     "nt": len(self.t)}) + "\n")


def _write_text(path, text):
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise DataIOError(f"cannot write {path}: {exc}") from exc


def _monotone(g, name):
    g = np.atleast_1d(np.asarray(g, float))
    if len(g) > 1 and not (np.all(np.diff(g) > 0) or np.all(np.diff(g) < 0)):
        raise ValidationError(f"{name} grid must be strictly monotone")
    return g


def evaluate_field(data: SpectralData, x_grid, t_grid,
                   precision: PrecisionPolicy = BINARY64) -> WaveField:
    x = _monotone(x_grid, "x")
    t = _monotone(t_grid, "t")
    if precision.mode == "fixed" and precision.bits <= 53:
        T, X = np.meshgrid(t, x, indexing="ij")
        vals = _darboux_binary64(data.eigenvalues, data.darboux_params, X, T)
        if not np.all(np.isfinite(vals)):
            raise PrecisionExhaustedError("non-finite samples at binary64")
    else:
        vals = np.array([[darboux_evaluate(data, xv, tv, precision) for xv in x] for tv in t])
    return WaveField(x, t, vals)


def one_soliton_modulus(x, t=0.0, eta=1.0, xi=0.0):
    """|psi| of the single soliton at lam = xi + i eta with p = 1."""
    return 2.0 * eta / np.cosh(2.0 * eta * (np.asarray(x, float) + 2.0 * xi * np.asarray(t, float)))
