"""2x2 Riemann-Hilbert problems with a jump on the unit circle.

Convention: the circle is oriented counterclockwise, ``+`` is the interior
boundary value and E_+ = E_- J.  Writing g = E_- (J - I), the solution is
E = I + C g with C the Cauchy integral, so on coefficients

    C_+ keeps modes k >= 0,    C_- = -(modes k < 0),    C_+ - C_- = 1.

The unknown is mu = E_- (normalized to I at infinity), determined by
mu - C_-(mu (J - I)) = I.  Functions on the circle are stored as Laurent
coefficients; products are formed on an equispaced grid with twofold
zero-padding.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (DivergenceError, GeometryError, IllConditionedError, NoConvergenceError,
                     NumericalError, ResolutionError, StructureError, ValidationError)

I2 = np.eye(2, dtype=complex)
DEFAULT_MODES = 128
MAX_MODES = 4096
TAIL_TOL = 1e-10
NEAR_CONTOUR = 1e-6
PLATEAU_DROP = 10.0
ROUNDOFF = 1e-15
MAX_FLOOR = 1.0  # the |J|^2 estimate runs 10^2-10^3 above observed errors


@dataclass
class JumpMatrix:
    """Matrix-valued jump J(Z), analytic on r_in <= |Z| <= r_out."""

    evaluator: Callable[[np.ndarray], np.ndarray]
    margin: tuple = (0.875, 1.125)
    symmetric: bool = True
    label: str = ""

    def __post_init__(self):
        r_in, r_out = self.margin
        if not r_in < 1 < r_out:
            raise ValidationError(f"analyticity margin {self.margin} must straddle 1")

    def __call__(self, Z):
        return self.evaluator(np.asarray(Z, complex))


def constant_jump(J0) -> JumpMatrix:
    J0 = np.asarray(J0, complex)
    return JumpMatrix(lambda Z: np.broadcast_to(J0, np.shape(Z) + (2, 2)).copy(),
                      margin=(0.0 + 1e-3, 1e3), symmetric=False, label="constant")


@dataclass
class LaurentSeries:
    """Coefficients a_k for k = kmin .. kmin + len(coeffs) - 1 (axis 0)."""

    coeffs: np.ndarray
    kmin: int

    @property
    def ks(self) -> np.ndarray:
        return np.arange(self.kmin, self.kmin + len(self.coeffs))

    @property
    def M(self) -> int:
        return max(abs(self.kmin), abs(self.kmin + len(self.coeffs) - 1))

    def mode(self, k):
        i = k - self.kmin
        if 0 <= i < len(self.coeffs):
            return self.coeffs[i]
        return np.zeros(self.coeffs.shape[1:], self.coeffs.dtype)

    def __call__(self, Z):
        Z = np.asarray(Z, complex)
        powers = Z[..., None] ** self.ks
        return np.tensordot(powers, self.coeffs, axes=([-1], [0]))

    def tail(self, frac=8) -> float:
        """Largest coefficient norm in the outer 1/frac band of each side."""
        M = self.M
        band = max(1, M // frac)
        ks = self.ks
        sel = np.abs(ks) >= M - band
        if not np.any(sel):
            return 0.0
        c = self.coeffs[sel].reshape(int(sel.sum()), -1)
        return float(np.max(np.linalg.norm(c, axis=1)))


def cauchy_project(series: LaurentSeries, side: str) -> LaurentSeries:
    """C_+ keeps k >= 0; C_- returns minus the k < 0 part."""
    ks = series.ks
    out = series.coeffs.copy()
    if side == "plus":
        out[ks < 0] = 0
    elif side == "minus":
        out[ks >= 0] = 0
        out = -out
    else:
        raise ValidationError(f"side must be 'plus' or 'minus', got {side!r}")
    return LaurentSeries(out, series.kmin)


@dataclass
class RhpSolution:
    mu: LaurentSeries  # E_- coefficients on k = -M .. M-1
    g: LaurentSeries   # mu (J - I) on the padded grid, k = -2M .. 2M-1
    R1: np.ndarray
    M: int
    residual: float
    method: str
    diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({"M": self.M, "residual": self.residual, "method": self.method,
                           "R1": [[[float(v.real), float(v.imag)] for v in row] for row in self.R1]})


def _grid(P):
    return np.exp(2j * np.pi * np.arange(P) / P)


def _modes(values, P):
    """Fourier coefficients k = -P/2 .. P/2-1 of grid samples (axis 0)."""
    c = np.fft.fft(values, axis=0) / P
    return np.fft.fftshift(c, axes=0)


def _finish(mu, JmI, Z, P, M, method, check_tail, tail_tol):
    muv = mu(Z)
    gv = muv @ JmI
    g = LaurentSeries(_modes(gv, P), -P // 2)
    R1 = -g.mode(-1)
    # E_+ from the Cauchy representation versus E_- J from the boundary value
    plus = I2 + cauchy_project(g, "plus")(Z)
    minus_j = muv + gv
    resid = float(np.max(np.abs(plus - minus_j)))
    rel = resid / max(1.0, float(np.max(np.abs(minus_j))))
    tail = mu.tail()
    jnorm = float(np.max(np.abs(JmI + I2)))
    diag = {"tail": tail, "jump_norm": jnorm, "relative_residual": rel}
    if ROUNDOFF * jnorm * jnorm > MAX_FLOOR:
        raise IllConditionedError(f"jump entries reach {jnorm:.3g}; the rounding floor "
                                  f"{ROUNDOFF * jnorm * jnorm:.3g} exceeds {MAX_FLOOR:g}",
                                  condition=jnorm * jnorm)
    sol = RhpSolution(mu, g, R1, M, resid, method, diag)
    if check_tail and tail > resolution_threshold(tail_tol, jnorm):
        raise ResolutionError(f"Laurent tail {tail:.3g} exceeds {tail_tol:g} at M = {M}; "
                              f"increase the truncation order", modes=M, tail=tail)
    return sol


def resolution_threshold(tail_tol, jump_norm) -> float:
    """Tail level that signals truncation: tail_tol, or the rounding floor
    10 * ROUNDOFF * |J|^2 when the jump is large enough to dominate."""
    return max(tail_tol, 10.0 * ROUNDOFF * jump_norm * jump_norm)


def _check_modes(M):
    if M < 16 or M & (M - 1):
        raise ValidationError(f"truncation order must be a power of two >= 16, got {M}")


def solve_collocation(jump: JumpMatrix, M: int = DEFAULT_MODES, check_tail: bool = True,
                      tail_tol: float = TAIL_TOL) -> RhpSolution:
    """Dense Laurent-mode solve of mu - C_-(mu (J - I)) = I."""
    _check_modes(M)
    P = 4 * M
    Z = _grid(P)
    JmI = jump(Z) - I2
    if not np.all(np.isfinite(JmI)):
        raise NumericalError("jump matrix is not finite on the circle")
    f = _modes(JmI, P)                 # k = -2M .. 2M-1
    n = 2 * M
    ks = np.arange(-M, M)
    diff = ks[:, None] - ks[None, :]   # in (-2M, 2M)
    neg = ks < 0
    A = np.eye(2 * n, dtype=complex)
    for a in range(2):
        for b in range(2):
            # row vector product: (mu (J - I))_b = sum_a mu_a (J - I)_ab
            blk = f[diff + 2 * M, a, b]
            blk[~neg, :] = 0
            A[b * n:(b + 1) * n, a * n:(a + 1) * n] += blk
    rhs = np.zeros((2 * n, 2), complex)
    rhs[M, 0] = 1.0        # mode 0 of component 0 for row 0
    rhs[n + M, 1] = 1.0
    try:
        sol = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"collocation operator is singular at M = {M}") from exc
    coeffs = np.empty((n, 2, 2), complex)
    for r in range(2):
        for a in range(2):
            coeffs[:, r, a] = sol[a * n:(a + 1) * n, r]
    mu = LaurentSeries(coeffs, -M)
    return _finish(mu, JmI, Z, P, M, "collocation", check_tail, tail_tol)


def jump_sup_norm(jump: JumpMatrix, P: int = 512) -> float:
    JmI = jump(_grid(P)) - I2
    return float(np.max(np.linalg.norm(JmI, ord=2, axis=(-2, -1))))


def solve_neumann(jump: JumpMatrix, M: int = DEFAULT_MODES, max_terms: int = 200,
                  tol: float = 1e-14, check_tail: bool = True,
                  tail_tol: float = TAIL_TOL) -> RhpSolution:
    """Iterate mu <- I + C_-(mu (J - I)); C_- has unit norm, so ||J - I|| < 1 suffices."""
    _check_modes(M)
    P = 4 * M
    Z = _grid(P)
    JmI = jump(Z) - I2
    norm = float(np.max(np.linalg.norm(JmI, ord=2, axis=(-2, -1))))
    if not norm < 1.0:
        raise DivergenceError(f"jump is not contractive: sup ||J - I|| = {norm:.4g} >= 1", norm=norm)
    ks = np.arange(-M, M)
    coeffs = np.zeros((2 * M, 2, 2), complex)
    coeffs[M] = I2
    mu = LaurentSeries(coeffs, -M)
    for it in range(1, max_terms + 1):
        g = _modes(mu(Z) @ JmI, P)
        new = np.zeros_like(coeffs)
        new[M] = I2
        gk = g[ks + 2 * M]
        new[ks < 0] -= gk[ks < 0]
        step = float(np.max(np.abs(new - mu.coeffs)))
        mu = LaurentSeries(new, -M)
        if step < tol:
            sol = _finish(mu, JmI, Z, P, M, "neumann", check_tail, tail_tol)
            sol.diagnostics["terms"] = it
            return sol
    raise NoConvergenceError(f"Neumann series not converged after {max_terms} terms")


def solve(jump: JumpMatrix, M: Optional[int] = None, max_M: int = MAX_MODES,
          tail_tol: float = TAIL_TOL) -> RhpSolution:
    """Collocation with doubling of M until the Laurent tail is resolved.

    A tail that does not drop by at least PLATEAU_DROP when M doubles is a
    roundoff floor (large jump entries amplify rounding), not truncation;
    that solution is accepted with diagnostics["floor"] = True.
    """
    M = DEFAULT_MODES if M is None else M
    prev = None
    while True:
        sol = solve_collocation(jump, M, check_tail=False)
        tail = sol.diagnostics["tail"]
        sol.diagnostics["floor"] = False
        if tail <= resolution_threshold(tail_tol, sol.diagnostics["jump_norm"]):
            return sol
        if prev is not None and tail > prev / PLATEAU_DROP:
            sol.diagnostics["floor"] = True
            return sol
        if 2 * M > max_M:
            raise ResolutionError(f"Laurent tail {tail:.3g} exceeds {tail_tol:g} at the cap M = {M}",
                                  modes=M, tail=tail)
        prev = tail
        M *= 2


def evaluate_off_contour(sol: RhpSolution, Z) -> np.ndarray:
    """E(Z) from the Cauchy representation, away from |Z| = 1."""
    Z = np.asarray(Z, complex)
    r = np.abs(Z)
    if np.any(np.abs(r - 1.0) < NEAR_CONTOUR):
        raise GeometryError("evaluation point within 1e-6 of the contour; use boundary values")
    ks, c = sol.g.ks, sol.g.coeffs
    pos, neg = ks >= 0, ks < 0
    # only the powers that decay on each side, so no inf * 0 far from the circle
    inside = np.tensordot(Z[..., None] ** ks[pos], c[pos], axes=([-1], [0]))
    outside = -np.tensordot(Z[..., None] ** ks[neg], c[neg], axes=([-1], [0]))
    out = np.where((r < 1)[..., None, None], inside, outside)
    return I2 + out


def extract_potential(sol: RhpSolution, tol: float = 1e-8):
    """(Psi, m) from R1 = (1/2i) [[-m, Psi], [conj Psi, m]].

    For Schwartz-symmetric jumps this forces (R1)_21 = -conj((R1)_12),
    (R1)_11 = -(R1)_22 and real m; each is checked.  Rounding is amplified
    by roughly the square of the largest jump entry, so the tolerance is
    raised to ROUNDOFF * |J|^2 when that is larger.
    """
    R1 = sol.R1
    psi = 2j * R1[0, 1]
    m = 2j * R1[1, 1]
    jn = sol.diagnostics.get("jump_norm", 1.0)
    tol = max(tol, ROUNDOFF * jn * jn)
    scale = max(1.0, float(np.max(np.abs(R1))))
    bad = []
    if abs(m.imag) > tol * scale:
        bad.append(f"Im m = {m.imag:.3g}")
    if abs(R1[1, 0] + np.conj(R1[0, 1])) > tol * scale:
        bad.append(f"|R1_21 + conj R1_12| = {abs(R1[1, 0] + np.conj(R1[0, 1])):.3g}")
    if abs(R1[0, 0] + R1[1, 1]) > tol * scale:
        bad.append(f"|tr R1| = {abs(R1[0, 0] + R1[1, 1]):.3g}")
    if bad:
        raise StructureError("R1 violates the Schwartz structure: " + "; ".join(bad))
    return complex(psi), float(m.real)
