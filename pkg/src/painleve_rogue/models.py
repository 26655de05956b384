"""Jump matrices and scalings for the Painleve-III / Painleve-V model problems
and for the finite-N soliton problem transplanted to a circle.

Every jump has the sandwich form J = e^{-i phi s3} S e^{i phi s3} with
S = [[1, 1], [-1, 1]] / sqrt(2):

* PIII model: phi = X Z + T Z^2 + 2 / Z
* PV model:   phi = X Z + T Z^2 + (mu / zeta) Log(1 + zeta / Z)
* N-soliton:  e^{-2 i phi} = a(z) e^{-2 i theta(z; x, t)} on |z| = radius, with
  a the Blaschke product of the eigenvalues.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from . import rhp
from .errors import GeometryError, ValidationError
from .spectral import SpectralData

SQRT_HALF = 1.0 / math.sqrt(2.0)
PIII_MARGIN = (7.0 / 8.0, 9.0 / 8.0)


@dataclass(frozen=True)
class ModelParams:
    case: str
    X: float = 0.0
    T: float = 0.0
    zeta: Optional[float] = None
    mu_mean: Optional[float] = None

    def __post_init__(self):
        case = str(self.case).upper()
        if case not in ("PIII", "PV"):
            raise ValidationError(f"case: expected PIII or PV, got {self.case!r}")
        object.__setattr__(self, "case", case)
        if not (math.isfinite(self.X) and math.isfinite(self.T)):
            raise ValidationError("X and T must be finite")
        if case == "PV":
            if self.zeta is None or not 0.0 < self.zeta < 1.0:
                raise ValidationError("zeta: PV requires 0 < zeta < 1")
            if self.mu_mean is None or not self.mu_mean > 0:
                raise ValidationError("mu_mean: PV requires a positive mean amplitude")


def sandwich(e_minus):
    """Jump entries from e^{-2 i phi} sampled on an array."""
    e_minus = np.asarray(e_minus, complex)
    J = np.empty(e_minus.shape + (2, 2), complex)
    J[..., 0, 0] = SQRT_HALF
    J[..., 1, 1] = SQRT_HALF
    J[..., 0, 1] = SQRT_HALF * e_minus
    J[..., 1, 0] = -SQRT_HALF / e_minus
    return J


def _sandwich_log(log_e):
    """Same as ``sandwich`` but from log e^{-2 i phi}, avoiding overflow in 1/e."""
    J = np.empty(np.shape(log_e) + (2, 2), complex)
    J[..., 0, 0] = SQRT_HALF
    J[..., 1, 1] = SQRT_HALF
    J[..., 0, 1] = SQRT_HALF * np.exp(log_e)
    J[..., 1, 0] = -SQRT_HALF * np.exp(-log_e)
    return J


def piii_exponent(Z, X, T):
    Z = np.asarray(Z, complex)
    return X * Z + T * Z ** 2 + 2.0 / Z


def pv_exponent(Z, X, T, zeta, mu_mean):
    """Principal branch of Log(1 + zeta/Z); analytic for |Z| > zeta."""
    Z = np.asarray(Z, complex)
    return X * Z + T * Z ** 2 + (mu_mean / zeta) * np.log1p(zeta / Z)


def piii_jump(params: ModelParams) -> rhp.JumpMatrix:
    X, T = params.X, params.T
    return rhp.JumpMatrix(lambda Z: _sandwich_log(-2j * piii_exponent(Z, X, T)),
                          margin=PIII_MARGIN, label="PIII")


def pv_margin(zeta):
    r_in = (1.0 + zeta) / 2.0
    return (r_in, 2.0 - r_in)


def pv_jump(params: ModelParams) -> rhp.JumpMatrix:
    if params.case != "PV":
        raise ValidationError("pv_jump needs PV parameters")
    X, T, z, m = params.X, params.T, params.zeta, params.mu_mean
    return rhp.JumpMatrix(lambda Z: _sandwich_log(-2j * pv_exponent(Z, X, T, z, m)),
                          margin=pv_margin(z), label="PV")


def model_jump(params: ModelParams) -> rhp.JumpMatrix:
    return piii_jump(params) if params.case == "PIII" else pv_jump(params)


def solve_model(params: ModelParams, M: Optional[int] = None, strict: bool = False):
    """(Psi, m, solution) for the model problem at (X, T).

    ``strict`` solves at exactly M and raises ResolutionError if the Laurent
    tail is not resolved there; otherwise M doubles as needed.
    """
    if strict:
        sol = rhp.solve_collocation(model_jump(params), rhp.DEFAULT_MODES if M is None else M)
    else:
        sol = rhp.solve(model_jump(params), M)
    psi, m = rhp.extract_potential(sol)
    return psi, m, sol


@lru_cache(maxsize=64)
def _profile_cached(case, X, T, zeta, mu_mean, M):
    out = []
    for x in X:
        psi, _, _ = solve_model(ModelParams(case, x, T, zeta, mu_mean), M)
        out.append(psi)
    return np.array(out)


def model_profile(case, X, T=0.0, zeta=None, mu_mean=None, M=None) -> np.ndarray:
    """Psi along an X grid; cached because it does not depend on the realization."""
    key = tuple(float(v) for v in np.atleast_1d(X))
    zeta = None if zeta is None else float(zeta)
    mu_mean = None if mu_mean is None else float(mu_mean)
    return _profile_cached(str(case).upper(), key, float(T), zeta, mu_mean, M).copy()


# ------------------------------------------------------------ finite N

def log_blaschke(z, eigenvalues):
    """log a(z) = sum log(z - lam) - log(z - conj lam), principal branch per factor."""
    z = np.asarray(z, complex)
    lam = np.asarray(eigenvalues, complex)
    return (np.log(z[..., None] - lam) - np.log(z[..., None] - lam.conj())).sum(axis=-1)


def blaschke(z, eigenvalues, log_space=True):
    if log_space:
        return np.exp(log_blaschke(z, eigenvalues))
    z = np.asarray(z, complex)
    out = np.ones(z.shape, complex)
    for lam in np.asarray(eigenvalues, complex):
        out = out * (z - lam) / (z - np.conj(lam))
    return out


def nsoliton_jump(data: SpectralData, x, t, radius) -> rhp.JumpMatrix:
    """Jump of the N-soliton problem on |z| = radius, expressed in Z = z / radius.

    J(z) = (1/sqrt 2) [[1, a e^{-2 i theta}], [-a^{-1} e^{2 i theta}, 1]].
    """
    lam = data.eigenvalues
    reach = float(np.max(np.abs(lam))) if data.n else 0.0
    if not reach < radius:
        raise GeometryError(f"eigenvalue of modulus {reach:.6g} not inside radius {radius:.6g}")
    r_in = (1.0 + reach / radius) / 2.0

    def ev(Z):
        z = radius * np.asarray(Z, complex)
        log_e = log_blaschke(z, lam) - 2j * (z * x + z * z * t)
        return _sandwich_log(log_e)

    return rhp.JumpMatrix(ev, margin=(r_in, 2.0 - r_in), label="N-soliton")


RADIUS_FACTORS = (1.1, 1.2, 1.5, 2.0, 3.0)


def default_radius(data: SpectralData, radius=None, x=0.0, t=0.0) -> float:
    """The requested radius if it encloses the eigenvalues; otherwise the
    candidate multiple of their reach with the smallest jump entries at (x, t)."""
    reach = float(np.max(np.abs(data.eigenvalues))) if data.n else 0.0
    if radius is not None and radius > reach:
        return float(radius)
    if reach == 0:
        return 1.0
    return _best_radius(data, x, t, [f * reach for f in RADIUS_FACTORS])


def nsoliton_rhp_evaluate(data: SpectralData, x, t, M=None, radius=None):
    """(psi_N, m_N) at (x, t) by solving the circle problem.

    Independent of the radius; a radius enclosing all eigenvalues is chosen
    if the requested one does not.
    """
    if data.n == 0:
        return 0j, 0.0
    rho = default_radius(data, radius, x, t)
    sol = rhp.solve(nsoliton_jump(data, x, t, rho), M)
    psi, m = rhp.extract_potential(sol)
    return rho * psi, rho * m


# ------------------------------------------------------------- scalings

@dataclass(frozen=True)
class ScalingMap:
    """(X, T) -> (x, t) and the amplitude factor for the rescaled soliton."""

    case: str
    N: int
    mu_mean: float

    @property
    def length(self) -> float:
        return 2.0 / (self.N * self.mu_mean) if self.case == "PIII" else 1.0 / self.N

    @property
    def amplitude(self) -> float:
        return self.length

    @property
    def radius(self) -> float:
        """Circle radius that maps onto the unit circle of the model problem."""
        return 1.0 / self.length

    def forward(self, X, T):
        L = self.length
        return np.asarray(X, float) * L, np.asarray(T, float) * L * L


def scaling_map(case, N, mu_mean=None) -> ScalingMap:
    case = str(case).upper()
    if N < 1:
        raise ValidationError("N must be at least 1")
    if case == "PIII":
        if mu_mean is None or mu_mean <= 0:
            raise ValidationError("PIII scaling needs a positive mean amplitude")
        return ScalingMap(case, int(N), float(mu_mean))
    if case == "PV":
        return ScalingMap(case, int(N), float(mu_mean) if mu_mean else 1.0)
    raise ValidationError(f"unknown case {case!r}")


def _best_radius(data: SpectralData, x, t, candidates) -> float:
    sizes = [rhp.jump_sup_norm(nsoliton_jump(data, x, t, r), 256) for r in candidates]
    return candidates[int(np.argmin(sizes))]


def rescaled_soliton(data: SpectralData, scaling: ScalingMap, X, T=0.0, M=None,
                     max_M: int = 1024) -> np.ndarray:
    """amplitude * psi_N(map(X, T)) along an X grid, via the circle problem.

    The circle of radius 1/length turns the problem into the model frame, so
    the solve is as well conditioned as the model solve itself.  Since the
    answer does not depend on the radius, each point uses whichever of that
    circle and a few multiples of the eigenvalue reach gives the smallest
    jump entries, which bounds the rounding floor.
    """
    reach = float(np.max(np.abs(data.eigenvalues)))
    cands = [f * reach for f in RADIUS_FACTORS]
    if scaling.radius > reach * RADIUS_FACTORS[0]:
        cands.insert(0, scaling.radius)
    out = []
    for Xv in np.atleast_1d(X):
        x, t = scaling.forward(Xv, T)
        x, t = float(x), float(t)
        rho = _best_radius(data, x, t, cands)
        sol = rhp.solve(nsoliton_jump(data, x, t, rho), M, max_M=max_M)
        psi, _ = rhp.extract_potential(sol)
        out.append(scaling.amplitude * rho * psi)
    return np.array(out)


# ------------------------------------------------------------ good sets

def in_omega(mu, v, delta) -> bool:
    """All amplitudes and velocities below N^delta in modulus."""
    N = len(mu)
    bound = N ** delta
    return bool(np.max(np.abs(mu)) < bound and np.max(np.abs(v)) < bound)


def in_v2delta(mu, mu_mean, delta) -> bool:
    """Partial-sum deviation |sum (mu_j - mean)| at most N^{2 delta}."""
    N = len(mu)
    return bool(abs(np.sum(np.asarray(mu) - mu_mean)) <= N ** (2 * delta))


def u2delta_statistic(mu, mu_mean, zeta, n_angles=None) -> float:
    """max over a circle net of |sum_j (mu_j - mean) / (Z + zeta j / N)|."""
    mu = np.asarray(mu, float)
    N = len(mu)
    n_angles = 4 * N if n_angles is None else n_angles
    Z = np.exp(2j * np.pi * np.arange(n_angles) / n_angles)
    poles = zeta * np.arange(1, N + 1) / N
    return float(np.max(np.abs((1.0 / (Z[:, None] + poles[None, :])) @ (mu - mu_mean))))


def in_u2delta(mu, mu_mean, zeta, delta, n_angles=None) -> bool:
    return u2delta_statistic(mu, mu_mean, zeta, n_angles) <= len(mu) ** (2 * delta)
