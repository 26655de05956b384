"""Painleve transcendents from the model potentials and residual checks.

At T = 0 the model potentials encode Painleve solutions:

* PIII: u(x) = 2 f / f' with f(x) = x^2 Psi_III(-x^2/8, 0),
* PV:   u(2 i zeta X) = f' / (f' - 2 i zeta f) with f(X) = X Psi_V(X, 0),

so only logarithmic derivatives are needed and no normalizing constant.
Writing u as a ratio of f and f' keeps it smooth through zeros of Psi.
All derivatives are centered finite differences of order 2 or 4 on
uniform grids.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import models, rhp
from .errors import GeometryError, SingularPointError, ValidationError
from .soliton import WaveField

S3 = np.diag([1.0, -1.0]).astype(complex)

_D1 = {2: (np.array([-0.5, 0.0, 0.5]), 1),
       4: (np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0, 2)}
_D2 = {2: (np.array([1.0, -2.0, 1.0]), 1),
       4: (np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0, 2)}


@dataclass
class SampledFunction:
    """Complex samples on a uniform, strictly monotone real grid."""

    abscissae: np.ndarray
    values: np.ndarray
    order: int = 2

    def __post_init__(self):
        self.abscissae = np.asarray(self.abscissae, float)
        self.values = np.asarray(self.values, complex)
        if self.order not in (2, 4):
            raise ValidationError("stencil order must be 2 or 4")
        if self.abscissae.shape != self.values.shape or self.abscissae.ndim != 1:
            raise ValidationError("abscissae and values must be matching 1-d arrays")
        if len(self.abscissae) < self.order + 2:
            raise ValidationError(f"need at least {self.order + 2} points for order {self.order}")
        d = np.diff(self.abscissae)
        if not (np.all(d > 0) or np.all(d < 0)):
            raise ValidationError("grid must be strictly monotone")
        if np.max(np.abs(d - d[0])) > 1e-9 * abs(d[0]) * len(d):
            raise ValidationError("grid must be uniform")

    @property
    def h(self) -> float:
        return float(self.abscissae[1] - self.abscissae[0])


def _apply(values, weights, h, power):
    w = len(weights) // 2
    n = len(values)
    out = np.zeros(n - 2 * w, complex)
    for i, c in enumerate(weights):
        if c:
            out += c * values[i:n - 2 * w + i]
    return out / h ** power


def derivative(f: SampledFunction, k: int = 1):
    """(interior abscissae, k-th derivative) with the function's stencil order."""
    weights, w = (_D1 if k == 1 else _D2)[f.order]
    return f.abscissae[w:len(f.abscissae) - w], _apply(f.values, weights, f.h, k)


def find_zeros(x, g, reach: Optional[float] = None) -> np.ndarray:
    """Zeros of a sampled analytic function lying near the real grid.

    Each local minimum of |g| gives the Newton estimate z = x - g/g'; it is
    kept when |g/g'| < reach (default two grid cells).  Returns complex
    estimates; their imaginary parts are the distances off the axis.
    """
    x = np.asarray(x, float)
    g = np.asarray(g, complex)
    if len(x) < 3:
        return np.zeros(0, complex)
    h = x[1] - x[0]
    reach = 2 * abs(h) if reach is None else reach
    gp = np.gradient(g, h)
    a = np.abs(g)
    out = []
    for i in range(1, len(x) - 1):
        if a[i] <= a[i - 1] and a[i] <= a[i + 1] and gp[i] != 0:
            step = g[i] / gp[i]
            if abs(step) < reach:
                out.append(x[i] - step)
    return np.array(out, complex)


def _mask(x, singular, window):
    keep = np.ones(len(x), bool)
    for s in singular:
        keep &= np.abs(x - s) >= window
    return keep


# ------------------------------------------------------------------- PIII

def _ratio(f: SampledFunction):
    xs, fp = derivative(f, 1)
    w = (len(f.values) - len(fp)) // 2
    fv = f.values[w:len(f.values) - w]
    return xs, fv, fp


def extract_u_piii(psi_samples: SampledFunction, tol: float = 1e-12) -> SampledFunction:
    """u = 2 / (d/dx ln(x^2 Psi(-x^2/8, 0))) evaluated as 2 f / f'."""
    x = psi_samples.abscissae
    if np.any(x <= 0):
        raise ValidationError("PIII extraction needs a grid with x > 0")
    f = SampledFunction(x, x ** 2 * psi_samples.values, psi_samples.order)
    xs, fv, fp = _ratio(f)
    scale = np.max(np.abs(fv)) / max(abs(x[-1] - x[0]), 1e-300)
    bad = np.abs(fp) <= tol * scale
    if np.any(bad):
        raise SingularPointError("logarithmic derivative vanishes (u unbounded)", xs[bad])
    return SampledFunction(xs, 2.0 * fv / fp, psi_samples.order)


def piii_residual_profile(u: SampledFunction, floor: float = 1e-12):
    """Pointwise |u'' - u'^2/u + u'/x - 4/x - 4u^3 + 4/u| on the interior."""
    xs, up = derivative(u, 1)
    _, upp = derivative(u, 2)
    w = (len(u.values) - len(up)) // 2
    uu = u.values[w:len(u.values) - w]
    small = np.abs(uu) < floor
    if np.any(small):
        raise SingularPointError("u vanishes on the grid", xs[small])
    r = upp - up ** 2 / uu + up / xs - 4.0 / xs - 4.0 * uu ** 3 + 4.0 / uu
    return xs, np.abs(r)


def piii_residual(u: SampledFunction, exclude: Sequence[float] = (), window: float = 0.0) -> float:
    """Max residual over interior points at least ``window`` from each excluded abscissa."""
    xs, r = piii_residual_profile(u)
    keep = _mask(xs, exclude, window)
    if not np.any(keep):
        raise ValidationError("no grid points left after exclusion")
    return float(np.max(r[keep]))


# --------------------------------------------------------------------- PV

@dataclass(frozen=True)
class PainleveParams:
    """PV coefficients from the monodromy exponents.

    alpha = (t0 - t1 + tinf)^2 / 8, beta = -(t0 - t1 - tinf)^2 / 8,
    gamma = 1 - t0 - t1, delta = -1/2.  ``sign`` selects the +- in front of
    1/(u - 1).
    """

    case: str
    theta_0: complex = 0j
    theta_1: complex = 0j
    theta_inf: complex = 0j
    sign: int = 1

    @classmethod
    def pv(cls, mu_mean, zeta, sign=1) -> "PainleveParams":
        th = 2j * mu_mean / zeta
        return cls("PV", th, -th, 0j, sign)

    @property
    def alpha(self):
        return (self.theta_0 - self.theta_1 + self.theta_inf) ** 2 / 8

    @property
    def beta(self):
        return -((self.theta_0 - self.theta_1 - self.theta_inf) ** 2) / 8

    @property
    def gamma(self):
        return 1 - self.theta_0 - self.theta_1

    @property
    def delta(self):
        return -0.5


def extract_u_pv(psi_samples: SampledFunction, zeta: float, tol: float = 1e-12,
                 literal: bool = False) -> SampledFunction:
    """u at s = 2 i zeta X from Psi_V(X, 0).

    u = (1 - 2 i zeta / L)^{-1} with L = d/dX ln(X Psi), computed as
    f' / (f' - 2 i zeta f).  ``literal=True`` drops the zeta factor, i.e.
    u = (1 - 2 i / L)^{-1}; that variant does not satisfy PV and is kept
    only so the discrepancy can be demonstrated.
    """
    X = psi_samples.abscissae
    if np.any(X == 0):
        raise ValidationError("PV extraction grid must avoid X = 0")
    c = 2j * (1.0 if literal else zeta)
    f = SampledFunction(X, X * psi_samples.values, psi_samples.order)
    xs, fv, fp = _ratio(f)
    den = fp - c * fv
    scale = np.max(np.abs(fv)) / max(abs(X[-1] - X[0]), 1e-300)
    bad = (np.abs(den) <= tol * scale) | (np.abs(fp) <= tol * scale)
    if np.any(bad):
        raise SingularPointError("extraction singular (log-derivative at 0 or at the pole)", xs[bad])
    return SampledFunction(xs, fp / den, psi_samples.order)


def pv_residual_profile(u: SampledFunction, params: PainleveParams, zeta: float,
                        floor: float = 1e-12):
    """Pointwise PV residual with x = 2 i zeta X, the grid stored in X."""
    s = 2j * zeta
    Xs, up = derivative(u, 1)
    _, upp = derivative(u, 2)
    up, upp = up / s, upp / s ** 2
    w = (len(u.values) - len(up)) // 2
    uu = u.values[w:len(u.values) - w]
    bad = (np.abs(uu) < floor) | (np.abs(uu - 1) < floor)
    if np.any(bad):
        raise SingularPointError("u hits 0 or 1 on the grid", Xs[bad])
    x = s * Xs
    a, b, g, d = params.alpha, params.beta, params.gamma, params.delta
    rhs = ((1 / (2 * uu) + params.sign / (uu - 1)) * up ** 2 - up / x
           + (uu - 1) ** 2 * (a * uu + b / uu) / x ** 2 + g * uu / x + d * uu * (uu + 1) / (uu - 1))
    return Xs, np.abs(upp - rhs)


def pv_residual(u: SampledFunction, params: PainleveParams, zeta: float,
                exclude: Sequence[float] = (), window: float = 0.0) -> float:
    Xs, r = pv_residual_profile(u, params, zeta)
    keep = _mask(Xs, exclude, window)
    if not np.any(keep):
        raise ValidationError("no grid points left after exclusion")
    return float(np.max(r[keep]))


# -------------------------------------------------------------------- NLS

def nls_residual_profile(field: WaveField) -> np.ndarray:
    """|i psi_t + psi_xx / 2 + |psi|^2 psi| on interior points, second order."""
    x, t, v = field.x, field.t, field.values
    if len(x) < 5 or len(t) < 5:
        raise ValidationError("NLS residual needs at least 5 points per axis")
    hx, ht = x[1] - x[0], t[1] - t[0]
    if np.ptp(np.diff(x)) > 1e-9 * abs(hx) or np.ptp(np.diff(t)) > 1e-9 * abs(ht):
        raise ValidationError("NLS residual needs uniform grids")
    c = v[1:-1, 1:-1]
    pt = (v[2:, 1:-1] - v[:-2, 1:-1]) / (2 * ht)
    pxx = (v[1:-1, 2:] - 2 * c + v[1:-1, :-2]) / hx ** 2
    return np.abs(1j * pt + 0.5 * pxx + np.abs(c) ** 2 * c)


def nls_residual(field: WaveField) -> float:
    return float(np.max(nls_residual_profile(field)))


# -------------------------------------------------------------------- Lax

def _pv_solution(X, zeta, mu_mean, M):
    return models.solve_model(models.ModelParams("PV", X, 0.0, zeta, mu_mean), M)[2]


def pv_lax_matrix(X, Z, R1, dXR1, zeta, mu_mean, literal=False):
    """Lambda = -iX s3 + A/Z + B/(Z + zeta) with B = (d_X(X R1) - i mu s3)/zeta.

    ``literal=True`` uses B = d_X(X R1) - i (mu/zeta) s3 and A = i X [s3, R1]
    - d_X(X R1) + i (mu/zeta) s3 instead, which misses the zeta scaling.
    """
    comm = S3 @ R1 - R1 @ S3
    if literal:
        B = dXR1 - 1j * (mu_mean / zeta) * S3
        A = 1j * X * comm - dXR1 + 1j * (mu_mean / zeta) * S3
    else:
        B = (dXR1 - 1j * mu_mean * S3) / zeta
        A = 1j * X * comm - B
    return -1j * X * S3 + A / Z + B / (Z + zeta)


def pv_W(sol: rhp.RhpSolution, X, Z, zeta, mu_mean):
    R = rhp.evaluate_off_contour(sol, Z)
    phi = X * Z + (mu_mean / zeta) * np.log((Z + zeta) / Z)
    return R @ np.diag([np.exp(-1j * phi), np.exp(1j * phi)])


def lax_residual_pv(X: float, zeta: float, mu_mean: float, Z_samples, h: float = 1e-3,
                    hz: float = 1e-4, M: Optional[int] = 64, literal: bool = False) -> float:
    """max over Z of |W_Z - Lambda W| with W built from off-contour solves.

    d_X(X R1) uses a centered X-step h; W_Z a centered Z-step hz.
    """
    Z_samples = np.atleast_1d(np.asarray(Z_samples, complex))
    for Z in Z_samples:
        if abs(abs(Z) - 1) < 0.05 or abs(Z) < 0.05 or abs(Z + zeta) < 0.05:
            raise GeometryError(f"Z = {Z} too close to the circle or to 0, -zeta")
        if abs(Z.imag) < 0.05 and -zeta - 0.05 <= Z.real <= 0.05:
            raise GeometryError(f"Z = {Z} on the branch cut [-zeta, 0]")
    sols = {s: _pv_solution(X + s * h, zeta, mu_mean, M) for s in (-1, 0, 1)}
    dXR1 = ((X + h) * sols[1].R1 - (X - h) * sols[-1].R1) / (2 * h)
    sol = sols[0]
    worst = 0.0
    for Z in Z_samples:
        WZ = (pv_W(sol, X, Z + hz, zeta, mu_mean) - pv_W(sol, X, Z - hz, zeta, mu_mean)) / (2 * hz)
        W = pv_W(sol, X, Z, zeta, mu_mean)
        L = pv_lax_matrix(X, Z, sol.R1, dXR1, zeta, mu_mean, literal)
        worst = max(worst, float(np.max(np.abs(WZ - L @ W))))
    return worst


# --------------------------------------------------------------- chains

@dataclass
class ChainResult:
    case: str
    h: float
    order: int
    M: int
    residual: float
    singular: list = field(default_factory=list)
    window: float = 0.0


def _grid(lo, hi, h, pad):
    n = int(round((hi - lo) / h))
    return lo - pad * h + h * np.arange(n + 1 + 2 * pad)


def piii_chain(h: float, lo: float = 0.5, hi: float = 3.0, order: int = 4, M: int = 64,
               window: float = 0.15) -> ChainResult:
    """Solve -> extract u -> PIII residual on [lo, hi].

    Residuals are measured at least ``window`` away from points where u hits
    the singular values 0 or infinity of the equation (zeros of f and f'),
    counting zeros up to ``window`` off the real axis.
    """
    pad = 2 * (order // 2) + 1
    x = _grid(lo, hi, h, pad)
    psi = models.model_profile("PIII", tuple(-x ** 2 / 8), 0.0, M=M)
    f = SampledFunction(x, x ** 2 * psi, order)
    xs, fv, fp = _ratio(f)
    zs = np.concatenate([find_zeros(x, f.values, window), find_zeros(xs, fp, window)])
    singular = sorted(set(np.round(zs.real, 6)))
    u = extract_u_piii(SampledFunction(x, psi, order))
    xr, r = piii_residual_profile(u)
    keep = _mask(xr, singular, window) & (xr >= lo - 1e-12) & (xr <= hi + 1e-12)
    return ChainResult("PIII", h, order, M, float(np.max(r[keep])), list(singular), window)


def pv_chain(h: float, zeta: float = 0.3, mu_mean: float = 2.0, lo: float = 0.5, hi: float = 3.0,
             order: int = 4, M: int = 64, window: float = 0.15, sign: int = 1) -> ChainResult:
    """Solve -> extract u -> PV residual on X in [lo, hi].

    Points within ``window`` of u in {0, 1, inf} are excluded, including
    such points up to ``window`` off the real axis.
    """
    pad = 2 * (order // 2) + 1
    X = _grid(lo, hi, h, pad)
    psi = models.model_profile("PV", tuple(X), 0.0, zeta, mu_mean, M)
    f = SampledFunction(X, X * psi, order)
    xs, fv, fp = _ratio(f)
    zs = np.concatenate([find_zeros(X, f.values, window), find_zeros(xs, fp, window),
                         find_zeros(xs, fp - 2j * zeta * fv, window)])
    singular = sorted(set(np.round(zs.real, 6)))
    u = extract_u_pv(SampledFunction(X, psi, order), zeta)
    Xr, r = pv_residual_profile(u, PainleveParams.pv(mu_mean, zeta, sign), zeta)
    keep = _mask(Xr, singular, window) & (Xr >= lo - 1e-12) & (Xr <= hi + 1e-12)
    return ChainResult("PV", h, order, M, float(np.max(r[keep])), list(singular), window)


def nls_residual_at(evaluator, x, t, h: float) -> np.ndarray:
    """Residual at fixed points from a five-point cross stencil of step h.

    ``evaluator(x, t)`` returns psi at scalar arguments.  Keeping the points
    fixed while h shrinks isolates the O(h^2) truncation term.
    """
    x = np.atleast_1d(np.asarray(x, float))
    t = np.atleast_1d(np.asarray(t, float))
    if x.shape != t.shape:
        raise ValidationError("x and t must have the same shape")
    out = np.empty(len(x))
    for i, (xv, tv) in enumerate(zip(x, t)):
        c = evaluator(xv, tv)
        pxx = (evaluator(xv + h, tv) - 2 * c + evaluator(xv - h, tv)) / h ** 2
        pt = (evaluator(xv, tv + h) - evaluator(xv, tv - h)) / (2 * h)
        out[i] = abs(1j * pt + 0.5 * pxx + abs(c) ** 2 * c)
    return out


def model_evaluator(case: str, zeta=None, mu_mean=None, M: Optional[int] = 64):
    """(X, T) -> Psi of the model problem."""
    def ev(X, T):
        return models.solve_model(models.ModelParams(case, float(X), float(T), zeta, mu_mean), M)[0]
    return ev
