"""Random scattering data for reflectionless focusing NLS.

Eigenvalues live in the upper half plane.  Each carries a Darboux
parameter p_n (used by the dressing recursion) and a norming constant c_n
(used by the residue-condition formulation); the two are tied by a
product formula that this module evaluates in log space, since for a few
hundred eigenvalues the products overflow binary64.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import DataIOError, IllConditionedError, ValidationError

SEPARATION_FLOOR = 1e-8
MAX_RESAMPLE = 8

_KINDS = ("chi2", "gauss", "exp", "const")


@dataclass(frozen=True)
class Distribution:
    """One of four scalar laws.

    ``params`` holds (alpha,) for chi2, (mean, variance) for gauss,
    (rate,) for exp and (value,) for const.
    """

    kind: str
    params: tuple

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValidationError(f"unknown distribution kind {self.kind!r}")
        want = {"chi2": 1, "gauss": 2, "exp": 1, "const": 1}[self.kind]
        if len(self.params) != want:
            raise ValidationError(f"{self.kind} takes {want} parameter(s), got {len(self.params)}")
        p = [float(v) for v in self.params]
        if not all(math.isfinite(v) for v in p):
            raise ValidationError(f"non-finite parameter in {self.kind}")
        if self.kind in ("chi2", "exp") and p[0] <= 0:
            raise ValidationError(f"{self.kind} parameter must be positive")
        if self.kind == "gauss" and p[1] <= 0:
            raise ValidationError("gaussian variance must be positive")
        object.__setattr__(self, "params", tuple(p))

    @classmethod
    def parse(cls, spec: str) -> "Distribution":
        """Parse the ``kind:param[:param]`` flag grammar, e.g. ``chi2:4``."""
        parts = spec.strip().split(":")
        aliases = {"chi2": "chi2", "chisq": "chi2", "gauss": "gauss", "gaussian": "gauss",
                   "normal": "gauss", "exp": "exp", "exponential": "exp",
                   "const": "const", "constant": "const"}
        kind = aliases.get(parts[0].lower())
        if kind is None:
            raise ValidationError(f"unknown distribution {parts[0]!r} in {spec!r}")
        try:
            params = tuple(float(v) for v in parts[1:])
        except ValueError as exc:
            raise ValidationError(f"bad distribution parameter in {spec!r}") from exc
        return cls(kind, params)

    @property
    def mean(self) -> float:
        k, p = self.kind, self.params
        if k == "chi2":
            return p[0]
        if k == "gauss":
            return p[0]
        if k == "exp":
            return 1.0 / p[0]
        return p[0]

    @property
    def positive(self) -> bool:
        return self.kind in ("chi2", "exp") or (self.kind == "const" and self.params[0] > 0)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        k, p = self.kind, self.params
        if k == "chi2":
            return rng.chisquare(p[0], size)
        if k == "gauss":
            return rng.normal(p[0], math.sqrt(p[1]), size)
        if k == "exp":
            return rng.exponential(1.0 / p[0], size)
        return np.full(size, p[0])

    def describe(self) -> str:
        return self.kind + "".join(f":{v!r}" for v in self.params)


@dataclass(frozen=True)
class RandomEnsembleConfig:
    case: str  # "PIII" or "PV"
    N: int
    amplitude_dist: Distribution
    velocity_dist: Distribution
    realizations: int = 10
    seed: int = 0
    zeta: Optional[float] = None

    def __post_init__(self):
        case = str(self.case).upper()
        if case not in ("PIII", "PV"):
            raise ValidationError(f"case: expected PIII or PV, got {self.case!r}")
        object.__setattr__(self, "case", case)
        if int(self.N) < 1:
            raise ValidationError("N: must be a positive integer")
        if int(self.realizations) < 1:
            raise ValidationError("realizations: must be at least 1")
        if case == "PV":
            if self.zeta is None or not (0.0 < float(self.zeta) < 1.0):
                raise ValidationError("zeta: PV requires 0 < zeta < 1")
        elif self.zeta is not None:
            raise ValidationError("zeta: only meaningful for PV")
        if not self.amplitude_dist.positive:
            raise ValidationError("amplitude_dist: must have positive support")
        if not 0 <= int(self.seed) < 2**64:
            raise ValidationError("seed: must fit in 64 bits unsigned")


@dataclass(frozen=True)
class SpectralData:
    """Reflectionless scattering data.

    ``log_norming`` stores log c_n (principal branch per factor) so that the
    constants stay representable for large N; ``norming_constants`` gives
    the exponentiated values.
    """

    eigenvalues: np.ndarray
    darboux_params: np.ndarray
    log_norming: Optional[np.ndarray] = None
    drift: Optional[float] = None
    seed: Optional[int] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        lam = np.atleast_1d(np.asarray(self.eigenvalues, dtype=complex))
        p = np.atleast_1d(np.asarray(self.darboux_params, dtype=complex))
        if lam.ndim != 1 or p.shape != lam.shape:
            raise ValidationError("eigenvalues and darboux_params must be 1-d of equal length")
        if np.any(lam.imag <= 0):
            raise ValidationError("eigenvalues must lie in the upper half plane")
        if np.any(p == 0):
            raise ValidationError("darboux parameters must be nonzero")
        check_separation(lam)
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "darboux_params", p)
        if self.log_norming is not None:
            lc = np.atleast_1d(np.asarray(self.log_norming, dtype=complex))
            if lc.shape != lam.shape:
                raise ValidationError("norming constants must match eigenvalues")
            object.__setattr__(self, "log_norming", lc)

    @property
    def n(self) -> int:
        return len(self.eigenvalues)

    @property
    def norming_constants(self) -> Optional[np.ndarray]:
        if self.log_norming is None:
            return None
        with np.errstate(over="ignore"):
            return np.exp(self.log_norming)

    @classmethod
    def from_eigenvalues(cls, eigenvalues, darboux_params=None, **kw) -> "SpectralData":
        """Build data with p_n (default 1) and matching norming constants."""
        lam = np.atleast_1d(np.asarray(eigenvalues, dtype=complex))
        p = np.ones(len(lam), complex) if darboux_params is None else darboux_params
        lc = log_norming_constants(lam, p) if len(lam) else np.zeros(0, complex)
        return cls(lam, p, lc, **kw)

    @classmethod
    def from_norming(cls, eigenvalues, norming_constants, **kw) -> "SpectralData":
        lam = np.atleast_1d(np.asarray(eigenvalues, dtype=complex))
        c = np.atleast_1d(np.asarray(norming_constants, dtype=complex))
        p = darboux_from_norming(lam, c)
        return cls(lam, p, np.log(c), **kw)

    def to_json(self) -> str:
        return json.dumps(spectral_to_dict(self))


def check_separation(lam: np.ndarray, floor: float = SEPARATION_FLOOR):
    if len(lam) < 2:
        return
    d = np.abs(lam[:, None] - lam[None, :])
    np.fill_diagonal(d, np.inf)
    i, j = np.unravel_index(np.argmin(d), d.shape)
    if d[i, j] < floor:
        raise IllConditionedError(
            f"eigenvalues {i} and {j} are {d[i, j]:.3g} apart (floor {floor:g})",
            condition=float(1.0 / max(d[i, j], 1e-300)))


def _log_products(lam: np.ndarray) -> np.ndarray:
    """sum_l log(lam_n - conj lam_l) - sum_{l != n} log(lam_n - lam_l)."""
    d_conj = lam[:, None] - lam.conj()[None, :]
    d_same = lam[:, None] - lam[None, :]
    np.fill_diagonal(d_same, 1.0)
    return np.log(d_conj).sum(axis=1) - np.log(d_same).sum(axis=1)


def log_norming_constants(eigenvalues, darboux_params) -> np.ndarray:
    lam = np.atleast_1d(np.asarray(eigenvalues, dtype=complex))
    p = np.atleast_1d(np.asarray(darboux_params, dtype=complex))
    if np.any(lam.imag <= 0):
        raise ValidationError("eigenvalues must lie in the upper half plane")
    if np.any(p == 0):
        raise ValidationError("darboux parameters must be nonzero")
    check_separation(lam)
    return _log_products(lam) - np.log(p)


def norming_constants_from_darboux(eigenvalues, darboux_params) -> np.ndarray:
    """c_n = (1/p_n) prod_l (lam_n - conj lam_l) / prod_{l != n} (lam_n - lam_l)."""
    with np.errstate(over="ignore"):
        return np.exp(log_norming_constants(eigenvalues, darboux_params))


def darboux_from_norming(eigenvalues, norming_constants) -> np.ndarray:
    lam = np.atleast_1d(np.asarray(eigenvalues, dtype=complex))
    c = np.atleast_1d(np.asarray(norming_constants, dtype=complex))
    if np.any(c == 0) or not np.all(np.isfinite(c)):
        raise ValidationError("norming constants must be finite and nonzero")
    check_separation(lam)
    return np.exp(_log_products(lam) - np.log(c))


def evolve_spectral_data(data: SpectralData, t: float) -> SpectralData:
    """Move the data to time t: c_n -> c_n e^{2it lam^2}, p_n -> p_n e^{-2it lam^2}."""
    if t == 0:
        return data
    ph = 2j * t * data.eigenvalues ** 2
    lc = None if data.log_norming is None else data.log_norming + ph
    return replace(data, darboux_params=data.darboux_params * np.exp(-ph), log_norming=lc)


def _stream(seed: int, realization: int, stream: int, attempt: int) -> np.random.Generator:
    key = (realization, stream) if attempt == 0 else (realization, stream, attempt)
    ss = np.random.SeedSequence(entropy=seed, spawn_key=key)
    return np.random.Generator(np.random.Philox(ss))


def sample_ensemble(config: RandomEnsembleConfig, realization_index: int) -> SpectralData:
    """Draw one realization.

    Amplitudes and velocities come from separate Philox substreams keyed by
    (seed, realization, stream), so realization r is reproducible on its own
    and the first n draws do not depend on N.
    """
    if not 0 <= realization_index < config.realizations:
        raise ValidationError(f"realization_index {realization_index} out of range")
    N = int(config.N)
    for attempt in range(MAX_RESAMPLE):
        mu = config.amplitude_dist.sample(_stream(config.seed, realization_index, 0, attempt), N)
        v = config.velocity_dist.sample(_stream(config.seed, realization_index, 1, attempt), N)
        lam = v + 1j * mu
        if config.case == "PV":
            lam = lam - config.zeta * np.arange(1, N + 1)
        try:
            check_separation(lam)
        except IllConditionedError:
            continue
        meta = {"case": config.case, "N": N, "realization": realization_index,
                "amplitude": config.amplitude_dist.describe(),
                "velocity": config.velocity_dist.describe(), "attempt": attempt}
        return SpectralData.from_eigenvalues(lam, drift=config.zeta, seed=config.seed, meta=meta)
    raise IllConditionedError(f"eigenvalue collision persisted after {MAX_RESAMPLE} resamples")


def _pairs(z) -> list:
    return [[float(w.real), float(w.imag)] for w in np.asarray(z, complex)]


def spectral_to_dict(data: SpectralData) -> dict:
    c = data.norming_constants
    out = {"n": data.n, "zeta": data.drift,
           "eigenvalues": _pairs(data.eigenvalues),
           "p": _pairs(data.darboux_params),
           "c": None if c is None else [None if not np.isfinite(w) else [float(w.real), float(w.imag)]
                                        for w in c],
           "seed": data.seed}
    if data.log_norming is not None:
        out["log_c"] = _pairs(data.log_norming)
    if data.meta:
        out["meta"] = data.meta
    return out


def spectral_from_dict(d: dict) -> SpectralData:
    try:
        lam = np.array([complex(a, b) for a, b in d["eigenvalues"]], complex)
        p = np.array([complex(a, b) for a, b in d["p"]], complex) if d.get("p") else np.ones(len(lam))
        if d.get("log_c"):
            lc = np.array([complex(a, b) for a, b in d["log_c"]], complex)
        elif d.get("c") and all(w is not None for w in d["c"]):
            lc = np.log(np.array([complex(a, b) for a, b in d["c"]], complex))
        else:
            lc = log_norming_constants(lam, p) if len(lam) else np.zeros(0, complex)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed spectral data document: {exc}") from exc
    if "n" in d and d["n"] != len(lam):
        raise ValidationError("n does not match the number of eigenvalues")
    return SpectralData(lam, p, lc, drift=d.get("zeta"), seed=d.get("seed"), meta=d.get("meta", {}))


def load_spectral(path) -> SpectralData:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise DataIOError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON ({exc})") from exc
    return spectral_from_dict(doc)


def one_soliton(eta: float = 1.0, xi: float = 0.0, p: complex = 1.0) -> SpectralData:
    return SpectralData.from_eigenvalues([xi + 1j * eta], [p])
