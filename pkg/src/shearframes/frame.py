"""Frame potentials, frame bounds and dual reconstruction."""

from __future__ import annotations

import json
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from . import lattice
from .generators import BandlimitedGenerator, tile_coords
from .transform import SampledField, ShearletSystem


class NumericalFailure(ArithmeticError):
    """An iterative solver stopped short of its tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


# ---------------------------------------------------------------------------
# continuous potential

def frame_potential(generator, xi, j_max: int = 8, pyramids=None, tail_scales: int = 0):
    """|phi^(xi)|^2 + sum over pyramids, 0 <= j <= j_max and shears of |psi^_{j,k}(xi)|^2.

    ``xi`` has shape (..., d) in generator units.  Band-limited tiles are cut
    to their own pyramid, as in the digital system.  With ``tail_scales > 0``
    the return value is ``(potential, tail)`` where ``tail`` is the sum of the
    next ``tail_scales`` scales, an estimate of what the truncation drops.
    """
    xi = np.asarray(xi, dtype=float)
    d = xi.shape[-1]
    comps = [xi[..., i] for i in range(d)]
    tags = lattice.pyramid_tags(d) if pyramids is None else list(pyramids)
    owner = lattice.pyramid_mask(xi, d) if isinstance(generator, BandlimitedGenerator) else None

    def scale_sum(j):
        acc = np.zeros(xi.shape[:-1])
        for tag in tags:
            for k in lattice.shear_range(j, d):
                g = np.abs(generator.psi_hat(tile_coords(comps, tag, j, k, d))) ** 2
                if owner is not None:
                    g = g * (owner == tag.axis)
                acc = acc + g
        return acc

    out = np.abs(generator.phi_hat(comps)) ** 2
    for j in range(j_max + 1):
        out = out + scale_sum(j)
    if tail_scales <= 0:
        return out
    tail = sum(scale_sum(j) for j in range(j_max + 1, j_max + 1 + tail_scales))
    return out, tail


# ---------------------------------------------------------------------------
# digital frame operator

def apply_frame_operator(f, system: ShearletSystem) -> SampledField:
    arr = f.data if isinstance(f, SampledField) else np.asarray(f, dtype=float)
    return SampledField(system.frame_operator(arr))


def _operator(system: ShearletSystem):
    n = int(np.prod(system.shape))
    return spla.LinearOperator((n, n), dtype=float,
                               matvec=lambda v: system.frame_operator(v.reshape(system.shape)).ravel())


def _preconditioner(system: ShearletSystem):
    """Fourier multiplier 1/Phi, the exact inverse when sampling is dense."""
    n = int(np.prod(system.shape))
    pot = system.potential()
    inv = 1.0 / np.maximum(pot, 1e-12 * pot.max())
    return spla.LinearOperator((n, n), dtype=float,
                               matvec=lambda v: system.apply_multiplier(v.reshape(system.shape), inv).ravel())


def _plane_wave(system: ShearletSystem, where: str) -> np.ndarray:
    pot = system.potential()
    pos = np.unravel_index(int(np.argmax(pot) if where == "max" else np.argmin(pot)), pot.shape)
    spec = np.zeros(pot.shape, dtype=complex)
    spec[pos] = 1.0
    from scipy.fft import irfftn
    v = irfftn(spec, s=system.shape)
    if not np.any(v):
        v = np.ones(system.shape)
    return v / np.linalg.norm(v)


@dataclass
class FrameBoundEstimate:
    A_est: float
    B_est: float
    ratio: float
    method: str
    grid: list
    iterations: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "FrameBoundEstimate":
        return cls(**json.loads(text))


METHODS = ("operator-power-iteration", "operator-lobpcg", "grid-potential")
_ALIASES = {"power": "operator-power-iteration", "lobpcg": "operator-lobpcg", "potential": "grid-potential"}


def estimate_frame_bounds(system: ShearletSystem, tol: float = 1e-6, max_iter: int = 500,
                          method: str = "operator-power-iteration", seed: int = 0,
                          cg_tol: float = 1e-8) -> FrameBoundEstimate:
    """Extreme eigenvalues of the digital frame operator.

    ``operator-power-iteration`` runs power iteration for B and inverse
    iteration (each step a preconditioned CG solve) for A; both start from
    the plane wave at the extreme of the grid potential plus a small random
    part.  ``operator-lobpcg`` hands the same operator and preconditioner to
    scipy's LOBPCG, which converges in far fewer applications when the
    spectrum clusters near its ends.  ``grid-potential`` returns the extremes
    of the sampled potential, which are the exact bounds only when every
    tile is sampled on the full grid.
    """
    method = _ALIASES.get(method, method)
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    if method == "grid-potential":
        pot = system.potential()
        A, B = float(pot.min()), float(pot.max())
        if not A > 0:
            raise NumericalFailure("grid potential vanishes somewhere", A)
        return FrameBoundEstimate(A_est=A, B_est=B, ratio=B / A, method=method, grid=list(system.shape))
    rng = np.random.default_rng(seed)
    op = _operator(system)
    prec = _preconditioner(system)
    n = op.shape[0]

    def start(where):
        v = _plane_wave(system, where).ravel() + 1e-3 * rng.standard_normal(n) / np.sqrt(n)
        return v / np.linalg.norm(v)

    if method == "operator-lobpcg":
        B, itb, rb = _lobpcg(op, prec, start("max"), largest=True, tol=tol, max_iter=max_iter, rng=rng)
        A, ita, ra = _lobpcg(op, prec, start("min"), largest=False, tol=tol, max_iter=max_iter, rng=rng)
    else:
        B, itb, rb = _power(op, start("max"), tol, max_iter)
        A, ita, ra = _inverse_power(op, prec, start("min"), tol, max_iter, cg_tol)
    if not (A > 0 and np.isfinite(B)):
        raise NumericalFailure("frame bound estimate is not positive", float(ra))
    return FrameBoundEstimate(A_est=float(A), B_est=float(B), ratio=float(B / A), method=method,
                              grid=list(system.shape), iterations={"A": ita, "B": itb},
                              residuals={"A": float(ra), "B": float(rb)})


def constant_field_quotient(system: ShearletSystem) -> float:
    """<S 1, 1> / <1, 1>: the constant field's Rayleigh quotient.

    For compact generators every band-pass symbol vanishes at 0, so this is
    |phi^(0)|^2 = 1 and the constant field is an eigenvector.  It bounds A
    from above; on the grids checked here it is also the smallest eigenvalue,
    and it costs one application of S instead of an eigen-solve.
    """
    v = np.ones(system.shape) / np.sqrt(np.prod(system.shape))
    return float(np.sum(v * system.frame_operator(v)))


def _power(op, v, tol, max_iter):
    lam_old = None
    for it in range(1, max_iter + 1):
        w = op.matvec(v)
        lam = float(v @ w)
        w_norm = np.linalg.norm(w)
        resid = float(np.linalg.norm(w - lam * v) / max(abs(lam), 1e-300))
        v = w / w_norm
        if lam_old is not None and abs(lam - lam_old) <= tol * abs(lam):
            return lam, it, resid
        lam_old = lam
    raise NumericalFailure(f"power iteration did not reach tol {tol} in {max_iter} steps", resid)


def _inverse_power(op, prec, v, tol, max_iter, cg_tol):
    lam_old = None
    resid = np.inf
    for it in range(1, max_iter + 1):
        w = op.matvec(v)
        lam = float(v @ w)
        resid = float(np.linalg.norm(w - lam * v) / max(abs(lam), 1e-300))
        if lam_old is not None and abs(lam - lam_old) <= tol * abs(lam):
            return lam, it, resid
        lam_old = lam
        x = _pcg(op, prec, v, cg_tol, 1000)
        v = x / np.linalg.norm(x)
    raise NumericalFailure(f"inverse iteration did not reach tol {tol} in {max_iter} steps", resid)


def _lobpcg(op, prec, v, largest, tol, max_iter, rng=None, block=3, chunk=5):
    """LOBPCG restarted every ``chunk`` steps until the eigenvalue moves by <= tol (relative).

    scipy's own test needs every column of the block to converge in residual
    norm, which the helper columns reach long after the wanted eigenvalue has
    settled; the restart test matches the one used by power iteration.
    """
    # plane waves at the potential's extremes can be exact eigenvectors
    # (the constant field always is), so random columns keep the block
    # from stalling there
    rng = np.random.default_rng(0) if rng is None else rng
    X = np.column_stack([v] + [rng.standard_normal(v.size) for _ in range(block - 1)])
    lam_old, its = None, 0
    while True:
        with warnings.catch_warnings():
            # chunks end on maxiter by design
            warnings.simplefilter("ignore", UserWarning)
            vals, X = spla.lobpcg(op, X, M=prec, largest=largest, tol=1e-14, maxiter=chunk)
        its += chunk
        i = int(np.argmax(vals) if largest else np.argmin(vals))
        lam = float(vals[i])
        if lam_old is not None and abs(lam - lam_old) <= tol * abs(lam):
            break
        if its >= max_iter:
            break
        lam_old = lam
    x = X[:, i]
    resid = float(np.linalg.norm(op.matvec(x) - lam * x) / abs(lam))
    return lam, its, resid


def _pcg(op, prec, b, rtol, maxiter):
    x, info = spla.cg(op, b, rtol=rtol, maxiter=maxiter, M=prec)
    resid = float(np.linalg.norm(op.matvec(x) - b) / max(np.linalg.norm(b), 1e-300))
    if info != 0 and resid > 10 * rtol:
        raise NumericalFailure("conjugate gradients did not converge", resid)
    return x


# ---------------------------------------------------------------------------
# reconstruction

def dual_coefficients_to_field(coeffs, system: ShearletSystem, tol: float = 1e-10,
                               max_iter: int = 1000) -> SampledField:
    """sum_lambda c_lambda * (canonical dual atom), i.e. S^{-1} T^* c, by preconditioned CG."""
    vec = coeffs.values if hasattr(coeffs, "values") else np.asarray(coeffs, dtype=float)
    rhs = system.synthesize_vector(vec).ravel()
    if not np.any(rhs):
        return SampledField(np.zeros(system.shape))
    x = _pcg(_operator(system), _preconditioner(system), rhs, tol, max_iter)
    return SampledField(x.reshape(system.shape))
