"""Cartoon phantoms f = f0 + f1 * chi_B on the unit cube, and the ball's Fourier transform.

All samples are cell averages estimated from 3^d sub-samples per cell, so
boundary cells carry fractional coverage.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import special

from .transform import SampledField


class PhantomDomainError(ValueError):
    pass


class CurvatureError(ValueError):
    def __init__(self, max_curvature: float, bound: float):
        super().__init__(f"max principal curvature {max_curvature:.4g} exceeds the bound {bound:.4g}")
        self.max_curvature = max_curvature


@dataclass(frozen=True)
class Polynomial:
    """sum_a c_a x^a with multi-indices ``a``; used for the smooth parts f0, f1."""

    terms: tuple[tuple[tuple[int, ...], float], ...] = ()

    @classmethod
    def constant(cls, value: float, d: int) -> "Polynomial":
        return cls((((0,) * d, float(value)),))

    def __call__(self, coords):
        out = np.zeros(np.shape(coords[0]))
        for powers, c in self.terms:
            term = np.full(np.shape(coords[0]), c, dtype=float)
            for x, p in zip(coords, powers):
                if p:
                    term = term * x ** p
            out = out + term
        return out

    def c2_bound(self) -> float:
        """Upper bound on max_{|b| <= 2} sup_{[0,1]^d} |D^b f| (monomials are at most 1 there)."""
        if not self.terms:
            return 0.0
        d = len(self.terms[0][0])
        best = 0.0
        for order in range(3):
            for b in itertools.product(range(3), repeat=d):
                if sum(b) != order:
                    continue
                acc = 0.0
                for powers, c in self.terms:
                    factor = 1.0
                    for p, q in zip(powers, b):
                        factor *= math.perm(p, q) if q <= p else 0.0
                    acc += abs(c) * factor
                best = max(best, acc)
        return best


@dataclass
class CartoonPhantom:
    d: int
    region: str
    params: dict
    f0: Polynomial | None = None
    f1: Polynomial | None = None
    mu: float = 1.0
    nu: float | None = None
    extra: dict = field(default_factory=dict)

    def descriptor(self) -> dict:
        out = {"d": self.d, "region": self.region, "params": self.params, "mu": self.mu, "nu": self.nu}
        for name in ("f0", "f1"):
            poly = getattr(self, name)
            if poly is not None:
                out[name] = [[list(p), c] for p, c in poly.terms]
        out.update(self.extra)
        return out


# ---------------------------------------------------------------------------
# sampling helpers

def _shape(grid, d):
    if np.isscalar(grid):
        return (int(grid),) * d
    shape = tuple(int(n) for n in grid)
    if len(shape) != d:
        raise ValueError(f"grid {shape} does not have dimension {d}")
    return shape


def cell_centres(shape):
    return np.meshgrid(*[(np.arange(n) + 0.5) / n for n in shape], indexing="ij", sparse=True)


def coverage(inside, shape, sub: int = 3) -> np.ndarray:
    """Fraction of each cell where ``inside(coords)`` holds, from sub^d samples."""
    d = len(shape)
    centres = cell_centres(shape)
    offs = (np.arange(sub) + 0.5) / sub - 0.5
    acc = np.zeros(shape)
    for o in itertools.product(offs, repeat=d):
        coords = [c + oi / n for c, oi, n in zip(centres, o, shape)]
        acc += inside([np.broadcast_to(c, shape) for c in coords])
    return acc / sub ** d


def _assemble(phantom: CartoonPhantom, cov: np.ndarray) -> SampledField:
    shape = cov.shape
    coords = [np.broadcast_to(c, shape) for c in cell_centres(shape)]
    f1 = phantom.f1(coords) if phantom.f1 is not None else 1.0
    data = f1 * cov
    if phantom.f0 is not None:
        data = data + phantom.f0(coords)
    for poly in (phantom.f0, phantom.f1):
        if poly is not None and poly.c2_bound() > phantom.mu:
            raise ValueError(f"smooth part has C2 bound {poly.c2_bound():.4g} > mu = {phantom.mu}")
    return SampledField(data, meta=phantom.descriptor())


def mass(field: SampledField) -> float:
    return float(field.data.sum()) * field.cell_volume


def boundary_cell_count(field: SampledField, tol: float = 1e-12) -> int:
    """Cells with partial coverage (the discretised discontinuity set)."""
    return int(np.count_nonzero((field.data > tol) & (field.data < 1 - tol)))


# ---------------------------------------------------------------------------
# phantoms

def ball_phantom(center, radius: float, grid, d: int, f0: Polynomial | None = None,
                 f1: Polynomial | None = None, mu: float = 1.0) -> SampledField:
    center = np.asarray(center, dtype=float).reshape(d)
    if radius <= 0 or np.any(center - radius < 0) or np.any(center + radius > 1):
        raise PhantomDomainError(f"ball (center {center.tolist()}, radius {radius}) is not inside [0,1]^{d}")
    shape = _shape(grid, d)

    def inside(x):
        return sum((xi - ci) ** 2 for xi, ci in zip(x, center)) <= radius ** 2

    ph = CartoonPhantom(d, "ball", {"center": center.tolist(), "radius": radius}, f0, f1, mu, nu=1.0 / radius)
    return _assemble(ph, coverage(inside, shape))


def cube_phantom(lo, hi, grid, d: int) -> SampledField:
    """Indicator of the box prod [lo_i, hi_i] with exact cell coverage.

    Exact coverage matters for the Haar census: a sub-sampled box has faces
    snapped to sub-cell positions, which can align with dyadic boundaries
    and switch whole scales off.
    """
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (d,))
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (d,))
    if np.any(lo < 0) or np.any(hi > 1) or np.any(lo >= hi):
        raise PhantomDomainError(f"box {lo.tolist()} .. {hi.tolist()} is not inside [0,1]^{d}")
    shape = _shape(grid, d)
    cov = np.ones(shape)
    for ax, n in enumerate(shape):
        e = np.arange(n + 1) / n
        part = np.clip(np.minimum(e[1:], hi[ax]) - np.maximum(e[:-1], lo[ax]), 0.0, None) * n
        view = [1] * d
        view[ax] = n
        cov = cov * part.reshape(view)
    ph = CartoonPhantom(d, "cube", {"lo": lo.tolist(), "hi": hi.tolist()}, None, None, 1.0)
    return _assemble(ph, cov)


def _angular_profile(d: int, degree: int):
    """Y(u) = Re((u_0 + i u_1)^degree) on the unit sphere: a fixed polynomial in u."""
    def Y(u):
        return np.real((u[0] + 1j * u[1]) ** degree)
    return Y


def max_principal_curvature(eps: float, degree: int, r0: float, d: int, samples: int = 256) -> float:
    """max |kappa| of the surface r = r0 (1 + eps Y) by analytic (2D) or finite-difference (3D) geometry."""
    if d == 2:
        t = np.linspace(0, 2 * np.pi, 16 * samples, endpoint=False)
        r = r0 * (1 + eps * np.cos(degree * t))
        r1 = -r0 * eps * degree * np.sin(degree * t)
        r2 = -r0 * eps * degree ** 2 * np.cos(degree * t)
        kappa = (r ** 2 + 2 * r1 ** 2 - r * r2) / (r ** 2 + r1 ** 2) ** 1.5
        return float(np.abs(kappa).max())
    th = np.linspace(0.05, np.pi - 0.05, samples)
    ph = np.linspace(0, 2 * np.pi, 2 * samples, endpoint=False)
    T, P = np.meshgrid(th, ph, indexing="ij")
    h = 1e-4

    def X(t, p):
        u = np.stack([np.sin(t) * np.cos(p), np.sin(t) * np.sin(p), np.cos(t)])
        r = r0 * (1 + eps * np.sin(t) ** degree * np.cos(degree * p))
        return r * u

    Xt = (X(T + h, P) - X(T - h, P)) / (2 * h)
    Xp = (X(T, P + h) - X(T, P - h)) / (2 * h)
    Xtt = (X(T + h, P) - 2 * X(T, P) + X(T - h, P)) / h ** 2
    Xpp = (X(T, P + h) - 2 * X(T, P) + X(T, P - h)) / h ** 2
    Xtp = (X(T + h, P + h) - X(T + h, P - h) - X(T - h, P + h) + X(T - h, P - h)) / (4 * h * h)
    nrm = np.cross(Xt, Xp, axis=0)
    nrm = nrm / np.linalg.norm(nrm, axis=0)
    E, F, G = (Xt * Xt).sum(0), (Xt * Xp).sum(0), (Xp * Xp).sum(0)
    L, M, N = (Xtt * nrm).sum(0), (Xtp * nrm).sum(0), (Xpp * nrm).sum(0)
    K = (L * N - M ** 2) / (E * G - F ** 2)
    H = (E * N - 2 * F * M + G * L) / (2 * (E * G - F ** 2))
    disc = np.sqrt(np.maximum(H ** 2 - K, 0.0))
    return float(np.max(np.maximum(np.abs(H + disc), np.abs(H - disc))))


def deformed_sphere_phantom(eps: float, degree: int, grid, d: int = 3, r0: float = 0.25,
                            center=None, nu: float | None = None) -> SampledField:
    """chi_B with boundary r(u) = r0 (1 + eps Y(u)), Y(u) = Re((u_0 + i u_1)^degree)."""
    center = np.full(d, 0.5) if center is None else np.asarray(center, dtype=float)
    if eps < 0 or eps >= 1:
        raise ValueError("need 0 <= eps < 1 so the radius stays positive")
    if np.any(center - r0 * (1 + eps) < 0) or np.any(center + r0 * (1 + eps) > 1):
        raise PhantomDomainError("deformed sphere escapes the unit cube")
    kappa = max_principal_curvature(eps, degree, r0, d)
    if nu is not None and kappa > nu:
        raise CurvatureError(kappa, nu)
    shape = _shape(grid, d)
    Y = _angular_profile(d, degree)

    def inside(x):
        rel = [xi - ci for xi, ci in zip(x, center)]
        rad = np.sqrt(sum(r ** 2 for r in rel))
        u = [r / np.maximum(rad, 1e-300) for r in rel]
        return rad <= r0 * (1 + eps * Y(u))

    ph = CartoonPhantom(d, "deformed-sphere", {"eps": eps, "degree": degree, "r0": r0,
                                               "center": center.tolist()}, nu=nu,
                        extra={"max_curvature": kappa})
    return _assemble(ph, coverage(inside, shape))


def piecewise_phantom(L: int, grid, d: int, center=None, radius: float = 0.3) -> SampledField:
    """Ball cut by L-1 planes through a point near the centre (boundary of L smooth pieces)."""
    if L not in (1, 2, 3):
        raise ValueError("L must be 1, 2 or 3")
    center = np.full(d, 0.5) if center is None else np.asarray(center, dtype=float)
    if L == 1:
        return ball_phantom(center, radius, grid, d)
    apex = center + 0.1 * radius
    # outward plane normals; irrational-ish directions avoid grid alignment
    normals = [np.array([1.0, 0.35, 0.2][:d]), np.array([-0.3, 1.0, 0.45][:d])][: L - 1]
    normals = [n / np.linalg.norm(n) for n in normals]
    shape = _shape(grid, d)

    def inside(x):
        ok = sum((xi - ci) ** 2 for xi, ci in zip(x, center)) <= radius ** 2
        for n in normals:
            ok = ok & (sum(ni * (xi - ai) for ni, xi, ai in zip(n, x, apex)) <= 0)
        return ok

    ph = CartoonPhantom(d, "piecewise", {"L": L, "center": center.tolist(), "radius": radius,
                                         "apex": apex.tolist(), "normals": [n.tolist() for n in normals]})
    return _assemble(ph, coverage(inside, shape))


def smooth_window(coords, inner: float = 0.3, outer: float = 0.45) -> np.ndarray:
    """C-infinity radial bump: 1 within ``inner`` of the centre, 0 beyond ``outer``."""
    r = np.sqrt(sum((c - 0.5) ** 2 for c in coords))
    t = np.clip((outer - r) / (outer - inner), 0.0, 1.0)

    def g(s):
        return np.where(s > 0, np.exp(-1.0 / np.maximum(s, 1e-300)), 0.0)

    return g(t) / (g(t) + g(1 - t))


def halfspace_coverage(w, c: float, shape) -> np.ndarray:
    """Exact fraction of each cell inside {x : w . x <= c}.

    Volume of the unit cube under a hyperplane: with a_i = |w_i| h_i > 0
    (after reflecting axes with negative weight) and t the offset at the
    cell corner, V = sum_S (-1)^|S| max(0, t - sum_S a_i)^m / (m! prod a_i).
    """
    d = len(shape)
    w = np.asarray(w, dtype=float)
    h = np.array([1.0 / n for n in shape])
    lo = [np.arange(n) / n for n in shape]
    # t = c - sum_i w_i * (corner coordinate nearest the half-space interior)
    t = np.full(shape, float(c))
    a = []
    for i in range(d):
        shp = [1] * d
        shp[i] = shape[i]
        corner = lo[i] + (h[i] if w[i] < 0 else 0.0)
        t = t - w[i] * corner.reshape(shp)
        if abs(w[i]) * h[i] > 1e-12:
            a.append(abs(w[i]) * h[i])
    m = len(a)
    if m == 0:
        return (t >= 0).astype(float)
    acc = np.zeros(shape)
    for sub in itertools.product((0, 1), repeat=m):
        shift = sum(ai for ai, si in zip(a, sub) if si)
        acc += (-1) ** sum(sub) * np.maximum(t - shift, 0.0) ** m
    out = acc / (math.factorial(m) * math.prod(a))
    out = np.where(t <= 0, 0.0, np.where(t >= sum(a), 1.0, out))
    return np.clip(out, 0.0, 1.0)


def halfspace_phantom(s, offset: float, grid, d: int, vertical: bool = False,
                      taper: bool = True) -> SampledField:
    """Indicator of a half-space (exact cell coverage), optionally times a smooth window.

    Default mode: B = {x_0 <= offset + s . (x_rest - 1/2)}, boundary normal
    (-1, s).  Vertical mode: B = {s . (x_rest - 1/2) <= (offset - 1/2) |s|},
    boundary normal (0, s).  The window keeps the torus wrap-around from
    adding further edges.
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if s.size != d - 1:
        raise ValueError(f"slope vector must have {d - 1} entries")
    shape = _shape(grid, d)
    if vertical:
        norm = np.linalg.norm(s)
        if norm == 0:
            raise ValueError("vertical mode needs a nonzero s")
        w = np.concatenate([[0.0], s])
        c = (offset - 0.5) * norm + 0.5 * s.sum()
    else:
        w = np.concatenate([[1.0], -s])
        c = offset - 0.5 * s.sum()
    ph = CartoonPhantom(d, "half-space", {"s": s.tolist(), "offset": offset, "vertical": vertical,
                                          "taper": taper})
    out = _assemble(ph, halfspace_coverage(w, c, shape))
    if taper:
        coords = [np.broadcast_to(x, shape) for x in cell_centres(shape)]
        out.data = out.data * smooth_window(coords)
    return out


# ---------------------------------------------------------------------------
# Fourier oracle

def ball_fourier_oracle(xi, radius: float, d: int, center=None):
    """Fourier transform of chi_B, B the ball of given radius (centred at the origin unless ``center``).

    Uses r^{d/2} J_{d/2}(2 pi r |xi|) / |xi|^{d/2}; at xi = 0 the limit is the volume.
    """
    xi = np.asarray(xi, dtype=float)
    if xi.shape[-1] != d:
        raise ValueError(f"frequency vectors must have {d} components")
    rho = np.linalg.norm(xi, axis=-1)
    vol = math.pi ** (d / 2) / math.gamma(d / 2 + 1) * radius ** d
    safe = np.where(rho > 0, rho, 1.0)
    val = radius ** (d / 2) * special.jv(d / 2, 2 * np.pi * radius * safe) / safe ** (d / 2)
    val = np.where(rho > 0, val, vol).astype(complex)
    if center is not None:
        val = val * np.exp(-2j * np.pi * (xi @ np.asarray(center, dtype=float)))
    return val if val.ndim else complex(val)


# ---------------------------------------------------------------------------
# raw export

def export_raw(field: SampledField, path) -> Path:
    """Write little-endian float64 samples (C order) and a JSON sidecar ``<path>.json``."""
    path = Path(path)
    path.write_bytes(np.ascontiguousarray(field.data, dtype="<f8").tobytes())
    side = {
        "dims": list(field.shape),
        "dtype": "float64-le",
        "order": "C",
        "spacing": list(field.spacing),
        "origin": [0.0] * field.d,
        "phantom": field.meta,
    }
    sidecar = path.with_name(path.name + ".json")
    sidecar.write_text(json.dumps(side, indent=2, sort_keys=True))
    return sidecar


def import_raw(path) -> SampledField:
    path = Path(path)
    sidecar = path.with_name(path.name + ".json")
    if not path.exists() or not sidecar.exists():
        raise FileNotFoundError(f"missing phantom file or sidecar: {path}")
    side = json.loads(sidecar.read_text())
    dims = tuple(side["dims"])
    data = np.frombuffer(path.read_bytes(), dtype="<f8")
    if data.size != int(np.prod(dims)):
        raise ValueError(f"{path} holds {data.size} values, sidecar expects {dims}")
    extent = tuple(s * n for s, n in zip(side["spacing"], dims))
    return SampledField(data.reshape(dims).astype(float), extent=extent, meta=side.get("phantom"))
