"""Shearlet generators in the frequency domain.

Two families are provided:

* compactly supported separable generators built from a Daubechies-type low
  pass filter ``m0`` with ``|m0|^2`` a fixed trigonometric polynomial in
  ``(K, L)``;
* band-limited generators built from smooth polynomial-blended windows that
  satisfy the Calderon and shift partition identities exactly.

All Fourier transforms use the convention ``f^(xi) = int f(x) e^{-2 pi i x xi} dx``.
"""

from __future__ import annotations

import csv
import dataclasses
import functools
import itertools
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import lattice
from .lattice import PyramidTag, ShearletIndex


class FactorizationError(ArithmeticError):
    """Spectral factorisation did not reproduce the symbol."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class ResolutionError(ValueError):
    pass


# ---------------------------------------------------------------------------
# compactly supported family

@dataclass(frozen=True)
class CompactSpec:
    K: int = 7
    L: int = 4
    j_trunc: int = 24
    taps: tuple[float, ...] | None = None
    strict: bool = False
    phase: str = "minimum"

    def __post_init__(self):
        if self.K < 1 or self.L < 1:
            raise ValueError("K and L must be positive")
        if self.strict and not (self.L >= 10 and 3 * self.L <= 2 * self.K <= 6 * self.L - 4):
            raise ValueError(f"strict mode needs L >= 10 and 3L/2 <= K <= 3L-2, got K={self.K}, L={self.L}")
        if self.phase not in ("minimum", "zero"):
            raise ValueError("phase must be 'minimum' or 'zero'")

    @property
    def factorized(self) -> bool:
        return self.taps is not None

    def with_taps(self) -> "CompactSpec":
        """Copy carrying minimum-phase taps (no-op in zero-phase mode)."""
        if self.factorized or self.phase == "zero":
            return self
        return dataclasses.replace(self, taps=tuple(spectral_factorize(self)))


def _binomials(K: int, L: int) -> np.ndarray:
    return np.array([math.comb(K - 1 + n, n) for n in range(L)], dtype=float)


def lowpass_symbol_sq(spec: CompactSpec, xi1):
    """|m0(xi)|^2 = cos^{2K}(pi xi) sum_n C(K-1+n, n) sin^{2n}(pi xi)."""
    xi1 = np.asarray(xi1, dtype=float)
    c2 = np.cos(np.pi * xi1) ** 2
    s2 = np.sin(np.pi * xi1) ** 2
    # Horner in sin^2; every coefficient is positive so the value is >= 0
    acc = np.zeros_like(xi1)
    for b in _binomials(spec.K, spec.L)[::-1]:
        acc = acc * s2 + b
    return c2 ** spec.K * acc


def bandpass_symbol_sq(spec: CompactSpec, xi1):
    return lowpass_symbol_sq(spec, np.asarray(xi1, dtype=float) + 0.5)


def spectral_factorize(spec: CompactSpec, tol: float = 1e-8, grid: int = 4096) -> np.ndarray:
    """Minimum-phase taps h with |sum h_n e^{-2 pi i n xi}|^2 = |m0(xi)|^2.

    Normalised so that ``sum(h) == 1``.  Raises ``FactorizationError`` when
    the sup-norm residual on a ``grid``-point sampling exceeds ``tol``.
    """
    K, L = spec.K, spec.L
    if K + L - 1 > 64:
        raise FactorizationError(f"K+L-1 = {K + L - 1} exceeds the conditioning guard 64", math.inf)
    # m0(w) = ((1+w)/2)^K Q(w), w = e^{-2 pi i xi}, |Q|^2 = P(sin^2 pi xi) and
    # sin^2 = (2 - w - 1/w)/4; each root y of P gives w^2 - (2 - 4y) w + 1 = 0.
    q = np.array([1.0])
    if L > 1:
        y_roots = np.roots(_binomials(K, L)[::-1])
        for y in y_roots:
            w = np.roots([1.0, -(2.0 - 4.0 * y), 1.0])
            w_out = w[np.argmax(np.abs(w))]  # zeros outside the unit disc
            q = np.convolve(q, np.array([-w_out, 1.0]))  # (w - w_out), low order first
        q = q / np.polyval(q[::-1], 1.0)
        if np.max(np.abs(q.imag)) > 1e-6 * np.max(np.abs(q)):
            raise FactorizationError("factor is not real", float(np.max(np.abs(q.imag))))
        q = q.real
    binom = np.array([math.comb(K, i) for i in range(K + 1)], dtype=float) / 2.0 ** K
    h = np.convolve(binom, q)
    xi = np.arange(grid) / grid
    resp = np.abs(np.exp(-2j * np.pi * np.outer(xi, np.arange(h.size))) @ h) ** 2
    resid = float(np.max(np.abs(resp - lowpass_symbol_sq(spec, xi))))
    if not np.isfinite(resid) or resid > tol:
        raise FactorizationError(f"factorisation of K={K}, L={L} failed", resid)
    return h


def _m0(spec: CompactSpec, xi):
    xi = np.asarray(xi, dtype=float)
    if spec.phase == "zero":
        return np.sqrt(lowpass_symbol_sq(spec, xi))
    h = np.asarray(spec.taps if spec.taps is not None else spectral_factorize(spec))
    w = np.exp(-2j * np.pi * xi)
    acc = np.zeros(xi.shape, dtype=complex)
    for hn in h[::-1]:
        acc = acc * w + hn
    return acc


def _m1(spec: CompactSpec, xi):
    return _m0(spec, np.asarray(xi, dtype=float) + 0.5)


def scaling_hat(spec: CompactSpec, xi1):
    """phi^(xi) = prod_{j < j_trunc} m0(2^{-j} xi).

    Tail bound: with ``|m0(eta)| <= 1 + C |eta|``-type regularity the
    neglected factors differ from 1 by ``O(2^{-j_trunc} |xi|)``.
    """
    spec = spec.with_taps()
    xi1 = np.asarray(xi1, dtype=float)
    out = np.ones(xi1.shape, dtype=float if spec.phase == "zero" else complex)
    for j in range(spec.j_trunc):
        out = out * _m0(spec, xi1 * 2.0 ** -j)
    return out


def compact_shearlet_hat(spec: CompactSpec, xi, d: int | None = None):
    """psi^(xi) = m1(4 xi_1) phi^(xi_1) prod_{i>1} phi^(2 xi_i).

    ``xi`` has shape (..., d).
    """
    xi = np.asarray(xi, dtype=float)
    d = xi.shape[-1] if d is None else d
    spec = spec.with_taps()
    out = _m1(spec, 4 * xi[..., 0]) * scaling_hat(spec, xi[..., 0])
    for i in range(1, d):
        out = out * scaling_hat(spec, 2 * xi[..., i])
    return out


def compact_lowpass_hat(spec: CompactSpec, xi):
    xi = np.asarray(xi, dtype=float)
    out = scaling_hat(spec, xi[..., 0])
    for i in range(1, xi.shape[-1]):
        out = out * scaling_hat(spec, xi[..., i])
    return out


def export_taps_csv(taps, path) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "value"])
        for i, v in enumerate(taps):
            w.writerow([i, repr(float(v))])


def import_taps_csv(path) -> np.ndarray:
    with open(Path(path), newline="") as fh:
        rows = list(csv.DictReader(fh))
    return np.array([float(r["value"]) for r in sorted(rows, key=lambda r: int(r["index"]))])


class ScalingTable:
    """Tabulated phi^ on [0, xi_max] for fast repeated evaluation.

    Linear interpolation of real and imaginary parts with step ``2^-step_log2``.
    Arguments beyond the table fall back to the truncated product.
    """

    def __init__(self, spec: CompactSpec, xi_max: float = 256.0, step_log2: int = 12):
        self.spec = spec.with_taps()
        self.step = 2.0 ** -step_log2
        self.xi_max = xi_max
        grid = np.arange(0.0, xi_max + 2 * self.step, self.step)
        vals = scaling_hat(self.spec, grid)
        self.complex = np.iscomplexobj(vals)
        self._re = np.real(vals).copy()
        self._im = np.imag(vals).copy() if self.complex else None
        self._abs = np.abs(vals)

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        a = np.abs(xi)
        pos = a / self.step
        i0 = np.minimum(pos.astype(np.int64), self._re.size - 2)
        t = pos - i0
        re = self._re[i0] * (1 - t) + self._re[i0 + 1] * t
        if self.complex:
            im = self._im[i0] * (1 - t) + self._im[i0 + 1] * t
            out = re + 1j * np.where(xi < 0, -im, im)  # phi real => phi^(-xi) = conj
        else:
            out = re
        far = a > self.xi_max
        if np.any(far):
            out = np.array(out, copy=True)
            out[far] = scaling_hat(self.spec, xi[far])
        return out

    def magnitude_bound(self, xi):
        """Upper bound for ``abs(self(xi))``.

        Interpolating the moduli dominates the modulus of the interpolant;
        beyond the table the bound falls back to 1 (|phi^| <= 1 everywhere).
        """
        a = np.abs(np.asarray(xi, dtype=float))
        pos = a / self.step
        i0 = np.minimum(pos.astype(np.int64), self._abs.size - 2)
        t = pos - i0
        out = self._abs[i0] * (1 - t) + self._abs[i0 + 1] * t
        return np.where(a > self.xi_max, 1.0, out)


class CompactGenerator:
    """Fast evaluator for the compact family (psi^, phi^ on arrays)."""

    kind = "compact"

    def __init__(self, spec: CompactSpec, xi_max: float = 256.0):
        self.spec = spec.with_taps()
        self.table = ScalingTable(self.spec, xi_max=xi_max)

    def psi_hat(self, y):
        out = _m1(self.spec, 4 * y[0]) * self.table(y[0])
        for yi in y[1:]:
            out = out * self.table(2 * yi)
        return out

    def phi_hat(self, y):
        out = self.table(y[0])
        for yi in y[1:]:
            out = out * self.table(yi)
        return out

    def psi_bound(self, y):
        """Cheap upper bound for ``abs(psi_hat(y))``, using ``|m1| <= 1``."""
        out = self.table.magnitude_bound(y[0])
        for yi in y[1:]:
            out = out * self.table.magnitude_bound(2 * yi)
        return out

    @property
    def is_real(self) -> bool:
        return not self.table.complex


# ---------------------------------------------------------------------------
# band-limited family

def blend(t):
    """Degree-7 blending polynomial: 0 below 0, 1 above 1, v(t) + v(1-t) = 1."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    return t ** 4 * (35 - 84 * t + 70 * t ** 2 - 20 * t ** 3)


@dataclass(frozen=True)
class BandlimitedSpec:
    window: str = "poly7"

    def __post_init__(self):
        if self.window != "poly7":
            raise ValueError("only the degree-7 polynomial window is implemented")


def _bl_lowpass_sq(xi):
    """Squared radial low pass: 1 on |xi| <= 1/2, 0 on |xi| >= 1."""
    return blend(2.0 - 2.0 * np.abs(np.asarray(xi, dtype=float)))


def bl_psi1_hat(spec: BandlimitedSpec, xi1):
    """Wavelet window with sum_{j>=0} |psi1^(2^-j xi)|^2 = 1 for |xi| >= 1.

    |psi1^(xi)|^2 = G(xi/2) - G(xi) with G the squared low pass, so the
    support is [1/2, 2] in |xi| (inside [1/2, 4]).
    """
    xi1 = np.asarray(xi1, dtype=float)
    return np.sqrt(np.clip(_bl_lowpass_sq(xi1 / 2) - _bl_lowpass_sq(xi1), 0.0, None))


def bl_psi2_hat(spec: BandlimitedSpec, xi2):
    """Bump on [-1, 1] with sum_{l=-1}^{1} |psi2^(xi + l)|^2 = 1 on |xi| <= 1."""
    xi2 = np.asarray(xi2, dtype=float)
    return np.sqrt(blend(1.0 - np.abs(xi2)))


def bl_shearlet_hat(spec: BandlimitedSpec, xi, d: int | None = None):
    """psi^(xi) = psi1^(xi_1) prod_{i>1} psi2^(xi_i / xi_1); zero where xi_1 = 0."""
    xi = np.asarray(xi, dtype=float)
    d = xi.shape[-1] if d is None else d
    x1 = xi[..., 0]
    safe = np.where(x1 == 0, 1.0, x1)
    out = bl_psi1_hat(spec, x1)
    for i in range(1, d):
        out = out * bl_psi2_hat(spec, xi[..., i] / safe)
    return np.where(x1 == 0, 0.0, out)


class BandlimitedGenerator:
    """Band-limited family; tiles are cut to their own pyramid (tight frame)."""

    kind = "bandlimited"
    is_real = True

    def __init__(self, spec: BandlimitedSpec = BandlimitedSpec()):
        self.spec = spec

    def psi_hat(self, y):
        return bl_shearlet_hat(self.spec, np.stack(y, axis=-1))

    def phi_hat(self, y):
        inside = np.ones(np.shape(y[0]), dtype=bool)
        for yi in y:
            inside &= np.abs(yi) < 1.0
        return inside.astype(float)


# ---------------------------------------------------------------------------
# spatial sampling

@dataclass(frozen=True)
class GridSpec:
    """Periodic sampling grid of ``shape`` on the unit torus [0, 1)^d."""

    shape: tuple[int, ...]

    @property
    def d(self) -> int:
        return len(self.shape)

    @property
    def cell_volume(self) -> float:
        return float(np.prod([1.0 / n for n in self.shape]))

    def coords(self):
        return np.meshgrid(*[np.arange(n) / n for n in self.shape], indexing="ij")


def _normalisation(j: int, d: int) -> float:
    return 2.0 ** (j * (d + 1) / 4)


def tile_coords(nu_over_f0, pyramid: PyramidTag, j: int, k, d: int):
    """y = S_k^{-T} A_{2^j}^{-1} xi, returned in the pyramid's local order (long axis first)."""
    a = pyramid.axis
    others = [i for i in range(d) if i != a]
    y0 = nu_over_f0[a] * 2.0 ** -j
    ys = [y0]
    for ki, ax in zip(k, others):
        ys.append(nu_over_f0[ax] * 2.0 ** (-j / 2) - ki * y0)
    return ys


def sample_spatial(generator, index: ShearletIndex, grid: GridSpec, base_freq: float,
                   lattice_spec: lattice.LatticeSpec, min_samples: int = 16) -> np.ndarray:
    """Samples of the L2-normalised, periodised atom psi_lambda on ``grid``.

    Generator units map to the unit torus by ``x_gen = base_freq * x``.  The
    compact path cascades the filter taps to tabulate phi in space and
    evaluates psi(S_k A x - m) directly (an independent route from the
    frequency-domain transform).  The band-limited path sums the Fourier
    series of the periodised atom.
    """
    d = grid.d
    j = index.j
    n = min(grid.shape)
    if not index.pyramid.is_lowpass:
        if isinstance(generator, BandlimitedGenerator):
            # the tile reaches |xi_1| = 2^(j+1); past Nyquist it would alias
            if 2.0 ** (j + 1) * base_freq > n / 2:
                raise ResolutionError(f"scale j={j} reaches past the Nyquist frequency of a {n}-point grid")
        else:
            # samples per wavelength at the main lobe (xi_1 ~ 1/8 in generator units)
            per_wave = n / (2.0 ** j * base_freq / 8.0)
            if per_wave < min_samples:
                need = int(math.ceil(min_samples * 2.0 ** j * base_freq / 8.0))
                raise ResolutionError(f"grid of {n} points under-resolves scale j={j}; need >= {need}")
    centre = lattice.atom_centre(j, index.k, index.m, index.pyramid, lattice_spec, d)
    if isinstance(generator, CompactGenerator) and generator.spec.phase == "minimum":
        return _sample_compact_spatial(generator, index, grid, base_freq, centre)
    return _sample_fourier_series(generator, index, grid, base_freq, centre)


def _sample_fourier_series(generator, index, grid, base_freq, centre):
    d = grid.d
    nus = np.meshgrid(*[np.fft.fftfreq(n, 1.0 / n) for n in grid.shape], indexing="ij")
    xi = [v / base_freq for v in nus]
    if index.pyramid.is_lowpass:
        spec = generator.phi_hat(xi)
        scale = 1.0
    else:
        y = tile_coords(xi, index.pyramid, index.j, index.k, d)
        spec = generator.psi_hat(y)
        if isinstance(generator, BandlimitedGenerator):
            owner = lattice.pyramid_mask(np.stack(xi, axis=-1), d)
            spec = spec * (owner == index.pyramid.axis)
        scale = _normalisation(index.j, d) ** -1
    # translate by the centre (generator units -> torus units)
    shift = sum(v * (c / base_freq) for v, c in zip(nus, centre))
    coeff = spec * scale * np.exp(-2j * np.pi * shift) * base_freq ** (-d / 2)
    vals = np.fft.ifftn(coeff) * np.prod(grid.shape)
    return vals.real


@functools.lru_cache(maxsize=8)
def _cascade(taps: tuple[float, ...], levels: int = 12):
    """phi at x = i 2^-levels on [0, len(taps)-1] via the cascade recursion."""
    h = 2.0 * np.asarray(taps)
    n = h.size
    # values at the integers: eigenvector for eigenvalue 1 of the two-scale matrix
    mat = np.zeros((n, n))
    for i in range(n):
        for k in range(n):
            if 0 <= 2 * i - k < n:
                mat[i, k] = h[2 * i - k]
    w, v = np.linalg.eig(mat)
    vals = np.real(v[:, np.argmin(np.abs(w - 1.0))])
    vals = vals / vals.sum()
    for lev in range(1, levels + 1):
        # phi(i 2^-lev) = sum_k h_k phi(i 2^-(lev-1) - k)
        size = (n - 1) * 2 ** lev + 1
        new = np.zeros(size)
        idx = np.arange(size)
        for k, hk in enumerate(h):
            src = idx - k * 2 ** (lev - 1)
            ok = (src >= 0) & (src < vals.size)
            new[ok] += hk * vals[src[ok]]
        vals = new
    return vals, 2.0 ** -levels


@functools.lru_cache(maxsize=8)
def _dyadic_table(taps: tuple[float, ...], levels: int, spread: int):
    """sum_n c_n phi_c(x - spread n) on the dyadic grid of phi_c, from x = 0.

    ``spread = 1`` with c = h gives phi, ``spread = 4`` with c = (-1)^n h
    gives the band-pass function.  The shifts are whole grid steps, so the
    sum is exact on the grid and linear interpolation of the table equals
    the sum of the interpolated terms.
    """
    vals, step = _cascade(taps, levels)
    if spread == 1:
        coef = taps
    else:
        phi, _ = _dyadic_table(taps, levels, 1)
        vals, coef = phi, tuple((-1) ** n * h for n, h in enumerate(taps))
    shift = spread * 2 ** levels
    out = np.zeros(vals.size + shift * (len(coef) - 1))
    for n_, c in enumerate(coef):
        out[n_ * shift:n_ * shift + vals.size] += c * vals
    return out, step


def _from_table(table, step, x):
    x = np.asarray(x, dtype=float)
    return np.interp(x / step, np.arange(table.size), table, left=0.0, right=0.0)


def scaling_function_space(spec: CompactSpec, x, levels: int = 12):
    """phi(x) for phi^ = prod_{j>=0} m0(2^-j xi).

    The product includes the j = 0 factor, so phi = sum_n h_n phi_c(x - n)
    where phi_c solves the usual two-scale equation (cascade algorithm,
    linear interpolation between dyadic points).
    """
    spec = spec.with_taps()
    return _from_table(*_dyadic_table(tuple(spec.taps), levels, 1), x)


def bandpass_function_space(spec: CompactSpec, x, levels: int = 12):
    """g with g^(xi) = m1(4 xi) phi^(xi): g(x) = sum_n (-1)^n h_n phi(x - 4n)."""
    spec = spec.with_taps()
    return _from_table(*_dyadic_table(tuple(spec.taps), levels, 4), x)


def generator_space(spec: CompactSpec, y):
    """psi(y) for the compact generator; y has shape (..., d)."""
    y = np.asarray(y, dtype=float)
    out = bandpass_function_space(spec, y[..., 0])
    for i in range(1, y.shape[-1]):
        # phi^(2 xi) <-> phi(y/2)/2
        out = out * 0.5 * scaling_function_space(spec, y[..., i] / 2)
    return out


def lowpass_space(spec: CompactSpec, y):
    y = np.asarray(y, dtype=float)
    out = scaling_function_space(spec, y[..., 0])
    for i in range(1, y.shape[-1]):
        out = out * scaling_function_space(spec, y[..., i])
    return out


def _sample_compact_spatial(generator, index, grid, base_freq, centre):
    spec = generator.spec
    d = grid.d
    xs = grid.coords()
    x = np.stack(xs, axis=-1) * base_freq  # generator units
    period = base_freq
    support = (len(spec.taps) - 1) * 6.0 + 2.0
    if index.pyramid.is_lowpass:
        mat = np.eye(d)
        norm = 1.0
        f = lowpass_space
    else:
        s = lattice.shear_matrix(index.k, index.pyramid, d).astype(float)
        a = lattice.scaling_matrix(index.j, index.pyramid, d)
        perm = [index.pyramid.axis] + [i for i in range(d) if i != index.pyramid.axis]
        mat = (s @ a)[perm]  # long-axis row first, matching the generator layout
        norm = _normalisation(index.j, d)
        f = generator_space
    # psi_lambda(x) = norm * psi(S A (x - centre)); periodise over the torus
    out = np.zeros(grid.shape)
    inv = np.linalg.inv(mat)
    reach = np.abs(inv).sum(axis=1) * support
    nwrap = [int(math.ceil(r / period)) + 1 for r in reach]
    for shift in itertools.product(*[range(-w, w + 1) for w in nwrap]):
        xx = x - centre + period * np.asarray(shift, dtype=float)
        y = xx @ mat.T
        inside = np.all((y > -support) & (y < support), axis=-1)
        if not inside.any():
            continue
        out[inside] += f(spec, y[inside])
    return out * norm * base_freq ** (d / 2)
