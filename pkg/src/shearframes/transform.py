"""Digital analysis and synthesis on the periodic grid.

A :class:`ShearletSystem` discretises the pyramid-adapted system on the unit
torus.  Generator units map to the torus by ``x_gen = base_freq * x``, so
grid frequency ``nu`` (cycles per unit length) corresponds to generator
frequency ``nu / base_freq``.

Each (pyramid, j, k) tile is a filter ``G_t`` on the FFT grid plus a set of
sampling points ``P_t``.  System atoms are density normalised,

    psi_{t,p}(x) = sqrt(V_t) * sum_nu G_t(nu) exp(2 pi i nu (x - p)),   V_t = 1/|P_t|,

so that with dense sampling the frame operator is the Fourier multiplier
``sum_t |G_t|^2`` (the frame potential).  With the ideal lattice density
this equals ``sqrt(c1 c2^(d-1))`` times the L2-normalised atom
``2^(j(d+1)/4) psi(S_k A_{2^j} x - M_c m)``.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.fft as sfft

from . import lattice
from .generators import (BandlimitedGenerator, CompactGenerator, GridSpec, ResolutionError,
                         sample_spatial, tile_coords)
from .lattice import LatticeSpec, PyramidTag, ShearletIndex

FILTER_TOL = 1e-7
_WORKERS = 1


def set_threads(n: int) -> None:
    """Worker count for the FFTs (results do not depend on it)."""
    global _WORKERS
    _WORKERS = max(1, int(n))


# filters and fold maps are the bulk of a system's memory; every grid we
# support has fewer than 2^31 half-spectrum entries
_IDX = np.int32


class GridMismatchError(ValueError):
    pass


# ---------------------------------------------------------------------------
# sampled fields

@dataclass
class SampledField:
    """Real samples on the periodic grid covering [0, 1)^d."""

    data: np.ndarray
    extent: tuple[float, ...] | None = None
    meta: dict | None = None

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.extent is None:
            self.extent = (1.0,) * self.data.ndim

    @property
    def shape(self):
        return self.data.shape

    @property
    def d(self):
        return self.data.ndim

    @property
    def spacing(self):
        return tuple(e / n for e, n in zip(self.extent, self.shape))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def inner(self, other: "SampledField") -> float:
        return float(np.vdot(self.data, other.data).real) * self.cell_volume

    def norm_sq(self) -> float:
        return float(np.sum(self.data ** 2)) * self.cell_volume


def _as_array(f) -> np.ndarray:
    return f.data if isinstance(f, SampledField) else np.asarray(f, dtype=float)


# ---------------------------------------------------------------------------
# coefficient tables

class CoeffTable:
    """Coefficients with a lazily built modulus-sorted view.

    ``keys`` is any sequence giving the label of entry ``i``; storage order is
    the deterministic enumeration order, which also breaks ties in the
    sorted view.
    """

    def __init__(self, values, keys, system=None):
        self.values = np.asarray(values)
        self.keys = keys
        self.system = system
        self._order = None

    def __len__(self):
        return self.values.size

    @property
    def sorted_view(self) -> np.ndarray:
        if self._order is None:
            self._order = np.argsort(-np.abs(self.values), kind="stable")
        return self._order

    def rearranged(self) -> np.ndarray:
        """|c*_n|, the non-increasing rearrangement of the moduli."""
        return np.abs(self.values)[self.sorted_view]

    def items(self):
        for i in range(len(self)):
            yield self.keys[i], self.values[i]

    def with_values(self, values) -> "CoeffTable":
        return CoeffTable(values, self.keys, self.system)

    def to_dict(self):
        return {self.keys[i]: self.values[i] for i in range(len(self))}


class _ShearletKeys:
    """Sequence view of ShearletIndex labels for a system's flat layout."""

    def __init__(self, system: "ShearletSystem"):
        self.system = system

    def __len__(self):
        return self.system.n_coeffs

    def __getitem__(self, i):
        t, local = self.system.locate(int(i))
        tile = self.system.tiles[t]
        if tile.lattice_m is not None:
            m = tile.lattice_m[local]
        else:
            m = np.unravel_index(local, tile.sub_shape(self.system.shape))
        return ShearletIndex(tile.pyramid, tile.j, tile.k, tuple(int(v) for v in m))


# ---------------------------------------------------------------------------
# shearlet system

def band_edge(generator, rel: float = 1e-2) -> float:
    """Largest y_1 with |psi^(y_1, 0, ...)|^2 >= rel * peak.

    For the band-limited generator this is instead the end of the flat part
    of the finest scale (y_1 = 1): beyond it the sum over scales tapers off.
    """
    if isinstance(generator, BandlimitedGenerator):
        return 1.0
    y = np.linspace(0.0, 4.0, 16385)
    zeros = [np.zeros_like(y)] * 2
    prof = np.abs(generator.psi_hat([y] + zeros[:1])) ** 2
    return float(y[np.flatnonzero(prof >= rel * prof.max()).max()])


@dataclass
class Tile:
    """One (pyramid, j, k) filter with its sampling set.

    Stride tiles sample the sub-grid ``stride * Z^d`` (``stride`` all ones
    means every grid point: a dense tile).  Lattice tiles keep explicit
    grid points and the lattice coordinates that produced them.
    """

    pyramid: PyramidTag
    j: int
    k: tuple[int, ...]
    filt_idx: np.ndarray          # flat indices into the rfft half-grid
    filt_val: np.ndarray          # complex filter values there
    size: int                     # number of sampling points |P_t|
    weight: float                 # sqrt(V_t) = |P_t|^(-1/2)
    stride: tuple[int, ...] | None = None
    points: np.ndarray | None = None     # lattice tiles only
    lattice_m: np.ndarray | None = None  # lattice tiles only
    ideal_step: tuple[float, ...] = field(default=())
    fold_idx: np.ndarray | None = None   # filt_idx folded onto the sub-grid
    fold_w: np.ndarray | None = None     # 2 inside the half-grid, 1 on its boundary planes

    @property
    def dense(self) -> bool:
        return self.stride is not None and all(s == 1 for s in self.stride)

    def sub_shape(self, shape):
        return tuple(n // s for n, s in zip(shape, self.stride))

    def point_indices(self, shape) -> np.ndarray:
        if self.points is not None:
            return self.points
        return _stride_points(shape, self.stride)[0]

    @property
    def m(self) -> np.ndarray:
        if self.lattice_m is not None:
            return self.lattice_m
        return self._stride_m

    def bind(self, shape):
        if self.stride is not None:
            self._shape = shape
        return self

    @property
    def _stride_m(self):
        sub = self.sub_shape(self._shape)
        grids = np.meshgrid(*[np.arange(n) for n in sub], indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)


class ShearletSystem:
    """Pyramid-adapted shearlet system on a periodic ``n^d`` grid.

    Parameters
    ----------
    shape : grid shape (equal power-of-two sides are the tested case)
    generator : :class:`CompactGenerator` or :class:`BandlimitedGenerator`
    lattice_spec : translation constants ``(c1, c2)``
    base_freq : generator units per unit torus length
    j_max : finest scale; the default reaches the grid's Nyquist corner
    sampling : ``"stride"`` (power-of-two sub-grids no coarser than the
        ideal lattice) or ``"lattice"`` (sheared lattice rounded to the grid)
    alias_free : stride mode only; refine strides until the tile spectrum
        does not overlap its aliases (default on for band-limited systems)
    filter_tol : filter entries below this fraction of the tile maximum are dropped
    """

    def __init__(self, shape, generator, lattice_spec: LatticeSpec = LatticeSpec(1.0, 1.0),
                 base_freq: float = 16.0, j_max: int | None = None, sampling: str = "stride",
                 alias_free: bool | None = None, filter_tol: float = FILTER_TOL):
        self.shape = tuple(int(n) for n in shape)
        self.d = len(self.shape)
        if self.d not in (2, 3):
            raise ValueError("only 2D and 3D grids are supported")
        if sampling not in ("stride", "lattice"):
            raise ValueError("sampling must be 'stride' or 'lattice'")
        self.generator = generator
        self.lattice_spec = lattice_spec
        self.base_freq = float(base_freq)
        self.sampling = sampling
        self.filter_tol = float(filter_tol)
        self.alias_free = isinstance(generator, BandlimitedGenerator) if alias_free is None else alias_free
        self.half_shape = self.shape[:-1] + (self.shape[-1] // 2 + 1,)
        self.j_max = self.default_j_max() if j_max is None else int(j_max)
        if self.j_max < 0:
            raise ValueError("j_max must be nonnegative")
        self.grid = GridSpec(self.shape)
        self._nu = self._half_frequencies()
        self.tiles: list[Tile] = []
        self._build()
        del self._nu
        sizes = np.array([t.size for t in self.tiles], dtype=np.int64)
        self.offsets = np.concatenate([[0], np.cumsum(sizes)])
        self._potential = None
        self._dense_potential = None

    # -- construction ------------------------------------------------------

    def default_j_max(self) -> int:
        """Smallest scale count whose tiles reach the Nyquist frequency.

        The long-axis coordinate of a pyramid is the max-norm of the
        frequency, so it suffices that 2^J * base_freq * edge >= n/2 where
        ``edge`` is the upper band edge of the generator along y_1.
        """
        n = max(self.shape)
        edge = band_edge(self.generator)
        return max(0, math.ceil(math.log2(n / 2 / (self.base_freq * edge)) - 1e-9))

    def _half_frequencies(self):
        axes = [np.fft.fftfreq(n, 1.0 / n) for n in self.shape[:-1]]
        axes.append(np.fft.rfftfreq(self.shape[-1], 1.0 / self.shape[-1]))
        return np.meshgrid(*axes, indexing="ij", sparse=True)

    def _tile_filter(self, pyramid, j, k):
        xi = [np.broadcast_to(v / self.base_freq, self.half_shape) for v in self._nu]
        if pyramid.is_lowpass:
            g = self.generator.phi_hat(xi)
        else:
            y = tile_coords(xi, pyramid, j, k, self.d)
            if isinstance(self.generator, CompactGenerator) and self.filter_tol > 0:
                return _hermitian_fix(self._compact_filter(y), self.shape)
            g = self.generator.psi_hat(y)
            if isinstance(self.generator, BandlimitedGenerator):
                owner = lattice.pyramid_mask(np.stack(xi, axis=-1), self.d)
                g = g * (owner == pyramid.axis)
        return _hermitian_fix(np.asarray(g, dtype=complex), self.shape)

    def _compact_filter(self, y):
        """psi^(y) evaluated only where it can survive the filter tolerance.

        Entries whose modulus bound is below a tenth of the tolerance (the
        Hermitian merge costs at most a factor 1/sqrt 2) are left at zero;
        they would be dropped anyway, so the stored filter is unchanged.
        """
        bound = self.generator.psi_bound(y)
        top = bound >= 0.1 * bound.max()
        peak = float(np.abs(self.generator.psi_hat([c[top] for c in y])).max())
        cand = bound > 0.1 * self.filter_tol * peak
        cand |= _plane_mirror(cand, self.shape)
        g = np.zeros(self.half_shape, dtype=complex)
        g[cand] = self.generator.psi_hat([c[cand] for c in y])
        return g

    def _build(self):
        d = self.d
        specs = [(lattice.lowpass_tag(d), 0, (0,) * (d - 1))]
        for tag in lattice.pyramid_tags(d):
            for j in range(self.j_max + 1):
                for k in lattice.shear_range(j, d):
                    specs.append((tag, j, tuple(k)))
        for tag, j, k in specs:
            g = self._tile_filter(tag, j, k)
            mag = np.abs(g)
            keep = mag > self.filter_tol * mag.max() if mag.max() > 0 else mag > 0
            if not keep.any():
                continue
            idx = np.flatnonzero(keep)
            vals = g.ravel()[idx]
            steps = self._ideal_steps(tag, j)
            stride = points = m = None
            if self.sampling == "stride":
                stride = self._choose_stride(steps, g if self.alias_free else None)
                size = int(np.prod([n // s for n, s in zip(self.shape, stride)]))
            else:
                points, m = self._lattice_points(tag, j, k, steps)
                if points is None:
                    stride = (1,) * d
                    size = int(np.prod(self.shape))
                else:
                    size = int(points.size)
            tile = Tile(tag, j, tuple(k), idx.astype(_IDX), vals, size, 1.0 / math.sqrt(size),
                        stride=stride, points=points, lattice_m=m, ideal_step=tuple(steps))
            tile.bind(self.shape)
            if stride is not None and not tile.dense:
                tile.fold_idx, tile.fold_w = self._fold(idx, stride)
            self.tiles.append(tile)

    def _fold(self, idx, stride):
        pos = np.unravel_index(idx, self.half_shape)
        sub = tuple(n // st for n, st in zip(self.shape, stride))
        folded = np.ravel_multi_index(tuple(p % m for p, m in zip(pos, sub)), sub).astype(_IDX)
        last = pos[-1]
        w = np.where((last == 0) | (2 * last == self.shape[-1]), 1, 2).astype(np.int8)
        return folded, w

    def _ideal_steps(self, tag, j):
        """Ideal translation steps along each axis, in grid cells."""
        c1, c2 = self.lattice_spec.c1, self.lattice_spec.c2
        if tag.is_lowpass:
            gen = [c1] * self.d
        else:
            gen = [c2 * 2.0 ** (-j / 2)] * self.d
            gen[tag.axis] = c1 * 2.0 ** (-j)
        return [s / self.base_freq * n for s, n in zip(gen, self.shape)]

    def _choose_stride(self, steps, g=None):
        stride = []
        for s, n in zip(steps, self.shape):
            p = 1
            while p * 2 <= s and n % (p * 2) == 0:
                p *= 2
            stride.append(p)
        if g is not None:
            full = np.abs(_full_from_half(g, self.shape))
            while not _alias_free(full, stride, self.shape):
                axis = int(np.argmax(stride))
                if stride[axis] == 1:
                    break
                stride[axis] //= 2
        return tuple(stride)

    def _lattice_points(self, tag, j, k, steps):
        """Sheared lattice points rounded to grid cells (first hit per cell kept).

        Returns ``(None, None)`` when every cell is hit, i.e. the tile is dense.
        Axes whose step is at most one cell are hit in every cell; the lattice
        coordinate recorded there is the nearest one.
        """
        d = self.d
        shape = np.asarray(self.shape)
        if all(s <= 1.0 for s in steps):
            return None, None
        a = None if tag.is_lowpass else tag.axis
        short = [i for i in range(d) if i != a]
        # shear offset of the long coordinate per unit of z_i, in cells
        shear = {}
        if a is not None:
            for ki, i in zip(k, short):
                shear[i] = 2.0 ** (-j) * ki * self.lattice_spec.c2 * shape[a] / self.base_freq
        cells, zs = [], []
        for i in short:
            if steps[i] <= 1.0:
                c = np.arange(shape[i])
                z = np.floor(c / steps[i] + 0.5).astype(np.int64)
            else:
                z = np.arange(int(math.ceil(shape[i] / steps[i])), dtype=np.int64)
                c = np.mod(np.rint(z * steps[i]).astype(np.int64), shape[i])
            cells.append(c)
            zs.append(z)
        mesh_c = [g.ravel() for g in np.meshgrid(*cells, indexing="ij")] if short else []
        mesh_z = [g.ravel() for g in np.meshgrid(*zs, indexing="ij")] if short else []
        if a is None:
            pos = np.stack(mesh_c, axis=1)
            zz = np.stack(mesh_z, axis=1)
        else:
            off = np.zeros(mesh_z[0].size if short else 1)
            for i, z in zip(short, mesh_z):
                off = off + shear[i] * z
            sa = steps[a]
            if sa <= 1.0:
                ca = np.arange(shape[a])
                # round half up: np.rint sends neighbouring half-integers to one even z
                za = np.floor((ca[None, :] + off[:, None]) / sa + 0.5).astype(np.int64)
                ca = np.broadcast_to(ca[None, :], za.shape)
            else:
                count = int(math.ceil(shape[a] / sa))
                za = np.ceil(off / sa).astype(np.int64)[:, None] + np.arange(count)[None, :]
                ca = np.mod(np.rint(za * sa - off[:, None]).astype(np.int64), shape[a])
            reps = za.shape[1]
            pos = np.empty((za.size, d), dtype=np.int64)
            zz = np.empty((za.size, d), dtype=np.int64)
            pos[:, a], zz[:, a] = ca.ravel(), za.ravel()
            for i, c, z in zip(short, mesh_c, mesh_z):
                pos[:, i], zz[:, i] = np.repeat(c, reps), np.repeat(z, reps)
        flat = np.ravel_multi_index(tuple(pos.T), self.shape)
        order = np.lexsort(zz.T[::-1])
        flat, zz = flat[order], zz[order]
        _, first = np.unique(flat, return_index=True)
        first = np.sort(first)
        if first.size == int(np.prod(self.shape)):
            return None, None
        return flat[first], zz[first]

    # -- layout --------------------------------------------------------------

    @property
    def n_coeffs(self) -> int:
        return int(self.offsets[-1])

    @property
    def redundancy(self) -> float:
        return self.n_coeffs / float(np.prod(self.shape))

    def locate(self, i: int):
        t = int(np.searchsorted(self.offsets, i, side="right") - 1)
        return t, i - int(self.offsets[t])

    def tile_of(self, pyramid, j, k) -> int:
        for t, tile in enumerate(self.tiles):
            if tile.pyramid == pyramid and tile.j == j and tile.k == tuple(k):
                return t
        raise KeyError((pyramid, j, k))

    def flat_index(self, index: ShearletIndex) -> int:
        t = self.tile_of(index.pyramid, index.j, index.k)
        tile = self.tiles[t]
        m = np.asarray(index.m)
        if tile.lattice_m is None:
            sub = tile.sub_shape(self.shape)
            if m.shape != (self.d,) or np.any(m < 0) or np.any(m >= np.asarray(sub)):
                raise KeyError(index)
            return int(self.offsets[t] + np.ravel_multi_index(tuple(m), sub))
        hits = np.flatnonzero(np.all(tile.lattice_m == m, axis=1))
        if hits.size == 0:
            raise KeyError(index)
        return int(self.offsets[t] + hits[0])

    def keys(self):
        return _ShearletKeys(self)

    def dense_filter(self, t: int) -> np.ndarray:
        g = np.zeros(int(np.prod(self.half_shape)), dtype=complex)
        g[self.tiles[t].filt_idx] = self.tiles[t].filt_val
        return g.reshape(self.half_shape)

    def potential(self) -> np.ndarray:
        """sum_t |G_t|^2 on the rfft half-grid."""
        if self._potential is None:
            self._potential = self._sum_sq(self.tiles)
        return self._potential

    def _sum_sq(self, tiles):
        size = int(np.prod(self.half_shape))
        acc = np.zeros(size)
        for tile in tiles:
            acc += np.bincount(tile.filt_idx, np.abs(tile.filt_val) ** 2, size)
        return acc.reshape(self.half_shape)

    # -- transforms ------------------------------------------------------------

    def _check(self, f):
        arr = _as_array(f)
        if arr.shape != self.shape:
            raise GridMismatchError(f"field shape {arr.shape} does not match system grid {self.shape}")
        return arr

    def _analyze_tile(self, spec, tile, buf):
        total = float(np.prod(self.shape))
        x = spec[tile.filt_idx] * np.conj(tile.filt_val)
        if tile.stride is not None and not tile.dense:
            sub = tile.sub_shape(self.shape)
            size = int(np.prod(sub))
            xw = x * tile.fold_w
            small = (np.bincount(tile.fold_idx, xw.real, size)
                     + 1j * np.bincount(tile.fold_idx, xw.imag, size)).reshape(sub)
            vals = sfft.ifftn(small, workers=_WORKERS).real.ravel() * (size / total)
        else:
            buf[:] = 0
            buf[tile.filt_idx] = x
            vals = sfft.irfftn(buf.reshape(self.half_shape), s=self.shape, workers=_WORKERS).ravel()
            if not tile.dense:
                vals = vals[tile.points]
        return tile.weight * vals

    def analyze_vector(self, f, tiles=None) -> np.ndarray:
        arr = self._check(f)
        spec = sfft.rfftn(arr, workers=_WORKERS).ravel()
        buf = np.zeros(spec.size, dtype=complex)
        if tiles is not None:
            return np.concatenate([self._analyze_tile(spec, self.tiles[t], buf) for t in tiles])
        out = np.empty(self.n_coeffs)
        for t, tile in enumerate(self.tiles):
            out[self.offsets[t]:self.offsets[t + 1]] = self._analyze_tile(spec, tile, buf)
        return out

    def _synth_tile(self, seg, tile, acc, scatter):
        total = float(np.prod(self.shape))
        if tile.dense:
            spec = sfft.rfftn(seg.reshape(self.shape), workers=_WORKERS).ravel()[tile.filt_idx]
        elif tile.stride is not None:
            sub = tile.sub_shape(self.shape)
            spec = sfft.fftn(seg.reshape(sub), workers=_WORKERS).ravel()[tile.fold_idx]
        else:
            scatter[:] = 0
            scatter[tile.points] = seg
            spec = sfft.rfftn(scatter.reshape(self.shape), workers=_WORKERS).ravel()[tile.filt_idx]
        acc[tile.filt_idx] += (tile.weight * total) * tile.filt_val * spec

    def synthesize_vector(self, c, tiles=None) -> np.ndarray:
        """T^* c.  With ``tiles`` given, ``c`` holds only those tiles' segments, in order."""
        c = np.asarray(c, dtype=float)
        total = int(np.prod(self.shape))
        acc = np.zeros(int(np.prod(self.half_shape)), dtype=complex)
        scatter = np.zeros(total)
        if tiles is None:
            if c.size != self.n_coeffs:
                raise GridMismatchError(f"expected {self.n_coeffs} coefficients, got {c.size}")
            tiles = range(len(self.tiles))
            segs = (c[self.offsets[t]:self.offsets[t + 1]] for t in tiles)
        else:
            bounds = np.cumsum([0] + [self.tiles[t].size for t in tiles])
            segs = (c[bounds[i]:bounds[i + 1]] for i in range(len(tiles)))
        for t, seg in zip(tiles, segs):
            if np.any(seg):
                self._synth_tile(seg, self.tiles[t], acc, scatter)
        return sfft.irfftn(acc.reshape(self.half_shape), s=self.shape, workers=_WORKERS)

    def top_coefficients(self, f, K: int):
        """The ``K`` largest-modulus coefficients without holding the full table.

        Returns ``(flat_indices, values, energy)`` with the entries in the
        order of ``CoeffTable.sorted_view`` (ties by flat index) and
        ``energy = sum |c|^2`` over all coefficients.
        """
        arr = self._check(f)
        spec = sfft.rfftn(arr, workers=_WORKERS).ravel()
        buf = np.zeros(spec.size, dtype=complex)
        K = min(int(K), self.n_coeffs)
        best_i = np.empty(0, dtype=np.int64)
        best_v = np.empty(0)
        energy = 0.0
        for t, tile in enumerate(self.tiles):
            vals = self._analyze_tile(spec, tile, buf)
            energy += float(vals @ vals)
            local = np.arange(vals.size)
            if best_v.size == K and K > 0:
                floor = np.abs(best_v).min()
                local = np.flatnonzero(np.abs(vals) >= floor)
            best_i = np.concatenate([best_i, local + self.offsets[t]])
            best_v = np.concatenate([best_v, vals[local]])
            best_i, best_v = _top_k(best_i, best_v, K)
        order = np.lexsort((best_i, -np.abs(best_v)))
        return best_i[order], best_v[order], energy

    def synthesize_sparse(self, idx, vals) -> np.ndarray:
        """T^* c for ``c`` supported on the flat indices ``idx``."""
        idx = np.asarray(idx, dtype=np.int64)
        vals = np.asarray(vals, dtype=float)
        acc = np.zeros(int(np.prod(self.half_shape)), dtype=complex)
        scatter = np.zeros(int(np.prod(self.shape)))
        owner = np.searchsorted(self.offsets, idx, side="right") - 1
        order = np.argsort(owner, kind="stable")
        owner, idx, vals = owner[order], idx[order], vals[order]
        cuts = np.flatnonzero(np.diff(owner)) + 1
        for part in np.split(np.arange(idx.size), cuts):
            if part.size == 0:
                continue
            t = int(owner[part[0]])
            tile = self.tiles[t]
            seg = np.zeros(tile.size)
            seg[idx[part] - self.offsets[t]] = vals[part]
            self._synth_tile(seg, tile, acc, scatter)
        return sfft.irfftn(acc.reshape(self.half_shape), s=self.shape, workers=_WORKERS)

    def analyze(self, f) -> CoeffTable:
        return analyze(f, self)

    def synthesize(self, coeffs) -> SampledField:
        return synthesize(coeffs, self)

    def frame_operator(self, arr: np.ndarray) -> np.ndarray:
        """S f = T^* T f.

        Dense tiles contribute the exact multiplier |G_t|^2, so only the
        subsampled tiles go through analysis and synthesis.
        """
        arr = self._check(arr)
        if self._dense_potential is None:
            self._dense_potential = self._sum_sq([t for t in self.tiles if t.dense])
            self._sparse_tiles = [i for i, t in enumerate(self.tiles) if not t.dense]
        out = self.apply_multiplier(arr, self._dense_potential)
        if self._sparse_tiles:
            # tile by tile, so the coefficient vector is never materialised
            spec = sfft.rfftn(arr, workers=_WORKERS).ravel()
            buf = np.zeros(spec.size, dtype=complex)
            acc = np.zeros(spec.size, dtype=complex)
            scatter = np.zeros(arr.size)
            for t in self._sparse_tiles:
                tile = self.tiles[t]
                self._synth_tile(self._analyze_tile(spec, tile, buf), tile, acc, scatter)
            out += sfft.irfftn(acc.reshape(self.half_shape), s=self.shape, workers=_WORKERS)
        return out

    def apply_multiplier(self, arr: np.ndarray, mult: np.ndarray) -> np.ndarray:
        return sfft.irfftn(sfft.rfftn(arr, workers=_WORKERS) * mult, s=self.shape, workers=_WORKERS)

    # -- atom-level helpers ------------------------------------------------------

    def atom_scale(self, t: int) -> float:
        """Factor turning <f, psi_lambda> (L2-normalised atom) into the system coefficient."""
        tile = self.tiles[t]
        norm = 1.0 if tile.pyramid.is_lowpass else 2.0 ** (tile.j * (self.d + 1) / 4)
        return tile.weight * norm * self.base_freq ** (self.d / 2)

    def atom_field(self, index: ShearletIndex) -> np.ndarray:
        """System atom psi_{t,p} sampled on the grid (frequency route)."""
        i = self.flat_index(index)
        e = np.zeros(self.n_coeffs)
        e[i] = 1.0
        return self.synthesize_vector(e)

    def atom_cell(self, i: int) -> tuple[int, ...]:
        t, local = self.locate(i)
        tile = self.tiles[t]
        if tile.points is not None:
            return tuple(int(v) for v in np.unravel_index(tile.points[local], self.shape))
        pos = np.unravel_index(local, tile.sub_shape(self.shape))
        return tuple(int(p) * s for p, s in zip(pos, tile.stride))

    def atom_centre(self, index: ShearletIndex) -> np.ndarray:
        """Atom centre in generator units, as realised on the grid."""
        cell = self.atom_cell(self.flat_index(index))
        return np.array([c / n for c, n in zip(cell, self.shape)]) * self.base_freq


def _stride_points(shape, stride):
    grids = np.meshgrid(*[np.arange(0, n, s) for n, s in zip(shape, stride)], indexing="ij")
    pos = np.stack([g.ravel() for g in grids], axis=1)
    flat = np.ravel_multi_index(tuple(pos.T), shape)
    m = pos // np.asarray(stride)
    return flat, m


def _hermitian_fix(g: np.ndarray, shape) -> np.ndarray:
    """Make the rfft planes last=0 and last=n/2 Hermitian so irfftn is exact.

    On the Nyquist plane the mirror of +n/2 is the aliased -n/2, so the two
    values are merged by mean squared modulus (this keeps the potential)
    with the phase of their Hermitian average.
    """
    g = g.copy()
    n_last = shape[-1]
    planes = [0] + ([n_last // 2] if n_last % 2 == 0 else [])
    for p in planes:
        plane = g[..., p]
        mirrored = plane
        for ax in range(plane.ndim):
            mirrored = np.roll(np.flip(mirrored, axis=ax), 1, axis=ax)
        avg = 0.5 * (plane + np.conj(mirrored))
        mag = np.sqrt(0.5 * (np.abs(plane) ** 2 + np.abs(mirrored) ** 2))
        phase = np.exp(1j * np.angle(avg))
        g[..., p] = mag * phase
    return g


def _top_k(idx: np.ndarray, vals: np.ndarray, K: int):
    """Entries with the K largest moduli, ties going to the smaller index."""
    if vals.size <= K:
        return idx, vals
    mod = np.abs(vals)
    cut = np.partition(mod, vals.size - K)[vals.size - K]
    above = np.flatnonzero(mod > cut)
    tied = np.flatnonzero(mod == cut)
    tied = tied[np.argsort(idx[tied], kind="stable")[:K - above.size]]
    keep = np.concatenate([above, tied])
    return idx[keep], vals[keep]


def _plane_mirror(mask: np.ndarray, shape) -> np.ndarray:
    """Hermitian partners of ``mask`` on the self-conjugate rfft planes."""
    out = np.zeros_like(mask)
    n_last = shape[-1]
    for p in [0] + ([n_last // 2] if n_last % 2 == 0 else []):
        mirrored = mask[..., p]
        for ax in range(mirrored.ndim):
            mirrored = np.roll(np.flip(mirrored, axis=ax), 1, axis=ax)
        out[..., p] = mirrored
    return out


def _full_from_half(g: np.ndarray, shape) -> np.ndarray:
    n = shape[-1]
    full = np.zeros(shape, dtype=complex)
    full[..., : g.shape[-1]] = g
    rest = np.arange(g.shape[-1], n)
    if rest.size:
        src = g
        for ax in range(len(shape) - 1):
            src = np.roll(np.flip(src, axis=ax), 1, axis=ax)
        full[..., rest] = np.conj(src[..., (n - rest)])
    return full


def _alias_free(mag: np.ndarray, stride, shape, tol: float = 1e-12) -> bool:
    """No overlap between |G| and its translates by (n/s) multiples."""
    shifts = [range(0, n, n // s) for n, s in zip(shape, stride)]
    for sh in itertools.product(*shifts):
        if not any(sh):
            continue
        if np.max(mag * np.roll(mag, sh, axis=tuple(range(len(shape))))) > tol:
            return False
    return True


# ---------------------------------------------------------------------------
# public operations

def analyze(f, system: ShearletSystem) -> CoeffTable:
    return CoeffTable(system.analyze_vector(f), system.keys(), system)


def synthesize(coeffs, system: ShearletSystem) -> SampledField:
    if isinstance(coeffs, CoeffTable):
        if coeffs.system is not None and coeffs.system is not system:
            raise KeyError("coefficients are indexed by a different system")
        vec = coeffs.values
    elif isinstance(coeffs, dict):
        vec = np.zeros(system.n_coeffs)
        for key, v in coeffs.items():
            vec[system.flat_index(key)] = v
    else:
        vec = np.asarray(coeffs, dtype=float)
    return SampledField(system.synthesize_vector(vec))


def direct_inner_product(f, index: ShearletIndex, system: ShearletSystem) -> float:
    """Riemann-sum oracle for one system coefficient.

    The atom comes from :func:`sample_spatial` at the lattice point the
    system realises for ``index``; no transform code is shared.
    """
    arr = system._check(f)
    t = system.tile_of(index.pyramid, index.j, index.k)
    centre = system.atom_centre(index)
    lat_centre_index = _index_at_centre(index, centre, system)
    atom = sample_spatial(system.generator, lat_centre_index, system.grid, system.base_freq,
                          system.lattice_spec)
    cell = float(np.prod([1.0 / n for n in system.shape]))
    return float(np.sum(arr * atom) * cell) * system.atom_scale(t)


def _index_at_centre(index, centre, system):
    """Index whose lattice translate lands exactly on the realised centre."""
    d = system.d
    tag = index.pyramid
    mc = lattice.translation_lattice(system.lattice_spec, tag, d)
    if tag.is_lowpass:
        b = mc
    else:
        s = lattice.shear_matrix(index.k, tag, d).astype(float)
        a = lattice.scaling_matrix(index.j, tag, d)
        b = np.linalg.inv(a) @ np.linalg.inv(s) @ mc
    m = np.linalg.solve(b, centre)
    return _RealIndex(tag, index.j, index.k, tuple(m))


@dataclass(frozen=True)
class _RealIndex:
    pyramid: PyramidTag
    j: int
    k: tuple
    m: tuple


# -- baselines -------------------------------------------------------------

def fourier_analyze(f) -> CoeffTable:
    """Coefficients <f, e^{2 pi i k x}> for k in the Nyquist box (unitary)."""
    arr = _as_array(f)
    coeffs = np.fft.fftn(arr) / arr.size
    freqs = [np.fft.fftfreq(n, 1.0 / n).astype(int) for n in arr.shape]
    return CoeffTable(coeffs.ravel(), _FourierKeys(freqs, arr.shape))


def fourier_synthesize(coeffs: CoeffTable, shape) -> np.ndarray:
    return np.fft.ifftn(np.asarray(coeffs.values).reshape(shape) * np.prod(shape)).real


class _FourierKeys:
    def __init__(self, freqs, shape):
        self.freqs, self.shape = freqs, shape

    def __len__(self):
        return int(np.prod(self.shape))

    def __getitem__(self, i):
        pos = np.unravel_index(int(i), self.shape)
        return tuple(int(f[p]) for f, p in zip(self.freqs, pos))


def haar_analyze(f, J: int | None = None) -> CoeffTable:
    """Orthonormal d-dimensional tensor Haar transform of the piecewise-constant field.

    ``J`` caps the number of levels (default: full depth).  Keys are
    ``(j, type, position)`` with ``type`` a 0/1 tuple marking the axes that
    carry the wavelet; ``j = -1`` labels the scaling coefficients.
    """
    arr = _as_array(f)
    n = arr.shape[0]
    if any(s != n for s in arr.shape) or n & (n - 1):
        raise ValueError(f"Haar transform needs a cubic grid with side 2^J, got {arr.shape}")
    depth = int(math.log2(n))
    J = depth if J is None else min(J, depth)
    d = arr.ndim
    cur = arr * math.sqrt(float(np.prod([1.0 / s for s in arr.shape])))
    bands = []
    for level in range(J):
        parts = {(): cur}
        for ax in range(d):
            nxt = {}
            for key, a in parts.items():
                ev = np.take(a, np.arange(0, a.shape[ax], 2), axis=ax)
                od = np.take(a, np.arange(1, a.shape[ax], 2), axis=ax)
                nxt[key + (0,)] = (ev + od) / math.sqrt(2)
                nxt[key + (1,)] = (ev - od) / math.sqrt(2)
            parts = nxt
        j = depth - level - 1
        for typ in sorted(parts):
            if any(typ):
                bands.append((j, typ, parts[typ]))
        cur = parts[(0,) * d]
    bands.append((-1, (0,) * d, cur))
    bands.reverse()  # coarse to fine; deterministic
    values = np.concatenate([b[2].ravel() for b in bands])
    return CoeffTable(values, _HaarKeys(bands))


def haar_synthesize(coeffs: CoeffTable) -> np.ndarray:
    keys: _HaarKeys = coeffs.keys
    vals = np.asarray(coeffs.values)
    bands = []
    off = 0
    for j, typ, shape in keys.layout:
        size = int(np.prod(shape))
        bands.append((j, typ, vals[off:off + size].reshape(shape)))
        off += size
    cur = bands[0][2]
    d = cur.ndim
    rest = bands[1:]
    i = 0
    while i < len(rest):
        level = rest[i:i + 2 ** d - 1]
        parts = {(0,) * d: cur}
        for _, typ, a in level:
            parts[typ] = a
        for ax in reversed(range(d)):
            merged = {}
            for key in {k[:ax] for k in parts}:
                lo, hi = parts[key + (0,)], parts[key + (1,)]
                shape = list(lo.shape)
                shape[ax] *= 2
                out = np.empty(shape)
                sl_e = [slice(None)] * d
                sl_o = [slice(None)] * d
                sl_e[ax] = slice(0, None, 2)
                sl_o[ax] = slice(1, None, 2)
                out[tuple(sl_e)] = (lo + hi) / math.sqrt(2)
                out[tuple(sl_o)] = (lo - hi) / math.sqrt(2)
                merged[key] = out
            parts = merged
        cur = parts[()]
        i += 2 ** d - 1
    return cur / math.sqrt(float(np.prod([1.0 / s for s in cur.shape])))


class _HaarKeys:
    def __init__(self, bands):
        self.layout = [(j, typ, b.shape) for j, typ, b in bands]
        self._offsets = np.cumsum([0] + [int(np.prod(s)) for _, _, s in self.layout])

    def __len__(self):
        return int(self._offsets[-1])

    def __getitem__(self, i):
        b = int(np.searchsorted(self._offsets, i, side="right") - 1)
        j, typ, shape = self.layout[b]
        return (j, typ, tuple(int(v) for v in np.unravel_index(int(i - self._offsets[b]), shape)))

    def scale_of_entries(self) -> np.ndarray:
        return np.concatenate([np.full(int(np.prod(s)), j) for j, _, s in self.layout])


# -- CSV ---------------------------------------------------------------------

def export_coeffs_csv(table: CoeffTable, path) -> None:
    """Columns: pyramid, j, k..., m..., value."""
    system = table.system
    d = system.d
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["pyramid", "j"] + [f"k{i}" for i in range(1, d)] + [f"m{i}" for i in range(1, d + 1)]
                   + ["value"])
        for t, tile in enumerate(system.tiles):
            seg = table.values[system.offsets[t]:system.offsets[t + 1]]
            for mm, v in zip(tile.m, seg):
                w.writerow([tile.pyramid.value, tile.j, *tile.k, *[int(x) for x in mm], repr(float(v))])


def import_coeffs_csv(path, system: ShearletSystem) -> CoeffTable:
    d = system.d
    vec = np.zeros(system.n_coeffs)
    with open(Path(path), newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        lookup = {}
        for row in reader:
            tag = PyramidTag(row[0])
            j = int(row[1])
            k = tuple(int(v) for v in row[2:d + 1])
            m = tuple(int(v) for v in row[d + 1:2 * d + 1])
            key = (tag, j, k)
            if key not in lookup:
                t = system.tile_of(tag, j, k)
                tile = system.tiles[t]
                lookup[key] = (t, {tuple(int(x) for x in mm): i for i, mm in enumerate(tile.m)})
            t, pos = lookup[key]
            if m not in pos:
                raise KeyError(ShearletIndex(tag, j, k, m))
            vec[system.offsets[t] + pos[m]] = float(row[-1])
    return CoeffTable(vec, system.keys(), system)
