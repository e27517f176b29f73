"""Index algebra for pyramid-adapted shearlet systems.

Pyramids are numbered by their long (dominant frequency) axis: ``P1``/``C1``
uses axis 0, ``P2``/``C2`` axis 1, ``P3`` axis 2.  The low-frequency box is
``Cube`` (3D) or ``Square`` (2D).
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass

import numpy as np


class PyramidTag(enum.Enum):
    CUBE = "Cube"
    P1 = "P1"
    P2 = "P2"
    P3 = "P3"
    SQUARE = "Square"
    C1 = "C1"
    C2 = "C2"

    @property
    def is_lowpass(self) -> bool:
        return self in (PyramidTag.CUBE, PyramidTag.SQUARE)

    @property
    def axis(self) -> int:
        """Long axis of the pyramid (the one carrying the 2^j dilation)."""
        try:
            return _AXIS[self]
        except KeyError:
            raise ValueError(f"{self.value} has no long axis") from None

    @property
    def dim(self) -> int:
        return 3 if self in (PyramidTag.CUBE, PyramidTag.P1, PyramidTag.P2, PyramidTag.P3) else 2


_AXIS = {
    PyramidTag.P1: 0, PyramidTag.P2: 1, PyramidTag.P3: 2,
    PyramidTag.C1: 0, PyramidTag.C2: 1,
}


def lowpass_tag(d: int) -> PyramidTag:
    _check_dim(d)
    return PyramidTag.CUBE if d == 3 else PyramidTag.SQUARE


def pyramid_tags(d: int) -> list[PyramidTag]:
    """High-frequency tags in priority order."""
    _check_dim(d)
    if d == 3:
        return [PyramidTag.P1, PyramidTag.P2, PyramidTag.P3]
    return [PyramidTag.C1, PyramidTag.C2]


def tag_for_axis(axis: int, d: int) -> PyramidTag:
    return pyramid_tags(d)[axis]


def _check_dim(d: int) -> None:
    if d not in (2, 3):
        raise ValueError(f"dimension must be 2 or 3, got {d}")


def _check_tag(pyramid: PyramidTag, d: int) -> None:
    _check_dim(d)
    if pyramid.is_lowpass:
        raise ValueError(f"{pyramid.value} is the low-frequency part; it has no scaling or shear")
    if pyramid.dim != d:
        raise ValueError(f"tag {pyramid.value} is not a {d}D pyramid")


@dataclass(frozen=True, order=True)
class ShearletIndex:
    """lambda = (pyramid, j, k, m).

    ``m`` holds integer lattice coordinates; the physical translate is
    ``M_c @ m`` in generator units.
    """

    pyramid: PyramidTag
    j: int
    k: tuple[int, ...]
    m: tuple[int, ...]

    def __post_init__(self):
        if self.j < 0:
            raise ValueError("scale j must be nonnegative")
        if not self.pyramid.is_lowpass:
            bound = shear_bound(self.j)
            if any(abs(ki) > bound for ki in self.k):
                raise ValueError(f"|k| exceeds ceil(2^(j/2)) = {bound} at j={self.j}")

    def sort_key(self):
        return (_TAG_ORDER[self.pyramid], self.j, self.k, self.m)


_TAG_ORDER = {t: i for i, t in enumerate(
    [PyramidTag.SQUARE, PyramidTag.CUBE, PyramidTag.C1, PyramidTag.C2,
     PyramidTag.P1, PyramidTag.P2, PyramidTag.P3])}


@dataclass(frozen=True)
class LatticeSpec:
    c1: float
    c2: float

    def __post_init__(self):
        if not (self.c1 > 0 and self.c2 > 0):
            raise ValueError("translation constants must be positive")
        if self.c2 > self.c1:
            raise ValueError(f"need c2 <= c1, got c1={self.c1}, c2={self.c2}")


def shear_bound(j: int) -> int:
    """ceil(2^(j/2)) as an exact integer."""
    if j % 2 == 0:
        return 1 << (j // 2)
    # 2^(j/2) is irrational for odd j, so the ceiling is isqrt(2^j) + 1
    return math.isqrt(1 << j) + 1


def shear_range(j: int, d: int) -> list[tuple[int, ...]]:
    b = shear_bound(j)
    return list(itertools.product(range(-b, b + 1), repeat=d - 1))


def scaling_matrix(j: int, pyramid: PyramidTag, d: int) -> np.ndarray:
    """Paraboloidal dilation: 2^j on the long axis, 2^(j/2) elsewhere."""
    _check_tag(pyramid, d)
    if j < 0:
        raise ValueError("scale j must be nonnegative")
    diag = np.full(d, 2.0 ** (j / 2))
    diag[pyramid.axis] = 2.0 ** j
    return np.diag(diag)


def shear_matrix(k, pyramid: PyramidTag, d: int) -> np.ndarray:
    """Unipotent shear; the row of the long axis carries k on the other axes."""
    _check_tag(pyramid, d)
    k = tuple(int(v) for v in np.atleast_1d(k))
    if len(k) != d - 1:
        raise ValueError(f"shear vector must have length {d - 1}")
    s = np.eye(d, dtype=np.int64)
    a = pyramid.axis
    others = [i for i in range(d) if i != a]
    for ki, col in zip(k, others):
        s[a, col] = ki
    return s


def translation_lattice(spec: LatticeSpec, pyramid: PyramidTag, d: int) -> np.ndarray:
    _check_dim(d)
    if pyramid.is_lowpass:
        return spec.c1 * np.eye(d)
    diag = np.full(d, spec.c2)
    diag[pyramid.axis] = spec.c1
    return np.diag(diag)


def pyramid_of(xi) -> PyramidTag:
    """Frequency region containing ``xi`` (boundary ties: P1 > P2 > P3 > Cube)."""
    xi = np.asarray(xi, dtype=float)
    d = xi.size
    _check_dim(d)
    a = np.abs(xi)
    if a.max() < 1.0:
        return lowpass_tag(d)
    for axis, tag in enumerate(pyramid_tags(d)):
        if a[axis] >= 1.0 and np.all(a <= a[axis]):
            return tag
    raise AssertionError("unreachable: the pyramids cover the complement of the cube")


def pyramid_mask(xi: np.ndarray, d: int) -> np.ndarray:
    """Vectorised ``pyramid_of`` returning tag positions.

    ``xi`` has shape (..., d).  Output holds -1 for the low-frequency box and
    the axis number of the owning pyramid otherwise.
    """
    a = np.abs(xi)
    out = np.full(a.shape[:-1], -1, dtype=np.int8)
    taken = a.max(axis=-1) < 1.0
    for axis in range(d):
        here = ~taken & (a[..., axis] >= a.max(axis=-1))
        out[here] = axis
        taken |= here
    return out


def atom_centre(j: int, k, m, pyramid: PyramidTag, spec: LatticeSpec, d: int) -> np.ndarray:
    """Centre A^{-1} S_k^{-1} M_c m of psi_{j,k,m} in generator units."""
    mc = translation_lattice(spec, pyramid, d) @ np.asarray(m, dtype=float)
    if pyramid.is_lowpass:
        return mc
    s_inv = np.linalg.inv(shear_matrix(k, pyramid, d).astype(float))
    a_inv = np.diag(1.0 / np.diag(scaling_matrix(j, pyramid, d)))
    return a_inv @ s_inv @ mc


def enumerate_indices(j_max: int, spec: LatticeSpec, extent, d: int,
                      support_radius: float = 1.0) -> list[ShearletIndex]:
    """All indices whose nominal support box meets ``extent``.

    ``extent`` is a pair ``(lo, hi)`` of length-d corner vectors in generator
    units.  The nominal support of psi_lambda is the image of the cube
    ``[-r, r]^d`` under ``A^{-1} S_k^{-1}`` shifted to the atom centre.
    """
    _check_dim(d)
    if j_max < 0:
        raise ValueError("j_max must be nonnegative")
    lo, hi = (np.asarray(v, dtype=float).reshape(d) for v in extent)
    if np.any(hi <= lo):
        raise ValueError("degenerate extent")
    corners = np.array(list(itertools.product((-1.0, 1.0), repeat=d))) * support_radius

    out: list[ShearletIndex] = []
    mc = translation_lattice(spec, lowpass_tag(d), d)
    out.extend(_scan(lowpass_tag(d), 0, (0,) * (d - 1), np.eye(d), mc, corners, lo, hi, d))
    for tag in pyramid_tags(d):
        mc = translation_lattice(spec, tag, d)
        for j in range(j_max + 1):
            a_inv = np.linalg.inv(scaling_matrix(j, tag, d))
            for k in shear_range(j, d):
                b = a_inv @ np.linalg.inv(shear_matrix(k, tag, d).astype(float))
                out.extend(_scan(tag, j, k, b, mc, corners, lo, hi, d))
    out.sort(key=ShearletIndex.sort_key)
    return out


def _scan(tag, j, k, b, mc, corners, lo, hi, d):
    """Lattice points z with box b([-r,r]^d) + b mc z intersecting [lo, hi]."""
    gen = b @ mc
    half = np.abs(corners @ b.T).max(axis=0)
    # bounding box of candidate centres, mapped back to lattice coordinates
    box = np.array(list(itertools.product(*zip(lo - half, hi + half))))
    zc = box @ np.linalg.inv(gen).T
    zlo = np.floor(zc.min(axis=0)).astype(int)
    zhi = np.ceil(zc.max(axis=0)).astype(int)
    grids = np.meshgrid(*[np.arange(a, b_ + 1) for a, b_ in zip(zlo, zhi)], indexing="ij")
    z = np.stack([g.ravel() for g in grids], axis=1)
    centres = z @ gen.T
    # exact test of parallelotope against box via the bounding box of the atom
    # support (the parallelotope is contained in its own bounding box, and the
    # box is what defines "nominal support" here)
    ok = np.all((centres + half >= lo) & (centres - half <= hi), axis=1)
    return [ShearletIndex(tag, j, tuple(k), tuple(int(v) for v in zz)) for zz in z[ok]]
