"""Clifford algebra with n anticommuting imaginary units.

Multivectors are stored densely: ``2**n`` real coefficients indexed by blade
bitmask (bit ``j`` set means the blade contains ``e_{j+1}``).  All field-level
routines work on arrays whose trailing axis has length ``2**n`` so that whole
boundary fields can be multiplied at once.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_DIM = 8


def _check_dim(n):
    if not 1 <= n <= MAX_DIM:
        raise ValueError(f"Clifford dimension must be in [1, {MAX_DIM}], got {n}")


def blade_sign(a: int, b: int) -> int:
    """Sign of ``e_A * e_B = sign * e_{A xor B}``.

    Counts the transpositions needed to sort the concatenated index list and
    adds one factor of -1 per repeated generator (``e_j * e_j = -1``).
    """
    swaps = 0
    x = a >> 1
    while x:
        swaps += bin(x & b).count("1")
        x >>= 1
    swaps += bin(a & b).count("1")
    return -1 if swaps & 1 else 1


@lru_cache(maxsize=None)
def _sign_table_cached(n: int) -> np.ndarray:
    size = 1 << n
    table = np.empty((size, size), dtype=np.int8)
    for a in range(size):
        for b in range(size):
            table[a, b] = blade_sign(a, b)
    table.setflags(write=False)
    return table


# Test hook: fault injection replaces the table for one dimension.
_OVERRIDES: dict[int, np.ndarray] = {}


def sign_table(n: int) -> np.ndarray:
    _check_dim(n)
    if n in _OVERRIDES:
        return _OVERRIDES[n]
    return _sign_table_cached(n)


class corrupted_sign_table:
    """Context manager that flips one entry of the sign table (fault injection)."""

    def __init__(self, n: int, a: int = 1, b: int = 2):
        self.n, self.a, self.b = n, a, b

    def __enter__(self):
        bad = np.array(_sign_table_cached(self.n), copy=True)
        bad[self.a, self.b] *= -1
        _OVERRIDES[self.n] = bad
        return self

    def __exit__(self, *exc):
        _OVERRIDES.pop(self.n, None)
        return False


def grade_of(blade: int) -> int:
    return bin(blade).count("1")


def blade_name(blade: int) -> str:
    if blade == 0:
        return "1"
    return "e" + "".join(str(j + 1) for j in range(MAX_DIM) if blade >> j & 1)


def dim_from_size(size: int) -> int:
    n = size.bit_length() - 1
    if 1 << n != size:
        raise ValueError(f"coefficient axis of length {size} is not a power of two")
    _check_dim(n)
    return n


def gp_arrays(a, b) -> np.ndarray:
    """Geometric product of multivector arrays, broadcasting over leading axes."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape[-1] != b.shape[-1]:
        raise ValueError("dimension mismatch between multivector operands")
    size = a.shape[-1]
    n = dim_from_size(size)
    signs = sign_table(n)
    idx = np.arange(size)
    out_shape = np.broadcast_shapes(a.shape, b.shape)
    out = np.zeros(out_shape)
    for blade in range(size):
        ab = a[..., blade : blade + 1]
        if not np.any(ab):
            continue
        out[..., blade ^ idx] += signs[blade] * ab * b
    return out


def vectors_to_mv(x) -> np.ndarray:
    """Embed arrays of vectors (..., n) as grade-1 multivectors (..., 2**n)."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    _check_dim(n)
    out = np.zeros(x.shape[:-1] + (1 << n,))
    for j in range(n):
        out[..., 1 << j] = x[..., j]
    return out


def scalars_to_mv(s, n: int) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    out = np.zeros(s.shape + (1 << n,))
    out[..., 0] = s
    return out


def mv_norm(a) -> np.ndarray:
    """Euclidean norm of the coefficient vector."""
    return np.linalg.norm(np.asarray(a, dtype=float), axis=-1)


def left_unit(j: int, a) -> np.ndarray:
    """``e_j * a`` for a 1-based generator index, vectorised."""
    a = np.asarray(a, dtype=float)
    n = dim_from_size(a.shape[-1])
    if not 1 <= j <= n:
        raise ValueError(f"generator index {j} out of range for n={n}")
    e = np.zeros(1 << n)
    e[1 << (j - 1)] = 1.0
    return gp_arrays(e, a)


# complex numbers sit inside Cl_2 as a + b*i  <->  a - b*e12, which makes
# holomorphic functions null-solutions of D = e1 d1 + e2 d2.
def complex_to_mv(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    out = np.zeros(z.shape + (4,))
    out[..., 0] = z.real
    out[..., 3] = -z.imag
    return out


def mv_to_complex(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.shape[-1] != 4:
        raise ValueError("complex identification needs n=2 multivectors")
    return a[..., 0] - 1j * a[..., 3]


@dataclass(frozen=True, eq=False)
class Multivector:
    n: int
    coeffs: np.ndarray

    def __post_init__(self):
        _check_dim(self.n)
        c = np.array(self.coeffs, dtype=float).reshape(-1)
        if c.size != 1 << self.n:
            raise ValueError(f"expected {1 << self.n} coefficients, got {c.size}")
        if not np.all(np.isfinite(c)):
            raise ValueError("multivector coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zero(cls, n):
        return cls(n, np.zeros(1 << n))

    @classmethod
    def scalar(cls, value, n):
        c = np.zeros(1 << n)
        c[0] = value
        return cls(n, c)

    @classmethod
    def unit(cls, j, n):
        """The generator ``e_j`` (1-based)."""
        if not 1 <= j <= n:
            raise ValueError(f"generator index {j} out of range for n={n}")
        c = np.zeros(1 << n)
        c[1 << (j - 1)] = 1.0
        return cls(n, c)

    @classmethod
    def blade(cls, indices, n):
        """Product ``e_{i1} e_{i2} ...`` of the listed generators."""
        out = cls.scalar(1.0, n)
        for j in indices:
            out = out * cls.unit(j, n)
        return out

    def grade(self, k) -> "Multivector":
        c = np.array(self.coeffs)
        for b in range(c.size):
            if grade_of(b) != k:
                c[b] = 0.0
        return Multivector(self.n, c)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def __add__(self, other):
        other = self._coerce(other)
        return Multivector(self.n, self.coeffs + other.coeffs)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        return Multivector(self.n, self.coeffs - other.coeffs)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __neg__(self):
        return Multivector(self.n, -self.coeffs)

    def __mul__(self, other):
        if isinstance(other, Multivector):
            return geometric_product(self, other)
        return Multivector(self.n, self.coeffs * float(other))

    def __rmul__(self, other):
        return Multivector(self.n, self.coeffs * float(other))

    def __eq__(self, other):
        if not isinstance(other, Multivector):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.coeffs, other.coeffs)

    def allclose(self, other, atol=1e-12, rtol=0.0):
        other = self._coerce(other)
        return np.allclose(self.coeffs, other.coeffs, atol=atol, rtol=rtol)

    def _coerce(self, other):
        if isinstance(other, Multivector):
            if other.n != self.n:
                raise ValueError("dimension mismatch between multivectors")
            return other
        return Multivector.scalar(float(other), self.n)

    def __repr__(self):
        terms = [
            f"{c:+.6g}*{blade_name(b)}" for b, c in enumerate(self.coeffs) if c != 0.0
        ]
        return f"Multivector(n={self.n}: {' '.join(terms) or '0'})"


def geometric_product(a: Multivector, b: Multivector) -> Multivector:
    if a.n != b.n:
        raise ValueError(f"dimension mismatch: n={a.n} vs n={b.n}")
    return Multivector(a.n, gp_arrays(a.coeffs, b.coeffs))


def embed_vector(x) -> Multivector:
    x = np.asarray(x, dtype=float).reshape(-1)
    return Multivector(x.size, vectors_to_mv(x))


def dirac_apply(field, spacing):
    """Apply ``D = sum_j e_j d_j`` to multivector samples on a uniform lattice.

    ``field`` has shape ``(m_1, ..., m_n, 2**n)`` and the lattice dimension must
    equal the Clifford dimension.  Interior points use second-order central
    differences; the outermost layer uses second-order one-sided differences.

    Returns ``(residual, boundary_mask)`` where ``boundary_mask`` flags the
    one-sided layer.
    """
    field = np.asarray(field, dtype=float)
    n = dim_from_size(field.shape[-1])
    lattice = field.shape[:-1]
    if len(lattice) != n:
        raise ValueError(f"lattice has {len(lattice)} axes but n={n}")
    if min(lattice) < 3:
        raise ValueError("dirac_apply needs at least 3 lattice points per axis")
    spacing = np.broadcast_to(np.asarray(spacing, dtype=float), (n,))
    residual = np.zeros_like(field)
    mask = np.zeros(lattice, dtype=bool)
    for j in range(n):
        d = np.gradient(field, spacing[j], axis=j, edge_order=2)
        residual += left_unit(j + 1, d)
        sl = [slice(None)] * n
        sl[j] = 0
        mask[tuple(sl)] = True
        sl[j] = -1
        mask[tuple(sl)] = True
    return residual, mask
