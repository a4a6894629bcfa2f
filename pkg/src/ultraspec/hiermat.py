"""Block-hierarchical operators built from their tensor-product form.

The Hilbert space is ``h^{(x) r}`` with ``dim h = p``.  A basis word
``(j_1, ..., j_r)`` sits at 0-based offset ``sum_g j_g p^(r-g)`` so ``j_1`` is
the most significant digit and the *trailing* slots are the ones the
projectors ``S_gamma`` act on.  That is also the memory order of a C-contiguous
array of shape ``(p,) * r``, which is what :func:`apply_fast` relies on.

Coefficients come in four interchangeable forms:

* ``A``: ``Q = sum_g a_g S_g``
* ``Q``: entry values, ``q_g`` at ultrametric level ``g`` (``q_0`` on the diagonal)
* ``B``: ``Q = prod_g (1 + b_g S_g)``
* ``C``: ``Q = exp(sum_g c_g S_g)``
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DegenerateConversion, DimensionLimitExceeded

DEFAULT_DENSE_CAP = 4096


class Form(str, enum.Enum):
    A = "A"
    Q = "Q"
    B = "B"
    C = "C"


class OpKind(str, enum.Enum):
    S_GAMMA = "S_gamma"
    Q = "Q"
    T = "T"
    QRECT = "Qrect"
    POWER = "Power"
    CUSTOM = "Custom"


@dataclass(frozen=True)
class HierParams:
    """One member of the operator family: branching ``p``, depth ``r`` and
    ``r + 1`` coefficients in the given :class:`Form`."""

    p: int
    r: int
    coeffs: tuple
    form: Form = Form.A

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 2:
            raise ValueError(f"p must be an integer >= 2, got {self.p!r}")
        if int(self.r) != self.r or self.r < 1:
            raise ValueError(f"r must be an integer >= 1, got {self.r!r}")
        coeffs = tuple(float(c) for c in np.asarray(self.coeffs, dtype=float).ravel())
        if len(coeffs) != self.r + 1:
            raise ValueError(
                f"expected r+1 = {self.r + 1} coefficients, got {len(coeffs)}")
        if not all(np.isfinite(coeffs)):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "p", int(self.p))
        object.__setattr__(self, "r", int(self.r))
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "form", Form(self.form))

    @property
    def dim(self) -> int:
        return self.p ** self.r

    def as_form(self, form) -> "HierParams":
        return convert_coeffs(self, form)

    @property
    def a(self) -> np.ndarray:
        """The ``a_gamma`` coefficients as an array."""
        return np.array(convert_coeffs(self, Form.A).coeffs)


@dataclass(frozen=True)
class DenseOperator:
    dim: int
    entries: np.ndarray = field(repr=False)
    kind: OpKind = OpKind.CUSTOM

    def __matmul__(self, other):
        if isinstance(other, DenseOperator):
            return DenseOperator(self.dim, self.entries @ other.entries, OpKind.CUSTOM)
        return self.entries @ other


# -- basis words -------------------------------------------------------------

def word_to_offset(word: Sequence[int], p: int) -> int:
    """0-based position of a basis word."""
    idx = 0
    for j in word:
        if not 0 <= j < p:
            raise ValueError(f"symbol {j} outside 0..{p - 1}")
        idx = idx * p + int(j)
    return idx


def basis_index(word: Sequence[int], p: int) -> int:
    """1-based basis index ``1 + sum_g j_g p^(r-g)``."""
    return 1 + word_to_offset(word, p)


def offset_to_word(offset: int, p: int, r: int) -> tuple:
    if not 0 <= offset < p ** r:
        raise ValueError(f"offset {offset} outside 0..{p ** r - 1}")
    digits = []
    for _ in range(r):
        offset, d = divmod(offset, p)
        digits.append(d)
    return tuple(reversed(digits))


def all_words(p: int, r: int) -> np.ndarray:
    """All words as rows of an ``(p^r, r)`` array, in basis order."""
    idx = np.arange(p ** r)
    powers = p ** np.arange(r - 1, -1, -1)
    return (idx[:, None] // powers[None, :]) % p


def rotate_word(word: Sequence[int], steps: int = 1) -> tuple:
    """Cyclic right rotation ``(j_1..j_r) -> (j_r, j_1..j_{r-1})``, ``steps`` times."""
    word = tuple(word)
    steps %= len(word)
    if steps == 0:
        return word
    return word[-steps:] + word[:-steps]


def ultrametric_level(i: int, k: int, p: int, r: int) -> int:
    """``r`` minus the length of the common prefix of the words at offsets i, k."""
    level = 0
    while i != k:
        i //= p
        k //= p
        level += 1
    return level


def _level_matrix(p: int, r: int) -> np.ndarray:
    n = p ** r
    idx = np.arange(n)
    levels = np.full((n, n), r, dtype=np.int64)
    for g in range(r - 1, -1, -1):
        blk = idx // p ** g
        levels[blk[:, None] == blk[None, :]] = g
    return levels


# -- coefficient algebra -----------------------------------------------------

def _a_from(form: Form, c: np.ndarray, p: int, r: int) -> np.ndarray:
    if form is Form.A:
        return c.copy()
    if form is Form.Q:
        a = np.empty_like(c)
        powers = float(p) ** np.arange(r + 1)
        a[:r] = powers[:r] * (c[:r] - c[1:])
        a[r] = powers[r] * c[r]
        return a
    if form is Form.C:
        return _a_from(Form.B, np.expm1(c), p, r)
    # B form: a_g = b_g * prod_{mu<g} (1 + b_mu), a_0 = 1 + b_0
    a = np.empty_like(c)
    running = 1.0
    for g, b in enumerate(c):
        a[g] = running * b if g else 1.0 + b
        running *= 1.0 + b
    return a


def _a_to(form: Form, a: np.ndarray, p: int, r: int) -> np.ndarray:
    if form is Form.A:
        return a.copy()
    if form is Form.Q:
        scaled = a * float(p) ** -np.arange(r + 1)
        return np.cumsum(scaled[::-1])[::-1]
    b = np.empty_like(a)
    b[0] = a[0] - 1.0
    partial = np.cumsum(a)
    scale = max(1.0, float(np.max(np.abs(a))))
    for g in range(1, r + 1):
        if abs(partial[g - 1]) <= 1e-14 * scale:
            raise DegenerateConversion(
                f"partial sum a_0+..+a_{g - 1} vanishes; B form undefined")
        b[g] = a[g] / partial[g - 1]
    if form is Form.B:
        return b
    if np.any(b <= -1.0):
        g = int(np.argmax(b <= -1.0))
        raise DegenerateConversion(f"b_{g} = {b[g]:.6g} <= -1; C form undefined")
    return np.log1p(b)


def convert_coeffs(params: HierParams, target_form) -> HierParams:
    """Re-express the coefficients of ``params`` in ``target_form``.

    Conversions pass through the A form.  ``DegenerateConversion`` is raised
    when the B or C form does not exist for the operator.
    """
    target = Form(target_form)
    if target is params.form:
        return params
    c = np.array(params.coeffs, dtype=float)
    a = _a_from(params.form, c, params.p, params.r)
    out = _a_to(target, a, params.p, params.r)
    return HierParams(params.p, params.r, tuple(out), target)


# -- dense construction ------------------------------------------------------

def _check_dense(params: HierParams, dense_cap: int) -> int:
    n = params.dim
    if n > dense_cap:
        raise DimensionLimitExceeded(
            f"p^r = {n} exceeds dense cap {dense_cap}; use apply_fast")
    return n


def build_S(params: HierParams, gamma: int, dense_cap: int = DEFAULT_DENSE_CAP) -> DenseOperator:
    """``1^{(x)(r-gamma)} (x) s^{(x)gamma}`` with ``s`` the normalized all-ones p x p matrix."""
    n = _check_dense(params, dense_cap)
    if not 0 <= gamma <= params.r:
        raise ValueError(f"gamma must lie in 0..{params.r}, got {gamma}")
    block = params.p ** gamma
    mat = np.kron(np.eye(n // block), np.full((block, block), 1.0 / block))
    return DenseOperator(n, mat.astype(complex), OpKind.S_GAMMA)


def build_Q(params: HierParams, dense_cap: int = DEFAULT_DENSE_CAP) -> DenseOperator:
    n = _check_dense(params, dense_cap)
    q = np.array(convert_coeffs(params, Form.Q).coeffs)
    mat = q[_level_matrix(params.p, params.r)]
    return DenseOperator(n, mat.astype(complex), OpKind.Q)


def _rotation_targets(p: int, r: int) -> np.ndarray:
    """``targets[w]`` is the offset of the right-rotated word ``w``."""
    idx = np.arange(p ** r)
    return (idx % p) * p ** (r - 1) + idx // p


def build_T(params: HierParams, dense_cap: int = DEFAULT_DENSE_CAP) -> DenseOperator:
    n = _check_dense(params, dense_cap)
    mat = np.zeros((n, n), dtype=complex)
    mat[_rotation_targets(params.p, params.r), np.arange(n)] = 1.0
    return DenseOperator(n, mat, OpKind.T)


def build_Qrect(params: HierParams, dense_cap: int = DEFAULT_DENSE_CAP) -> DenseOperator:
    """The block-rectangular operator ``T Q``."""
    q = build_Q(params, dense_cap)
    mat = np.empty_like(q.entries)
    mat[_rotation_targets(params.p, params.r)] = q.entries
    return DenseOperator(q.dim, mat, OpKind.QRECT)


def build_power(op: DenseOperator, k: int) -> DenseOperator:
    return DenseOperator(op.dim, np.linalg.matrix_power(op.entries, k), OpKind.POWER)


# -- structured matvec -------------------------------------------------------

def apply_fast(params: HierParams, kind, v, gamma: int | None = None) -> np.ndarray:
    """Apply ``S_gamma``, ``Q``, ``T`` or ``T Q`` to ``v`` without a dense matrix.

    ``v`` has shape ``(p^r,)`` or ``(p^r, m)``; extra columns are transformed
    independently.  ``S_gamma`` averages the trailing ``gamma`` tensor slots and
    ``T`` moves the last slot to the front.
    """
    kind = OpKind(kind)
    p, r = params.p, params.r
    v = np.asarray(v)
    if v.shape[0] != p ** r:
        raise ValueError(f"vector length {v.shape[0]} != p^r = {p ** r}")
    extra = v.shape[1:]
    x = v.reshape((p,) * r + extra)

    if kind is OpKind.S_GAMMA:
        if gamma is None or not 0 <= gamma <= r:
            raise ValueError(f"gamma must lie in 0..{r}")
        axes = tuple(range(r - gamma, r))
        out = np.broadcast_to(x.mean(axis=axes, keepdims=True), x.shape) if axes else x
    elif kind in (OpKind.Q, OpKind.QRECT):
        a = params.a
        out = a[0] * x
        part = x
        for g in range(1, r + 1):
            part = part.mean(axis=r - g, keepdims=True)
            out = out + a[g] * part
        if kind is OpKind.QRECT:
            out = np.moveaxis(out, r - 1, 0)
    elif kind is OpKind.T:
        out = np.moveaxis(x, r - 1, 0)
    else:
        raise ValueError(f"apply_fast does not support kind {kind.value}")
    return np.ascontiguousarray(out).reshape(v.shape)
