"""Closed-form spectra of ``Q``, ``(T Q)^r`` and ``T Q``.

Eigenvectors of every ``Q`` in the family are tensor products of the
characters ``|j> = p^{-1/2} sum_k exp(2 pi i k j / p) |e_k>``.  A word
``(j_1..j_r)`` over ``{0..p-1}`` labels such a product; its eigenvalue under
``Q`` depends only on the number of trailing zeros, and its eigenvalue under
``(T Q)^r`` only on how the zeros group into cyclic clusters.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass
from functools import reduce
from typing import Iterator, Sequence

import numpy as np

from .errors import DegenerateWord, NonPrimeR, ZeroEigenvalueClass
from .hiermat import Form, HierParams, OpKind, apply_fast, offset_to_word, rotate_word


@dataclass(frozen=True)
class ClusterPartition:
    """Zero-cluster structure of a cyclic word.

    ``nu[i-1]`` counts clusters of exactly ``i`` zeros; ``len(nu) == m`` for
    ``0 < m < r`` and ``nu == ()`` for the two extreme classes.
    """

    m: int
    nu: tuple = ()

    @property
    def ell(self) -> int:
        return sum(self.nu)

    def __str__(self):
        return f"m={self.m},nu=[{','.join(str(n) for n in self.nu)}]"


@dataclass(frozen=True)
class SpectralLabel:
    kind: str  # "P1", "P2" or "P3"
    mu: int | None = None
    partition: ClusterPartition | None = None
    j: int | None = None

    def __str__(self):
        if self.kind == "P1":
            return f"P1:mu={self.mu}"
        if self.kind == "P2":
            return f"P2:{self.partition}"
        return f"P3:j={self.j},{self.partition}"


@dataclass(frozen=True)
class SpectralLine:
    value: complex
    multiplicity: int
    label: SpectralLabel

    def to_dict(self) -> dict:
        return {"re": float(self.value.real), "im": float(self.value.imag),
                "mult": int(self.multiplicity), "label": str(self.label)}


# -- words -------------------------------------------------------------------

def trailing_zeros(word: Sequence[int]) -> int:
    count = 0
    for j in reversed(word):
        if j:
            break
        count += 1
    return count


def word_period(word: Sequence[int]) -> int:
    word = tuple(word)
    for d in range(1, len(word) + 1):
        if len(word) % d == 0 and rotate_word(word, d) == word:
            return d
    return len(word)


def classify_word(word: Sequence[int]) -> ClusterPartition:
    """Group the zeros of ``word`` into cyclic clusters.

    The leading and trailing zero runs are one cluster.  All-zero words give
    ``m = r`` and zero-free words ``m = 0``, both with empty ``nu``.
    """
    word = tuple(int(j) for j in word)
    r = len(word)
    m = word.count(0)
    if m in (0, r):
        return ClusterPartition(m, ())
    # start scanning just after a nonzero symbol so no cluster straddles the seam
    start = next(i for i, j in enumerate(word) if j) + 1
    nu = [0] * m
    run = 0
    for k in range(r):
        if word[(start + k) % r] == 0:
            run += 1
        elif run:
            nu[run - 1] += 1
            run = 0
    if run:
        nu[run - 1] += 1
    return ClusterPartition(m, tuple(nu))


# -- partitions --------------------------------------------------------------

def _partitions_desc(m: int, largest: int, max_parts: int) -> Iterator[list]:
    if m == 0:
        yield []
        return
    if max_parts == 0:
        return
    for part in range(min(m, largest), 0, -1):
        for rest in _partitions_desc(m - part, part, max_parts - 1):
            yield [part] + rest


def enumerate_partitions(r: int, m: int) -> list:
    """All ``nu`` with ``sum i nu_i = m`` and ``sum nu_i <= r - m``.

    Sorted lexicographically (ascending) in ``(nu_1, ..., nu_m)``.
    """
    if not 1 <= m <= r - 1:
        raise ValueError(f"need 1 <= m <= r-1, got m={m}, r={r}")
    out = []
    for parts in _partitions_desc(m, m, r - m):
        nu = [0] * m
        for part in parts:
            nu[part - 1] += 1
        out.append(ClusterPartition(m, tuple(nu)))
    out.sort(key=lambda cp: cp.nu)
    return out


def class_multiplicity(p: int, r: int, part: ClusterPartition) -> int:
    """Number of words of length ``r`` with the zero-cluster structure ``part``."""
    m = part.m
    if m == r:
        return 1
    if m == 0:
        return (p - 1) ** r
    free = r - m
    denom = math.factorial(free - part.ell) * reduce(
        lambda acc, n: acc * math.factorial(n), part.nu, 1)
    num = r * (p - 1) ** free * math.factorial(free - 1)
    count, rem = divmod(num, denom)
    assert rem == 0, (p, r, part)
    return count


def all_classes(r: int) -> list:
    """Every ``(m; nu)`` class for depth ``r``: ``m = 0``, the partitions, ``m = r``."""
    classes = [ClusterPartition(0, ())]
    for m in range(1, r):
        classes.extend(enumerate_partitions(r, m))
    classes.append(ClusterPartition(r, ()))
    return classes


# -- Q -----------------------------------------------------------------------

def level_eigenvalues(params: HierParams) -> np.ndarray:
    """``lambda^(mu) = a_0 + ... + a_mu`` for ``mu = 0..r``."""
    return np.cumsum(params.a)


def spectrum_Q(params: HierParams) -> list:
    """Eigenvalues of ``Q`` ordered ``mu = r, r-1, ..., 0``."""
    p, r = params.p, params.r
    lam = level_eigenvalues(params)
    lines = [SpectralLine(complex(lam[r]), 1, SpectralLabel("P1", mu=r))]
    for mu in range(r - 1, -1, -1):
        lines.append(SpectralLine(complex(lam[mu]), (p - 1) * p ** (r - mu - 1),
                                  SpectralLabel("P1", mu=mu)))
    return lines


def spectrum_Q_qform(params: HierParams) -> list:
    """Same spectrum as :func:`spectrum_Q`, evaluated directly from the entries ``q_gamma``."""
    if params.form is not Form.Q:
        raise ValueError("spectrum_Q_qform expects parameters in Q form")
    p, r = params.p, params.r
    q = np.array(params.coeffs)
    weighted = np.cumsum(float(p) ** np.arange(1, r + 1) * q[1:])
    head = lambda mu: q[0] + (1.0 - 1.0 / p) * (weighted[mu - 1] if mu else 0.0)

    lines = [SpectralLine(complex(head(r)), 1, SpectralLabel("P1", mu=r))]
    for mu in range(r - 1, -1, -1):
        value = head(mu) - p ** mu * q[mu + 1]
        lines.append(SpectralLine(complex(value), (p - 1) * p ** (r - mu - 1),
                                  SpectralLabel("P1", mu=mu)))
    return lines


def character_vector(j: int, p: int) -> np.ndarray:
    k = np.arange(p)
    return np.exp(2j * np.pi * k * j / p) / math.sqrt(p)


def eigenvector_Q(params: HierParams, word: Sequence[int]) -> np.ndarray:
    p, r = params.p, params.r
    word = tuple(int(j) for j in word)
    if len(word) != r or any(not 0 <= j < p for j in word):
        raise ValueError(f"word must have {r} symbols in 0..{p - 1}")
    vec = np.ones(1, dtype=complex)
    for j in word:
        vec = np.kron(vec, character_vector(j, p))
    return vec


# -- (T Q)^r -----------------------------------------------------------------

def class_value_power(lam: np.ndarray, part: ClusterPartition, r: int) -> complex:
    """``Lambda^(m;nu)``, the eigenvalue of ``(T Q)^r`` on the class ``part``."""
    m = part.m
    if m in (0, r):
        return complex(lam[m] ** r)
    value = lam[0] ** (r - m)
    running = 1.0
    for i, n in enumerate(part.nu, start=1):
        running *= lam[i]
        value *= running ** n
    return complex(value)


def spectrum_Qrect_power(params: HierParams) -> list:
    p, r = params.p, params.r
    lam = level_eigenvalues(params)
    return [SpectralLine(class_value_power(lam, part, r), class_multiplicity(p, r, part),
                         SpectralLabel("P2", partition=part))
            for part in all_classes(r)]


# -- T Q ---------------------------------------------------------------------

def is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % d for d in range(2, int(math.isqrt(n)) + 1))


def _require_prime(r: int):
    if not is_prime(r):
        raise NonPrimeR(f"r = {r} is not prime; the T Q spectrum is only derived for prime r")


def principal_root(value: complex, r: int) -> complex:
    """r-th root with argument in ``(-pi/r, pi/r]``."""
    if value == 0:
        return 0j
    return cmath.exp(cmath.log(complex(value)) / r)


def _root_base(lam: np.ndarray, part: ClusterPartition, r: int) -> complex:
    # m = 0 and m = r use lambda itself so that j = 0 is exactly lambda^(0) / lambda^(r)
    if part.m in (0, r):
        return complex(lam[part.m])
    return principal_root(class_value_power(lam, part, r), r)


def phase_value(lam: np.ndarray, part: ClusterPartition, r: int, j: int) -> complex:
    return _root_base(lam, part, r) * cmath.exp(2j * math.pi * j / r)


def spectrum_Qrect(params: HierParams) -> list:
    """Eigenvalues of ``T Q`` for prime ``r``.

    Each class ``0 < m < r`` splits into ``r`` lines, the r-th roots of its
    ``(T Q)^r`` eigenvalue.  For ``m = 0`` the ``p - 1`` constant words are
    already eigenvectors with eigenvalue ``lambda^(0)``; the remaining
    rotation orbits split into all ``r`` phases.
    """
    p, r = params.p, params.r
    _require_prime(r)
    lam = level_eigenvalues(params)
    lines = [SpectralLine(complex(lam[r]), 1,
                          SpectralLabel("P3", partition=ClusterPartition(r, ()), j=0))]
    zero_free = ClusterPartition(0, ())
    orbits = ((p - 1) ** r - (p - 1)) // r
    for j in range(r):
        mult = orbits + (p - 1 if j == 0 else 0)
        if mult:
            lines.append(SpectralLine(phase_value(lam, zero_free, r, j), mult,
                                      SpectralLabel("P3", partition=zero_free, j=j)))
    for m in range(1, r):
        for part in enumerate_partitions(r, m):
            mult = class_multiplicity(p, r, part) // r
            for j in range(r):
                lines.append(SpectralLine(phase_value(lam, part, r, j), mult,
                                          SpectralLabel("P3", partition=part, j=j)))
    return lines


def eigenvector_Qrect(params: HierParams, word: Sequence[int], j_phase: int) -> np.ndarray:
    """Unit eigenvector of ``T Q`` generated from the ``Q``-eigenvector of ``word``.

    ``psi = sum_k theta^{-k} (T Q)^k chi`` with ``theta`` the phase-``j`` root
    of the word's class value; then ``T Q psi = theta psi``.
    """
    r = params.r
    _require_prime(r)
    if not 0 <= j_phase < r:
        raise ValueError(f"j_phase must lie in 0..{r - 1}")
    chi = eigenvector_Q(params, word)
    part = classify_word(word)
    if part.m == r:
        return chi
    lam = level_eigenvalues(params)
    if class_value_power(lam, part, r) == 0:
        raise ZeroEigenvalueClass(f"class {part} has eigenvalue 0; no eigenvector basis")
    if word_period(word) == 1:
        if part.m != 0:
            raise DegenerateWord(f"word {tuple(word)} has period 1 with m={part.m}")
        if j_phase != 0:
            raise DegenerateWord(
                f"constant word {tuple(word)} only yields the j=0 eigenvector")
        return chi
    theta = phase_value(lam, part, r, j_phase)
    psi = np.zeros_like(chi)
    term = chi
    for k in range(r):
        psi += term / theta ** k
        term = apply_fast(params, OpKind.QRECT, term)
    return psi / np.linalg.norm(psi)


def eigenbasis_Qrect(params: HierParams, skip_singular: bool = False) -> list:
    """``(line label, value, vector)`` for a full set of ``p^r`` eigenvectors of ``T Q``.

    One generating word is taken per rotation orbit.  Classes with a zero
    ``(T Q)^r`` eigenvalue raise ``ZeroEigenvalueClass`` unless
    ``skip_singular`` is set, in which case they are left out.
    """
    p, r = params.p, params.r
    _require_prime(r)
    lam = level_eigenvalues(params)
    out = []
    seen = set()
    for offset in range(p ** r):
        word = offset_to_word(offset, p, r)
        if word in seen:
            continue
        orbit = {rotate_word(word, k) for k in range(r)}
        seen |= orbit
        part = classify_word(word)
        if skip_singular and part.m != r and class_value_power(lam, part, r) == 0:
            continue
        phases = [0] if len(orbit) == 1 else range(r)
        for j in phases:
            label = SpectralLabel("P3", partition=part, j=j)
            value = complex(lam[r]) if part.m == r else phase_value(lam, part, r, j)
            out.append((label, value, eigenvector_Qrect(params, word, j)))
    return out


# -- reports -----------------------------------------------------------------

def collapse_spectrum(lines: Sequence[SpectralLine], tol: float = 1e-10) -> list:
    """Merge lines whose values agree within ``tol`` into ``(value, multiplicity)`` pairs."""
    merged: list = []
    for line in sorted(lines, key=lambda ln: (abs(ln.value), cmath.phase(ln.value))):
        for entry in merged:
            if abs(entry[0] - line.value) <= tol:
                entry[1] += line.multiplicity
                break
        else:
            merged.append([line.value, line.multiplicity])
    return [(v, m) for v, m in merged]


def total_multiplicity(lines: Sequence[SpectralLine]) -> int:
    return sum(line.multiplicity for line in lines)


def spectrum_to_dict(params: HierParams, lines: Sequence[SpectralLine]) -> dict:
    return {"p": params.p, "r": params.r, "form": params.form.value,
            "coeffs": list(params.coeffs), "lines": [ln.to_dict() for ln in lines]}


def spectrum_to_json(params: HierParams, lines: Sequence[SpectralLine], **kw) -> str:
    return json.dumps(spectrum_to_dict(params, lines), **kw)


def spectrum(params: HierParams, which: str) -> list:
    """Dispatch on ``which`` in ``{"Q", "Qr", "Qrect"}``."""
    if which == "Q":
        return spectrum_Q(params)
    if which in ("Qr", "QrectPower"):
        return spectrum_Qrect_power(params)
    if which == "Qrect":
        return spectrum_Qrect(params)
    raise ValueError(f"unknown spectrum kind {which!r}")


__all__ = [
    "ClusterPartition", "SpectralLabel", "SpectralLine", "all_classes",
    "character_vector", "class_multiplicity", "class_value_power", "classify_word",
    "collapse_spectrum", "eigenbasis_Qrect", "eigenvector_Q",
    "eigenvector_Qrect", "enumerate_partitions", "is_prime", "level_eigenvalues",
    "phase_value", "principal_root", "spectrum", "spectrum_Q", "spectrum_Q_qform",
    "spectrum_Qrect", "spectrum_Qrect_power", "spectrum_to_dict", "spectrum_to_json",
    "total_multiplicity", "trailing_zeros", "word_period",
]
