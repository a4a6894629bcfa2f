"""Brute-force ground truth for the closed forms.

Nothing here reuses the closed-form eigenvalue formulas to decide pass/fail:
spectral claims are checked against dense matrices (residuals, numeric rank,
traces) and moments against exact propagation of the probability vector.
"""

from __future__ import annotations

import itertools
import json
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import spectra
from .errors import NotNormalized, UnsupportedP
from .hiermat import (DEFAULT_DENSE_CAP, HierParams, OpKind, all_words, apply_fast,
                      build_power, build_Q, build_Qrect, rotate_word, word_to_offset)

RESIDUAL_TOL = 1e-10
RANK_TOL = 1e-8
COINCIDE_TOL = 1e-10


def numeric_rank(mat: np.ndarray, tol: float = RANK_TOL) -> int:
    """Rank by Gaussian elimination with complete pivoting.

    Elimination stops once the largest remaining entry drops below
    ``tol * max(1, max|mat|)``.
    """
    a = np.array(mat, dtype=complex)
    n_rows, n_cols = a.shape
    threshold = tol * max(1.0, float(np.max(np.abs(a)))) if a.size else tol
    rank = 0
    for k in range(min(n_rows, n_cols)):
        sub = np.abs(a[k:, k:])
        flat = int(np.argmax(sub))
        i, j = divmod(flat, sub.shape[1])
        if sub[i, j] < threshold:
            break
        i += k
        j += k
        a[[k, i]] = a[[i, k]]
        a[:, [k, j]] = a[:, [j, k]]
        factors = a[k + 1:, k] / a[k, k]
        a[k + 1:, k + 1:] -= np.outer(factors, a[k, k + 1:])
        a[k + 1:, k] = 0
        rank += 1
    return rank


@dataclass
class Check:
    name: str
    status: str
    max_residual: float = 0.0
    detail: str = ""


@dataclass
class VerificationReport:
    params_echo: HierParams
    which: str
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.status == "pass" for c in self.checks)

    def add(self, name, ok, max_residual=0.0, detail=""):
        self.checks.append(Check(name, "pass" if ok else "fail", float(max_residual), detail))

    def to_dict(self) -> dict:
        prm = self.params_echo
        return {
            "params": {"p": prm.p, "r": prm.r, "form": prm.form.value,
                       "coeffs": list(prm.coeffs)},
            "which": self.which,
            "passed": self.passed,
            "checks": [asdict(c) for c in self.checks],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _residual(mat: np.ndarray, vecs: np.ndarray, values: np.ndarray) -> float:
    if vecs.shape[1] == 0:
        return 0.0
    res = mat @ vecs - vecs * values[None, :]
    return float(np.max(np.linalg.norm(res, axis=0) / np.linalg.norm(vecs, axis=0)))


def _dense_operator(params: HierParams, which: str, dense_cap: int) -> np.ndarray:
    if which == "Q":
        return build_Q(params, dense_cap).entries
    qrect = build_Qrect(params, dense_cap)
    if which == "QrectPower":
        return build_power(qrect, params.r).entries
    return qrect.entries


def _class_vectors(params: HierParams, which: str) -> dict:
    """Map line label -> (eigenvectors as columns, claimed eigenvalue per column)."""
    groups = defaultdict(list)
    if which == "Qrect":
        for label, value, vec in spectra.eigenbasis_Qrect(params, skip_singular=True):
            groups[str(label)].append((vec, value))
    else:
        for word in map(tuple, all_words(params.p, params.r)):
            if which == "Q":
                key = str(spectra.SpectralLabel("P1", mu=spectra.trailing_zeros(word)))
            else:
                key = str(spectra.SpectralLabel("P2", partition=spectra.classify_word(word)))
            groups[key].append((spectra.eigenvector_Q(params, word), None))
    return groups


def verify_spectrum(params: HierParams, which: str = "Q", dense_cap: int = DEFAULT_DENSE_CAP,
                    residual_tol: float = RESIDUAL_TOL, rank_tol: float = RANK_TOL,
                    coincide_tol: float = COINCIDE_TOL) -> VerificationReport:
    """Check every closed-form spectral line against the dense operator.

    ``which`` is ``"Q"``, ``"QrectPower"`` (alias ``"Qr"``) or ``"Qrect"``.
    Each line gets one check covering its eigenvector residuals and the rank
    deficiency of ``A - lambda I``; the report closes with the multiplicity
    sum and trace identities.  For ``"Qrect"`` a further check records the
    Rayleigh quotient of every generated eigenvector.
    """
    which = "QrectPower" if which == "Qr" else which
    if which not in ("Q", "QrectPower", "Qrect"):
        raise ValueError(f"unknown operator {which!r}")
    lines = spectra.spectrum(params, which)  # raises NonPrimeR for Qrect
    mat = _dense_operator(params, which, dense_cap)
    n = mat.shape[0]
    report = VerificationReport(params, which)
    groups = _class_vectors(params, which)
    eye = np.eye(n)

    for line in lines:
        key = str(line.label)
        members = groups.get(key, [])
        detail = []
        ok = True
        resid = 0.0
        if members:
            vecs = np.column_stack([v for v, _ in members])
            values = np.full(len(members), line.value)
            resid = _residual(mat, vecs, values)
            ok &= resid <= residual_tol
            detail.append(f"{len(members)} eigenvector(s)")
        elif line.multiplicity and not (which == "Qrect" and line.value == 0):
            ok = False
            detail.append("no eigenvectors generated")
        else:
            detail.append("no eigenvector constructor")
        expected = sum(other.multiplicity for other in lines
                       if abs(other.value - line.value) <= coincide_tol)
        deficiency = n - numeric_rank(mat - line.value * eye, rank_tol)
        ok &= deficiency == expected
        detail.append(f"rank deficiency {deficiency}, expected {expected}")
        report.add(key, ok, resid, "; ".join(detail))

    total = spectra.total_multiplicity(lines)
    report.add("multiplicity_sum", total == n, 0.0, f"{total} vs p^r = {n}")
    claimed_trace = sum(line.value * line.multiplicity for line in lines)
    trace_err = abs(claimed_trace - np.trace(mat))
    scale = max(1.0, float(np.sum(np.abs(np.diag(mat)))))
    report.add("trace", trace_err <= 1e-10 * scale, trace_err,
               f"sum(value*mult) = {claimed_trace:.12g}, trace = {np.trace(mat):.12g}")

    if which == "Qrect":
        report.checks.append(_convention_check(params, mat, groups, lines, coincide_tol))
    return report


def _convention_check(params, mat, groups, lines, tol) -> Check:
    """Settle which eigenvalue a vector generated from ``chi`` carries.

    Two readings exist for a phase root ``theta`` of the class value:
    ``sum_k theta^-k (T Q)^k chi`` (claimed eigenvalue ``theta``) and
    ``sum_k delta^k (T Q)^k chi`` with ``delta = theta`` (claimed eigenvalue
    ``1/delta``).  Rayleigh quotients against the dense matrix decide; the
    check passes when every generated vector's quotient lies in the
    closed-form value set.
    """
    values = [ln.value for ln in lines]
    worst = 0.0
    total = in_set = equal_theta = 0
    for members in groups.values():
        for vec, theta in members:
            rq = np.vdot(vec, mat @ vec) / np.vdot(vec, vec)
            worst = max(worst, abs(rq - theta))
            total += 1
            equal_theta += abs(rq - theta) <= tol
            in_set += any(abs(rq - v) <= tol for v in values)

    # the delta^k reading, built literally for one word per class and phase
    p, r = params.p, params.r
    lam = spectra.level_eigenvalues(params)
    literal_ok = literal_total = 0
    literal_worst = 0.0
    reps = {}
    for word in map(tuple, all_words(p, r)):
        part = spectra.classify_word(word)
        if 0 < part.m < r:
            reps.setdefault(part, word)
    for part, word in reps.items():
        chi = spectra.eigenvector_Q(params, word)
        for j in range(r):
            delta = spectra.phase_value(lam, part, r, j)
            psi = np.zeros_like(chi)
            term = chi
            for k in range(r):
                psi += delta ** k * term
                term = mat @ term
            res = np.linalg.norm(mat @ psi - psi / delta) / np.linalg.norm(psi)
            literal_worst = max(literal_worst, float(res))
            literal_total += 1
            literal_ok += res <= RESIDUAL_TOL

    ok = in_set == total and equal_theta == total
    detail = (f"weights theta^-k: {equal_theta}/{total} Rayleigh quotients equal theta, "
              f"{in_set}/{total} inside the closed-form value set (eigenvalue = theta); "
              f"weights delta^k with delta = theta: {literal_ok}/{literal_total} are "
              f"eigenvectors for 1/delta, worst residual {literal_worst:.3g} "
              f"(consistent only when delta^r = 1/Lambda)")
    return Check(f"eigenvalue_convention:r={params.r}", "pass" if ok else "fail", float(worst), detail)


# -- exact evolution of the error model --------------------------------------

@dataclass(frozen=True)
class ExactEvolution:
    w: np.ndarray
    t: int


def _check_weights(params: HierParams, tol: float = 1e-12) -> np.ndarray:
    a = params.a
    if np.any(a < -tol) or abs(a.sum() - 1.0) > tol:
        raise NotNormalized(f"weights must be a probability vector, sum = {a.sum():.15g}")
    return a


def evolve(params: HierParams, initial: Sequence[int], steps: int):
    """Yield ``ExactEvolution`` for ``t = 0..steps`` under ``w(t+1) = T Q w(t)``."""
    _check_weights(params)
    if steps < 0:
        raise ValueError("steps must be >= 0")
    w = np.zeros(params.dim)
    w[word_to_offset(initial, params.p)] = 1.0
    yield ExactEvolution(w, 0)
    for t in range(1, steps + 1):
        w = np.clip(apply_fast(params, OpKind.QRECT, w).real, 0.0, None)
        yield ExactEvolution(w, t)


def final_state(params: HierParams, initial: Sequence[int], steps: int) -> ExactEvolution:
    for state in evolve(params, initial, steps):
        pass
    return state


def _derotated_hamming(p: int, r: int, initial: Sequence[int], steps: int) -> np.ndarray:
    words = all_words(p, r)
    derotated = np.roll(words, -steps, axis=1)  # T^{-steps}
    return (derotated != np.asarray(initial)[None, :]).sum(axis=1)


def exact_error_distribution(params: HierParams, steps: int, initial: Sequence[int]) -> np.ndarray:
    """Probability of ``k = 0..r`` errors after ``steps`` steps (any ``p``)."""
    state = final_state(params, initial, steps)
    k = _derotated_hamming(params.p, params.r, initial, steps)
    return np.bincount(k, weights=state.w, minlength=params.r + 1)


def _moments_hamming(params, steps, initial):
    state = final_state(params, initial, steps)
    k = _derotated_hamming(params.p, params.r, initial, steps).astype(float)
    mean = float(state.w @ k)
    return mean, float(state.w @ k ** 2) - mean ** 2


def _moments_generator(params, steps, initial):
    # Taylor coefficients in alpha of E(alpha) w, slot factor 1 + e^alpha P
    r = params.r
    w = final_state(params, initial, steps).w.reshape((2,) * r)
    c0, c1, c2 = w, np.zeros_like(w), np.zeros_like(w)
    for axis in range(r):
        flip = lambda x: np.flip(x, axis=axis)
        c0, c1, c2 = (c0 + flip(c0),
                      c1 + flip(c1) + flip(c0),
                      c2 + flip(c2) + flip(c1) + 0.5 * flip(c0))
    # <e_j0| T^{-l} v> picks the component at T^l j0
    target = tuple(rotate_word(initial, steps))
    d1 = float(c1[target])
    d2 = 2.0 * float(c2[target])
    return d1, d2 - d1 ** 2


def exact_moments(params: HierParams, steps: int, initial: Sequence[int],
                  method: str = "hamming") -> tuple:
    """Mean and variance of the error count after ``steps`` steps, ``p = 2``.

    ``method="hamming"`` weights the evolved probabilities by the Hamming
    distance of the derotated word to ``initial``; ``method="generator"``
    differentiates ``R(alpha) = <e_j0| T^-l E(alpha) (T Q)^l |e_j0>`` at zero.
    """
    if params.p != 2:
        raise UnsupportedP(f"exact moments are defined for p = 2, got p = {params.p}")
    _check_weights(params)
    initial = tuple(int(j) for j in initial)
    if len(initial) != params.r:
        raise ValueError(f"initial word must have {params.r} symbols")
    if method == "hamming":
        return _moments_hamming(params, steps, initial)
    if method == "generator":
        return _moments_generator(params, steps, initial)
    raise ValueError(f"unknown method {method!r}")


def rational_k_distribution(p: int, r: int, weights: Sequence[Fraction],
                            initial: Sequence[int], frame: str = "lab") -> list:
    """Exact full-cycle error distribution with rational arithmetic.

    ``frame="lab"`` randomizes the trailing cells and rotates the word each
    step; ``frame="disc"`` keeps the word fixed and moves the noise zone
    instead.  Meant for ``p^r`` in the tens.
    """
    weights = [Fraction(w) for w in weights]
    if sum(weights) != 1:
        raise NotNormalized("rational weights must sum to 1")
    dist = {tuple(initial): Fraction(1)}
    for step in range(r):
        nxt = defaultdict(Fraction)
        for word, prob in dist.items():
            for gamma, a in enumerate(weights):
                if a == 0:
                    continue
                if frame == "lab":
                    cells = list(range(r - gamma, r))
                else:
                    cells = [(i - step) % r for i in range(r - gamma, r)]
                share = prob * a / p ** gamma
                for fill in itertools.product(range(p), repeat=gamma):
                    new = list(word)
                    for c, s in zip(cells, fill):
                        new[c] = s
                    new = tuple(new)
                    if frame == "lab":
                        new = rotate_word(new, 1)
                    nxt[new] += share
        dist = nxt
    out = [Fraction(0)] * (r + 1)
    for word, prob in dist.items():
        out[sum(a != b for a, b in zip(word, initial))] += prob
    return out
