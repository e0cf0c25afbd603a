"""Determinant inequalities and identities for positive matrices.

Single-instance checkers expose the two sides of each statement; the
batched suites drive large randomized trials for the acceptance gate.
All comparisons use the hybrid tolerance  margin >= -tol * max(1, |rhs|).
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NotPSD, SingularBlock

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-9
COND_LIMIT = 1e12


def _as_complex(A) -> np.ndarray:
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {A.shape}")
    return A.astype(complex)


def _require_hermitian_psd(A: np.ndarray) -> None:
    scale = max(float(np.abs(A).max()), 1e-300) if A.size else 1.0
    if float(np.abs(A - A.conj().T).max()) > HERMITIAN_TOL * scale:
        raise NotPSD("matrix is not Hermitian")
    w = np.linalg.eigvalsh(A)
    if w[0] < -PSD_TOL * max(scale, 1.0):
        raise NotPSD(f"smallest eigenvalue {w[0]:.3e} is negative")


def _partition(A: np.ndarray, index_sets) -> list[np.ndarray]:
    m = A.shape[0]
    sets = [np.asarray(s, dtype=int) for s in index_sets]
    flat = np.concatenate(sets) if sets else np.zeros(0, dtype=int)
    if len(np.unique(flat)) != len(flat):
        raise DomainError("partition blocks overlap")
    if np.any(flat < 0) or np.any(flat >= m):
        raise DomainError("partition indices out of range")
    return sets


def _real_det(A: np.ndarray) -> float:
    det = np.linalg.det(A)
    return float(det.real)


def fischer(A, alpha) -> tuple[float, float]:
    """Fischer's inequality: det A <= det A_aa * det A_bb (beta = complement).

    Returns (det A, det A_aa * det A_bb) for a Hermitian PSD matrix.
    """
    A = _as_complex(A)
    _require_hermitian_psd(A)
    (alpha,) = _partition(A, [alpha])
    beta = np.setdiff1d(np.arange(A.shape[0]), alpha)
    if alpha.size == 0 or beta.size == 0:
        raise DomainError("both blocks must be non-empty")
    lhs = _real_det(A)
    rhs = _real_det(A[np.ix_(alpha, alpha)]) * _real_det(A[np.ix_(beta, beta)])
    return lhs, rhs


def three_block(A, alpha, beta) -> tuple[float, float]:
    """Three-block inequality det A * det A_bb <= det A_{ab} * det A_{bc}.

    gamma is the complement of alpha and beta; all three blocks must be
    non-empty.  Returns (lhs, rhs).
    """
    A = _as_complex(A)
    _require_hermitian_psd(A)
    alpha, beta = _partition(A, [alpha, beta])
    gamma = np.setdiff1d(np.arange(A.shape[0]), np.concatenate([alpha, beta]))
    if min(alpha.size, beta.size, gamma.size) == 0:
        raise DomainError("all three blocks must be non-empty")
    ab = np.concatenate([alpha, beta])
    bc = np.concatenate([beta, gamma])
    lhs = _real_det(A) * _real_det(A[np.ix_(beta, beta)])
    rhs = _real_det(A[np.ix_(ab, ab)]) * _real_det(A[np.ix_(bc, bc)])
    return lhs, rhs


def det_ratio_identity(A, beta) -> tuple[complex, complex]:
    """Bordered-ratio identity for a general complex matrix.

    Route one: det A / det A_bb.  Route two: determinant of the matrix of
    bordered ratios det A_{b+k, b+l} / det A_bb over the complement.
    Returns (direct, bordered); they agree in exact arithmetic.
    """
    A = _as_complex(A)
    (beta,) = _partition(A, [beta])
    rest = np.setdiff1d(np.arange(A.shape[0]), beta)
    if beta.size == 0 or rest.size == 0:
        raise DomainError("beta and its complement must be non-empty")
    Abb = A[np.ix_(beta, beta)]
    if np.linalg.cond(Abb) >= COND_LIMIT:
        raise SingularBlock("pivot block is too ill-conditioned")
    det_bb = np.linalg.det(Abb)
    direct = np.linalg.det(A) / det_bb
    c = rest.size
    bordered = np.empty((c, c), dtype=complex)
    for i, k in enumerate(rest):
        rows = np.append(beta, k)
        for j, l in enumerate(rest):
            cols = np.append(beta, l)
            bordered[i, j] = np.linalg.det(A[np.ix_(rows, cols)]) / det_bb
    return complex(direct), complex(np.linalg.det(bordered))


def schur_determinant_ratio(A, beta) -> complex:
    """det A / det A_bb through the Schur complement (cross-check route)."""
    A = _as_complex(A)
    (beta,) = _partition(A, [beta])
    rest = np.setdiff1d(np.arange(A.shape[0]), beta)
    Abb = A[np.ix_(beta, beta)]
    if np.linalg.cond(Abb) >= COND_LIMIT:
        raise SingularBlock("pivot block is too ill-conditioned")
    schur = A[np.ix_(rest, rest)] - A[np.ix_(rest, beta)] @ np.linalg.solve(
        Abb, A[np.ix_(beta, rest)]
    )
    return complex(np.linalg.det(schur))


# ---------------------------------------------------------------------------
# batched randomized suites


@dataclass(frozen=True)
class SuiteReport:
    name: str
    trials: int
    violations: int
    skipped: int
    worst_margin: float  # most negative normalized margin observed
    dumps: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return self.violations == 0


def _dump_violation(dump_dir, name: str, index: int, A: np.ndarray, partition) -> str:
    os.makedirs(dump_dir, exist_ok=True)
    path = os.path.join(dump_dir, f"violation_{name}_{index}.csv")
    m = A.shape[0]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"name,{name}\n")
        fh.write(f"size,{m}\n")
        fh.write("partition," + ";".join(",".join(str(i) for i in p) for p in partition) + "\n")
        for r in range(m):
            re = ",".join(f"{A[r, c].real:.17g}" for c in range(m))
            im = ",".join(f"{A[r, c].imag:.17g}" for c in range(m))
            fh.write(re + "," + im + "\n")
    return path


def _psd_pool(rng: np.random.Generator, t: int, m: int) -> np.ndarray:
    G = rng.standard_normal((t, m, m)) + 1j * rng.standard_normal((t, m, m))
    A = np.conj(np.swapaxes(G, 1, 2)) @ G / 2.0
    return A


def _normalized_margins(lhs: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    return (rhs - lhs) / np.maximum(1.0, np.abs(rhs))


def psd_inequality_suite(
    trials: int,
    seed: int,
    tol: float = 1e-9,
    dump_dir=None,
    chunk: int = 4000,
) -> dict[str, SuiteReport]:
    """Fischer, three-block, and bordered-ratio checks over one PSD pool.

    Sizes cycle over 2..8; block splits are drawn per chunk.  Returns one
    report per check; zero violations is the acceptance condition.
    """
    rng = np.random.Generator(np.random.Philox(key=np.array([seed, 0], dtype=np.uint64)))
    counters = {k: [0, 0, 0, 0.0, []] for k in ("fischer", "three_block", "det_ratio")}
    # trials spread as evenly as possible over the sizes
    sizes = list(range(2, 9))
    per_size = [trials // len(sizes)] * len(sizes)
    for i in range(trials % len(sizes)):
        per_size[i] += 1
    for m, t_m in zip(sizes, per_size):
        done = 0
        while done < t_m:
            t = min(chunk, t_m - done)
            A = _psd_pool(rng, t, m)
            _suite_fischer(A, rng, tol, counters["fischer"], dump_dir, m, done)
            if m >= 3:
                _suite_three_block(A, rng, tol, counters["three_block"], dump_dir, m, done)
            _suite_det_ratio(A, rng, tol, counters["det_ratio"], dump_dir, m, done)
            done += t
    out = {}
    for name, (n_tr, viol, skip, worst, dumps) in counters.items():
        out[name] = SuiteReport(
            name=name,
            trials=n_tr,
            violations=viol,
            skipped=skip,
            worst_margin=worst,
            dumps=tuple(dumps),
        )
    return out


def _suite_fischer(A, rng, tol, acc, dump_dir, m, base_index):
    t = A.shape[0]
    a = int(rng.integers(1, m))
    lhs = np.linalg.det(A).real
    rhs = np.linalg.det(A[:, :a, :a]).real * np.linalg.det(A[:, a:, a:]).real
    margins = _normalized_margins(lhs, rhs)
    bad = np.nonzero(margins < -tol)[0]
    acc[0] += t
    acc[1] += bad.size
    acc[3] = min(acc[3], float(margins.min()))
    if dump_dir:
        for idx in bad[:10]:
            acc[4].append(
                _dump_violation(
                    dump_dir, "fischer", base_index + int(idx), A[idx], [range(a), range(a, m)]
                )
            )


def _suite_three_block(A, rng, tol, acc, dump_dir, m, base_index):
    t = A.shape[0]
    a = int(rng.integers(1, m - 1))
    b = int(rng.integers(1, m - a))
    lhs = np.linalg.det(A).real * np.linalg.det(A[:, a : a + b, a : a + b]).real
    rhs = (
        np.linalg.det(A[:, : a + b, : a + b]).real
        * np.linalg.det(A[:, a:, a:]).real
    )
    margins = _normalized_margins(lhs, rhs)
    bad = np.nonzero(margins < -tol)[0]
    acc[0] += t
    acc[1] += bad.size
    acc[3] = min(acc[3], float(margins.min()))
    if dump_dir:
        for idx in bad[:10]:
            acc[4].append(
                _dump_violation(
                    dump_dir,
                    "three_block",
                    base_index + int(idx),
                    A[idx],
                    [range(a), range(a, a + b), range(a + b, m)],
                )
            )


def _suite_det_ratio(A, rng, tol, acc, dump_dir, m, base_index):
    t = A.shape[0]
    b = int(rng.integers(1, m))
    c = m - b
    Abb = A[:, m - b :, m - b :]
    conds = np.linalg.cond(Abb)
    ok_mask = conds < COND_LIMIT
    det_bb = np.linalg.det(Abb)
    direct = np.linalg.det(A) / det_bb
    beta = np.arange(m - b, m)
    rest = np.arange(c)
    bordered_entries = np.empty((t, c, c), dtype=complex)
    for i, k in enumerate(rest):
        rows = np.append(beta, k)
        for j, l in enumerate(rest):
            cols = np.append(beta, l)
            bordered_entries[:, i, j] = np.linalg.det(A[:, rows[:, None], cols[None, :]])
    bordered = np.linalg.det(bordered_entries) / det_bb**c
    err = np.abs(direct - bordered) / np.maximum(1.0, np.abs(direct))
    bad = np.nonzero(ok_mask & (err > tol))[0]
    acc[0] += int(ok_mask.sum())
    acc[1] += bad.size
    acc[2] += int((~ok_mask).sum())
    if np.any(ok_mask):
        acc[3] = min(acc[3], -float(err[ok_mask].max()))
    if dump_dir:
        for idx in bad[:10]:
            acc[4].append(
                _dump_violation(dump_dir, "det_ratio", base_index + int(idx), A[idx], [beta])
            )


def projection_inversion_suite(
    trials: int,
    seed: int,
    tol: float = 1e-9,
    eig_range: tuple[float, float] = (0.1, 2.0),
    chunk: int = 2000,
) -> SuiteReport:
    """P T^{-1} P >= P (P T P)^{-1} P over random positive T and masks."""
    rng = np.random.Generator(np.random.Philox(key=np.array([seed, 1], dtype=np.uint64)))
    sizes = list(range(2, 9))
    per_size = [trials // len(sizes)] * len(sizes)
    for i in range(trials % len(sizes)):
        per_size[i] += 1
    total = 0
    violations = 0
    worst = 0.0
    for m, t_m in zip(sizes, per_size):
        done = 0
        while done < t_m:
            t = min(chunk, t_m - done)
            G = rng.standard_normal((t, m, m))
            Q = np.linalg.qr(G)[0]
            vals = rng.uniform(eig_range[0], eig_range[1], (t, m))
            T = np.einsum("tik,tk,tjk->tij", Q, vals, Q)
            k = int(rng.integers(1, m + 1))
            inv_full = np.linalg.inv(T)[:, :k, :k]
            inv_block = np.linalg.inv(T[:, :k, :k])
            gaps = np.linalg.eigvalsh(inv_full - inv_block)[:, 0]
            total += t
            violations += int(np.sum(gaps < -tol))
            worst = min(worst, float(gaps.min()))
            done += t
    return SuiteReport(
        name="projection_inversion",
        trials=total,
        violations=violations,
        skipped=0,
        worst_margin=worst,
    )


def determinant_monotonicity_suite(
    trials: int,
    seed: int,
    tol: float = 1e-9,
    chunk: int = 4000,
) -> SuiteReport:
    """A <= A + G G^H in the PSD order implies det A <= det(A + G G^H)."""
    rng = np.random.Generator(np.random.Philox(key=np.array([seed, 2], dtype=np.uint64)))
    sizes = list(range(2, 9))
    per_size = [trials // len(sizes)] * len(sizes)
    for i in range(trials % len(sizes)):
        per_size[i] += 1
    total = 0
    violations = 0
    worst = 0.0
    for m, t_m in zip(sizes, per_size):
        done = 0
        while done < t_m:
            t = min(chunk, t_m - done)
            A = _psd_pool(rng, t, m)
            B = A + _psd_pool(rng, t, m)
            margins = _normalized_margins(np.linalg.det(A).real, np.linalg.det(B).real)
            total += t
            violations += int(np.sum(margins < -tol))
            worst = min(worst, float(margins.min()))
            done += t
    return SuiteReport(
        name="determinant_monotonicity",
        trials=total,
        violations=violations,
        skipped=0,
        worst_margin=worst,
    )


def high_precision_margin(A, partition, kind: str = "fischer", dps: int = 50) -> float:
    """Recheck a near-violation with mpmath at `dps` digits.

    Returns the margin rhs - lhs (or -|direct - bordered| for the ratio
    identity); optional triage helper, not part of the fast path.
    """
    import mpmath

    A = _as_complex(A)
    with mpmath.workdps(dps):
        M = mpmath.matrix([[mpmath.mpc(A[i, j]) for j in range(A.shape[1])] for i in range(A.shape[0])])

        def subdet(rows, cols):
            S = mpmath.matrix(len(rows), len(cols))
            for i, r in enumerate(rows):
                for j, c in enumerate(cols):
                    S[i, j] = M[int(r), int(c)]
            return mpmath.det(S)

        m = A.shape[0]
        if kind == "fischer":
            (alpha,) = [list(p) for p in partition]
            beta = [i for i in range(m) if i not in alpha]
            margin = subdet(alpha, alpha) * subdet(beta, beta) - mpmath.det(M)
            return float(mpmath.re(margin))
        if kind == "three_block":
            alpha, beta = [list(p) for p in partition][:2]
            gamma = [i for i in range(m) if i not in alpha and i not in beta]
            ab, bc = alpha + beta, beta + gamma
            margin = subdet(ab, ab) * subdet(bc, bc) - mpmath.det(M) * subdet(beta, beta)
            return float(mpmath.re(margin))
        if kind == "det_ratio":
            (beta,) = [list(p) for p in partition]
            rest = [i for i in range(m) if i not in beta]
            det_bb = subdet(beta, beta)
            direct = mpmath.det(M) / det_bb
            c = len(rest)
            B = mpmath.matrix(c, c)
            for i, k in enumerate(rest):
                for j, l in enumerate(rest):
                    B[i, j] = subdet(beta + [k], beta + [l]) / det_bb
            return -abs(mpmath.det(B) - direct)
        raise DomainError(f"unknown kind {kind!r}")
