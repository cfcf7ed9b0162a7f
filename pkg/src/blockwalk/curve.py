"""The time-allocation curve that folds the field's hitting times onto one axis.

Under column-wise proportionality of a field's off-diagonal entries, the
minimal hitting times T(y) all lie on a single continuous nondecreasing
curve whose coordinates sum to the curve parameter.  The construction runs
through per-type level maps, their generalized inverses, and the smooth
composition of the two; composing the field rows with the curve then turns
jumps of T into excursions of real-valued processes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import singledispatch
from typing import Sequence

from .field import Field, HittingProcess, hitting_process
from .model import BlockModel, _check_rho, factor_kernel
from .paths import (
    PiecewisePath,
    add,
    classify,
    compose,
    excursions,
    first_time_at_or_below,
    generalized_inverse,
    past_infimum,
    probe_times,
    scale,
    smooth_compose,
)

EXACT_TOL = 1e-12


class CurveAssumptionError(ValueError):
    """A hypothesis of the curve construction fails; carries a witness."""


class CurveInvariantError(RuntimeError):
    """An identity the construction guarantees was violated: a bug, not bad input."""


@dataclass(frozen=True)
class SymmetryReport:
    """Outcome of the column-wise proportionality check x_il / rho_i = x_jl / rho_j."""

    ok: bool
    witnesses: tuple[tuple[int, int, int, float], ...]  # (column, row_i, row_j, time)

    def summary(self) -> str:
        if self.ok:
            return "column-wise proportionality holds"
        col, i, j, t = self.witnesses[0]
        return f"rows {i} and {j} of column {col} are not proportional near t={t}"


@singledispatch
def check_symmetry(source, rho) -> SymmetryReport:
    raise TypeError(f"cannot check symmetry of {type(source).__name__}")


@check_symmetry.register
def _(source: Field, rho: object) -> SymmetryReport:
    rho = _positive_rho(rho, source.m)
    witnesses = []
    for col in range(source.m):
        rows = [i for i in range(source.m) if i != col]
        if len(rows) < 2:
            continue
        base = rows[0]
        ref = scale(source.paths[base][col], 1.0 / rho[base])
        for i in rows[1:]:
            other = scale(source.paths[i][col], 1.0 / rho[i])
            t = _first_disagreement(ref, other)
            if t is not None:
                witnesses.append((col, base, i, t))
    return SymmetryReport(not witnesses, tuple(witnesses))


@check_symmetry.register
def _(source: BlockModel, rho: object) -> SymmetryReport:
    _positive_rho(rho, source.m)
    result = factor_kernel(source.Q)
    if result.ok:
        return SymmetryReport(True, ())
    return SymmetryReport(False, ((-1, -1, -1, math.nan),))


def _positive_rho(rho, m: int) -> tuple[float, ...]:
    _check_rho(rho, m)
    if any(r <= 0 for r in rho):
        raise CurveAssumptionError("curve construction needs a strictly positive direction")
    return tuple(float(r) for r in rho)


def _first_disagreement(p: PiecewisePath, q: PiecewisePath) -> float | None:
    for t in probe_times(p, q):
        if abs(p.eval(t) - q.eval(t)) > EXACT_TOL or abs(p.eval_left(t) - q.eval_left(t)) > EXACT_TOL:
            return t
    return None


# -- construction ----------------------------------------------------------------


@dataclass(frozen=True)
class CurveBundle:
    """Everything the construction produces.

    ``levels[i]`` maps type-i time to a common progress level (shared
    off-diagonal load plus rescaled depth of the diagonal's running
    infimum); ``combined_time`` sums the inverse maps, and its inverse
    ``combined_level`` recovers the level from total time.  ``curve[i]``
    is the time spent on axis i as a function of total time.
    """

    rho: tuple[float, ...]
    shared_columns: tuple[PiecewisePath, ...]
    levels: tuple[PiecewisePath, ...]
    level_inverses: tuple[PiecewisePath, ...]
    combined_time: PiecewisePath
    combined_level: PiecewisePath
    curve: tuple[PiecewisePath, ...]

    @property
    def m(self) -> int:
        return len(self.curve)

    def curve_point(self, s: float) -> tuple[float, ...]:
        return tuple(g.eval(s) for g in self.curve)


def shared_column(fld: Field, rho, col: int) -> PiecewisePath:
    """The common rescaled off-diagonal path of one column (zero when the
    field has a single type)."""
    rho = _positive_rho(rho, fld.m)
    if fld.m == 1:
        return PiecewisePath(0.0)
    row = 0 if col != 0 else 1
    return scale(fld.paths[row][col], 1.0 / rho[row])


def build_levels(fld: Field, rho) -> tuple[PiecewisePath, ...]:
    """Per-type level maps g_i = shared column minus rescaled running
    infimum of the diagonal.

    Needs every diagonal to dip below zero immediately and drift to minus
    infinity; the result is then nondecreasing, zero at zero, strictly
    positive after zero and unbounded.
    """
    rho = _positive_rho(rho, fld.m)
    out = []
    for i in range(fld.m):
        low = fld.diag_infimum(i)
        if low.terminal_rise >= 0:
            raise CurveAssumptionError(f"diagonal {i} does not drift to -infinity")
        if _stays_level(low):
            raise CurveAssumptionError(f"diagonal {i} does not fall below zero immediately")
        g = add(shared_column(fld, rho, i), scale(low, -1.0 / rho[i]))
        if not classify(g).invertible:
            raise CurveAssumptionError(f"level map of type {i} is not invertible monotone")
        out.append(g)
    return tuple(out)


def _stays_level(low: PiecewisePath) -> bool:
    # the running infimum is flat on an initial interval iff its first move
    # is not strictly downhill
    if low.breakpoints:
        return low.breakpoints[0].left >= low.initial
    return low.terminal_rise >= 0.0


def build_combined(levels: Sequence[PiecewisePath]) -> tuple[PiecewisePath, PiecewisePath]:
    """Total time to reach a level across all axes, and its inverse."""
    inverses = [generalized_inverse(g) for g in levels]
    total = inverses[0]
    for inv in inverses[1:]:
        total = add(total, inv)
    return total, generalized_inverse(total)


def build_curve(fld: Field, rho) -> CurveBundle:
    """Assemble the full bundle; the smooth compositions are guaranteed
    compatible by construction, so a failure there is an internal bug."""
    rho = _positive_rho(rho, fld.m)
    report = check_symmetry(fld, rho)
    if not report.ok:
        raise CurveAssumptionError(report.summary())
    levels = build_levels(fld, rho)
    inverses = tuple(generalized_inverse(g) for g in levels)
    combined_time, combined_level = build_combined(levels)
    try:
        curve = tuple(smooth_compose(inv, combined_level) for inv in inverses)
    except Exception as exc:  # noqa: BLE001 - re-tag construction bugs
        raise CurveInvariantError(f"smooth composition failed on a guaranteed-compatible pair: {exc}") from exc
    return CurveBundle(
        rho,
        tuple(shared_column(fld, rho, i) for i in range(fld.m)),
        levels,
        inverses,
        combined_time,
        combined_level,
        curve,
    )


# -- composed processes and the one-dimensional encoding ---------------------------


def composed_process(fld: Field, bundle: CurveBundle, i: int) -> PiecewisePath:
    """Row i of the field evaluated along the curve: s -> sum_j x_ij(curve_j(s))."""
    total = compose(fld.paths[i][0], bundle.curve[0])
    for j in range(1, fld.m):
        total = add(total, compose(fld.paths[i][j], bundle.curve[j]))
    return total


def composed_processes(fld: Field, bundle: CurveBundle) -> tuple[PiecewisePath, ...]:
    return tuple(composed_process(fld, bundle, i) for i in range(fld.m))


def level_hit_time(process: PiecewisePath, rho_i: float, y: float) -> float:
    """First s at which the composed process's left limits reach -rho_i*y."""
    return first_time_at_or_below(past_infimum(process), -rho_i * y)


def level_hit_times(
    processes: Sequence[PiecewisePath], rho: Sequence[float], y: float
) -> tuple[float, ...]:
    return tuple(level_hit_time(p, r, y) for p, r in zip(processes, rho))


@dataclass(frozen=True)
class EncodedComponent:
    start: float
    end: float
    length: float
    increment: tuple[float, ...]

    def to_json_obj(self) -> dict:
        return {
            "l": self.start,
            "r": self.end,
            "length": self.length,
            "increment": list(self.increment),
        }


#: absorbs summation noise at interior infimum touches of composed processes
EXCURSION_LEVEL_TOL = 1e-9


def encode_components(fld: Field, bundle: CurveBundle) -> list[EncodedComponent]:
    """Excursions of the composed processes with their curve increments.

    All rows share the same excursion intervals; the curve increment over
    each excursion reproduces the corresponding jump of the hitting
    process.  The intervals are cross-checked across rows before the first
    row's version is returned.
    """
    processes = composed_processes(fld, bundle)
    base = excursions(processes[0], level_tol=EXCURSION_LEVEL_TOL)
    for i in range(1, fld.m):
        other = excursions(processes[i], level_tol=EXCURSION_LEVEL_TOL)
        if len(other) != len(base) or any(
            abs(a[0] - b[0]) > 1e-9 or abs(a[1] - b[1]) > 1e-9 for a, b in zip(base, other)
        ):
            raise CurveInvariantError(
                f"excursion intervals of rows 0 and {i} disagree: {base} vs {other}"
            )
    out = []
    for l, r, length in base:
        increment = tuple(g.eval(r) - g.eval(l) for g in bundle.curve)
        out.append(EncodedComponent(l, r, length, increment))
    return out


def verify_encoding(fld: Field, bundle: CurveBundle, process: HittingProcess | None = None) -> dict:
    """Pathwise check that curve increments over excursions match the
    hitting-process jumps, and that excursion lengths match their one-norms."""
    process = hitting_process(fld, bundle.rho) if process is None else process
    encoded = encode_components(fld, bundle)
    checks = []
    ok = len(encoded) == len(process.deltas)
    checks.append({"name": "excursion count equals jump count", "pass": ok})
    for p, (enc, delta) in enumerate(zip(encoded, process.deltas)):
        gap = max(abs(a - b) for a, b in zip(enc.increment, delta))
        within = gap <= EXACT_TOL
        ok = ok and within
        checks.append(
            {"name": f"increment of excursion {p} matches jump", "pass": within, "gap": gap}
        )
        lgap = abs(enc.length - sum(delta))
        ok = ok and lgap <= EXACT_TOL
        checks.append(
            {"name": f"length of excursion {p} equals jump one-norm", "pass": lgap <= EXACT_TOL, "gap": lgap}
        )
    return {"pass": ok, "checks": checks}


# -- special case: continuous strictly increasing off-diagonals --------------------


def special_case_curve(fld: Field, rho) -> tuple[PiecewisePath, ...]:
    """Curve via plain inverses and ordinary composition.

    Valid when the level maps are continuous and strictly increasing,
    which holds whenever the off-diagonal entries are (and, for a single
    type, when the diagonal is strictly decreasing).  On such fields the
    smooth and ordinary compositions agree.
    """
    rho = _positive_rho(rho, fld.m)
    report = check_symmetry(fld, rho)
    if not report.ok:
        raise CurveAssumptionError(report.summary())
    for i in range(fld.m):
        for j in range(fld.m):
            if i == j:
                continue
            p = fld.paths[i][j]
            if p.jumps():
                raise CurveAssumptionError(
                    f"off-diagonal ({i},{j}) jumps; the special-case curve needs continuity"
                )
    levels = build_levels(fld, rho)
    for i, g in enumerate(levels):
        if g.jumps():
            raise CurveAssumptionError(f"level map {i} is discontinuous")
        if any(v1 <= v0 for _, v0, _, v1 in g.finite_segments()):
            raise CurveAssumptionError(f"level map {i} is not strictly increasing")
    _, combined_level = build_combined(levels)
    return tuple(compose(generalized_inverse(g), combined_level) for g in levels)
