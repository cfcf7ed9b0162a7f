"""Exact algebra on piecewise-linear cadlag paths over [0, inf).

A path is kept in canonical form: the value at zero, a sorted tuple of
breakpoints carrying (time, left value, right value), and the direction of
the final unbounded segment. Interior slopes are implied by the stored
endpoint values, so sums, generalized inverses, compositions, running
infima and excursion extraction all stay closed over the representation.
In particular double inversion returns the identical object, not just a
numerically close one.
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field

#: breakpoints closer than this are merged during canonicalization
MERGE_EPS = 1e-12

#: slack used when comparing path values that were produced by arithmetic
VALUE_TOL = 1e-12


class PathDomainError(ValueError):
    """Evaluation or construction outside the path's domain."""


class PathClassError(ValueError):
    """Operation applied to a path outside the required monotonicity class."""


class IncompatiblePairError(ValueError):
    """Smooth composition attempted on a pair failing the matching conditions."""

    def __init__(self, report: "CompatibilityReport"):
        super().__init__(f"incompatible pair: {report.summary()}")
        self.report = report


@dataclass(frozen=True)
class Breakpoint:
    t: float
    left: float
    right: float

    @property
    def jump(self) -> float:
        return self.right - self.left


@dataclass(frozen=True)
class PiecewisePath:
    """Right-continuous piecewise-linear function on [0, inf).

    ``initial`` is the value at 0.  Between consecutive breakpoints the path
    is the straight line through the stored endpoint values (``right`` of
    the earlier one, ``left`` of the later one); the same rule connects the
    origin to the first breakpoint.  After the last breakpoint the path
    follows the terminal direction ``(terminal_run, terminal_rise)``, kept
    as a pair so that inverting twice restores it exactly.
    """

    initial: float
    breakpoints: tuple[Breakpoint, ...] = ()
    terminal_rise: float = 0.0
    terminal_run: float = 1.0
    _times: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not (math.isfinite(self.terminal_run) and self.terminal_run > 0):
            raise PathDomainError("terminal_run must be finite and positive")
        if not math.isfinite(self.terminal_rise) or not math.isfinite(self.initial):
            raise PathDomainError("path data must be finite")
        times = tuple(b.t for b in self.breakpoints)
        prev = 0.0
        for b in self.breakpoints:
            if not (math.isfinite(b.t) and math.isfinite(b.left) and math.isfinite(b.right)):
                raise PathDomainError("breakpoint data must be finite")
            if b.t <= prev:
                raise PathDomainError("breakpoint times must be strictly increasing and positive")
            prev = b.t
        object.__setattr__(self, "_times", times)

    # -- evaluation ---------------------------------------------------------

    def eval(self, t: float) -> float:
        if t < 0:
            raise PathDomainError(f"path evaluated at negative time {t}")
        bps = self.breakpoints
        if not bps:
            return self.initial + self.terminal_rise * (t / self.terminal_run)
        k = bisect_right(self._times, t) - 1
        if k < 0:
            b = bps[0]
            return self.initial + (b.left - self.initial) * (t / b.t)
        b = bps[k]
        if k == len(bps) - 1:
            return b.right + self.terminal_rise * ((t - b.t) / self.terminal_run)
        nxt = bps[k + 1]
        return b.right + (nxt.left - b.right) * ((t - b.t) / (nxt.t - b.t))

    def eval_left(self, t: float) -> float:
        """Left limit at ``t``; at 0 this is defined as the value itself."""
        if t < 0:
            raise PathDomainError(f"path evaluated at negative time {t}")
        if t == 0:
            return self.eval(0.0)
        k = bisect_left(self._times, t)
        if k < len(self._times) and self._times[k] == t:
            return self.breakpoints[k].left
        return self.eval(t)

    __call__ = eval

    # -- structure ----------------------------------------------------------

    @property
    def terminal_slope(self) -> float:
        return self.terminal_rise / self.terminal_run

    @property
    def last_anchor(self) -> tuple[float, float]:
        """Start point (t, value) of the terminal ray."""
        if self.breakpoints:
            b = self.breakpoints[-1]
            return b.t, b.right
        return 0.0, self.initial

    def jumps(self) -> list[Breakpoint]:
        return [b for b in self.breakpoints if b.right != b.left]

    def finite_segments(self) -> list[tuple[float, float, float, float]]:
        """Linear pieces between breakpoints as (t0, v0, t1, v1) with v0 the
        value just after t0 and v1 the left limit at t1."""
        out = []
        t0, v0 = 0.0, self.initial
        for b in self.breakpoints:
            out.append((t0, v0, b.t, b.left))
            t0, v0 = b.t, b.right
        return out

    def slope_before(self, t: float) -> float:
        """Slope of the linear piece immediately to the left of ``t`` (> 0)."""
        if t <= 0:
            raise PathDomainError("no segment to the left of 0")
        bps = self.breakpoints
        if not bps or t <= bps[0].t:
            if not bps:
                return self.terminal_slope
            return (bps[0].left - self.initial) / bps[0].t
        k = bisect_left(self._times, t) - 1
        b = bps[k]
        if k == len(bps) - 1:
            return self.terminal_slope
        nxt = bps[k + 1]
        return (nxt.left - b.right) / (nxt.t - b.t)

    def limit_at_infinity(self) -> float:
        """Limit value; +-inf when the terminal direction is not flat."""
        if self.terminal_rise > 0:
            return math.inf
        if self.terminal_rise < 0:
            return -math.inf
        return self.last_anchor[1]

    def eval_left_extended(self, t: float) -> float:
        """eval_left that also accepts t = +inf (returning the limit)."""
        if t == math.inf:
            return self.limit_at_infinity()
        return self.eval_left(t)

    # -- serialization ------------------------------------------------------

    def to_json_obj(self) -> dict:
        return {
            "initial": self.initial,
            "terminal_slope": self.terminal_slope,
            "breakpoints": [
                {
                    "t": b.t,
                    "left": b.left,
                    "right": b.right,
                    "slope": self._outgoing_slope(k),
                }
                for k, b in enumerate(self.breakpoints)
            ],
        }

    def _outgoing_slope(self, k: int) -> float:
        bps = self.breakpoints
        if k == len(bps) - 1:
            return self.terminal_slope
        nxt = bps[k + 1]
        return (nxt.left - bps[k].right) / (nxt.t - bps[k].t)


def path_from_json_obj(obj: dict) -> PiecewisePath:
    """Inverse of :meth:`PiecewisePath.to_json_obj` with schema checking."""
    allowed = {"initial", "terminal_slope", "breakpoints"}
    unknown = set(obj) - allowed
    if unknown:
        raise PathDomainError(f"unknown path fields: {sorted(unknown)}")
    try:
        initial = float(obj["initial"])
        terminal = float(obj["terminal_slope"])
        raw = obj["breakpoints"]
    except (KeyError, TypeError) as exc:
        raise PathDomainError(f"malformed path object: {exc}") from exc
    anchors = []
    for k, r in enumerate(raw):
        extra = set(r) - {"t", "left", "right", "slope"}
        if extra:
            raise PathDomainError(f"breakpoint {k}: unknown fields {sorted(extra)}")
        anchors.append((float(r["t"]), float(r["left"]), float(r["right"])))
    path = _build(initial, anchors, terminal, 1.0)
    for k, r in enumerate(raw):
        if "slope" in r and k < len(raw) - 1:
            implied = path._outgoing_slope(k)
            if abs(float(r["slope"]) - implied) > 1e-9:
                raise PathDomainError(
                    f"breakpoint {k}: slope {r['slope']} inconsistent with values (implied {implied})"
                )
    return path


# -- canonical construction ---------------------------------------------------


def _build(
    initial: float,
    anchors: list[tuple[float, float, float]],
    terminal_rise: float,
    terminal_run: float = 1.0,
) -> PiecewisePath:
    """Canonicalize (time, left, right) anchors into a path.

    Anchors closer than MERGE_EPS collapse into one (treated as a single
    simultaneous jump) and anchors carrying neither a jump nor a slope
    change are dropped.
    """
    anchors = sorted(anchors, key=lambda a: a[0])
    merged: list[list[float]] = []
    for t, left, right in anchors:
        if merged and t - merged[-1][0] <= MERGE_EPS:
            merged[-1][2] = right
        else:
            merged.append([t, left, right])

    # drop anchors carrying neither a jump nor a slope change, cascading so
    # that every survivor is tested against its final neighbors
    kept: list[list[float]] = []

    def prev_point() -> tuple[float, float]:
        if len(kept) >= 2:
            return kept[-2][0], kept[-2][2]
        return 0.0, initial

    def top_redundant(nt: float, nl: float) -> bool:
        t, left, right = kept[-1]
        if left != right:
            return False
        pt, pv = prev_point()
        return (left - pv) * (nt - pt) == (nl - pv) * (t - pt)

    for anchor in merged:
        while kept and top_redundant(anchor[0], anchor[1]):
            kept.pop()
        kept.append(anchor)
    while kept:
        t, left, right = kept[-1]
        if left != right:
            break
        pt, pv = prev_point()
        if (left - pv) * terminal_run == terminal_rise * (t - pt):
            kept.pop()
        else:
            break
    return PiecewisePath(
        initial,
        tuple(Breakpoint(t, l, r) for t, l, r in kept),
        terminal_rise,
        terminal_run,
    )


def _polyline(
    nodes: list[tuple[float, float]], terminal_rise: float, terminal_run: float = 1.0
) -> PiecewisePath:
    """Continuous path through (t, value) nodes, starting at t = 0."""
    dedup: list[tuple[float, float]] = []
    for t, v in nodes:
        if dedup and t == dedup[-1][0]:
            continue
        dedup.append((t, v))
    if not dedup or dedup[0][0] != 0.0:
        dedup.insert(0, (0.0, dedup[0][1] if dedup else 0.0))
    initial = dedup[0][1]
    anchors = [(t, v, v) for t, v in dedup[1:]]
    return _build(initial, anchors, terminal_rise, terminal_run)


# -- simple constructors ------------------------------------------------------


def drift(slope: float) -> PiecewisePath:
    """t -> slope * t."""
    return PiecewisePath(0.0, (), float(slope), 1.0)


def identity() -> PiecewisePath:
    return drift(1.0)


def step(t: float, size: float) -> PiecewisePath:
    """Single jump of ``size`` at time ``t``, flat elsewhere."""
    return _build(0.0, [(float(t), 0.0, float(size))], 0.0, 1.0)


def pure_jumps(jumps: list[tuple[float, float]]) -> PiecewisePath:
    """Nondecreasing staircase accumulating ``size`` at each ``time``."""
    total = 0.0
    anchors = []
    for t, size in sorted(jumps):
        anchors.append((float(t), total, total + size))
        total += size
    return _build(0.0, anchors, 0.0, 1.0)


def polyline(nodes: list[tuple[float, float]], terminal_rise: float, terminal_run: float = 1.0) -> PiecewisePath:
    return _polyline(list(nodes), terminal_rise, terminal_run)


# -- class flags --------------------------------------------------------------


@dataclass(frozen=True)
class PathClasses:
    no_negative_jumps: bool
    nondecreasing: bool
    invertible: bool  # zero at 0, nondecreasing, positive after 0, unbounded


def classify(path: PiecewisePath) -> PathClasses:
    no_neg = all(b.right >= b.left for b in path.breakpoints)
    nondec = no_neg and path.terminal_rise >= 0
    if nondec:
        for _, v0, _, v1 in path.finite_segments():
            if v1 < v0:
                nondec = False
                break
    invertible = (
        nondec
        and path.initial == 0.0
        and path.terminal_rise > 0
        and (not path.breakpoints or path.breakpoints[0].left > 0.0)
    )
    return PathClasses(no_neg, nondec, invertible)


def require_no_negative_jumps(path: PiecewisePath, op: str) -> None:
    for b in path.breakpoints:
        if b.right < b.left:
            raise PathClassError(f"{op}: negative jump at t={b.t} ({b.left} -> {b.right})")


def require_invertible(path: PiecewisePath, op: str) -> None:
    c = classify(path)
    if not c.nondecreasing:
        raise PathClassError(f"{op}: path is not nondecreasing")
    if path.initial != 0.0:
        raise PathClassError(f"{op}: path does not start at 0 (value {path.initial})")
    if path.breakpoints and path.breakpoints[0].left <= 0.0:
        raise PathClassError(f"{op}: path is not strictly positive immediately after 0")
    if path.terminal_rise <= 0:
        raise PathClassError(f"{op}: path is bounded (flat terminal direction)")


# -- linear operations --------------------------------------------------------


def add(p: PiecewisePath, q: PiecewisePath) -> PiecewisePath:
    """Pointwise sum, exact at every breakpoint of either operand."""
    times = sorted(set(p._times) | set(q._times))
    anchors = []
    group_lo = group_hi = None
    for t in times:
        if group_lo is None:
            group_lo = group_hi = t
        elif t - group_hi <= MERGE_EPS:
            group_hi = t
        else:
            anchors.append(_sum_anchor(p, q, group_lo, group_hi))
            group_lo = group_hi = t
    if group_lo is not None:
        anchors.append(_sum_anchor(p, q, group_lo, group_hi))
    return _build(
        p.initial + q.initial,
        anchors,
        p.terminal_rise * q.terminal_run + q.terminal_rise * p.terminal_run,
        p.terminal_run * q.terminal_run,
    )


def _sum_anchor(p, q, lo, hi):
    return (lo, p.eval_left(lo) + q.eval_left(lo), p.eval(hi) + q.eval(hi))


def scale(p: PiecewisePath, c: float) -> PiecewisePath:
    """Pointwise multiple.  Negative ``c`` is allowed; callers that need a
    monotone class preserved must check it themselves."""
    if c == 0.0:
        return PiecewisePath(0.0, (), 0.0, 1.0)
    anchors = [(b.t, c * b.left, c * b.right) for b in p.breakpoints]
    return _build(c * p.initial, anchors, c * p.terminal_rise, p.terminal_run)


# -- past infimum -------------------------------------------------------------


def past_infimum(path: PiecewisePath) -> PiecewisePath:
    """Running infimum t -> inf over [0, t]; continuous and nonincreasing.

    Requires the path to have no negative jumps, which is what makes the
    output continuous.
    """
    require_no_negative_jumps(path, "past_infimum")
    nodes: list[tuple[float, float]] = [(0.0, path.initial)]
    cur = path.initial
    for t0, v0, t1, v1 in path.finite_segments():
        if v1 < cur:
            if v0 > cur:
                slope = (v1 - v0) / (t1 - t0)
                nodes.append((t0 + (cur - v0) / slope, cur))
            else:
                nodes.append((t0, cur))
            nodes.append((t1, v1))
            cur = v1
    t_last, v_last = path.last_anchor
    if path.terminal_rise < 0:
        rise, run = path.terminal_rise, path.terminal_run
        if v_last > cur:
            t_star = t_last + (cur - v_last) * path.terminal_run / path.terminal_rise
            nodes.append((t_star, cur))
        else:
            nodes.append((t_last, cur))
    else:
        rise, run = 0.0, 1.0
    return _polyline(nodes, rise, run)


def first_time_at_or_below(path: PiecewisePath, level: float) -> float:
    """First t with path(t) <= level for a continuous nonincreasing path;
    +inf when the level is never reached."""
    if path.eval(0.0) <= level:
        return 0.0
    for t0, v0, t1, v1 in path.finite_segments():
        if v1 <= level:
            if v0 == v1:
                return t0
            return t0 + (level - v0) * (t1 - t0) / (v1 - v0)
    t_last, v_last = path.last_anchor
    if path.terminal_rise < 0:
        return t_last + (level - v_last) * path.terminal_run / path.terminal_rise
    return math.inf


# -- generalized inverse ------------------------------------------------------


def _moves(path: PiecewisePath) -> list[tuple]:
    """Decompose into ordered primitives: ('seg', x0, y0, x1, y1) pieces,
    ('jump', x, y0, y1) discontinuities and a final ('ray', x, y, rise, run)."""
    out: list[tuple] = []
    x0, y0 = 0.0, path.initial
    for b in path.breakpoints:
        out.append(("seg", x0, y0, b.t, b.left))
        if b.right != b.left:
            out.append(("jump", b.t, b.left, b.right))
        x0, y0 = b.t, b.right
    out.append(("ray", x0, y0, path.terminal_rise, path.terminal_run))
    return out


def _from_moves(moves: list[tuple]) -> PiecewisePath:
    initial = moves[0][2]
    anchors: list[tuple[float, float, float]] = []

    def ensure_anchor(x: float, y: float) -> None:
        if x > 0.0 and not (anchors and anchors[-1][0] == x):
            anchors.append((x, y, y))

    for mv in moves:
        if mv[0] == "jump":
            _, x, ya, yb = mv
            if anchors and anchors[-1][0] == x:
                t, left, _ = anchors[-1]
                anchors[-1] = (t, left, yb)
            elif x == 0.0:
                initial = yb
            else:
                anchors.append((x, ya, yb))
        elif mv[0] == "seg":
            _, x0, y0, _, _ = mv
            ensure_anchor(x0, y0)
        else:
            _, x0, y0, rise, run = mv
            ensure_anchor(x0, y0)
            return _build(initial, anchors, rise, run)
    raise AssertionError("move list did not end with a ray")


def generalized_inverse(h: PiecewisePath) -> PiecewisePath:
    """Right-continuous generalized inverse s -> inf{u > 0 : h(u) > s}.

    Defined on the class of nondecreasing paths that vanish at 0, are
    strictly positive right after 0 and grow without bound.  Jumps of ``h``
    become flat pieces of the inverse and vice versa; applying the inverse
    twice returns the identical representation.
    """
    require_invertible(h, "generalized_inverse")
    inverted: list[tuple] = []
    for mv in _moves(h):
        if mv[0] == "seg":
            _, x0, y0, x1, y1 = mv
            if y1 == y0:
                inverted.append(("jump", y0, x0, x1))
            else:
                inverted.append(("seg", y0, x0, y1, x1))
        elif mv[0] == "jump":
            _, x, y0, y1 = mv
            inverted.append(("seg", y0, x, y1, x))
        else:
            _, x, y, rise, run = mv
            inverted.append(("ray", y, x, run, rise))
    return _from_moves(inverted)


# -- compatibility and smooth composition -------------------------------------


@dataclass(frozen=True)
class CompatibilityReport:
    """Outcome of the jump/flat matching checks for a monotone pair.

    ``h1_violations`` lists jump levels of the outer function whose
    preimage under the inner one has zero length; ``h2_violations`` lists
    inner jump times where the outer values across the jump disagree.
    """

    h1_ok: bool
    h2_ok: bool
    h1_violations: tuple[float, ...]
    h2_violations: tuple[tuple[float, float, float], ...]

    @property
    def ok(self) -> bool:
        return self.h1_ok and self.h2_ok

    def summary(self) -> str:
        bits = []
        if not self.h1_ok:
            bits.append(f"H1 fails at outer jumps {list(self.h1_violations)}")
        if not self.h2_ok:
            bits.append(f"H2 fails at inner jumps {[s for s, _, _ in self.h2_violations]}")
        return "; ".join(bits) if bits else "compatible"


def check_compatible(g: PiecewisePath, kappa: PiecewisePath) -> CompatibilityReport:
    """H1: every jump of g pulls back to an interval of positive length
    under kappa.  H2: across every jump of kappa, g takes the same value at
    the left limit and at the left edge of the landing point."""
    require_invertible(g, "check_compatible")
    require_invertible(kappa, "check_compatible")
    kinv = generalized_inverse(kappa)
    h1_bad = tuple(
        b.t for b in g.jumps() if kinv.eval(b.t) - kinv.eval_left(b.t) <= 0.0
    )
    h2_bad = []
    for b in kappa.jumps():
        lhs = g.eval(b.left)
        rhs = g.eval_left(b.right)
        if lhs != rhs and abs(lhs - rhs) > VALUE_TOL:
            h2_bad.append((b.t, lhs, rhs))
    return CompatibilityReport(not h1_bad, not h2_bad, h1_bad, tuple(h2_bad))


def smooth_compose(g: PiecewisePath, kappa: PiecewisePath) -> PiecewisePath:
    """Composition of g with kappa that bridges every jump of g linearly.

    Off the pulled-back jump intervals this is the ordinary g(kappa(s)); on
    the interval that kappa spends producing a jump level u of g, the value
    interpolates linearly between g(u-) and g(u).  The result is continuous
    and nondecreasing, and composing a path with its generalized inverse in
    either order yields the identity.
    """
    report = check_compatible(g, kappa)
    if not report.ok:
        raise IncompatiblePairError(report)
    kinv = generalized_inverse(kappa)

    # structural nodes: every breakpoint of g pulled back through kappa
    # keeps its stored values, so the spline endpoints are exact and no
    # jump is lost to the rounding of re-evaluating g at kappa(s)
    nodes: list[tuple[float, float]] = []
    for b in g.breakpoints:
        s_lo, s_hi = kinv.eval_left(b.t), kinv.eval(b.t)
        nodes.append((s_lo, b.left))
        if s_hi > s_lo:
            nodes.append((s_hi, b.right))
        elif b.right != b.left:  # cannot happen for compatible pairs
            raise IncompatiblePairError(report)
    taken = sorted(s for s, _ in nodes)
    for b in kappa.breakpoints:
        if any(abs(b.t - t) <= MERGE_EPS for t in taken):
            continue
        nodes.append((b.t, g.eval(b.right)))
    nodes.sort(key=lambda nv: nv[0])
    nodes.insert(0, (0.0, g.eval(kappa.eval(0.0))))
    return _polyline(
        nodes,
        g.terminal_rise * kappa.terminal_rise,
        g.terminal_run * kappa.terminal_run,
    )


def compose(outer: PiecewisePath, inner: PiecewisePath) -> PiecewisePath:
    """Ordinary composition outer(inner(s)) for continuous nondecreasing
    ``inner`` in the invertible class; ``outer`` may be any path.

    Breakpoints of the output are taken structurally: each breakpoint of
    the outer path is pulled back through the inverse of the inner one and
    keeps its stored values, so jumps survive the float roundtrip of
    inverting and re-evaluating.
    """
    require_invertible(inner, "compose")
    if inner.jumps():
        raise PathClassError("compose: inner path must be continuous")
    iinv = generalized_inverse(inner)

    anchors: list[tuple[float, float, float]] = []
    for b in outer.breakpoints:
        s_lo, s_hi = iinv.eval_left(b.t), iinv.eval(b.t)
        if s_hi > s_lo:  # inner holds the value b.t on [s_lo, s_hi]
            anchors.append((s_lo, b.left, b.right))
            anchors.append((s_hi, b.right, b.right))
        else:
            anchors.append((s_lo, b.left, b.right))
    taken = sorted(s for s, _, _ in anchors)
    for s in inner._times:
        if any(abs(s - t) <= MERGE_EPS for t in taken):
            continue  # a pullback anchor already sits here; it wins
        v = outer.eval(inner.eval(s))
        anchors.append((s, v, v))
    return _build(
        outer.eval(inner.eval(0.0)),
        anchors,
        outer.terminal_rise * inner.terminal_rise,
        outer.terminal_run * inner.terminal_run,
    )


# -- excursions ---------------------------------------------------------------


def excursions(path: PiecewisePath, level_tol: float = 0.0) -> list[tuple[float, float, float]]:
    """Excursion intervals of the path above its running infimum.

    Returns chronological (start, end, length) triples.  An excursion spans
    a maximal interval over which the running infimum is constant before
    strictly decreasing again; it begins where the path first rises off the
    infimum inside that interval.  Interior returns that merely touch the
    infimum without pushing below it are absorbed, so back-to-back arches
    over the same level count as one excursion.

    ``level_tol`` additionally absorbs dips of at most that depth between
    consecutive infimum plateaus; derived paths (sums of compositions)
    carry rounding noise at interior touches, and a strict reading would
    split their excursions there.
    """
    require_no_negative_jumps(path, "excursions")
    m = past_infimum(path)
    d = add(path, scale(m, -1.0))

    # a plateau of the running infimum lasts until m leaves the band
    # [level - level_tol, level] anchored at the plateau's start
    flats: list[tuple[float, float | None]] = []  # (start, end); end None = unbounded
    flat_start, flat_level = 0.0, m.eval(0.0)
    for t0, v0, t1, v1 in m.finite_segments():
        if v1 >= flat_level - level_tol:
            continue
        if t0 > flat_start:
            flats.append((flat_start, t0))
        flat_start, flat_level = t1, v1
    t_last, _ = m.last_anchor
    if m.terminal_rise < 0:
        if t_last > flat_start:
            flats.append((flat_start, t_last))
    else:
        flats.append((flat_start, None))

    out: list[tuple[float, float, float]] = []
    for a, b in flats:
        l = _first_rise(d, a, b)
        if l is None:
            continue
        if b is None:
            raise PathClassError(
                f"excursions: path rises off its infimum at t={l} and never returns"
            )
        out.append((l, b, b - l))
    return out


def _first_rise(d: PiecewisePath, a: float, b: float | None) -> float | None:
    """First time in [a, b] at which the nonnegative path d leaves 0."""
    hi = math.inf if b is None else b
    for mv in _moves(d):
        if mv[0] == "seg":
            _, x0, y0, x1, y1 = mv
            if x1 <= a or x0 >= hi:
                continue
            lo = max(x0, a)
            if d.eval(lo) > 0:
                return lo
            if y1 > 0 and y0 <= 0 and x0 >= a:
                return x0
        elif mv[0] == "jump":
            _, x, y0, y1 = mv
            if a <= x < hi and y1 > 0 and y0 <= 0:
                return x
        else:
            _, x0, y0, rise, run = mv
            if x0 >= hi:
                continue
            lo = max(x0, a)
            if d.eval(lo) > 0:
                return lo
            if rise > 0:
                return lo
    return None


def ord_lengths(path: PiecewisePath) -> list[float]:
    """Excursion lengths in nonincreasing order."""
    return sorted((length for _, _, length in excursions(path)), reverse=True)


# -- comparison helpers -------------------------------------------------------


def probe_times(*paths: PiecewisePath, extra: tuple[float, ...] = ()) -> list[float]:
    """Breakpoints, segment midpoints and a few terminal probes of the
    given paths; where piecewise-linear functions can disagree, they
    disagree at these times."""
    ts = {0.0}
    ts.update(extra)
    last = 0.0
    for p in paths:
        ts.update(p._times)
        last = max(last, p.last_anchor[0])
    grid = sorted(ts)
    mids = [(a + b) / 2 for a, b in zip(grid, grid[1:])]
    return sorted(set(grid + mids + [last + 0.5, last + 1.0, 2 * last + 1.0]))


def sup_distance(p: PiecewisePath, q: PiecewisePath, extra: tuple[float, ...] = ()) -> float:
    """Max of |p - q| over both paths' probe times, using values and left
    limits."""
    gap = 0.0
    for t in probe_times(p, q, extra=extra):
        gap = max(gap, abs(p.eval(t) - q.eval(t)), abs(p.eval_left(t) - q.eval_left(t)))
    return gap
