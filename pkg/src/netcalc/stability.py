#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Stability and performance bounds for networks with cyclic dependencies.

The unknown bursts created by a feed-forward decomposition satisfy a
componentwise linear recursion ``b <= M b + N`` with nonnegative
coefficients; a spectral radius of ``M`` strictly below one certifies
global stability and yields the greatest fixed point, from which backlog
and delay bounds are read as linear forms.

Three constructions of ``(M, N)`` are provided: per-server decomposition
(``sd``), tree decomposition (``td``) and grouping of the flows crossing
each removed arc (``ag``), plus the two-stage combination (``2s``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Tuple

import numpy as np

from .curves import Bound, UNBOUNDED
from .decomposition import (
    ArcGroups,
    FFNetwork,
    decompose,
    group_by_arc,
    removal_tree,
)
from .errors import (
    LocallyUnstableError,
    NotAForestError,
    UnsupportedTargetError,
    ValidationError,
)
from .network import Arc, Network, induced_graph, local_stability
from .tree_analysis import BacklogResult, upstream_view

#: Margin below 1 required of the spectral radius to declare stability.
STABILITY_EPS = 1e-9


@dataclass(frozen=True)
class LinearRecursion:
    """
    The componentwise recursion ``b <= M b + N`` over labelled variables.

    Labels are ``(flow, segment)`` pairs for the sd/td constructions and
    removed arcs for ag; mixed recursions list the individual continuations
    first, then the grouped arcs.
    """

    labels: Tuple
    M: np.ndarray
    N: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.M, dtype=float)
        n = np.asarray(self.N, dtype=float)
        L = len(self.labels)
        if m.shape != (L, L) or n.shape != (L,):
            raise ValidationError("inconsistent recursion dimensions")
        if L and (not np.isfinite(m).all() or not np.isfinite(n).all()):
            raise ValidationError("recursion entries must be finite")
        if L and (m.min() < 0 or n.min() < 0):
            raise ValidationError("recursion entries must be nonnegative")
        object.__setattr__(self, "M", m)
        object.__setattr__(self, "N", n)

    @property
    def size(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class ObjectiveForm:
    """A performance bound as the linear form ``Q . b + C`` over variables."""

    Q: np.ndarray
    C: float
    description: str = ""


@dataclass(frozen=True)
class Target:
    """What to bound: a group backlog at a server, or a flow's delay."""

    kind: str
    server: Optional[int] = None
    flows: FrozenSet[int] = frozenset()
    flow: Optional[int] = None

    @staticmethod
    def backlog(server: int, flows: Iterable[int]) -> "Target":
        return Target("backlog", server=server, flows=frozenset(flows))

    @staticmethod
    def delay(flow: int) -> "Target":
        return Target("delay", flow=flow)


@dataclass(frozen=True)
class StabilityReport:
    """Outcome of one analysis method on one network."""

    method: str
    rho: float
    stable: bool
    fixed_point: Optional[np.ndarray]
    bound: Optional[Bound]
    labels: Tuple = ()

    @property
    def verdict(self) -> str:
        if abs(self.rho - 1.0) <= STABILITY_EPS:
            return "critical"
        return "stable" if self.stable else "unstable"


def spectral_radius(
    M: np.ndarray,
    tol: float = 1e-9,
    shift: float = 1e-6,
    max_iter: int = 2000,
) -> float:
    """
    Spectral radius of a nonnegative matrix, via power iteration on the
    shifted matrix ``M + shift I`` started from the all-ones vector.

    The iterate stays positive thanks to the shift, so the min/max ratios
    of consecutive iterates bracket the radius (Collatz-Wielandt);
    iteration stops when the bracket closes to ``tol``.  Near-periodic
    matrices (a cycle of equal coefficients) close their bracket only at a
    ``1/shift`` pace, so if it is still open after ``max_iter`` steps the
    exact eigenvalue routine takes over; either way the result carries the
    requested absolute accuracy.

    >>> spectral_radius(np.array([[0.0, 0.5], [0.5, 0.0]]))
    0.5
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValidationError("matrix must be square")
    if M.size == 0:
        return 0.0
    if not np.isfinite(M).all():
        raise ValidationError("matrix entries must be finite")
    if M.min() < 0:
        raise ValidationError("matrix entries must be nonnegative")
    x = np.ones(M.shape[0])
    for _ in range(max_iter):
        y = M @ x + shift * x
        ratios = y / x
        lo, hi = float(ratios.min()), float(ratios.max())
        if hi - lo <= tol:
            return 0.5 * (lo + hi) - shift
        x = np.maximum(y / y.max(), 1e-250)  # floor out underflow to keep x > 0
    return float(max(abs(np.linalg.eigvals(M))))


def rho_below(
    M: np.ndarray,
    threshold: float,
    shift: float = 1e-6,
    max_iter: Optional[int] = None,
) -> bool:
    """
    Decide ``spectral_radius(M) < threshold`` cheaply: the Collatz-Wielandt
    bracket usually separates from the threshold long before it closes.
    The iteration budget shrinks with the matrix size so that an undecided
    bracket hands over to the exact eigenvalue routine at comparable cost.
    """
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return threshold > 0
    L = M.shape[0]
    if max_iter is None:
        max_iter = max(60, min(3000, int(3e8 / (L * L))))
    x = np.ones(L)
    for _ in range(max_iter):
        y = M @ x + shift * x
        ratios = y / x
        lo, hi = float(ratios.min()) - shift, float(ratios.max()) - shift
        if lo >= threshold:
            return False
        if hi < threshold:
            return True
        x = np.maximum(y / y.max(), 1e-250)  # floor out underflow to keep x > 0
    return float(max(abs(np.linalg.eigvals(M)))) < threshold


def _solve_stable(lr: LinearRecursion) -> np.ndarray:
    solution = np.linalg.solve(np.eye(lr.size) - lr.M, lr.N)
    if solution.min() < -1e-9 * max(1.0, float(np.abs(solution).max())):
        raise ValidationError("fixed point came out negative; ill-conditioned system")
    return np.maximum(solution, 0.0)


def solve_recursion(lr: LinearRecursion) -> Optional[np.ndarray]:
    """
    Greatest fixed point of ``b <= M b + N``: the solution of
    ``(I - M) b = N`` when the spectral radius is strictly below one,
    ``None`` (no finite fixed point) otherwise.

    >>> lr = LinearRecursion(("x",), np.array([[0.5]]), np.array([1.0]))
    >>> solve_recursion(lr)
    array([2.])
    """
    if lr.size == 0:
        return np.zeros(0)
    if not rho_below(lr.M, 1.0 - STABILITY_EPS):
        return None
    return _solve_stable(lr)


def _require_local_stability(net: Network) -> None:
    report = local_stability(net)
    if not report.stable:
        raise LocallyUnstableError(
            "servers %r are not strictly stable" % report.unstable_servers()
        )


def sd_labels(net: Network) -> Tuple[Tuple[int, int], ...]:
    """Variables of the per-server recursion: each flow's hops past the first."""
    return tuple(
        (i, k) for i, f in enumerate(net.flows) for k in range(1, len(f.path))
    )


def build_sd(net: Network) -> LinearRecursion:
    """
    Per-server burst recursion: the burst of flow ``i`` entering its hop
    ``k+1`` grows from hop ``k`` by the server's deconvolution residue,

    .. math:: b_{i,k+1} \\le b_{i,k}
        + \\frac{r_i}{R_j - \\sum_{p \\ne i} r_p}
          \\Big(\\sum_{s \\ne (i,k)} b_s + R_j T_j\\Big),

    over all other hops ``s`` present at server ``j``.  First-hop bursts
    are known and folded into the constant vector.
    """
    _require_local_stability(net)
    labels = sd_labels(net)
    index = {lab: pos for pos, lab in enumerate(labels)}
    L = len(labels)
    M = np.zeros((L, L))
    N = np.zeros(L)
    hops_at: List[List[Tuple[int, int]]] = [[] for _ in range(net.num_servers)]
    rate_at = [0.0] * net.num_servers
    for i, f in enumerate(net.flows):
        for k, j in enumerate(f.path):
            hops_at[j].append((i, k))
            rate_at[j] += f.arrival.rate
    for i, f in enumerate(net.flows):
        r_i = f.arrival.rate
        for k in range(1, len(f.path)):
            row = index[(i, k)]
            j = f.path[k - 1]
            beta = net.servers[j]
            margin = beta.rate - (rate_at[j] - r_i)
            if margin <= 0:
                raise LocallyUnstableError(
                    "server %d has no residual rate for flow %d" % (j, i)
                )
            gain = r_i / margin
            # burst entering hop k equals the backlog bound of hop k-1 at j
            if k - 1 >= 1:
                M[row, index[(i, k - 1)]] += 1.0
            else:
                N[row] += f.arrival.burst
            for p, q in hops_at[j]:
                if (p, q) == (i, k - 1):
                    continue
                if q >= 1:
                    M[row, index[(p, q)]] += gain
                else:
                    N[row] += gain * net.flows[p].arrival.burst
            N[row] += gain * beta.rate * beta.latency
    return LinearRecursion(labels, M, N)


@dataclass(frozen=True)
class DecompositionContext:
    """A feed-forward decomposition with the pieces the builders share."""

    ff: FFNetwork
    forest: Network
    groups: ArcGroups
    arc_of: Dict[int, Arc]  # continuation split id -> its boundary arc
    views: Dict[int, object] = field(default_factory=dict, compare=False)

    def view(self, j1: int):
        if j1 not in self.views:
            self.views[j1] = upstream_view(self.forest, j1)
        return self.views[j1]


def _context(net: Network, removed) -> DecompositionContext:
    ff = decompose(net, removed)
    forest = ff.as_network()
    out_degree: Dict[int, int] = {}
    for u, _ in induced_graph(forest):
        out_degree[u] = out_degree.get(u, 0) + 1
        if out_degree[u] > 1:
            raise NotAForestError(
                "removal leaves server %d with several successors" % u
            )
    groups = group_by_arc(ff)
    arc_of = {s: arc for arc, conts in groups.continuations.items() for s in conts}
    return DecompositionContext(ff, forest, groups, arc_of)


def td_labels(ff: FFNetwork) -> Tuple[Tuple[int, int], ...]:
    """Variables of the tree recursion: the continuation segments."""
    return tuple(sf.label for sf in ff.split_flows if sf.segment >= 1)


def ag_labels(removed) -> Tuple[Arc, ...]:
    """Variables of the arc-grouping recursion: the removed arcs."""
    return tuple(sorted(removed))


class _Columns:
    """
    Column layout of a mixed recursion: one column per continuation of an
    ungrouped arc, then one per grouped arc.  Continuation labels and arc
    labels are both integer pairs, so they are kept in separate maps.
    """

    def __init__(self, ctx: DecompositionContext, grouped):
        self.grouped = frozenset(grouped)
        self.singles = tuple(
            lab for lab in td_labels(ctx.ff)
            if ctx.arc_of[ctx.ff.index_of(lab)] not in self.grouped
        )
        self.arcs = tuple(sorted(self.grouped))
        self.of_single = {lab: i for i, lab in enumerate(self.singles)}
        self.of_arc = {a: len(self.singles) + i for i, a in enumerate(self.arcs)}
        self.labels = self.singles + self.arcs

    def __len__(self):
        return len(self.labels)


def _split_form(ctx: DecompositionContext, result: BacklogResult, cols: _Columns):
    """
    Turn a backlog linear form into (variable coefficients, constant):
    known bursts and latency terms fold into the constant, continuations of
    ungrouped arcs keep their own weight, and each grouped arc contributes
    through the largest weight among its continuations.
    """
    ff = ctx.ff
    coeffs = np.zeros(len(cols))
    constant = 0.0
    phis = result.burst_coefficients
    for arc in cols.arcs:
        conts = ctx.groups.continuations[arc]
        if conts:
            coeffs[cols.of_arc[arc]] = max(phis.get(s, 0.0) for s in conts)
    for s, phi in phis.items():
        if phi == 0.0:
            continue
        sf = ff.split_flows[s]
        if sf.burst_known:
            constant += phi * ff.base.flows[sf.origin].arrival.burst
        elif ctx.arc_of[s] not in cols.grouped:
            coeffs[cols.of_single[sf.label]] += phi
    for j, rho in result.latency_coefficients.items():
        constant += rho * ff.base.servers[j].latency
    return coeffs, constant


def _build_grouped(ctx: DecompositionContext, grouped) -> LinearRecursion:
    ff = ctx.ff
    cols = _Columns(ctx, grouped)
    L = len(cols)
    M = np.zeros((L, L))
    N = np.zeros(L)
    for row, (i, k) in enumerate(cols.singles):
        prev = ff.index_of((i, k - 1))
        j1 = ff.split_flows[prev].path[-1]
        result: BacklogResult = ctx.view(j1).backlog([prev])
        M[row], N[row] = _split_form(ctx, result, cols)
    for arc in cols.arcs:
        row = cols.of_arc[arc]
        feeding = ctx.groups.feeding[arc]
        if not feeding:
            continue
        result = ctx.view(arc[0]).backlog(feeding)
        M[row], N[row] = _split_form(ctx, result, cols)
    return LinearRecursion(cols.labels, M, N)


def build_td(net: Network, removed) -> LinearRecursion:
    """
    Tree-decomposition recursion: each continuation burst is the tight
    worst-case backlog of its parent segment at the removed arc's tail,
    expressed as a linear form over all segment bursts.
    """
    _require_local_stability(net)
    return _build_td(_context(net, removed))


def _build_td(ctx: DecompositionContext) -> LinearRecursion:
    return _build_grouped(ctx, frozenset())


def build_ag(net: Network, removed) -> LinearRecursion:
    """
    Arc-grouping recursion: one unknown per removed arc, the worst-case
    backlog of all the segments feeding it; the coefficient toward another
    arc is the largest burst weight among that arc's continuations.
    """
    _require_local_stability(net)
    ctx = _context(net, removed)
    return _build_ag(ctx)


def _build_ag(ctx: DecompositionContext) -> LinearRecursion:
    return _build_grouped(ctx, frozenset(ctx.ff.removed))


def build_grouped(net: Network, removed, grouped_arcs) -> LinearRecursion:
    """
    Mixed recursion: the removed arcs in ``grouped_arcs`` contribute one
    aggregated unknown each, all other continuations stay individual.
    Specializes to the tree recursion with no grouped arcs and to the
    arc-grouping recursion with all of them.
    """
    _require_local_stability(net)
    ctx = _context(net, removed)
    grouped = frozenset(grouped_arcs)
    extra = grouped - ctx.ff.removed
    if extra:
        raise ValidationError("grouped arcs not in the removal: %r" % sorted(extra))
    return _build_grouped(ctx, grouped)


def _segments_containing(ff: FFNetwork, flow: int, server: int) -> int:
    for s, sf in enumerate(ff.split_flows):
        if sf.origin == flow and server in sf.path:
            return s
    raise UnsupportedTargetError(
        "flow %d does not cross server %d" % (flow, server)
    )


def _objective_sd(net: Network, target: Target) -> ObjectiveForm:
    if target.kind != "backlog":
        raise UnsupportedTargetError(
            "delay targets are not supported by the per-server decomposition"
        )
    j = target.server
    labels = sd_labels(net)
    index = {lab: pos for pos, lab in enumerate(labels)}
    Q = np.zeros(len(labels))
    beta = net.servers[j]
    hops = []
    for i, f in enumerate(net.flows):
        if j in f.path:
            hops.append((i, f.path.index(j)))
    interest = [(i, k) for (i, k) in hops if i in target.flows]
    if len(interest) != len(target.flows):
        raise UnsupportedTargetError("some target flows do not cross the server")
    cross = [(i, k) for (i, k) in hops if i not in target.flows]
    r_int = sum(net.flows[i].arrival.rate for i, _ in interest)
    r_cross = sum(net.flows[i].arrival.rate for i, _ in cross)
    if r_int + r_cross >= beta.rate:
        raise LocallyUnstableError("server %d has no strict rate margin" % j)
    gain = r_int / (beta.rate - r_cross)
    C = gain * r_cross * beta.latency + r_int * beta.latency
    for i, k in interest:
        if k >= 1:
            Q[index[(i, k)]] += 1.0
        else:
            C += net.flows[i].arrival.burst
    for i, k in cross:
        if k >= 1:
            Q[index[(i, k)]] += gain
        else:
            C += gain * net.flows[i].arrival.burst
    return ObjectiveForm(Q, C, "backlog of flows %s at server %d" % (sorted(target.flows), j))


def _objective_tree(ctx: DecompositionContext, target: Target, arcs: bool) -> ObjectiveForm:
    ff = ctx.ff
    if target.kind == "backlog":
        j = target.server
        interest = [_segments_containing(ff, i, j) for i in sorted(target.flows)]
        result = ctx.view(j).backlog(interest)
        description = "backlog of flows %s at server %d" % (sorted(target.flows), j)
        scale, extra = 1.0, 0.0
    else:
        i = target.flow
        flow = ff.base.flows[i]
        if flow.arrival.rate == 0:
            raise UnsupportedTargetError("delay of a zero-rate flow is undefined")
        seg = _segments_containing(ff, i, flow.path[0])
        if ff.split_flows[seg].path != flow.path:
            raise UnsupportedTargetError(
                "flow %d is split by the decomposition; its end-to-end delay "
                "is not a single tree analysis" % i
            )
        j = flow.path[-1]
        result = ctx.view(j).backlog([seg])
        if result.table is None:
            raise LocallyUnstableError(result.diagnostic or "unstable")
        xi_entry = result.table.xi[(flow.path[0], j)]
        # delay transform: (B - b)/r + xi b / r
        scale = 1.0 / flow.arrival.rate
        extra = (xi_entry - 1.0) * flow.arrival.burst
        description = "delay of flow %d" % i
    if result.table is None:
        raise LocallyUnstableError(result.diagnostic or "unstable")
    cols = _Columns(ctx, frozenset(ff.removed) if arcs else frozenset())
    coeffs, constant = _split_form(ctx, result, cols)
    return ObjectiveForm(coeffs * scale, (constant + extra) * scale, description)


def objective_for(net: Network, target: Target, method: str, removed=None) -> ObjectiveForm:
    """
    The requested performance expressed as ``Q . b + C`` over the variables
    of the given method's recursion.
    """
    method = method.lower()
    if target.kind == "backlog":
        if target.server is None or not target.flows:
            raise UnsupportedTargetError("backlog target needs a server and flows")
    elif target.kind != "delay":
        raise UnsupportedTargetError("unknown target kind %r" % target.kind)
    if method == "sd":
        return _objective_sd(net, target)
    if method in ("td", "ag", "2s"):
        if removed is None:
            removed = removal_tree(net)
        ctx = _context(net, removed)
        return _objective_tree(ctx, target, arcs=(method == "ag"))
    raise ValidationError("unknown method %r" % method)


def one_stage_bound(lr: LinearRecursion, obj: ObjectiveForm) -> Bound:
    """Evaluate ``Q . b* + C`` at the greatest fixed point, if it exists."""
    fixed = solve_recursion(lr)
    if fixed is None:
        return UNBOUNDED
    return Bound(float(obj.Q @ fixed) + float(obj.C))


def two_stage_bound(net: Network, removed, target: Target) -> Bound:
    """
    Combine the tree and arc-grouping recursions: maximize the objective
    over burst vectors below the tree fixed point whose per-arc group sums
    stay below the arc fixed point.

    The groups are disjoint and each is constrained by a box and a single
    sum, so a per-group greedy allocation in decreasing coefficient order
    is exact.  When only one recursion is stable its constraints alone
    apply; when neither is, the bound is unbounded.
    """
    _require_local_stability(net)
    ctx = _context(net, removed)
    lr_td = _build_td(ctx)
    lr_ag = _build_ag(ctx)
    obj = _objective_tree(ctx, target, arcs=False)
    b_star = solve_recursion(lr_td)
    big_b = solve_recursion(lr_ag)
    if b_star is None and big_b is None:
        return UNBOUNDED
    index = {lab: pos for pos, lab in enumerate(td_labels(ctx.ff))}
    arc_of = {}
    for arc in ag_labels(ctx.ff.removed):
        for s in ctx.groups.continuations[arc]:
            arc_of[index[ctx.ff.split_flows[s].label]] = arc
    arc_pos = {arc: pos for pos, arc in enumerate(ag_labels(ctx.ff.removed))}
    value = obj.C
    by_arc: Dict[Arc, List[int]] = {}
    for var in range(lr_td.size):
        by_arc.setdefault(arc_of[var], []).append(var)
    for arc, members in by_arc.items():
        budget = math.inf if big_b is None else float(big_b[arc_pos[arc]])
        members = sorted(members, key=lambda v: -obj.Q[v])
        for var in members:
            if budget <= 0 or obj.Q[var] <= 0:
                break
            cap = math.inf if b_star is None else float(b_star[var])
            take = min(cap, budget)
            if not math.isfinite(take):
                return UNBOUNDED
            value += float(obj.Q[var]) * take
            budget -= take
    return Bound(float(value))


def analyze(
    net: Network,
    method: str,
    target: Optional[Target] = None,
    removed=None,
) -> StabilityReport:
    """
    Run one method end to end: build its recursion(s), decide stability by
    the spectral radius, solve the fixed point and evaluate the requested
    bound.  Local instability short-circuits to an unstable report.
    """
    method = method.lower()
    if method not in ("sd", "td", "ag", "2s"):
        raise ValidationError("unknown method %r" % method)
    if removed is None and method != "sd":
        removed = removal_tree(net)
    try:
        recursions = _method_recursions(net, method, removed)
    except LocallyUnstableError:
        return StabilityReport(
            method, math.inf, False, None,
            UNBOUNDED if target is not None else None,
        )
    rho = min(spectral_radius(lr.M) for lr in recursions)
    stable = rho < 1.0 - STABILITY_EPS
    fixed = None
    for lr in recursions:
        if lr.size == 0:
            fixed = np.zeros(0)
            break
        if rho_below(lr.M, 1.0 - STABILITY_EPS):
            fixed = _solve_stable(lr)
            break
    bound = None
    if target is not None:
        if method == "2s":
            bound = two_stage_bound(net, removed, target)
        else:
            bound = one_stage_bound(recursions[0], objective_for(net, target, method, removed))
    return StabilityReport(method, rho, stable, fixed, bound, recursions[0].labels)


def _method_recursions(net: Network, method: str, removed) -> List[LinearRecursion]:
    if method == "sd":
        return [build_sd(net)]
    if method == "td":
        return [build_td(net, removed)]
    if method == "ag":
        return [build_ag(net, removed)]
    if method == "2s":
        ctx = _context(net, removed)
        _require_local_stability(net)
        return [_build_td(ctx), _build_ag(ctx)]
    raise ValidationError("unknown method %r" % method)


def is_stable(net: Network, method: str, removed=None) -> bool:
    """Stability verdict of one method (unstable on local instability)."""
    method = method.lower()
    if removed is None and method != "sd":
        removed = removal_tree(net)
    try:
        recursions = _method_recursions(net, method, removed)
    except LocallyUnstableError:
        return False
    return any(rho_below(lr.M, 1.0 - STABILITY_EPS) for lr in recursions)


def critical_utilization(
    family: Callable[[float], Network],
    method: str,
    tol: float = 1e-4,
    u_min: float = 1e-3,
    u_max: float = 1.0,
) -> float:
    """
    Largest utilization at which ``family(U)`` stays stable for ``method``,
    located by bisection (the families scale every service rate like
    ``1/U``, so stability is monotone in ``U``).

    Returns ``u_max`` when stable on the whole range and ``0.0`` when
    already unstable at ``u_min``.
    """
    if not (0 < u_min < u_max <= 1.0):
        raise ValidationError("need 0 < u_min < u_max <= 1")
    if is_stable(family(u_max), method):
        return u_max
    if not is_stable(family(u_min), method):
        return 0.0
    lo, hi = u_min, u_max
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if is_stable(family(mid), method):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
