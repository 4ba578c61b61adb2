"""Two-team zero-sum games: extension LPs and the GDmm loop, desk scale.

A team of ``n`` minimizers faces a team of ``m`` maximizers.  Joint
equilibria are computed by repeatedly solving the induced
single-adversary game against the last maximizer (the minmax oracle),
letting the other maximizers take projected ascent steps, and completing
the profile for the last maximizer through the multi-team extension dual
LP.  No convergence theorem backs this loop; every output is certified
by brute-force deviation enumeration over both teams, and failed runs
report their best-seen gap.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np

from ._simplex import project_simplex
from .dynamics import (
    GdConfig,
    IterationRecord,
    RunTrace,
    gradient_descent_max,
)
from .extension import NeCertificate, extend_ne, ne_gap, solve_extension_pair
from .games import (
    GameError,
    MixedProfile,
    SchemaError,
    TeamGame,
    _as_fraction,
    _freeze,
    _parse_dense_entries,
    analytic_bounds,
)
from .moreau import stationarity

_AXES = "abcdefghijklmnop"
_GRID_POINT_CAP = 2_000_000


class TwoTeamGame:
    """Zero-sum game between a minimizer team and a maximizer team.

    One payoff tensor suffices: minimizers drive it down, maximizers up.
    Axes are the ``n`` minimizer action sets followed by the ``m``
    maximizer action sets.  Immutable after construction.
    """

    __slots__ = ("tensor", "minimizer_actions", "maximizer_actions",
                 "v_max", "document")

    def __init__(self, tensor, n, m, v_max=None, document=None):
        tensor = _freeze(tensor)
        if n < 1 or m < 1 or tensor.ndim != n + m:
            raise GameError("tensor rank must equal total player count")
        self.tensor = tensor
        self.minimizer_actions = tensor.shape[:n]
        self.maximizer_actions = tensor.shape[n:]
        self.document = document
        worst = float(np.max(np.abs(tensor), initial=0.0))
        self.v_max = worst if v_max is None else float(v_max)
        if worst > self.v_max + 1e-12 * (1.0 + self.v_max):
            raise GameError(
                f"payoff magnitude {worst} exceeds v_max {self.v_max}")

    @property
    def n(self):
        return len(self.minimizer_actions)

    @property
    def m(self):
        return len(self.maximizer_actions)

    def extendibility_hypothesis(self):
        """Whether ``n > m - 1``, the regime the extension theorem covers."""
        return self.n > self.m - 1

    def payoff(self, minimizer_actions, maximizer_actions):
        idx = tuple(int(v) for v in minimizer_actions) + tuple(
            int(v) for v in maximizer_actions)
        return float(self.tensor[idx])


@dataclass(frozen=True)
class TwoTeamProfile:
    """Mixed strategies for both teams."""

    minimizers: tuple
    maximizers: tuple

    @staticmethod
    def of(minimizers, maximizers):
        return TwoTeamProfile(
            tuple(np.asarray(x, dtype=float) for x in minimizers),
            tuple(np.asarray(y, dtype=float) for y in maximizers))


@dataclass(frozen=True)
class TwoTeamStationarity:
    """Diagnostic stationarity measures at a two-team profile.

    ``x_measure`` certifies near-stationarity of the minimizer profile
    for the induced single-adversary game (holding the co-maximizers
    fixed); ``y_measure`` is the proximal-distance surrogate for the
    co-maximizers' side of the extension hypothesis, computed with the
    (approximate) minmax oracle inside the prox objective.  Both carry
    explicit slack terms; the y side is diagnostic only and never gates
    convergence.
    """

    x_measure: float
    x_slack: float
    y_measure: float
    y_slack: float


def expected_value(game, profile):
    """Expected payoff of mixed team profiles (full contraction)."""
    total = game.n + game.m
    sub = (_AXES[:total] + "," +
           ",".join(_AXES[i] for i in range(total)) + "->")
    vecs = list(profile.minimizers) + list(profile.maximizers)
    return float(np.einsum(sub, game.tensor, *vecs))


def _contract_except(game, profile, keep):
    """Contract every axis except those in ``keep`` (sorted output)."""
    total = game.n + game.m
    vecs = list(profile.minimizers) + list(profile.maximizers)
    operands = [game.tensor]
    lhs = [_AXES[:total]]
    for i in range(total):
        if i not in keep:
            lhs.append(_AXES[i])
            operands.append(vecs[i])
    out = "".join(_AXES[i] for i in sorted(keep))
    return np.einsum(",".join(lhs) + "->" + out, *operands)


def ne_gap_two_team(game, profile, epsilon_claimed=math.nan):
    """Brute-force deviation certificate over both teams.

    ``gap_team`` covers the minimizers (payoff reduction available),
    ``gap_adversary`` the maximizers including the last one (payoff
    increase available).
    """
    value = expected_value(game, profile)
    gap_min = -math.inf
    for i in range(game.n):
        devs = _contract_except(game, profile, {i})
        gap_min = max(gap_min, value - float(np.min(devs)))
    gap_max = -math.inf
    for j in range(game.m):
        devs = _contract_except(game, profile, {game.n + j})
        gap_max = max(gap_max, float(np.max(devs)) - value)
    return NeCertificate(gap_team=gap_min, gap_adversary=gap_max,
                         epsilon_claimed=epsilon_claimed)


def induced_single_adversary_game(game, y_minus_m):
    """The team game seen by the minimizers and the last maximizer.

    Co-maximizer strategies ``y_minus_m`` are averaged out.  With
    ``m = 1`` this is the original tensor unchanged, so downstream
    results agree bitwise with the single-adversary code path.
    """
    if len(y_minus_m) != game.m - 1:
        raise GameError(f"need {game.m - 1} co-maximizer strategies, got "
                        f"{len(y_minus_m)}")
    if game.m == 1:
        return TeamGame.dense(game.tensor, v_max=game.v_max)
    total = game.n + game.m
    operands = [game.tensor]
    lhs = [_AXES[:total]]
    for j, y in enumerate(y_minus_m):
        lhs.append(_AXES[game.n + j])
        operands.append(np.asarray(y, dtype=float))
    out = _AXES[:game.n] + _AXES[total - 1]
    induced = np.einsum(",".join(lhs) + "->" + out, *operands)
    return TeamGame.dense(induced, v_max=game.v_max)


@dataclass(frozen=True)
class MinmaxResult:
    """Approximate team-minmax pair for the induced adversarial game.

    ``bracket`` is a certified interval containing the true minmax value
    when the grid strategy produced the result (via the Lipschitz cover
    radius); the nested strategy reports the achieved worst case with a
    NaN lower end (gradient descent certifies equilibria, not global
    optimality).
    """

    team: tuple
    adversary: np.ndarray
    value: float
    bracket: tuple
    method: str


def _simplex_grid(size, step):
    """All probability vectors on a 1/q grid of the (size-1)-simplex."""
    q = max(1, round(1.0 / step))
    points = []
    for combo in itertools.combinations_with_replacement(range(size), q):
        counts = np.bincount(np.asarray(combo), minlength=size)
        points.append(counts / q)
    return np.array(points)


def minmax_oracle(game, y_minus_m, method="grid", grid_step=0.02,
                  inner_config=None):
    """Approximate ``min_x max_{y_m}`` for fixed co-maximizer play.

    ``method="grid"`` sweeps products of per-player simplex grids and
    returns a certified value bracket; it refuses (with a capacity error)
    when the product grid exceeds the point cap, in which case
    ``method="nested"`` runs the single-adversary descent solver on the
    induced game instead.
    """
    induced = induced_single_adversary_game(game, y_minus_m)
    if method == "grid":
        grids = [_simplex_grid(k, grid_step) for k in induced.action_sets]
        combos = 1
        for g in grids:
            combos *= len(g)
        if combos > _GRID_POINT_CAP:
            raise GameError(
                f"grid of {combos} points exceeds the cap "
                f"{_GRID_POINT_CAP}; use method='nested'")
        best_val, best_team = math.inf, None
        for team in itertools.product(*grids):
            vec = _induced_adversary_vector(induced, team)
            val = float(np.max(vec))
            if val < best_val:
                best_val, best_team = val, team
        lipschitz = analytic_bounds(induced).lipschitz
        radius = sum(grid_step * k / 2.0 for k in induced.action_sets)
        bracket = (best_val - lipschitz * radius, best_val)
        team = tuple(np.array(v) for v in best_team)
    elif method == "nested":
        config = inner_config or GdConfig(epsilon=0.025)
        profile, cert, _ = gradient_descent_max(induced, config)
        team = profile.team
        vec = _induced_adversary_vector(induced, team)
        best_val = float(np.max(vec))
        bracket = (math.nan, best_val)
    else:
        raise ValueError("method must be 'grid' or 'nested'")
    vec = _induced_adversary_vector(induced, team)
    b = int(np.argmax(vec))
    adversary = np.zeros(induced.adversary_actions)
    adversary[b] = 1.0
    return MinmaxResult(team=team, adversary=adversary, value=float(vec[b]),
                        bracket=bracket, method=method)


def _induced_adversary_vector(induced, team):
    n = induced.n
    sub = (_AXES[:n] + "z," + ",".join(_AXES[i] for i in range(n)) + "->z")
    return np.einsum(sub, induced.payoff_tensor(), *team)


def extend_ne_multi(game, x_star, y_minus_m, with_audit=False):
    """Best last-maximizer completion of a two-team anchor profile.

    Builds the multi-team extension dual LP (guarantee variables for
    every minimizer and every co-maximizer, a mixture for the last
    maximizer) and returns the mixture.  Each call also solves the
    joint-deviation primal and asserts the feasibility chain
    ``u* >= u_opt`` plus strong duality, exactly as in the
    single-adversary module.  With ``m = 1`` this routes through
    :func:`teamsolve.extension.extend_ne` and agrees with it bitwise.
    """
    x_star = tuple(np.asarray(x, dtype=float) for x in x_star)
    if game.m == 1:
        induced = induced_single_adversary_game(game, ())
        return extend_ne(induced, x_star, with_audit=with_audit)
    y_minus = tuple(np.asarray(y, dtype=float) for y in y_minus_m)
    profile = TwoTeamProfile(x_star,
                             y_minus + (np.ones(game.maximizer_actions[-1]),))
    # The dummy last-maximizer weights never enter: every contraction
    # below keeps that axis.
    last = game.n + game.m - 1
    minimizer_coeffs = [_contract_except(game, profile, {i, last})
                        for i in range(game.n)]
    maximizer_coeffs = [_contract_except(game, profile, {game.n + j, last})
                        for j in range(game.m - 1)]
    response = _contract_except(game, profile, {last})
    y_m, audit = solve_extension_pair(minimizer_coeffs, maximizer_coeffs,
                                      response)
    return (y_m, audit) if with_audit else y_m


def gd_mm(game, config, oracle_method="grid", grid_step=0.02):
    """GDmm: minmax oracle, co-maximizer ascent, dual-LP completion.

    Per iteration the minimizers jump to the oracle's (approximate)
    minmax reply to the co-maximizers, each co-maximizer takes one
    projected gradient ascent step against that reply, and the last
    maximizer is re-extended.  Stops at the first certified
    ``epsilon``-equilibrium (checked after the update, so the first
    check sees a fully formed profile).  Returns ``(profile,
    certificate, trace)`` with the budget-exhausted best-seen fallback.
    """
    if not game.extendibility_hypothesis():
        warnings.warn(
            f"extension guarantee assumes n > m - 1 (here n={game.n}, "
            f"m={game.m}); running anyway", RuntimeWarning, stacklevel=2)
    bounds_proxy = _full_bounds(game)
    eta = config.eta if config.eta is not None else _ascent_eta(
        game, config.epsilon, bounds_proxy)
    max_iters = config.max_iters if config.max_iters is not None else 200

    y = tuple(np.full(k, 1.0 / k) for k in game.maximizer_actions)
    trace = RunTrace(epsilon=config.epsilon, eta=eta, prox_tol=math.nan)
    best = (math.inf, None, None)
    prev_stack = None
    profile = None
    cert = None

    for t in range(max_iters):
        oracle = minmax_oracle(game, y[:-1], method=oracle_method,
                               grid_step=grid_step,
                               inner_config=_inner_config(config))
        x = oracle.team
        ascended = []
        for j in range(game.m - 1):
            grad = _maximizer_gradient(game, x, y, j, oracle.adversary)
            ascended.append(project_simplex(y[j] + eta * grad))
        y_m, audit = extend_ne_multi(game, x, tuple(ascended),
                                     with_audit=True)
        trace.extend_calls += 1
        trace.max_sd_residual = max(trace.max_sd_residual,
                                    audit.sd_residual)
        trace.min_duality_margin = min(trace.min_duality_margin,
                                       audit.margin)
        y = tuple(ascended) + (y_m,)
        profile = TwoTeamProfile(x, y)
        cert = ne_gap_two_team(game, profile,
                               epsilon_claimed=config.epsilon)
        stack = np.concatenate([np.concatenate(x), np.concatenate(y)])
        step_norm = (0.0 if prev_stack is None
                     else float(np.linalg.norm(stack - prev_stack)))
        prev_stack = stack
        trace.iterations.append(IterationRecord(
            t=t, potential_g=None, ne_gap=cert.gap, step_norm=step_norm,
            br_action=int(np.argmax(oracle.adversary))))
        if cert.gap < best[0]:
            best = (cert.gap, profile, cert)
        if cert.gap <= config.epsilon:
            trace.outcome = "converged"
            trace.final_profile = profile
            return profile, cert, trace

    trace.outcome = "budget_exhausted"
    _, profile, cert = best
    trace.final_profile = profile
    return profile, cert, trace


def _inner_config(config):
    return GdConfig(epsilon=max(config.epsilon / 2.0, 1e-4),
                    seed=config.seed)


def _maximizer_gradient(game, x, y, j, y_m):
    """Gradient of the expected payoff in co-maximizer ``j``'s strategy.

    Evaluated, as in the update rule, at the fresh minimizer reply, the
    *previous* co-maximizer profile and the oracle's last-maximizer
    response.
    """
    profile = TwoTeamProfile(tuple(x), tuple(y[:-1]) + (y_m,))
    return _contract_except(game, profile, {game.n + j})


def _full_bounds(game):
    sizes = sum(game.minimizer_actions) + sum(game.maximizer_actions)
    lipschitz = game.v_max * math.sqrt(sizes)
    smoothness = game.v_max * sizes
    return lipschitz, smoothness


def _ascent_eta(game, epsilon, bounds_proxy):
    lipschitz, smoothness = bounds_proxy
    movers = max(game.m - 1, 1)
    denom = lipschitz ** 2 * movers
    return epsilon ** 2 * smoothness / denom if denom > 0 else 1.0


def stationarity_diagnostics(game, profile, ell=None, tol=1e-6,
                             oracle_method="grid", grid_step=0.02,
                             ascent_rounds=6):
    """Approximate stationarity measures for both sides of a profile.

    The minimizer side is the certified single-adversary measure on the
    induced game.  The co-maximizer side maximizes the minmax value
    function minus a proximity term by a few supergradient ascent steps,
    with every value query answered by the (approximate) minmax oracle;
    its slack records only the prox-solver contribution, since oracle
    error cannot be bounded rigorously at this scale.
    """
    lipschitz, smoothness = _full_bounds(game)
    ell = smoothness if ell is None else ell
    induced = induced_single_adversary_game(game, profile.maximizers[:-1])
    x_report = stationarity(induced, profile.minimizers,
                            max(analytic_bounds(induced).smoothness, 1e-9),
                            tol)
    if game.m == 1:
        return TwoTeamStationarity(
            x_measure=x_report.measure, x_slack=x_report.slack,
            y_measure=0.0, y_slack=0.0)

    anchor = profile.maximizers[:-1]
    current = tuple(np.array(v) for v in anchor)
    best_point, best_val = current, -math.inf
    step = 1.0 / (2.0 * ell)
    for _ in range(ascent_rounds):
        oracle = minmax_oracle(game, current, method=oracle_method,
                               grid_step=grid_step)
        penalty = sum(float((c - a) @ (c - a))
                      for c, a in zip(current, anchor))
        value = oracle.value - ell * penalty
        if value > best_val:
            best_val, best_point = value, current
        grads = []
        reply = TwoTeamProfile(oracle.team,
                               tuple(current) + (oracle.adversary,))
        for j in range(game.m - 1):
            g = _contract_except(game, reply, {game.n + j})
            grads.append(g - 2.0 * ell * (current[j] - anchor[j]))
        current = tuple(project_simplex(c + step * g)
                        for c, g in zip(current, grads))
    distance = math.sqrt(sum(float((b - a) @ (b - a))
                             for b, a in zip(best_point, anchor)))
    slack = 2.0 * math.sqrt(2.0 * tol * ell)
    return TwoTeamStationarity(
        x_measure=x_report.measure, x_slack=x_report.slack,
        y_measure=2.0 * ell * distance + slack, y_slack=slack)


# -- JSON schema --------------------------------------------------------


def two_team_from_dict(doc):
    """Parse the two-team game schema.

    Extends the single-adversary schema with ``"teams": {"minimizers":
    n, "maximizers": m}``; ``adversary_actions`` becomes the list of the
    ``m`` maximizer action counts and the payoff must be dense.
    """
    if not isinstance(doc, dict) or "teams" not in doc:
        raise SchemaError("two-team document needs a 'teams' field")
    teams = doc["teams"]
    if (not isinstance(teams, dict)
            or not isinstance(teams.get("minimizers"), int)
            or not isinstance(teams.get("maximizers"), int)):
        raise SchemaError("must hold integer minimizers/maximizers", "teams")
    n, m = teams["minimizers"], teams["maximizers"]
    if n < 1 or m < 1:
        raise SchemaError("team sizes must be positive", "teams")
    actions = doc.get("actions")
    if (not isinstance(actions, list) or len(actions) != n
            or not all(isinstance(k, int) and k >= 1 for k in actions)):
        raise SchemaError(f"must list {n} positive action counts", "actions")
    b_actions = doc.get("adversary_actions")
    if isinstance(b_actions, int) and m == 1:
        b_actions = [b_actions]
    if (not isinstance(b_actions, list) or len(b_actions) != m
            or not all(isinstance(k, int) and k >= 1 for k in b_actions)):
        raise SchemaError(f"must list {m} positive action counts",
                          "adversary_actions")
    payoff = doc.get("payoff")
    if not isinstance(payoff, dict) or payoff.get("kind") != "dense":
        raise SchemaError("two-team payoff must be dense", "payoff")
    shape = tuple(actions) + tuple(b_actions)
    tensor = _parse_dense_entries(payoff.get("entries"), shape,
                                  "payoff.entries")
    v_max = None
    if doc.get("v_max") is not None:
        v_max = float(_as_fraction(doc["v_max"], "v_max"))
    return TwoTeamGame(tensor, n, m, v_max=v_max, document=doc)


def two_team_profile_to_dict(profile):
    return {"minimizers": [list(map(float, x)) for x in profile.minimizers],
            "maximizers": [list(map(float, y)) for y in profile.maximizers]}


def two_team_profile_from_dict(doc):
    if (not isinstance(doc, dict) or "minimizers" not in doc
            or "maximizers" not in doc):
        raise SchemaError("profile needs 'minimizers' and 'maximizers'")
    return TwoTeamProfile.of(doc["minimizers"], doc["maximizers"])
