"""Normal-form adversarial team games and expected-utility machinery.

A team of ``n`` independently randomizing players shares a single payoff
``U`` which it tries to drive *down*, while one adversary picks actions to
drive it *up*.  Payoffs are stored either as one dense tensor (team axes
first, adversary axis last) or as a sum of small local tensors
("polytensor" form), which keeps expected utilities computable in time
polynomial in the description size even for many players.

Games are immutable after construction: payoff arrays are frozen, so a
``TeamGame`` can be shared freely across concurrent workers.  Every
operation in this module is a pure function of its inputs.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np


class GameError(Exception):
    """Base class for game construction and evaluation errors."""


class DimensionMismatchError(GameError):
    """A strategy vector does not match the game, naming the offender.

    ``player`` is the 0-based team player index, or ``None`` when the
    adversary vector is at fault.
    """

    def __init__(self, message, player=None):
        super().__init__(message)
        self.player = player


class SchemaError(GameError):
    """A game document violates the JSON schema; ``path`` locates the field."""

    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


PROFILE_TOL = 1e-9

# Sampled pure profiles used to audit v_max on polytensor games, where an
# exhaustive sweep over joint profiles may be exponential.
_VMAX_SAMPLES = 10_000


def _as_fraction(value, path):
    """Parse a JSON rational: ``[num, den]`` or a bare int."""
    if isinstance(value, (list, tuple)):
        if len(value) != 2 or not all(isinstance(v, int) for v in value):
            raise SchemaError("rational must be [numerator, denominator]", path)
        if value[1] == 0:
            raise SchemaError("zero denominator", path)
        return Fraction(value[0], value[1])
    if isinstance(value, int):
        return Fraction(value)
    raise SchemaError(f"expected rational, got {type(value).__name__}", path)


@dataclass(frozen=True)
class LocalBlock:
    """One local interaction of a polytensor game.

    ``players`` lists the 0-based team players the block touches (in
    increasing order); ``includes_adversary`` says whether the block's last
    axis ranges over adversary actions.  ``table`` has one axis per listed
    player followed by the adversary axis when present.
    """

    players: tuple[int, ...]
    includes_adversary: bool
    table: np.ndarray


def _freeze(arr):
    arr = np.ascontiguousarray(arr, dtype=float)
    arr.setflags(write=False)
    return arr


class TeamGame:
    """An adversarial team game with ``n`` team players and one adversary.

    Construct through :meth:`dense`, :meth:`polytensor` or
    :func:`game_from_dict`.  ``v_max`` bounds ``|U(a, b)|`` over all pure
    profiles and is audited at construction (exhaustively for dense games,
    on sampled profiles for polytensor games).
    """

    __slots__ = ("action_sets", "adversary_actions", "v_max",
                 "representation", "_tensor", "_blocks", "document")

    def __init__(self, action_sets, adversary_actions, v_max, representation,
                 tensor=None, blocks=None, document=None):
        action_sets = tuple(int(k) for k in action_sets)
        if len(action_sets) < 1 or any(k < 1 for k in action_sets):
            raise GameError("need n >= 1 team players with >= 1 action each")
        if adversary_actions < 1:
            raise GameError("adversary needs >= 1 action")
        self.action_sets = action_sets
        self.adversary_actions = int(adversary_actions)
        self.representation = representation
        self._tensor = tensor
        self._blocks = blocks
        self.document = document
        self.v_max = float(v_max) if v_max is not None else self._default_v_max()
        if not math.isfinite(self.v_max) or self.v_max < 0:
            raise GameError("v_max must be finite and nonnegative")
        self._audit_v_max()

    # -- constructors -------------------------------------------------

    @classmethod
    def dense(cls, tensor, v_max=None, document=None):
        """Build a game from a dense payoff tensor

        with shape ``(*action_sets, adversary_actions)``.
        """
        tensor = _freeze(tensor)
        if tensor.ndim < 2:
            raise GameError("dense tensor needs at least one team axis and "
                            "the adversary axis")
        return cls(tensor.shape[:-1], tensor.shape[-1], v_max,
                   "dense_tensor", tensor=tensor, document=document)

    @classmethod
    def polytensor(cls, action_sets, adversary_actions, blocks, v_max=None,
                   document=None):
        """Build a game whose payoff is the sum of the given local blocks."""
        action_sets = tuple(int(k) for k in action_sets)
        frozen = []
        for pos, blk in enumerate(blocks):
            players = tuple(sorted(int(p) for p in blk.players))
            if len(set(players)) != len(players):
                raise GameError(f"block {pos}: repeated player")
            if players and not (0 <= players[0] and players[-1] < len(action_sets)):
                raise GameError(f"block {pos}: player index out of range")
            expect = tuple(action_sets[p] for p in players)
            if blk.includes_adversary:
                expect = expect + (int(adversary_actions),)
            table = _freeze(blk.table)
            if table.shape != expect:
                raise GameError(
                    f"block {pos}: table shape {table.shape} != {expect}")
            frozen.append(LocalBlock(players, bool(blk.includes_adversary), table))
        return cls(action_sets, adversary_actions, v_max, "polytensor",
                   blocks=tuple(frozen), document=document)

    # -- basic structure ---------------------------------------------

    @property
    def n(self):
        return len(self.action_sets)

    def payoff(self, team_actions, adversary_action):
        """Utility of one pure joint profile."""
        a = tuple(int(v) for v in team_actions)
        b = int(adversary_action)
        if self._tensor is not None:
            return float(self._tensor[a + (b,)])
        total = 0.0
        for blk in self._blocks:
            idx = tuple(a[p] for p in blk.players)
            if blk.includes_adversary:
                idx = idx + (b,)
            total += float(blk.table[idx]) if idx else float(blk.table)
        return total

    def payoff_tensor(self):
        """Materialize the full dense tensor (intended for small games)."""
        if self._tensor is not None:
            return self._tensor
        out = np.zeros(self.action_sets + (self.adversary_actions,))
        for blk in self._blocks:
            shape = [1] * (self.n + 1)
            for axis, p in enumerate(blk.players):
                shape[p] = self.action_sets[p]
            if blk.includes_adversary:
                shape[-1] = self.adversary_actions
            out += blk.table.reshape(shape)
        return out

    def _default_v_max(self):
        if self._tensor is not None:
            return float(np.max(np.abs(self._tensor), initial=0.0))
        # Sum of per-block maxima is a valid (possibly loose) bound.
        return float(sum(np.max(np.abs(b.table), initial=0.0)
                         for b in self._blocks))

    def _audit_v_max(self):
        slack = 1e-12 * (1.0 + self.v_max)
        if self._tensor is not None:
            worst = float(np.max(np.abs(self._tensor), initial=0.0))
            if worst > self.v_max + slack:
                raise GameError(
                    f"payoff magnitude {worst} exceeds v_max {self.v_max}")
            return
        rng = np.random.default_rng(0)
        for _ in range(_VMAX_SAMPLES):
            a = tuple(int(rng.integers(k)) for k in self.action_sets)
            b = int(rng.integers(self.adversary_actions))
            val = self.payoff(a, b)
            if abs(val) > self.v_max + slack:
                raise GameError(
                    f"sampled payoff {val} at {a + (b,)} exceeds v_max "
                    f"{self.v_max}")

    def pure_profiles(self):
        """Iterate over all pure joint profiles ``(a, b)``."""
        for a in itertools.product(*(range(k) for k in self.action_sets)):
            for b in range(self.adversary_actions):
                yield a, b


@dataclass(frozen=True)
class MixedProfile:
    """Per-player simplex vectors for the team plus one for the adversary."""

    team: tuple
    adversary: np.ndarray

    @staticmethod
    def of(team, adversary):
        return MixedProfile(tuple(np.asarray(x, dtype=float) for x in team),
                            np.asarray(adversary, dtype=float))

    def validate(self, game):
        if len(self.team) != game.n:
            raise DimensionMismatchError(
                f"profile has {len(self.team)} team vectors, game has "
                f"{game.n} players")
        for i, x in enumerate(self.team):
            if x.shape != (game.action_sets[i],):
                raise DimensionMismatchError(
                    f"player {i}: strategy length {x.shape} does not match "
                    f"{game.action_sets[i]} actions", player=i)
            _check_simplex(x, f"player {i}", player=i)
        if self.adversary.shape != (game.adversary_actions,):
            raise DimensionMismatchError(
                f"adversary: strategy length {self.adversary.shape} does not "
                f"match {game.adversary_actions} actions")
        _check_simplex(self.adversary, "adversary")
        return self


def _check_simplex(x, who, player=None):
    if not np.all(np.isfinite(x)):
        raise DimensionMismatchError(f"{who}: non-finite entries", player)
    if np.min(x, initial=0.0) < -PROFILE_TOL:
        raise DimensionMismatchError(f"{who}: negative probability", player)
    if abs(float(np.sum(x)) - 1.0) > PROFILE_TOL:
        raise DimensionMismatchError(f"{who}: probabilities sum to "
                                     f"{float(np.sum(x))!r}, not 1", player)


def uniform_profile(game):
    team = tuple(np.full(k, 1.0 / k) for k in game.action_sets)
    return MixedProfile(team, np.full(game.adversary_actions,
                                      1.0 / game.adversary_actions))


def dirichlet_profile(game, rng):
    """Dirichlet(1) (uniform-on-simplex) random profile."""
    team = tuple(rng.dirichlet(np.ones(k)) for k in game.action_sets)
    return MixedProfile(team, rng.dirichlet(np.ones(game.adversary_actions)))


def _validate_team(game, team):
    team = tuple(np.asarray(x, dtype=float) for x in team)
    if len(team) != game.n:
        raise DimensionMismatchError(
            f"got {len(team)} team vectors for {game.n} players")
    for i, x in enumerate(team):
        if x.shape != (game.action_sets[i],):
            raise DimensionMismatchError(
                f"player {i}: strategy length {x.shape[0] if x.ndim == 1 else x.shape}"
                f" does not match {game.action_sets[i]} actions", player=i)
    return team


# -- expected utility and gradients ------------------------------------

_AXES = "abcdefghijklmnop"


def _dense_adversary_vector(tensor, team):
    """Contract the team axes: returns ``b -> U(x, b)``."""
    n = len(team)
    sub = _AXES[:n] + "z," + ",".join(_AXES[i] for i in range(n)) + "->z"
    return np.einsum(sub, tensor, *team)


def _dense_gradient(tensor, team, i, adversary):
    """Contract everything except team axis ``i``; adversary may be mixed."""
    n = len(team)
    operands = [tensor]
    lhs = [_AXES[:n] + "z"]
    for j in range(n):
        if j != i:
            lhs.append(_AXES[j])
            operands.append(team[j])
    lhs.append("z")
    operands.append(adversary)
    sub = ",".join(lhs) + "->" + _AXES[i]
    return np.einsum(sub, *operands)


def adversary_payoff_vector(game, team):
    """Expected team payoff against each pure adversary action.

    Returns the length-``|B|`` vector ``b -> U(x, b)``; these are exactly
    the per-action coefficients the extension LP consumes.
    """
    team = _validate_team(game, team)
    if game._tensor is not None:
        return _dense_adversary_vector(game._tensor, team)
    out = np.zeros(game.adversary_actions)
    for blk in game._blocks:
        xs = [team[p] for p in blk.players]
        n_loc = len(xs)
        if blk.includes_adversary:
            sub = (_AXES[:n_loc] + "z," +
                   ",".join(_AXES[i] for i in range(n_loc)) + "->z")
            sub = sub if n_loc else _AXES[:0] + "z->z"
            out += np.einsum(sub, blk.table, *xs)
        else:
            sub = _AXES[:n_loc] + "," + ",".join(_AXES[i] for i in range(n_loc)) + "->"
            val = np.einsum(sub, blk.table, *xs) if n_loc else blk.table
            out += float(val)
    return out


def expected_utility(game, profile):
    """``E_(a,b)~profile U(a, b)`` via per-factor marginalization."""
    profile.validate(game)
    vec = adversary_payoff_vector(game, profile.team)
    return float(vec @ profile.adversary)


def partial_gradient(game, profile, player):
    """Deviation payoffs of one team player.

    Component ``a`` equals ``E[U(a, a_-i, b)]`` with the other players and
    the adversary drawn from ``profile``; by multilinearity this is also
    the gradient of the expected utility in ``x_i``.
    """
    if not 0 <= player < game.n:
        raise DimensionMismatchError(
            f"player index {player} out of range for {game.n} players",
            player=player)
    profile.validate(game)
    return _partial_gradient_impl(game, profile.team, profile.adversary,
                                  player)


def _partial_gradient_impl(game, team, y, player):
    if game._tensor is not None:
        return _dense_gradient(game._tensor, team, player, y)
    out = np.zeros(game.action_sets[player])
    for blk in game._blocks:
        if player in blk.players:
            axis = blk.players.index(player)
            operands = [blk.table]
            lhs = [_AXES[:len(blk.players)] + ("z" if blk.includes_adversary else "")]
            for k, p in enumerate(blk.players):
                if k != axis:
                    lhs.append(_AXES[k])
                    operands.append(team[p])
            if blk.includes_adversary:
                lhs.append("z")
                operands.append(y)
            out += np.einsum(",".join(lhs) + "->" + _AXES[axis], *operands)
        else:
            # Constant in x_i: its expectation shifts every component alike.
            xs = [team[p] for p in blk.players]
            n_loc = len(xs)
            lhs = [_AXES[:n_loc] + ("z" if blk.includes_adversary else "")]
            operands = [blk.table]
            for k in range(n_loc):
                lhs.append(_AXES[k])
                operands.append(xs[k])
            if blk.includes_adversary:
                lhs.append("z")
                operands.append(y)
            out += float(np.einsum(",".join(lhs) + "->", *operands))
    return out


def deviation_payoff_matrix(game, team, player):
    """Payoffs of one player's pure deviations against pure adversary acts.

    Returns the ``|A_player| x |B|`` matrix whose ``(a, b)`` entry is the
    expected payoff when ``player`` commits to ``a``, the other team
    members play their mixed strategies, and the adversary plays ``b``.
    Row-averaging with ``x_player`` recovers ``adversary_payoff_vector``;
    these matrices are the extension LP's coefficients.
    """
    team = _validate_team(game, team)
    if not 0 <= player < game.n:
        raise DimensionMismatchError(
            f"player index {player} out of range for {game.n} players",
            player=player)
    if game._tensor is not None:
        n = game.n
        operands = [game._tensor]
        lhs = [_AXES[:n] + "z"]
        for j in range(n):
            if j != player:
                lhs.append(_AXES[j])
                operands.append(team[j])
        sub = ",".join(lhs) + "->" + _AXES[player] + "z"
        return np.einsum(sub, *operands)
    out = np.zeros((game.action_sets[player], game.adversary_actions))
    for blk in game._blocks:
        xs = {p: team[p] for p in blk.players if p != player}
        lhs = [_AXES[:len(blk.players)] + ("z" if blk.includes_adversary else "")]
        operands = [blk.table]
        keep = ""
        for k, p in enumerate(blk.players):
            if p == player:
                keep = _AXES[k]
            else:
                lhs.append(_AXES[k])
                operands.append(xs[p])
        rhs = keep + ("z" if blk.includes_adversary else "")
        val = np.einsum(",".join(lhs) + "->" + rhs, *operands)
        if player in blk.players and blk.includes_adversary:
            out += val
        elif player in blk.players:
            out += val[:, None]
        elif blk.includes_adversary:
            out += val[None, :]
        else:
            out += float(val)
    return out


def adversary_best_response(game, team):
    """Best pure adversary action against the team, ties to lowest index.

    Returns ``(action, value)`` with ``value = max_y U(x, y)``, attained at
    a pure action by linearity in ``y``.
    """
    vec = adversary_payoff_vector(game, team)
    action = int(np.argmax(vec))  # first maximizer == lowest index
    return action, float(vec[action])


def team_gradients(game, team, adversary):
    """All players' expected-utility gradients in one pass.

    ``adversary`` is either a pure action index or a mixed vector over the
    adversary's actions.  Component ``a`` of entry ``i`` is the expected
    payoff when player ``i`` commits to ``a``; dotting with ``x_i``
    recovers the expected utility, whichever ``i`` is used.
    """
    team = _validate_team(game, team)
    if np.isscalar(adversary) or isinstance(adversary, (int, np.integer)):
        b = int(adversary)
        if not 0 <= b < game.adversary_actions:
            raise DimensionMismatchError(f"adversary action {b} out of range")
        y = None
    else:
        y = np.asarray(adversary, dtype=float)
        if y.shape != (game.adversary_actions,):
            raise DimensionMismatchError(
                f"adversary vector length {y.shape} does not match "
                f"{game.adversary_actions} actions")
    if game._tensor is not None:
        tensor = game._tensor[..., b] if y is None else None
        out = []
        for i in range(game.n):
            if y is None:
                out.append(_dense_team_only_gradient(tensor, team, i))
            else:
                out.append(_dense_gradient(game._tensor, team, i, y))
        return out
    y_vec = y if y is not None else _one_hot(game.adversary_actions, b)
    profile = MixedProfile(team, y_vec)
    return [partial_gradient(game, profile, i) for i in range(game.n)]


def _one_hot(size, index):
    v = np.zeros(size)
    v[index] = 1.0
    return v


def _dense_team_only_gradient(team_tensor, team, i):
    n = len(team)
    operands = [team_tensor]
    lhs = [_AXES[:n]]
    for j in range(n):
        if j != i:
            lhs.append(_AXES[j])
            operands.append(team[j])
    return np.einsum(",".join(lhs) + "->" + _AXES[i], *operands)


@dataclass(frozen=True)
class SmoothnessBounds:
    """Lipschitz/smoothness constants of the expected utility.

    ``lipschitz`` bounds ``|U(p) - U(p')| / ||p - p'||_2`` over mixed
    profile pairs; ``smoothness`` bounds the Lipschitz constant of the
    gradient.  ``source`` records whether they came from the closed-form
    bound or were supplied by the caller.
    """

    lipschitz: float
    smoothness: float
    source: str = "analytic"

    def __post_init__(self):
        if self.lipschitz < 0 or self.smoothness < 0:
            raise GameError("bounds must be nonnegative")


def analytic_bounds(game):
    """Closed-form conservative bounds from the payoff magnitude.

    ``L = V * sqrt(sum_i |A_i| + |B|)``; the smoothness constant uses the
    analogous per-coordinate argument and is deliberately an over-estimate
    (``V * (sum_i |A_i| + |B|)``), which only shrinks downstream step
    sizes.
    """
    size = sum(game.action_sets) + game.adversary_actions
    v = game.v_max
    return SmoothnessBounds(lipschitz=v * math.sqrt(size), smoothness=v * size)


# -- JSON schema --------------------------------------------------------


def game_from_dict(doc):
    """Parse the game JSON schema into a :class:`TeamGame`.

    Schema: ``{"n": int, "actions": [int], "adversary_actions": int,
    "payoff": {"kind": "dense", "entries": [[[a_1..a_n, b], num, den],
    ...]} | {"kind": "polytensor", "locals": [...]}, "v_max": [num, den]?}``
    with unlisted entries equal to zero.  Entries are exact rationals,
    converted to floats on load.
    """
    if not isinstance(doc, dict):
        raise SchemaError("game document must be an object")
    for key in ("n", "actions", "adversary_actions", "payoff"):
        if key not in doc:
            raise SchemaError("missing required field", key)
    n = doc["n"]
    actions = doc["actions"]
    if not isinstance(n, int) or n < 1:
        raise SchemaError("must be a positive integer", "n")
    if (not isinstance(actions, list) or len(actions) != n
            or not all(isinstance(k, int) and k >= 1 for k in actions)):
        raise SchemaError(f"must list {n} positive action counts", "actions")
    b_count = doc["adversary_actions"]
    if not isinstance(b_count, int) or b_count < 1:
        raise SchemaError("must be a positive integer", "adversary_actions")
    v_max = None
    if "v_max" in doc and doc["v_max"] is not None:
        v_max = float(_as_fraction(doc["v_max"], "v_max"))
    payoff = doc["payoff"]
    if not isinstance(payoff, dict) or "kind" not in payoff:
        raise SchemaError("must be an object with a 'kind'", "payoff")
    kind = payoff["kind"]
    if kind == "dense":
        tensor = _parse_dense_entries(payoff.get("entries"),
                                      tuple(actions) + (b_count,),
                                      "payoff.entries")
        game = TeamGame.dense(tensor, v_max=v_max, document=doc)
    elif kind == "polytensor":
        blocks = _parse_locals(payoff.get("locals"), actions, b_count)
        game = TeamGame.polytensor(actions, b_count, blocks, v_max=v_max,
                                   document=doc)
    else:
        raise SchemaError(f"unknown kind {kind!r}", "payoff.kind")
    return game


def _parse_dense_entries(entries, shape, path):
    if not isinstance(entries, list):
        raise SchemaError("must be a list of [[indices], num, den]", path)
    tensor = np.zeros(shape)
    for pos, entry in enumerate(entries):
        here = f"{path}[{pos}]"
        if (not isinstance(entry, list) or len(entry) != 3
                or not isinstance(entry[0], list)):
            raise SchemaError("entry must be [[indices], num, den]", here)
        idx = entry[0]
        if len(idx) != len(shape):
            raise SchemaError(
                f"needs {len(shape)} indices, got {len(idx)}", here)
        for axis, (i, k) in enumerate(zip(idx, shape)):
            if not isinstance(i, int) or not 0 <= i < k:
                raise SchemaError(
                    f"index {i} out of range [0, {k}) on axis {axis}", here)
        tensor[tuple(idx)] = float(_as_fraction(entry[1:], here))
    return tensor


def _parse_locals(locals_, actions, b_count):
    if not isinstance(locals_, list) or not locals_:
        raise SchemaError("must be a nonempty list", "payoff.locals")
    blocks = []
    for pos, loc in enumerate(locals_):
        path = f"payoff.locals[{pos}]"
        if not isinstance(loc, dict):
            raise SchemaError("must be an object", path)
        players = loc.get("players")
        if (not isinstance(players, list)
                or not all(isinstance(p, int) and 0 <= p < len(actions)
                           for p in players)):
            raise SchemaError("players must list valid team indices",
                              f"{path}.players")
        players = tuple(sorted(players))
        with_adv = bool(loc.get("includes_adversary", False))
        shape = tuple(actions[p] for p in players)
        if with_adv:
            shape = shape + (b_count,)
        if not shape:
            raise SchemaError("block must touch at least one axis", path)
        table = _parse_dense_entries(loc.get("entries"), shape,
                                     f"{path}.entries")
        blocks.append(LocalBlock(players, with_adv, table))
    return blocks


def game_to_dict(game):
    """Serialize a game back to the JSON schema.

    Games loaded from a document round-trip exactly; games built from
    float arrays serialize entries via exact binary-float rationals.
    """
    if game.document is not None:
        return game.document
    tensor = game.payoff_tensor()
    entries = []
    for idx in np.ndindex(*tensor.shape):
        val = tensor[idx]
        if val != 0.0:
            frac = Fraction(*float(val).as_integer_ratio())
            entries.append([list(int(i) for i in idx),
                            int(frac.numerator), int(frac.denominator)])
    vfrac = Fraction(*float(game.v_max).as_integer_ratio())
    return {
        "n": game.n,
        "actions": list(game.action_sets),
        "adversary_actions": game.adversary_actions,
        "payoff": {"kind": "dense", "entries": entries},
        "v_max": [int(vfrac.numerator), int(vfrac.denominator)],
    }


def profile_to_dict(profile):
    return {"team": [list(map(float, x)) for x in profile.team],
            "adversary": list(map(float, profile.adversary))}


def profile_from_dict(doc):
    if not isinstance(doc, dict) or "team" not in doc or "adversary" not in doc:
        raise SchemaError("profile needs 'team' and 'adversary' fields")
    try:
        return MixedProfile.of(doc["team"], doc["adversary"])
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"malformed profile vectors: {exc}") from exc
