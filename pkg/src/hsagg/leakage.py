"""Exact information-theoretic verification of the aggregation scheme.

Every protocol variable is a fixed linear map of the canonical source
vector of independent uniform field symbols (gradient parts, user
randomness parts, dealer noise).  For such variables, q-ary joint
entropy equals ``rank(coefficient matrix) * block_len`` exactly, and
conditional mutual information reduces to the rank quadruple

    I(A; B | C) = rank(AC) + rank(BC) - rank(ABC) - rank(C)

in symbols.  Entropies and MI values are exact rationals, never floats,
so zero leakage is decided exactly.

A brute-force oracle cross-validates the rank formula on tiny instances
by enumerating every source assignment through the concrete protocol
code path, independent of the coefficient representation.
"""

import random
from dataclasses import dataclass, field as dc_field, replace
from fractions import Fraction
from itertools import combinations, product
from typing import Iterable, Mapping, Sequence

import numpy as np

from .matrix import GfMatrix, RowSpace
from .patterns import CommPattern, format_pattern
from .protocol import (
    Gradient,
    SchemeContext,
    SchemeParams,
    UserRandomness,
    encode_uploads,
    helper_recover,
    helper_respond,
    helper_share,
    keys_from_noise,
    setup,
)

__all__ = [
    "LeakageError",
    "LayoutMismatch",
    "BadSubset",
    "TooLargeToEnumerate",
    "SourceLayout",
    "LinearVar",
    "MiQuery",
    "LeakageRecord",
    "MaskStructureReport",
    "RecoverabilityReport",
    "WitnessReport",
    "build_static_vars",
    "build_linear_transcript",
    "joint_rank",
    "entropy_rank",
    "cond_entropy",
    "rank_quadruple",
    "cond_mutual_info",
    "helper_observation",
    "check_security_helpers",
    "check_security_master",
    "check_mask_independence",
    "check_sharing_leakage",
    "check_upload_recoverability",
    "response_entropy_given_sum",
    "infeasibility_witness",
    "concrete_transcript_values",
    "BruteForceOracle",
    "brute_force_entropy",
]


class LeakageError(Exception):
    """Base class for verifier errors."""


class LayoutMismatch(LeakageError):
    """Variables over different source layouts were combined."""


class BadSubset(LeakageError):
    """A colluding-helper set exceeds the collusion bound."""


class TooLargeToEnumerate(LeakageError):
    """The source space exceeds the brute-force enumeration budget."""


@dataclass(frozen=True)
class SourceLayout:
    """Canonical ordering of all independent uniform source slots.

    Slots come in three blocks: gradient parts (user-major), user
    randomness parts (user-major), then dealer noise ordered
    (helper, mixing slot, user).  Each slot stands for ``block_len``
    i.i.d. symbols; coefficient matrices act blockwise, one column per
    slot.
    """

    params: SchemeParams

    @property
    def block_len(self) -> int:
        return self.params.block_len

    @property
    def dim(self) -> int:
        p = self.params
        return p.num_users * p.resiliency + (
            p.num_helpers * p.num_users * (p.resiliency - 1)
        )

    def w_slot(self, user: int, part: int) -> int:
        return (user - 1) * self.params.block_count + (part - 1)

    def f_slot(self, user: int, part: int) -> int:
        p = self.params
        return p.num_users * p.block_count + (user - 1) * p.collusion + (part - 1)

    def q_slot(self, helper: int, mix: int, user: int) -> int:
        p = self.params
        base = p.num_users * p.resiliency
        return base + ((helper - 1) * (p.resiliency - 1) + (mix - 1)) * p.num_users + (
            user - 1
        )

    def labels(self) -> tuple[str, ...]:
        p = self.params
        out = []
        for k in range(1, p.num_users + 1):
            out += [f"w{k}.{i}" for i in range(1, p.block_count + 1)]
        for k in range(1, p.num_users + 1):
            out += [f"f{k}.{j}" for j in range(1, p.collusion + 1)]
        for n in range(1, p.num_helpers + 1):
            for j in range(1, p.resiliency):
                out += [f"q{n}.{j}.{k}" for k in range(1, p.num_users + 1)]
        return tuple(out)


@dataclass(frozen=True)
class LinearVar:
    """A named protocol variable as rows of source-slot coefficients."""

    name: str
    layout: SourceLayout
    coeffs: GfMatrix

    @property
    def rows(self) -> tuple:
        return self.coeffs.data


def _unit_row(dim: int, slot: int, value: int = 1) -> list[int]:
    row = [0] * dim
    row[slot] = value
    return row


def build_static_vars(ctx: SchemeContext) -> dict[str, LinearVar]:
    """Pattern-independent variables: gradients, randomness, the sum,
    every upload, and every dealer mask."""
    params = ctx.params
    layout = SourceLayout(params)
    dim = layout.dim
    field = ctx.field

    def var(name, rows):
        return LinearVar(name, layout, GfMatrix(field, rows))

    out: dict[str, LinearVar] = {}
    for k in range(1, params.num_users + 1):
        out[f"W[{k}]"] = var(
            f"W[{k}]",
            [_unit_row(dim, layout.w_slot(k, i)) for i in range(1, params.block_count + 1)],
        )
        out[f"F[{k}]"] = var(
            f"F[{k}]",
            [_unit_row(dim, layout.f_slot(k, j)) for j in range(1, params.collusion + 1)],
        )
    sum_rows = []
    for i in range(1, params.block_count + 1):
        row = [0] * dim
        for k in range(1, params.num_users + 1):
            row[layout.w_slot(k, i)] = 1
        sum_rows.append(row)
    out["W"] = var("W", sum_rows)

    v = ctx.upload_matrix
    for k in range(1, params.num_users + 1):
        for n in range(1, params.num_helpers + 1):
            row = [0] * dim
            for i in range(1, params.block_count + 1):
                row[layout.w_slot(k, i)] = v[n - 1, i - 1]
            for j in range(1, params.collusion + 1):
                row[layout.f_slot(k, j)] = v[n - 1, params.block_count + j - 1]
            out[f"X[{k},{n}]"] = var(f"X[{k},{n}]", [row])

    for n in range(1, params.num_helpers + 1):
        coeffs = ctx.mask_maps[n - 1]
        for k in range(1, params.num_users + 1):
            for i in range(1, params.num_helpers + 1):
                row = [0] * dim
                for j in range(1, params.resiliency):
                    row[layout.q_slot(n, j, k)] = coeffs[i - 1, j - 1]
                out[f"Z[{i},{n},{k}]"] = var(f"Z[{i},{n},{k}]", [row])
    return out


def build_linear_transcript(
    ctx: SchemeContext, pattern: CommPattern
) -> dict[str, LinearVar]:
    """Coefficient-level transcript of one round under the pattern.

    Extends the static variables with the inter-helper shares, the
    recovered uploads (built through the same row-selection/inversion
    composition the concrete helper uses), and the responses.
    Instantiating any source assignment through these maps reproduces
    the concrete transcript exactly, which is tested.
    """
    params = ctx.params
    q = params.modulus
    out = build_static_vars(ctx)
    layout = out["W"].layout
    field = ctx.field

    def var(name, rows):
        return LinearVar(name, layout, GfMatrix(field, rows))

    def add_rows(*rows_list):
        acc = [0] * layout.dim
        for row in rows_list:
            for i, c in enumerate(row):
                acc[i] += c
        return [c % q for c in acc]

    active = sorted(pattern.active_helpers)
    all_users = range(1, params.num_users + 1)

    for n in active:
        own = pattern.users_of(n)
        for i in range(1, params.num_helpers + 1):
            if i == n:
                continue
            for k in sorted(own - pattern.users_of(i)):
                rows = add_rows(
                    out[f"X[{k},{n}]"].rows[0], out[f"Z[{n},{i},{k}]"].rows[0]
                )
                out[f"M[{n}->{i},{k}]"] = var(f"M[{n}->{i},{k}]", [rows])

    for n in active:
        own = pattern.users_of(n)
        for k in all_users:
            if k in own:
                continue
            senders = sorted(pattern.receivers_of(k))[: params.resiliency]
            sub = ctx.decode_matrices[n - 1].select_rows([i - 1 for i in senders])
            first_row = sub.inv().row(0)
            acc = [0] * layout.dim
            for c, i in zip(first_row, senders):
                if c:
                    mrow = out[f"M[{i}->{n},{k}]"].rows[0]
                    for pos, v in enumerate(mrow):
                        acc[pos] += c * v
            out[f"Xhat[{k},{n}]"] = var(f"Xhat[{k},{n}]", [[v % q for v in acc]])

    for n in active:
        own = pattern.users_of(n)
        terms = [
            out[f"X[{k},{n}]" if k in own else f"Xhat[{k},{n}]"].rows[0]
            for k in all_users
        ]
        out[f"Y[{n}]"] = var(f"Y[{n}]", [add_rows(*terms)])
    return out


# -- rank arithmetic -------------------------------------------------------


def _common_layout(variables: Iterable[LinearVar]) -> SourceLayout | None:
    layout = None
    for v in variables:
        if layout is None:
            layout = v.layout
        elif v.layout != layout:
            raise LayoutMismatch(
                f"{v.name} uses a different source layout"
            )
    return layout


def _space_for(layout: SourceLayout, ctx_field) -> RowSpace:
    return RowSpace(ctx_field, layout.dim)


def joint_rank(variables: Sequence[LinearVar]) -> int:
    """Rank of the stacked coefficient rows of the given variables."""
    layout = _common_layout(variables)
    if layout is None:
        return 0
    space = RowSpace(variables[0].coeffs.field, layout.dim)
    for v in variables:
        for row in v.rows:
            space.insert(row)
    return space.rank


def entropy_rank(variables: Sequence[LinearVar]) -> Fraction:
    """Exact joint entropy in q-ary units: rank times block length."""
    variables = tuple(variables)
    if not variables:
        return Fraction(0)
    l = variables[0].layout.block_len
    return Fraction(joint_rank(variables) * l)


def cond_entropy(
    target: Sequence[LinearVar], given: Sequence[LinearVar]
) -> Fraction:
    """H(target | given) = rank(target, given) - rank(given), in symbols."""
    target, given = tuple(target), tuple(given)
    layout = _common_layout(list(target) + list(given))
    if layout is None:
        return Fraction(0)
    f = (target + given)[0].coeffs.field
    space = RowSpace(f, layout.dim)
    for v in given:
        for row in v.rows:
            space.insert(row)
    r_c = space.rank
    for v in target:
        for row in v.rows:
            space.insert(row)
    return Fraction((space.rank - r_c) * layout.block_len)


@dataclass(frozen=True)
class MiQuery:
    """A conditional mutual-information query I(target; observed | given)."""

    target: tuple[LinearVar, ...]
    observed: tuple[LinearVar, ...]
    given: tuple[LinearVar, ...] = ()


def rank_quadruple(query: MiQuery) -> tuple[int, int, int, int]:
    """(rank(AC), rank(BC), rank(ABC), rank(C)) for the query."""
    everything = list(query.target) + list(query.observed) + list(query.given)
    layout = _common_layout(everything)
    if layout is None:
        return (0, 0, 0, 0)
    f = everything[0].coeffs.field
    base = RowSpace(f, layout.dim)
    for v in query.given:
        for row in v.rows:
            base.insert(row)
    r_c = base.rank
    with_a = base.clone()
    for v in query.target:
        for row in v.rows:
            with_a.insert(row)
    r_ac = with_a.rank
    for v in query.observed:
        for row in v.rows:
            base.insert(row)
    r_bc = base.rank
    for v in query.target:
        for row in v.rows:
            base.insert(row)
    r_abc = base.rank
    return (r_ac, r_bc, r_abc, r_c)


def cond_mutual_info(query: MiQuery) -> Fraction:
    """Exact I(target; observed | given) in q-ary units."""
    everything = list(query.target) + list(query.observed) + list(query.given)
    layout = _common_layout(everything)
    if layout is None:
        return Fraction(0)
    r_ac, r_bc, r_abc, r_c = rank_quadruple(query)
    return Fraction((r_ac + r_bc - r_abc - r_c) * layout.block_len)


# -- the scheme's security statements --------------------------------------


@dataclass(frozen=True)
class LeakageRecord:
    """One evaluated security query, ready for structured reporting."""

    kind: str
    colluding_users: tuple[int, ...]
    colluding_helpers: tuple[int, ...]
    pattern: str
    ranks: tuple[int, int, int, int]
    value: Fraction
    exploratory: bool = False

    @property
    def ok(self) -> bool:
        return self.exploratory or self.value == 0


def helper_observation(
    tvars: Mapping[str, LinearVar],
    ctx: SchemeContext,
    pattern: CommPattern,
    tset: Sequence[int],
) -> tuple[LinearVar, ...]:
    """Everything a colluding helper set sees: all uploads addressed to
    it, its stored masks, and the shares it receives."""
    params = ctx.params
    obs: list[LinearVar] = []
    for t in sorted(tset):
        for k in range(1, params.num_users + 1):
            obs.append(tvars[f"X[{k},{t}]"])
    for t in sorted(tset):
        for n in range(1, params.num_helpers + 1):
            if n == t:
                continue
            for k in range(1, params.num_users + 1):
                obs.append(tvars[f"Z[{t},{n},{k}]"])
    for t in sorted(tset):
        for i in sorted(pattern.active_helpers):
            if i == t:
                continue
            for k in range(1, params.num_users + 1):
                name = f"M[{i}->{t},{k}]"
                if name in tvars:
                    obs.append(tvars[name])
    return tuple(obs)


def _collusion_vars(tvars, users: Sequence[int]) -> tuple[LinearVar, ...]:
    out = []
    for u in sorted(users):
        out.append(tvars[f"W[{u}]"])
        out.append(tvars[f"F[{u}]"])
    return tuple(out)


def _all_gradients(tvars, params) -> tuple[LinearVar, ...]:
    return tuple(tvars[f"W[{k}]"] for k in range(1, params.num_users + 1))


def check_security_helpers(
    ctx: SchemeContext,
    pattern: CommPattern,
    users: Sequence[int],
    tset: Sequence[int],
    tvars: Mapping[str, LinearVar] | None = None,
    exploratory: bool = False,
) -> LeakageRecord:
    """Leakage of all gradients to colluding helpers and users.

    Evaluates I(all gradients; colluding helpers' view | colluding
    users' gradients and randomness).  The scheme guarantees exactly 0
    whenever ``len(tset) <= collusion``; larger sets require
    ``exploratory=True`` and the value is reported rather than judged.
    """
    params = ctx.params
    if len(set(tset)) > params.collusion and not exploratory:
        raise BadSubset(
            f"{len(set(tset))} colluding helpers exceeds bound {params.collusion}"
        )
    if tvars is None:
        tvars = build_linear_transcript(ctx, pattern)
    query = MiQuery(
        target=_all_gradients(tvars, params),
        observed=helper_observation(tvars, ctx, pattern, tset),
        given=_collusion_vars(tvars, users),
    )
    return LeakageRecord(
        kind="helpers",
        colluding_users=tuple(sorted(users)),
        colluding_helpers=tuple(sorted(tset)),
        pattern=format_pattern(pattern),
        ranks=rank_quadruple(query),
        value=cond_mutual_info(query),
        exploratory=len(set(tset)) > params.collusion,
    )


def check_security_master(
    ctx: SchemeContext,
    pattern: CommPattern,
    users: Sequence[int],
    tset: Sequence[int],
    tvars: Mapping[str, LinearVar] | None = None,
    exploratory: bool = False,
) -> LeakageRecord:
    """Leakage of all gradients to the master beyond the sum.

    The master sees every surviving helper's response plus whatever the
    colluding helpers and users contribute; conditioning includes the
    gradient sum itself.
    """
    params = ctx.params
    if len(set(tset)) > params.collusion and not exploratory:
        raise BadSubset(
            f"{len(set(tset))} colluding helpers exceeds bound {params.collusion}"
        )
    if tvars is None:
        tvars = build_linear_transcript(ctx, pattern)
    responses = tuple(
        tvars[f"Y[{n}]"] for n in sorted(pattern.active_helpers)
    )
    query = MiQuery(
        target=_all_gradients(tvars, params),
        observed=responses + helper_observation(tvars, ctx, pattern, tset),
        given=(tvars["W"],) + _collusion_vars(tvars, users),
    )
    return LeakageRecord(
        kind="master",
        colluding_users=tuple(sorted(users)),
        colluding_helpers=tuple(sorted(tset)),
        pattern=format_pattern(pattern),
        ranks=rank_quadruple(query),
        value=cond_mutual_info(query),
        exploratory=len(set(tset)) > params.collusion,
    )


@dataclass
class MaskStructureReport:
    """Independence and uniformity of the dealer masks.

    Violations are fatal; boundary entries record subsets beyond the
    hypothesis (more than resiliency - 1 helpers), where the entropy
    may legitimately fall short of |S| blocks.
    """

    families_checked: int
    subsets_checked: int
    violations: list[str] = dc_field(default_factory=list)
    boundary: list[str] = dc_field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def check_mask_independence(ctx: SchemeContext, family_samples: int = 128) -> MaskStructureReport:
    """Verify the mask entropy structure.

    (a) the per-(helper, user) mask groups are mutually independent:
    joint rank of the maximal groups equals the sum of group ranks,
    which implies factorization for every sub-family; families are also
    checked exhaustively when there are at most 4096 of them, otherwise
    a seeded sample is drawn.  (b) any mask subset within one group of
    size at most resiliency - 1 has full entropy, exhaustively.
    """
    params = ctx.params
    svars = build_static_vars(ctx)
    n_all = range(1, params.num_helpers + 1)
    users = range(1, params.num_users + 1)
    report = MaskStructureReport(families_checked=0, subsets_checked=0)

    def group(subset, n, k):
        return [svars[f"Z[{i},{n},{k}]"] for i in subset]

    def family_ok(family: dict[int, tuple[int, ...]]) -> bool:
        stacked: list[LinearVar] = []
        total = 0
        for n in n_all:
            for k in users:
                g = group(family[n], n, k)
                stacked += g
                total += joint_rank(g)
        return joint_rank(stacked) == total

    maximal = {n: tuple(i for i in n_all if i != n) for n in n_all}
    report.families_checked += 1
    if not family_ok(maximal):
        report.violations.append("maximal mask family is not independent")

    per_helper = [
        [tuple(c) for size in range(params.num_helpers)
         for c in combinations([i for i in n_all if i != n], size)]
        for n in n_all
    ]
    family_count = 1
    for options in per_helper:
        family_count *= len(options)
    if family_count <= 4096:
        for combo in product(*per_helper):
            family = {n: combo[n - 1] for n in n_all}
            report.families_checked += 1
            if not family_ok(family):
                report.violations.append(f"family {family} does not factorize")
    else:
        rng = random.Random(20240901)
        for _ in range(family_samples):
            family = {
                n: tuple(sorted(rng.sample(maximal[n], rng.randrange(len(maximal[n]) + 1))))
                for n in n_all
            }
            report.families_checked += 1
            if not family_ok(family):
                report.violations.append(f"family {family} does not factorize")

    l = params.block_len
    for n in n_all:
        others = [i for i in n_all if i != n]
        for k in users:
            for size in range(0, len(others) + 1):
                for subset in combinations(others, size):
                    report.subsets_checked += 1
                    h = entropy_rank(group(subset, n, k))
                    if size <= params.resiliency - 1:
                        if h != Fraction(size * l):
                            report.violations.append(
                                f"H(masks {subset} of helper {n}, user {k}) = {h},"
                                f" expected {size * l}"
                            )
                    else:
                        report.boundary.append(
                            f"masks {subset} of helper {n}, user {k}:"
                            f" H = {h} (beyond hypothesis)"
                        )
    return report


def check_sharing_leakage(
    ctx: SchemeContext,
    pattern: CommPattern,
    tset: Sequence[int],
    tvars: Mapping[str, LinearVar] | None = None,
) -> LeakageRecord:
    """Inter-helper shares reveal nothing new about uploads:
    I(all uploads; shares seen by tset | tset's uploads and masks) = 0."""
    params = ctx.params
    if len(set(tset)) > params.collusion:
        raise BadSubset(
            f"{len(set(tset))} colluding helpers exceeds bound {params.collusion}"
        )
    if tvars is None:
        tvars = build_linear_transcript(ctx, pattern)
    all_uploads = tuple(
        tvars[f"X[{k},{n}]"]
        for k in range(1, params.num_users + 1)
        for n in range(1, params.num_helpers + 1)
    )
    received = []
    given = []
    for t in sorted(tset):
        for k in range(1, params.num_users + 1):
            given.append(tvars[f"X[{k},{t}]"])
        for n in range(1, params.num_helpers + 1):
            if n != t:
                for k in range(1, params.num_users + 1):
                    given.append(tvars[f"Z[{t},{n},{k}]"])
        for i in sorted(pattern.active_helpers):
            if i == t:
                continue
            for k in range(1, params.num_users + 1):
                name = f"M[{i}->{t},{k}]"
                if name in tvars:
                    received.append(tvars[name])
    query = MiQuery(target=all_uploads, observed=tuple(received), given=tuple(given))
    return LeakageRecord(
        kind="sharing",
        colluding_users=(),
        colluding_helpers=tuple(sorted(tset)),
        pattern=format_pattern(pattern),
        ranks=rank_quadruple(query),
        value=cond_mutual_info(query),
    )


@dataclass
class RecoverabilityReport:
    """Recoverability: enough uploads pin down the gradient exactly."""

    checks: int
    violations: list[str] = dc_field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def check_upload_recoverability(ctx: SchemeContext) -> RecoverabilityReport:
    """I(gradient k; its uploads to any >= resiliency helpers) = L."""
    params = ctx.params
    svars = build_static_vars(ctx)
    helpers = range(1, params.num_helpers + 1)
    report = RecoverabilityReport(checks=0)
    expected = Fraction(params.gradient_len)
    for k in range(1, params.num_users + 1):
        for size in range(params.resiliency, params.num_helpers + 1):
            for subset in combinations(helpers, size):
                report.checks += 1
                query = MiQuery(
                    target=(svars[f"W[{k}]"],),
                    observed=tuple(svars[f"X[{k},{n}]"] for n in subset),
                )
                got = cond_mutual_info(query)
                if got != expected:
                    report.violations.append(
                        f"I(W[{k}]; uploads {subset}) = {got}, expected {expected}"
                    )
    return report


def response_entropy_given_sum(
    ctx: SchemeContext, tset: Sequence[int]
) -> Fraction:
    """H of all aggregate responses given the gradient sum and the
    uploads seen by ``tset``; the design makes this exactly 0 when
    ``len(tset) == collusion``."""
    params = ctx.params
    svars = build_static_vars(ctx)
    layout = svars["W"].layout
    q = params.modulus
    aggregates = []
    for n in range(1, params.num_helpers + 1):
        acc = [0] * layout.dim
        for k in range(1, params.num_users + 1):
            for i, c in enumerate(svars[f"X[{k},{n}]"].rows[0]):
                acc[i] += c
        aggregates.append(
            LinearVar(
                f"sumX[{n}]", layout, GfMatrix(ctx.field, [[c % q for c in acc]])
            )
        )
    given = [svars["W"]]
    for t in sorted(tset):
        for k in range(1, params.num_users + 1):
            given.append(svars[f"X[{k},{t}]"])
    return cond_entropy(aggregates, given)


@dataclass(frozen=True)
class WitnessReport:
    """Outcome of the infeasibility contradiction check."""

    params: SchemeParams
    sibling_collusion: int
    value: Fraction
    required: Fraction

    @property
    def ok(self) -> bool:
        return self.value >= self.required


def infeasibility_witness(params: SchemeParams) -> WitnessReport:
    """Reproduce the contradiction that rules a scheme out when the
    resiliency threshold does not exceed the collusion bound.

    Any correct scheme lets ``resiliency`` helpers jointly determine
    the responses and hence the gradient sum, so a colluding set that
    large learns at least L symbols.  We instantiate a correct sibling
    scheme (same K, N, Nr, q; collusion lowered to Nr - 1) and
    evaluate the view of helpers [1..Nr] in the linear model, under
    the no-straggler pattern.
    """
    if params.resiliency > params.collusion:
        raise ValueError("witness applies only when resiliency <= collusion")
    if params.resiliency < 2:
        raise ValueError(
            "no feasible sibling exists for resiliency 1 with a positive collusion bound"
        )
    sibling = replace(params, collusion=params.resiliency - 1)
    ctx = setup(sibling)
    svars = build_static_vars(ctx)
    view: list[LinearVar] = []
    tset = range(1, params.resiliency + 1)
    for t in tset:
        for k in range(1, params.num_users + 1):
            view.append(svars[f"X[{k},{t}]"])
    for t in tset:
        for n in range(1, params.num_helpers + 1):
            if n != t:
                for k in range(1, params.num_users + 1):
                    view.append(svars[f"Z[{t},{n},{k}]"])
    query = MiQuery(target=(svars["W"],), observed=tuple(view))
    return WitnessReport(
        params=params,
        sibling_collusion=sibling.collusion,
        value=cond_mutual_info(query),
        required=Fraction(params.gradient_len),
    )


# -- brute-force oracle -----------------------------------------------------


def concrete_transcript_values(
    ctx: SchemeContext, pattern: CommPattern, assignment: Sequence[int]
) -> dict[str, tuple[int, ...]]:
    """Run the concrete protocol on one full source assignment.

    ``assignment`` lists ``dim * block_len`` symbols in layout order.
    Returns every named variable's value; this path exercises the real
    role functions and never touches the coefficient representation.
    """
    params = ctx.params
    layout = SourceLayout(params)
    l = params.block_len

    def slot(i: int) -> tuple[int, ...]:
        return tuple(assignment[i * l:(i + 1) * l])

    gradients = {
        k: Gradient(
            k,
            tuple(slot(layout.w_slot(k, i)) for i in range(1, params.block_count + 1)),
        )
        for k in range(1, params.num_users + 1)
    }
    noises = {
        k: UserRandomness(
            k,
            tuple(slot(layout.f_slot(k, j)) for j in range(1, params.collusion + 1)),
        )
        for k in range(1, params.num_users + 1)
    }
    dealer_noise = {
        (n, j, k): slot(layout.q_slot(n, j, k))
        for n in range(1, params.num_helpers + 1)
        for j in range(1, params.resiliency)
        for k in range(1, params.num_users + 1)
    }
    keys = keys_from_noise(ctx, dealer_noise)

    vals: dict[str, tuple[int, ...]] = {}
    q = params.modulus
    for k, g in gradients.items():
        vals[f"W[{k}]"] = g.symbols()
        vals[f"F[{k}]"] = tuple(s for part in noises[k].parts for s in part)
    vals["W"] = tuple(
        sum(gradients[k].symbols()[i] for k in gradients) % q
        for i in range(params.gradient_len)
    )

    payload: dict[tuple[int, int], tuple[int, ...]] = {}
    for k in sorted(gradients):
        for msg in encode_uploads(ctx, gradients[k], noises[k]):
            payload[(k, msg.helper)] = msg.payload
            vals[f"X[{k},{msg.helper}]"] = msg.payload
    for key, vec in keys.masks.items():
        i, n, k = key
        vals[f"Z[{i},{n},{k}]"] = vec

    active = sorted(pattern.active_helpers)
    received = {
        n: {k: payload[(k, n)] for k in sorted(pattern.users_of(n))} for n in active
    }
    inbox: dict[int, dict[int, dict[int, tuple[int, ...]]]] = {}
    for n in active:
        for msg in helper_share(ctx, keys, pattern, n, received[n]):
            for k, vec in msg.payloads.items():
                vals[f"M[{n}->{msg.receiver},{k}]"] = vec
                inbox.setdefault(msg.receiver, {}).setdefault(k, {})[n] = vec

    for n in active:
        own = pattern.users_of(n)
        recovered = {}
        for k in range(1, params.num_users + 1):
            if k in own:
                continue
            xhat = helper_recover(ctx, pattern, n, k, inbox.get(n, {}).get(k, {}))
            recovered[k] = xhat
            vals[f"Xhat[{k},{n}]"] = xhat
        vals[f"Y[{n}]"] = helper_respond(ctx, pattern, n, received[n], recovered).payload
    return vals


class BruteForceOracle:
    """Exact entropies on a tiny instance by full source enumeration.

    Enumerates every assignment of the source vector, pushes each one
    through the concrete protocol, and tabulates the resulting joint
    distributions.  The scheme's variables are uniform over a subspace,
    so every joint entropy is an exact integer number of q-ary symbols;
    non-uniformity would indicate a broken scheme and raises.
    """

    def __init__(self, ctx: SchemeContext, pattern: CommPattern, limit: int = 10**6):
        params = ctx.params
        layout = SourceLayout(params)
        q = params.modulus
        width = layout.dim * params.block_len
        total = q**width
        if total > limit:
            raise TooLargeToEnumerate(
                f"{q}^{width} = {total} assignments exceeds the budget {limit}"
            )
        self.ctx = ctx
        self.pattern = pattern
        self.q = q
        self.count = total

        names = sorted(concrete_transcript_values(ctx, pattern, (0,) * width))
        tables = {name: [] for name in names}
        for assignment in product(range(q), repeat=width):
            vals = concrete_transcript_values(ctx, pattern, assignment)
            for name in names:
                tables[name].append(vals[name])
        self.tables = {
            name: np.array(rows, dtype=np.int64) for name, rows in tables.items()
        }

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self.tables)

    def entropy(self, names: Sequence[str]) -> Fraction:
        """Exact joint q-ary entropy of the named variables."""
        names = list(names)
        if not names:
            return Fraction(0)
        arr = np.hstack([self.tables[n] for n in names])
        width = arr.shape[1]
        if self.q**width < 2**62:
            powers = self.q ** np.arange(width - 1, -1, -1, dtype=np.int64)
            packed = arr @ powers
            _, counts = np.unique(packed, return_counts=True)
        else:
            _, counts = np.unique(arr, axis=0, return_counts=True)
        if counts.max() != counts.min():
            raise LeakageError(
                f"joint distribution of {names} is not uniform; "
                "entropy is not an exact q-ary integer"
            )
        support = len(counts)
        exponent = 0
        s = support
        while s % self.q == 0:
            s //= self.q
            exponent += 1
        if s != 1:
            raise LeakageError(
                f"support size {support} of {names} is not a power of {self.q}"
            )
        return Fraction(exponent)

    def cond_mutual_info(
        self,
        target: Sequence[str],
        observed: Sequence[str],
        given: Sequence[str] = (),
    ) -> Fraction:
        a, b, c = list(target), list(observed), list(given)
        return (
            self.entropy(a + c)
            + self.entropy(b + c)
            - self.entropy(a + b + c)
            - self.entropy(c)
        )


def brute_force_entropy(
    ctx: SchemeContext,
    pattern: CommPattern,
    names: Sequence[str],
    limit: int = 10**6,
) -> Fraction:
    """One-shot exact entropy via full enumeration; see BruteForceOracle."""
    return BruteForceOracle(ctx, pattern, limit=limit).entropy(names)
