"""The informed player's optimal random control and simulated matches against
uninformed opponents."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SpecError
from .games import GameSpec
from .kernel import ConditionalKernel, MartingaleKernel, build_kernel, condition_kernel
from .paths import PathBatch, sample_paths
from .rng import OPPONENT_SALT, path_uniforms
from .solver import ValueTable


@dataclass(frozen=True, eq=False)
class InformedStrategy:
    """Follows the conditional kernel of the realized state and plays u*(t_k, p).

    On stage ``[t_k, t_{k+1})`` the state in force is ``p_{k+1}``, the posterior
    right after the split at ``t_k``; the control is read off that state only.
    """

    table: ValueTable
    spec: GameSpec
    kernel: MartingaleKernel
    controls: np.ndarray  # (n, N): action index (payoff specs) or action value

    def conditional(self, i: int) -> ConditionalKernel:
        return condition_kernel(self.kernel, i)

    def control(self, k: int, nodes) -> np.ndarray:
        return self.controls[k, nodes]

    def sample(self, i: int, p0, count: int, seed: int) -> PathBatch:
        return sample_paths(self.conditional(i), p0, count, seed)


def synthesize_informed(table: ValueTable, spec: GameSpec | None = None) -> InformedStrategy:
    spec = spec or table.spec
    if spec.kind != "payoff" and spec.saddle_u is None:
        raise SpecError(f"missing saddle: spec {spec.name!r} provides no u*(t, p)")
    controls = spec.control_table(table.tgrid.knots[:-1], table.grid.points)
    return InformedStrategy(table, spec, build_kernel(table), controls)


UNINFORMED_KINDS = ("posterior_best_response", "constant", "uniform", "i_clairvoyant")


@dataclass(frozen=True)
class UninformedStrategy:
    """A responder that sees the public posterior and the announced u, not the state.

    ``i_clairvoyant`` also sees the realized state; it is an illegal probe that
    bounds the payoff from above.
    """

    kind: str
    v: float | None = None  # action played by ``constant``

    def __post_init__(self):
        if self.kind not in UNINFORMED_KINDS:
            raise SpecError(f"unknown uninformed strategy {self.kind!r}; choose from {UNINFORMED_KINDS}")
        if self.kind == "constant" and self.v is None:
            raise SpecError("constant strategy needs an action v")

    @property
    def legal(self) -> bool:
        return self.kind != "i_clairvoyant"

    def respond(self, L: np.ndarray, p: np.ndarray, u_idx: np.ndarray, state: np.ndarray, u01: np.ndarray | None, v_values):
        """Action indices for a batch; ``L`` is the (dim, nu, nv) payoff tensor at the knot."""
        nv = L.shape[2]
        if self.kind == "constant":
            hit = np.flatnonzero(np.isclose(v_values, self.v))
            if not hit.size:
                raise SpecError(f"constant action {self.v} is not in the action grid")
            return np.full(len(p), hit[0])
        if self.kind == "uniform":
            return np.minimum((u01 * nv).astype(np.int64), nv - 1)
        rows = L[:, u_idx, :]  # (dim, B, nv)
        if self.kind == "posterior_best_response":
            score = np.einsum("bi,ibv->bv", p, rows)
        else:
            score = rows[state, np.arange(len(p)), :]
        return np.argmax(score, axis=1)


def posterior_best_response(spec: GameSpec) -> UninformedStrategy:
    if spec.kind != "payoff":
        raise SpecError(f"spec {spec.name!r} is not payoff-based")
    return UninformedStrategy("posterior_best_response")


@dataclass(frozen=True, eq=False)
class GameTranscript:
    realized: int  # 1-based
    path: np.ndarray  # (n+2, dim)
    u: np.ndarray
    v: np.ndarray
    stage: np.ndarray  # tau * l_i(t_k, u_k, v_k)
    total: float


@dataclass(frozen=True, eq=False)
class MatchResult:
    mean: float
    se: float
    count: int
    state_freq: np.ndarray  # empirical frequencies of the realized state
    state_mean: np.ndarray  # mean payoff over episodes with each state (NaN if none)
    decomposed: float  # sum_i freq_i * state_mean_i
    terminal_pairing: float  # mean of <p(T), int l>
    running_pairing: float  # mean of int <p(s), l>
    pairing_se: float  # standard error of their per-episode difference
    transcripts: list[GameTranscript] = field(default_factory=list)


def play_match(
    informed: InformedStrategy,
    uninformed: UninformedStrategy,
    count: int,
    seed: int,
    p0=None,
    keep: int = 5,
) -> MatchResult:
    """Episodes: draw i ~ p0, follow the conditional path, exchange controls per knot."""
    spec = informed.spec
    if spec.kind != "payoff":
        raise SpecError(f"not payoff-based: spec {spec.name!r} cannot stage matches")
    table = informed.table
    tg, grid = table.tgrid, table.grid
    if p0 is None:
        p0 = np.full(grid.dim, 1.0 / grid.dim)
    paths = sample_paths(informed.kernel, p0, count, seed, joint=True)
    state = paths.realized
    n, dim, tau = tg.n, grid.dim, tg.tau
    u01 = path_uniforms(seed, 0, count, n, salt=OPPONENT_SALT) if uninformed.kind == "uniform" else None
    acts = spec.actions
    cum = np.zeros((count, dim))  # int l_j for every j along the episode
    running = np.zeros(count)
    rows = np.arange(count)
    U = np.empty((count, n), dtype=np.int64)
    Vv = np.empty((count, n), dtype=np.int64)
    for k in range(n):
        L = spec.payoff_tensor(tg.knots[k])
        x = paths.nodes[:, k + 1]
        p = grid.points[x]
        u = informed.control(k, x).astype(np.int64)
        v = uninformed.respond(L, p, u, state, None if u01 is None else u01[:, k], acts.v_values)
        stage = tau * L[:, u, v].T  # (count, dim)
        cum += stage
        running += np.sum(p * stage, axis=1)
        U[:, k], Vv[:, k] = u, v
    payoff = cum[rows, state]
    terminal = cum[rows, paths.terminal]
    freq = np.bincount(state, minlength=dim) / count
    by_state = np.array([payoff[state == i].mean() if np.any(state == i) else np.nan for i in range(dim)])
    decomposed = float(np.nansum(freq * by_state))
    diff = terminal - running
    keep = min(keep, count)
    transcripts = []
    for j in range(keep):
        L_all = np.array([spec.payoff_tensor(t)[state[j], U[j, k], Vv[j, k]] for k, t in enumerate(tg.knots[:-1])])
        stage = tau * L_all
        transcripts.append(
            GameTranscript(
                int(state[j]) + 1,
                paths[j].p,
                acts.u_values[U[j]],
                acts.v_values[Vv[j]],
                stage,
                float(stage.sum()),
            )
        )
    se = float(payoff.std(ddof=1) / np.sqrt(count)) if count > 1 else float("nan")
    pse = float(diff.std(ddof=1) / np.sqrt(count)) if count > 1 else float("nan")
    return MatchResult(
        float(payoff.mean()),
        se,
        count,
        freq,
        by_state,
        decomposed,
        float(terminal.mean()),
        float(running.mean()),
        pse,
        transcripts,
    )
