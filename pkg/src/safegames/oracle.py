"""Independent brute-force verifiers for the solver's claims.

Everything here recomputes values from first principles: exact undiscounted
trajectory minima, exhaustive enumeration over deterministic policy pairs,
standalone discounted value iteration, Shapley-style iteration on the induced
game, and set iteration for the exact viability kernel.  These functions
share the game data model with the engines but none of their backup code.
"""

from __future__ import annotations

import itertools
from typing import Dict, Iterable, List, Tuple

import numpy as np

from . import matrix_game
from .errors import BudgetExceeded, MaxIterExceeded, NonMemberSuccessor
from .game import DetPolicy, GameSpec
from .safety import InvariantSet

ENUM_BUDGET = 10_000_000


def trajectory_min_constraint(spec: GameSpec, x0: int, u0: int, a0: int,
                              pi_h: DetPolicy, mu_h: DetPolicy) -> float:
    """Exact infinite-horizon minimum of h along the rollout from (x0,u0,a0).

    The deterministic orbit revisits a state within n_states steps, after
    which it repeats, so the minimum over the visited prefix is exact.
    """
    h = spec.constraint
    worst = float(h[x0])
    seen = {int(x0)}
    x = int(spec.transition[x0, u0, a0])
    while x not in seen:
        seen.add(x)
        worst = min(worst, float(h[x]))
        x = int(spec.transition[x, pi_h.action[x], mu_h.action[x]])
    return worst


def _closed_loop_orbit_min(spec: GameSpec, prot: np.ndarray, adv: np.ndarray) -> np.ndarray:
    """min of h over the orbit from each state under a fixed policy pair.

    Sweeping w <- min(h, w[g]) n_states times covers every state the orbit
    can reach before it cycles.
    """
    idx = np.arange(spec.n_states)
    g = spec.transition[idx, prot, adv]
    h = spec.constraint
    w = h.copy()
    for _ in range(spec.n_states):
        w = np.minimum(h, w[g])
    return w


def enumerate_optimal_safety(spec: GameSpec, budget: int = ENUM_BUDGET) -> np.ndarray:
    """Exact undiscounted optimal safety table by full policy enumeration.

    For every cell, max over deterministic protagonists of min over
    deterministic adversaries of the trajectory minimum.  Deterministic
    policies suffice for these values, which is what licenses the
    enumeration.  Raises BudgetExceeded when |U|^|X| * |A|^|X| > budget.
    """
    n_pairs = (spec.n_u ** spec.n_states) * (spec.n_a ** spec.n_states)
    if n_pairs > budget:
        raise BudgetExceeded(
            f"{n_pairs} policy pairs exceed the budget of {budget}")

    h = spec.constraint[:, None, None]
    best = np.full(spec.shape, -np.inf)
    for prot in itertools.product(range(spec.n_u), repeat=spec.n_states):
        prot = np.array(prot, dtype=np.int64)
        worst = np.full(spec.shape, np.inf)
        for adv in itertools.product(range(spec.n_a), repeat=spec.n_states):
            adv = np.array(adv, dtype=np.int64)
            w = _closed_loop_orbit_min(spec, prot, adv)
            vals = np.minimum(h, w[spec.transition])
            np.minimum(worst, vals, out=worst)
        np.maximum(best, worst, out=best)
    return best


def discounted_sweep(spec: GameSpec, gammas: Iterable[float],
                     tol: float = 1e-10,
                     max_iter: int = 2_000_000) -> Dict[float, np.ndarray]:
    """Standalone value iteration of the max-min safety backup per discount.

    Used to certify that the discounted fixed points approach the exact
    undiscounted values as the discount goes to 1.
    """
    h = spec.constraint[:, None, None]
    out: Dict[float, np.ndarray] = {}
    for gamma_h in gammas:
        if not (0.0 < gamma_h < 1.0):
            raise ValueError("each discount must lie strictly inside (0, 1)")
        q = np.zeros(spec.shape)
        for it in range(1, max_iter + 1):
            cont = q.min(axis=2).max(axis=1)
            q_next = (1.0 - gamma_h) * h + gamma_h * np.minimum(h, cont[spec.transition])
            residual = float(np.abs(q_next - q).max())
            q = q_next
            if residual <= tol:
                break
        else:
            raise MaxIterExceeded(
                f"discount {gamma_h}: residual {residual:.3e} after {max_iter} sweeps",
                residual=residual, iterations=max_iter)
        out[float(gamma_h)] = q
    return out


def solve_induced_game(spec: GameSpec, inv: InvariantSet,
                       tol: float = 1e-10, max_iter: int = 100_000) -> np.ndarray:
    """Solve the restricted game from scratch by Shapley iteration.

    Builds the induced game (member states, admissible rows) explicitly and
    iterates per-state matrix-game values to a fixed point.  Only member
    rows with admissible actions are meaningful in the returned table; other
    cells are zero.
    """
    members = np.flatnonzero(inv.member)
    rows = {int(x): inv.admissible_actions(x) for x in members}
    for x in members:
        for u in rows[int(x)]:
            succ = spec.transition[x, u, :]
            if not inv.member[succ].all():
                bad = succ[~inv.member[succ]][0]
                raise NonMemberSuccessor(
                    f"admissible action {u} at member state {x} reaches "
                    f"non-member state {bad}")

    values = np.zeros(spec.n_states)
    for it in range(1, max_iter + 1):
        new_values = values.copy()
        for x in members:
            r = rows[int(x)]
            payoff = spec.reward[x, r, :] + spec.gamma * values[spec.transition[x, r, :]]
            sol = matrix_game.solve(
                matrix_game.RestrictedMatrixGame(payoff, np.arange(r.size)))
            new_values[x] = sol.value
        residual = float(np.abs(new_values - values).max())
        values = new_values
        if residual <= tol:
            break
    else:
        raise MaxIterExceeded(
            f"induced game residual {residual:.3e} after {max_iter} sweeps",
            residual=residual, iterations=max_iter)

    q = np.zeros(spec.shape)
    for x in members:
        for u in rows[int(x)]:
            succ = spec.transition[x, u, :]
            q[x, u, :] = spec.reward[x, u, :] + spec.gamma * values[succ]
    return q


def viability_kernel(spec: GameSpec) -> np.ndarray:
    """Exact maximal robust invariant set by set iteration.

    Starting from the constraint set, repeatedly discard states with no
    action whose every adversary outcome stays inside; on a finite state
    space this stabilizes within n_states rounds and is exact for the
    undiscounted game, at any size.
    """
    safe = spec.constraint >= 0.0
    while True:
        stays = safe[spec.transition].all(axis=2).any(axis=1)
        keep = safe & stays
        if (keep == safe).all():
            return keep
        safe = keep


def find_invariance_violations(spec: GameSpec, inv: InvariantSet
                               ) -> Tuple[List[Tuple[int, int, int, int]], int]:
    """Exhaustive search for exits from the member set.

    Breadth-first from every member state, following every admissible
    protagonist action against every adversary action.  Returns the list of
    violating transitions (x, u, a, successor) and the number of transitions
    explored.
    """
    violations: List[Tuple[int, int, int, int]] = []
    explored = 0
    members = np.flatnonzero(inv.member)
    for root in members:
        frontier = [int(root)]
        visited = {int(root)}
        while frontier:
            x = frontier.pop(0)
            for u in inv.admissible_actions(x):
                for a in range(spec.n_a):
                    y = int(spec.transition[x, u, a])
                    explored += 1
                    if not inv.member[y]:
                        violations.append((x, int(u), a, y))
                    elif y not in visited:
                        visited.add(y)
                        frontier.append(y)
    return violations, explored
