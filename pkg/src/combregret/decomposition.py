"""Writing a point of Conv(A) as a distribution over vertices.

Greedy peeling: pick a vertex on the smallest face containing the current
residual point, remove as much of it as the constraints allow, and repeat.
Each removal makes at least one more inequality tight, so the vertices found
are affinely independent and there are at most d + 1 of them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .action_sets import ActionSet


class DecompositionError(ValueError):
    pass


@dataclass
class VertexDistribution:
    atoms: np.ndarray  # (k, d) int8 vertices, in construction order
    probs: np.ndarray  # (k,)

    def __len__(self):
        return len(self.probs)

    def mean(self) -> np.ndarray:
        return self.probs @ self.atoms

    def sample(self, rng) -> np.ndarray:
        """Inverse-CDF draw over the atoms in construction order."""
        u = rng.random()
        i = int(np.searchsorted(np.cumsum(self.probs), u, side="right"))
        return self.atoms[min(i, len(self.probs) - 1)].copy()

    def items(self):
        return [(tuple(int(v) for v in a), float(p)) for a, p in zip(self.atoms, self.probs)]


def peel(aset: ActionSet, x, tol: float = 1e-12, max_atoms: int | None = None):
    """Yield (vertex, weight) pairs whose weights sum to one and whose mean is x.

    Works on the unnormalised residual r = x - sum of peeled p * v, whose
    remaining mass is 1 - sum p.  Tightness is judged on r with an absolute
    tolerance, so round-off is never magnified by dividing by a small mass.
    """
    cs = aset.constraints()
    G, h = cs.A_ub, cs.b_ub
    r = np.asarray(x, dtype=float).copy()
    scale = 1.0 / (2.0 * (np.abs(r).sum() + 1.0))
    mass = 1.0
    limit = max_atoms or 4 * (aset.d + 1)
    for _ in range(limit):
        slack = mass * h - G @ r
        tight = slack <= tol
        # the tight rows dominate the direction; -r only breaks ties toward heavy coordinates
        direction = -G[tight].sum(axis=0) - (scale / mass) * r
        v = aset.linear_minimize(direction)
        vslack = h - G @ v
        movable = vslack > 0
        if not movable.any():
            yield v, mass
            return
        step = float(np.min(np.maximum(slack[movable], 0.0) / vslack[movable]))
        if step >= mass * (1.0 - 1e-12) or np.max(np.abs(r - mass * v)) <= 1e-10:
            yield v, mass
            return
        if step <= 0.0:
            raise DecompositionError("peeling stalled: vertex off the minimal face")
        yield v, step
        mass -= step
        r = r - step * v
    raise DecompositionError(f"peeling did not finish within {limit} atoms")


def decompose(aset: ActionSet, x, tol: float = 1e-9) -> VertexDistribution:
    """Distribution p on A with sum_a p(a) a = x and at most d + 1 atoms."""
    x = np.asarray(x, dtype=float)
    viol = aset.constraints().max_violation(x)
    if viol > tol:
        raise DecompositionError(f"point is not in Conv(A) (violation {viol:.3e})")
    merged: dict[bytes, list] = {}
    for v, p in peel(aset, x):
        key = v.tobytes()
        if key in merged:
            merged[key][1] += p
        else:
            merged[key] = [v, p]
    atoms = np.array([v for v, _ in merged.values()], dtype=np.int8)
    probs = np.array([p for _, p in merged.values()])
    atoms, probs = _reduce(atoms, probs, x)
    return VertexDistribution(atoms, _polish(atoms, probs, x))


def _polish(atoms, probs, x):
    """Re-solve the weights exactly on the chosen support to remove peeling round-off."""
    M = np.vstack([atoms.T.astype(float), np.ones(len(probs))])
    rhs = np.concatenate([x, [1.0]])
    sol, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    if np.all(sol >= -1e-12) and np.max(np.abs(M @ sol - rhs)) <= np.max(np.abs(M @ probs - rhs)):
        sol = np.clip(sol, 0.0, None)
        return sol / sol.sum()
    return probs / probs.sum()


def _reduce(atoms, probs, x):
    """Caratheodory reduction when round-off produced more than d + 1 atoms."""
    d = atoms.shape[1]
    while len(probs) > d + 1:
        M = np.vstack([atoms.T.astype(float), np.ones(len(probs))])
        null = np.linalg.svd(M)[2][-1]
        if not np.any(null > 0):
            null = -null
        pos = null > 0
        step = np.min(probs[pos] / null[pos])
        probs = probs - step * null
        keep = probs > 1e-15
        atoms, probs = atoms[keep], probs[keep]
    return atoms, probs


def sample_vertex(aset: ActionSet, x, rng) -> np.ndarray:
    """Draw from the peeling distribution of x, stopping once the CDF passes u.

    Equivalent to ``decompose(aset, x).sample(rng)`` up to the final least
    squares polish, but only builds the atoms it needs.
    """
    u = rng.random()
    acc = 0.0
    last = None
    for v, p in peel(aset, x):
        acc += p
        last = v
        if u < acc:
            return v.copy()
    return last.copy()
