"""Small tabular MDPs with exact answers, for checking bounds and estimators.

States and actions are integers. Rewards R[s, a] lie in [0, r_max]; with
``bernoulli=True`` the realized reward is a Bernoulli draw scaled by r_max,
which keeps the same mean.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class ToyOutcome:
    next_state: int
    reward: float
    events: dict


class TabularMdp:
    deterministic = False

    def __init__(self, rewards, transitions, gamma: float = 0.9, r_max: float = 1.0, bernoulli: bool = False):
        R = np.asarray(rewards, dtype=float)
        P = np.asarray(transitions, dtype=float)
        if R.ndim != 2 or P.shape != R.shape + (R.shape[0],):
            raise ValueError("need R of shape (S, A) and P of shape (S, A, S)")
        if not np.allclose(P.sum(axis=2), 1.0) or (P < 0).any():
            raise ValueError("transition rows must be probability vectors")
        if (R < 0).any() or (R > r_max).any():
            raise ValueError("rewards must lie in [0, r_max]")
        if not 0.0 < gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        self.R, self.P = R, P
        self.gamma = gamma
        self.r_max = r_max
        self.bernoulli = bernoulli
        self._cum = np.cumsum(P, axis=2)

    @property
    def n_states(self) -> int:
        return self.R.shape[0]

    @property
    def n_actions(self) -> int:
        return self.R.shape[1]

    # planner interface
    def legal_actions(self, s):
        return list(range(self.n_actions))

    @staticmethod
    def action_sig(a) -> str:
        return f"a{a}"

    @staticmethod
    def state_key(s) -> str:
        return f"s{s}"

    def is_terminal(self, s) -> bool:
        return False

    def step(self, s, a, rng) -> ToyOutcome:
        u = rng.random()
        s2 = int(np.searchsorted(self._cum[s, a], u, side="right"))
        s2 = min(s2, self.n_states - 1)
        r = self.R[s, a]
        if self.bernoulli:
            r = self.r_max * float(rng.random() < r / self.r_max)
        return ToyOutcome(s2, float(r), {})

    def default_action(self, s, rng):
        return int(rng.integers(self.n_actions))

    # distance interface
    def reward_of(self, s, a) -> float:
        return float(self.R[s, a])

    def prob(self, s, a, s2) -> float:
        return float(self.P[s, a, s2])

    def q_values(self, tol: float = 1e-12) -> np.ndarray:
        """Optimal Q by value iteration."""
        q = np.zeros_like(self.R)
        while True:
            new = self.R + self.gamma * self.P @ q.max(axis=1)
            if np.abs(new - q).max() < tol:
                return new
            q = new


def random_tabular(rng, n_states: int, n_actions: int, gamma: float = 0.9, bernoulli: bool = False) -> TabularMdp:
    R = rng.random((n_states, n_actions))
    P = rng.dirichlet(np.ones(n_states), size=(n_states, n_actions))
    return TabularMdp(R, P, gamma, bernoulli=bernoulli)


def perturbed(m: TabularMdp, rng, scale: float) -> TabularMdp:
    """Mix rewards and transitions toward random ones with weight ``scale``."""
    R = np.clip((1 - scale) * m.R + scale * rng.random(m.R.shape), 0.0, m.r_max)
    P = (1 - scale) * m.P + scale * rng.dirichlet(np.ones(m.n_states), size=m.R.shape)
    return TabularMdp(R, P, m.gamma, m.r_max, m.bernoulli)


def exact_distance(m1: TabularMdp, m2: TabularMdp, kappa: float = 1.0, weights=None) -> float:
    """E_U[|R - R'| + kappa |P - P'|] with U over (s, a, s') triples, uniform by default."""
    dr = np.abs(m1.R - m2.R)[:, :, None]
    dp = np.abs(m1.P - m2.P)
    terms = dr + kappa * dp
    if weights is None:
        return float(terms.mean())
    w = np.asarray(weights, dtype=float)
    return float((w * terms).sum() / w.sum())


def uniform_samples(m: TabularMdp, n: int, rng) -> list[tuple]:
    """(s, a, s', pi, U) with behavior equal to the uniform reference."""
    S, A = m.n_states, m.n_actions
    p = 1.0 / (S * A * S)
    idx = rng.integers(0, [S, A, S], size=(n, 3))
    return [(int(s), int(a), int(s2), p, p) for s, a, s2 in idx]


def behavior_samples(m: TabularMdp, n: int, rng, behavior) -> list[tuple]:
    """Triples drawn from a known behavior table (S, A, S); U stays uniform."""
    b = np.asarray(behavior, dtype=float)
    b = b / b.sum()
    S, A = m.n_states, m.n_actions
    flat = rng.choice(b.size, size=n, p=b.ravel())
    u = 1.0 / b.size
    out = []
    for f in flat:
        s, rest = divmod(int(f), A * S)
        a, s2 = divmod(rest, S)
        out.append((s, a, s2, float(b[s, a, s2]), u))
    return out


def two_armed_bandit(p_good: float = 0.75, gap: float = 0.5, gamma: float = 0.5) -> TabularMdp:
    """One state, two arms with Bernoulli rewards p_good and p_good - gap."""
    R = np.array([[p_good, p_good - gap]])
    P = np.ones((1, 2, 1))
    return TabularMdp(R, P, gamma, bernoulli=True)
