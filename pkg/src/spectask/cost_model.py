"""Parametric non-negative transition costs c(x, u) over binary features.

Feature vector for a state-control pair: one-hot agent position, heading,
carried object, control, a 3x3 egocentric window of cell codes (rotated so
the agent faces "up"), a few faced-cell indicator bits, and a bias. Both
model kinds squash their raw output through softplus and add a small floor
so every edge cost is strictly positive (Dijkstra needs that).
"""

from __future__ import annotations

import json

import numpy as np

from . import gridworld as gw

N_CELL_CODES = 8
_FIXED_DIM = 4 + 4 + 6 + 9 * N_CELL_CODES + 6 + 1  # everything but the position block

IND_FACES_KEY = 0
IND_FACES_DOOR_CLOSED = 1
IND_FACES_DOOR_OPEN = 2
IND_FACES_GOAL = 3
IND_FACES_WALL = 4
IND_CARRYING_KEY = 5

_FACED_IND = {
    gw.KEY: IND_FACES_KEY,
    gw.DOOR_CLOSED: IND_FACES_DOOR_CLOSED,
    gw.DOOR_OPEN: IND_FACES_DOOR_OPEN,
    gw.GOAL: IND_FACES_GOAL,
    gw.WALL: IND_FACES_WALL,
}


def feature_dim(task):
    return task.height * task.width + _FIXED_DIM


def feature_indices(state, control):
    """Active feature indices for (state, control); all features are 0/1."""
    h, w = state.h, state.w
    hw = h * w
    r, c = state.pos
    idx = [
        r * w + c,
        hw + state.dir,
        hw + 4 + state.carried,
        hw + 8 + control,
    ]
    fwd = gw.DIR_VEC[state.dir]
    right = gw.DIR_VEC[(state.dir + 3) % 4]
    base = hw + 14
    for wi in range(3):
        a = 1 - wi  # row 0 of the window is one step ahead
        for wj in range(3):
            b = wj - 1
            rr = r + a * fwd[0] + b * right[0]
            cc = c + a * fwd[1] + b * right[1]
            if 0 <= rr < h and 0 <= cc < w:
                code = state.grid[rr * w + cc]
            else:
                code = gw.WALL
            idx.append(base + (wi * 3 + wj) * N_CELL_CODES + code)
    ind_base = hw + 14 + 72
    fr, fc = state.facing()
    if 0 <= fr < h and 0 <= fc < w:
        faced = state.grid[fr * w + fc]
    else:
        faced = gw.WALL
    if faced in _FACED_IND:
        idx.append(ind_base + _FACED_IND[faced])
    if state.carried == gw.CARRY_KEY:
        idx.append(ind_base + IND_CARRYING_KEY)
    idx.append(hw + _FIXED_DIM - 1)  # bias
    return idx


def phi(state, control, dim):
    """Dense feature vector (mostly for gradient checks and small tests)."""
    v = np.zeros(dim)
    v[feature_indices(state, control)] = 1.0
    return v


def _softplus(z):
    return np.logaddexp(0.0, z)


def _sigmoid(z):
    out = np.empty_like(np.asarray(z, dtype=float))
    z = np.asarray(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class LinearSoftplusCost:
    """cost(x, u) = softplus(theta . phi(x, u)) + epsilon_floor."""

    kind = "linear"

    def __init__(self, dim, epsilon_floor=1e-3):
        self.dim = dim
        self.theta = np.zeros(dim)
        self.epsilon_floor = epsilon_floor
        self.version = 0

    @property
    def n_params(self):
        return self.dim

    def bump(self):
        self.version += 1

    def _z(self, state, control):
        return float(self.theta[feature_indices(state, control)].sum())

    def cost(self, state, control):
        return float(_softplus(self._z(state, control))) + self.epsilon_floor

    def cost_grad(self, state, control):
        g = np.zeros(self.dim)
        g[feature_indices(state, control)] = _sigmoid(self._z(state, control))
        return g

    def cost_batch(self, Phi):
        return _softplus(Phi @ self.theta) + self.epsilon_floor

    def cost_from_indices(self, idx):
        """Cost for one feature row given its active indices."""
        return float(_softplus(self.theta[idx].sum())) + self.epsilon_floor

    def grad_weighted(self, Phi, coeffs):
        """sum_i coeffs[i] * d cost(phi_i) / d theta."""
        s = _sigmoid(Phi @ self.theta)
        return np.asarray(Phi.T @ (coeffs * s)).reshape(-1)


class MlpCost:
    """Two hidden layers (32, 16) with ReLU, softplus output, cost floor."""

    kind = "mlp"
    hidden = (32, 16)

    def __init__(self, dim, seed=0, epsilon_floor=1e-3):
        self.dim = dim
        self.epsilon_floor = epsilon_floor
        self.version = 0
        h1, h2 = self.hidden
        n = h1 * dim + h1 + h2 * h1 + h2 + h2 + 1
        rng = np.random.default_rng(seed)
        self.theta = rng.uniform(-0.1, 0.1, size=n)
        self._bind_views()

    def _bind_views(self):
        h1, h2 = self.hidden
        d = self.dim
        t = self.theta
        o = 0
        self.W1 = t[o : o + h1 * d].reshape(h1, d); o += h1 * d
        self.b1 = t[o : o + h1]; o += h1
        self.W2 = t[o : o + h2 * h1].reshape(h2, h1); o += h2 * h1
        self.b2 = t[o : o + h2]; o += h2
        self.w3 = t[o : o + h2]; o += h2
        self.b3 = t[o : o + 1]

    @property
    def n_params(self):
        return self.theta.size

    def bump(self):
        self.version += 1

    def _forward_dense(self, x):
        z1 = self.W1 @ x + self.b1
        a1 = np.maximum(z1, 0.0)
        z2 = self.W2 @ a1 + self.b2
        a2 = np.maximum(z2, 0.0)
        z3 = float(self.w3 @ a2 + self.b3[0])
        return z1, a1, z2, a2, z3

    def cost(self, state, control):
        x = phi(state, control, self.dim)
        z3 = self._forward_dense(x)[4]
        return float(_softplus(z3)) + self.epsilon_floor

    def cost_grad(self, state, control):
        x = phi(state, control, self.dim)
        z1, a1, z2, a2, z3 = self._forward_dense(x)
        g3 = float(_sigmoid(z3))
        d_w3 = g3 * a2
        d_b3 = g3
        g2 = g3 * self.w3 * (z2 > 0)
        d_W2 = np.outer(g2, a1)
        d_b2 = g2
        g1 = (g2 @ self.W2) * (z1 > 0)
        d_W1 = np.outer(g1, x)
        d_b1 = g1
        return np.concatenate(
            [d_W1.reshape(-1), d_b1, d_W2.reshape(-1), d_b2, d_w3, [d_b3]]
        )

    def _forward_batch(self, Phi):
        Z1 = np.asarray(Phi @ self.W1.T) + self.b1
        A1 = np.maximum(Z1, 0.0)
        Z2 = A1 @ self.W2.T + self.b2
        A2 = np.maximum(Z2, 0.0)
        Z3 = A2 @ self.w3 + self.b3[0]
        return Z1, A1, Z2, A2, Z3

    def cost_batch(self, Phi):
        Z3 = self._forward_batch(Phi)[4]
        return _softplus(Z3) + self.epsilon_floor

    def grad_weighted(self, Phi, coeffs):
        Z1, A1, Z2, A2, Z3 = self._forward_batch(Phi)
        g3 = coeffs * _sigmoid(Z3)
        d_w3 = A2.T @ g3
        d_b3 = float(g3.sum())
        G2 = np.outer(g3, self.w3) * (Z2 > 0)
        d_W2 = G2.T @ A1
        d_b2 = G2.sum(axis=0)
        G1 = (G2 @ self.W2) * (Z1 > 0)
        d_W1 = np.asarray((Phi.T @ G1).T)
        d_b1 = G1.sum(axis=0)
        return np.concatenate(
            [d_W1.reshape(-1), d_b1, d_W2.reshape(-1), d_b2, d_w3, [d_b3]]
        )


class UnitCost:
    """Ground-truth expert cost: 1 for every transition."""

    kind = "unit"
    version = 0
    epsilon_floor = 1.0

    def cost(self, state, control):
        return 1.0

    def cost_batch(self, Phi):
        return np.ones(Phi.shape[0])


def init_cost_model(kind, task, seed=0):
    """Fresh model; the linear model starts at theta = 0 (uniform costs)."""
    dim = feature_dim(task)
    if kind == "linear":
        return LinearSoftplusCost(dim)
    if kind == "mlp":
        return MlpCost(dim, seed=seed)
    raise ValueError(f"unknown cost model kind {kind!r}")


def save_cost_model(path, model):
    obj = {
        "kind": model.kind,
        "feature_dim": model.dim,
        "theta": model.theta.tolist(),
        "layers": list(getattr(model, "hidden", ())),
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(obj, f)
        f.write("\n")


def load_cost_model(path):
    with open(path, "r", encoding="utf-8") as f:
        obj = json.load(f)
    if obj["kind"] == "linear":
        model = LinearSoftplusCost(int(obj["feature_dim"]))
        model.theta[:] = obj["theta"]
        return model
    if obj["kind"] == "mlp":
        model = MlpCost(int(obj["feature_dim"]))
        if tuple(obj["layers"]) != model.hidden:
            raise ValueError(f"unsupported mlp layout {obj['layers']}")
        model.theta[:] = obj["theta"]
        return model
    raise ValueError(f"unknown cost model kind {obj['kind']!r}")
