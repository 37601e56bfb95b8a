"""Deterministic shortest-path planning on the product of grid and automaton.

Product nodes pair a GridState with the automaton memory (for a WFA: the
hidden alpha vector, deduplicated after rounding to 1e-9, plus the last
compressed symbol). Nodes are interned to dense ints and their successors
and feature rows are computed once, so repeated searches over the same
region only pay for the Dijkstra loop itself. Edge costs are refreshed
lazily per entry when the cost parameters change (the MLP model refreshes
in one vectorized pass instead; per-entry forward passes are too slow).

Optimal values are memoized along every returned path (suffixes of optimal
paths are optimal); a later search may complete through a memoized node
once the frontier cost proves no cheaper completion exists. The memo is
dropped whenever the cost parameters change.

Determinism: the priority queue orders by (distance, insertion counter) and
successors are pushed in canonical control order, so ties resolve to the
canonically first optimal path; stale heap entries are skipped lazily.
"""

from __future__ import annotations

from array import array
from dataclasses import dataclass
from heapq import heappop, heappush

import numpy as np
from scipy.sparse import csr_matrix

from . import gridworld as gw
from .automaton import WfaState
from .cost_model import feature_indices

INF_Q = 1e18

_ALPHA_DECIMALS = 9


class UnreachableError(RuntimeError):
    """No accepting product state was reached within the expansion budget."""

    def __init__(self, expansions):
        super().__init__(f"no accepting state reachable ({expansions} expansions)")
        self.expansions = expansions


@dataclass(frozen=True)
class PlanLimits:
    max_expansions: int = 200_000


@dataclass
class PlanResult:
    value: float
    path: list  # [(GridState, control), ...]
    expansions: int


@dataclass
class QEntry:
    q: float
    path: list | None  # None when acceptance is unreachable for this control
    entry_ids: list | None


class GoalAutomaton:
    """Memory-free acceptance: the agent stands on the goal cell."""

    def initial_key(self):
        return (0, None)

    def step_key(self, key, sigma):
        return key

    def is_accepting(self, key, grid):
        return grid.at_goal()


class WfaAutomaton:
    """Wraps a WFA as search memory with interned, rounded hidden states."""

    def __init__(self, wfa, xi=None):
        self.wfa = wfa
        self.xi = wfa.xi if xi is None else xi
        self._alphas = []
        self._ids = {}
        self._accept = []
        self._steps = {}
        self._a0 = self._intern_alpha(wfa.alpha0)

    def _intern_alpha(self, alpha):
        key = tuple(np.round(alpha, _ALPHA_DECIMALS).tolist())
        aid = self._ids.get(key)
        if aid is None:
            aid = len(self._alphas)
            self._ids[key] = aid
            self._alphas.append(alpha)
            self._accept.append(float(alpha @ self.wfa.beta) >= self.xi)
        return aid

    def initial_key(self):
        return (self._a0, None)

    def step_key(self, key, sigma):
        aid, last = key
        if sigma == last:
            return key
        nxt = self._steps.get((aid, sigma))
        if nxt is None:
            nxt = self._intern_alpha(self.wfa.matrix(sigma).T @ self._alphas[aid])
            self._steps[(aid, sigma)] = nxt
        return (nxt, sigma)

    def is_accepting(self, key, grid):
        return self._accept[key[0]]

    def key_of(self, state: WfaState):
        return (self._intern_alpha(state.alpha), state.last_symbol)

    def state_of(self, key):
        return WfaState(self._alphas[key[0]], key[1])


class ProductPlanner:
    """Dijkstra planner over the product space of one task and automaton.

    One instance may serve many environment instances of the same task:
    states from different grids never collide, so they share the interned
    node space and cost entries. Cost entry ids are `6 * node + control`.
    """

    def __init__(self, task, automaton, model, limits=None):
        self.task = task
        self.automaton = automaton
        self.model = model
        self.limits = limits or PlanLimits()
        self._grid_ids = {}  # GridState -> gid (canonical object kept as dict key)
        self._grid_objs = []
        self._ids = {}  # (gid, aid, last_symbol) -> node id
        self._grids = []  # node id -> canonical GridState
        self._akeys = []
        self._accepting = []
        self._succs = []  # flat, 6 slots per node; unexpanded nodes hold None
        self._ebase = []  # node id -> first cost-entry id, -1 until expanded
        self._feat = array("h")  # flat feature indices for entries, in id order
        self._feat_ptr = array("q", [0])
        self._feat_np = np.frombuffer(self._feat, dtype=np.int16) if self._feat else None
        self._cost_val = array("d")
        self._cost_ver = array("i")
        self._cver = 0
        self._model_version = model.version
        self._lazy = model.kind != "mlp"
        self._csr_cache = None
        self._memo = {}

    # -- graph ----------------------------------------------------------

    def _intern_grid(self, grid):
        gid = self._grid_ids.get(grid)
        if gid is None:
            gid = len(self._grid_objs)
            self._grid_ids[grid] = gid
            self._grid_objs.append(grid)
        return gid

    def _intern(self, gid, akey):
        key = (gid, akey[0], akey[1])
        nid = self._ids.get(key)
        if nid is None:
            nid = len(self._grids)
            self._ids[key] = nid
            grid = self._grid_objs[gid]
            self._grids.append(grid)
            self._akeys.append(akey)
            self._accepting.append(self.automaton.is_accepting(akey, grid))
            self._succs.extend((None, None, None, None, None, None))
            self._ebase.append(-1)
        return nid

    def _expand(self, nid):
        self._feat_np = None  # release the buffer export before extending
        self._csr_cache = None
        grid = self._grids[nid]
        akey = self._akeys[nid]
        base = nid * 6
        ebase = len(self._cost_val)
        self._ebase[nid] = ebase
        for u in range(gw.N_CONTROLS):
            nxt = gw.step(self.task, grid, u)
            sigma = gw.ap_bits(self.task, nxt)
            sid = self._intern(self._intern_grid(nxt), self.automaton.step_key(akey, sigma))
            self._succs[base + u] = sid
            self._feat.extend(feature_indices(grid, u))
            self._feat_ptr.append(len(self._feat))
            self._cost_val.append(0.0)
            self._cost_ver.append(-1)
        if not self._lazy:
            # the MLP keeps all entry costs current rather than lazily stamped
            vals = self.model.cost_batch(
                self.feature_rows(range(ebase, ebase + gw.N_CONTROLS))
            )
            for k in range(gw.N_CONTROLS):
                self._cost_val[ebase + k] = vals[k]

    def node_id(self, grid, astate=None):
        if astate is None:
            akey = self.automaton.initial_key()
        elif isinstance(astate, WfaState):
            akey = self.automaton.key_of(astate)
        else:
            akey = astate
        return self._intern(self._intern_grid(grid), akey)

    def _expanded(self, nid):
        return self._succs[nid * 6] is not None

    # -- edge costs -------------------------------------------------------

    def _sync_model(self):
        if self.model.version != self._model_version:
            self._model_version = self.model.version
            self._cver += 1
            self._memo.clear()
            if not self._lazy and self._cost_val:
                vals = self.model.cost_batch(self._entry_csr())
                fresh = array("d")
                fresh.frombytes(np.asarray(vals, dtype=np.float64).tobytes())
                self._cost_val = fresh

    def reset_memo(self):
        self._memo.clear()

    def _feat_view(self):
        if self._feat_np is None or self._feat_np.size != len(self._feat):
            self._feat_np = (
                np.frombuffer(self._feat, dtype=np.int16)
                if len(self._feat)
                else np.empty(0, dtype=np.int16)
            )
        return self._feat_np

    def _entry_csr(self):
        n = len(self._cost_val)
        if self._csr_cache is None or self._csr_cache.shape[0] != n:
            self._csr_cache = csr_matrix(
                (
                    np.ones(len(self._feat)),
                    self._feat_view().astype(np.int32),
                    np.frombuffer(self._feat_ptr, dtype=np.int64),
                ),
                shape=(n, self.model.dim),
            )
        return self._csr_cache

    def _fresh_cost(self, eid):
        # lazy single-entry refresh (linear / unit models)
        if self.model.kind == "unit":
            v = 1.0
        else:
            fv = self._feat_view()
            v = self.model.cost_from_indices(
                fv[self._feat_ptr[eid] : self._feat_ptr[eid + 1]]
            )
        self._cost_val[eid] = v
        self._cost_ver[eid] = self._cver
        return v

    def _edge_cost_fn(self):
        """Returns a local edge-cost accessor bound to the current snapshot."""
        self._sync_model()
        if not self._lazy:
            # MLP entry values are always current (filled at expansion / bump)
            return lambda eid: self._cost_val[eid]
        cost_val = self._cost_val
        cost_ver = self._cost_ver
        cver = self._cver
        fresh = self._fresh_cost

        def get(eid):
            if cost_ver[eid] == cver:
                return cost_val[eid]
            return fresh(eid)

        return get

    def feature_rows(self, entry_ids):
        """Sparse feature matrix for the given cost entries (training helper)."""
        fv = self._feat_view()
        ptr = self._feat_ptr
        chunks = [fv[ptr[e] : ptr[e + 1]] for e in entry_ids]
        indptr = np.zeros(len(entry_ids) + 1, dtype=np.int64)
        np.cumsum([c.size for c in chunks], out=indptr[1:])
        indices = (
            np.concatenate(chunks).astype(np.int32)
            if chunks
            else np.empty(0, dtype=np.int32)
        )
        return csr_matrix(
            (np.ones(indices.size), indices, indptr),
            shape=(len(entry_ids), self.model.dim),
        )

    # -- search -----------------------------------------------------------

    def _memo_chain(self, nid):
        edges = []
        while not self._accepting[nid]:
            _, u, sid = self._memo[nid]
            edges.append((nid, u, self._ebase[nid] + u))
            nid = sid
        return edges

    def _record(self, edges, edge_cost):
        # memoize exact cost-to-go along an optimal path (suffix sums)
        v = 0.0
        nxt = None
        for nid, u, eid in reversed(edges):
            sid = nxt if nxt is not None else self._succs[nid * 6 + u]
            v = edge_cost(eid) + v
            if nid not in self._memo:
                self._memo[nid] = (v, u, sid)
            nxt = nid
        return v

    def _plan_edges(self, start_id):
        """Dijkstra; returns (value, [(node, ctrl, entry)...], expansions)."""
        if self._accepting[start_id]:
            return 0.0, [], 0
        edge_cost = self._edge_cost_fn()
        hit = self._memo.get(start_id)
        if hit is not None:
            return hit[0], self._memo_chain(start_id), 0
        max_exp = self.limits.max_expansions
        succs = self._succs
        accepting = self._accepting
        memo = self._memo
        dist = {start_id: 0.0}
        parent = {}
        heap = [(0.0, 0, start_id)]
        counter = 1
        settled = set()
        best_val = None
        best_node = None
        expansions = 0
        while heap:
            d, _, nid = heappop(heap)
            if nid in settled:
                continue
            if best_val is not None and d >= best_val:
                break
            settled.add(nid)
            expansions += 1
            if expansions > max_exp:
                raise UnreachableError(expansions)
            if accepting[nid]:
                edges = self._backtrack(parent, start_id, nid)
                return self._record(edges, edge_cost), edges, expansions
            hit = memo.get(nid)
            if hit is not None:
                cand = d + hit[0]
                if best_val is None or cand < best_val:
                    best_val = cand
                    best_node = nid
                continue
            base = nid * 6
            if succs[base] is None:
                self._expand(nid)
            ebase = self._ebase[nid]
            for u in range(gw.N_CONTROLS):
                sid = succs[base + u]
                if sid == nid or sid in settled:
                    continue
                nd = d + edge_cost(ebase + u)
                old = dist.get(sid)
                if old is None or nd < old:
                    dist[sid] = nd
                    parent[sid] = (nid, u)
                    heappush(heap, (nd, counter, sid))
                    counter += 1
        if best_val is not None:
            edges = self._backtrack(parent, start_id, best_node)
            edges.extend(self._memo_chain(best_node))
            return self._record(edges, edge_cost), edges, expansions
        raise UnreachableError(expansions)

    def _backtrack(self, parent, start_id, nid):
        edges = []
        while nid != start_id:
            prev, u = parent[nid]
            edges.append((prev, u, self._ebase[prev] + u))
            nid = prev
        edges.reverse()
        return edges

    # -- public API ---------------------------------------------------------

    def plan_value(self, grid, astate=None):
        """Optimal cost-to-acceptance and one optimal path from (grid, astate)."""
        start = self.node_id(grid, astate)
        value, edges, expansions = self._plan_edges(start)
        path = [(self._grids[nid], u) for nid, u, _ in edges]
        return PlanResult(value, path, expansions)

    def q_values(self, grid, astate=None):
        """Q(x, u) and the optimal path achieving it, for every control."""
        start = self.node_id(grid, astate)
        if not self._expanded(start):
            self._expand(start)
        edge_cost = self._edge_cost_fn()
        out = {}
        for u in range(gw.N_CONTROLS):
            sid = self._succs[start * 6 + u]
            eid = self._ebase[start] + u
            try:
                v, edges, _ = self._plan_edges(sid)
            except UnreachableError:
                out[u] = QEntry(INF_Q, None, None)
                continue
            path = [(self._grids[start], u)] + [(self._grids[n], c) for n, c, _ in edges]
            entry_ids = [eid] + [e for _, _, e in edges]
            out[u] = QEntry(edge_cost(eid) + v, path, entry_ids)
        return out
