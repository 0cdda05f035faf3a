"""Force-directed 2D layout with Barnes-Hut-approximated repulsion.

Forces are charge (n-body repulsion, approximated through a quadtree),
springs along edges toward a rest length, and centering toward the origin.
A direct O(n^2) summation oracle is provided for validation; theta=0 makes
the approximation open every cell and reproduce the oracle.

Single-threaded and bit-deterministic for a fixed seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from casegraph.errors import ValidationError

EPSILON = 1e-3  # minimum-distance clamp against singular forces
_MAX_DEPTH = 48


@dataclass
class LayoutParams:
    charge: float = -30.0  # < 0 repels
    link_strength: float = 0.1
    rest_length: float = 30.0
    centering: float = 0.05
    theta: float = 0.5
    step_size: float = 1.0
    velocity_decay: float = 0.6
    iterations: int = 300
    seed: int = 0

    def __post_init__(self):
        if self.theta < 0:
            raise ValidationError("theta must be >= 0")
        if not 0 < self.velocity_decay < 1:
            raise ValidationError("velocity_decay must be in (0, 1)")
        if self.step_size <= 0:
            raise ValidationError("step_size must be > 0")
        if self.iterations < 0:
            raise ValidationError("iterations must be >= 0")


@dataclass
class QuadTree:
    """Array-encoded quadtree over point positions, one unit of mass per point.

    Aggregates (count, position sums) are accumulated during insertion, so
    mass conservation holds by construction; tests assert it level by level.
    """

    child: np.ndarray  # (cap, 4) int32, -1 = absent
    is_leaf: np.ndarray  # bool
    head: np.ndarray  # first point index chained in a leaf, -1 = none
    nxt: np.ndarray  # per-point chain link
    count: np.ndarray  # points under each cell
    sx: np.ndarray  # position sums
    sy: np.ndarray
    cx: np.ndarray  # cell center and half side
    cy: np.ndarray
    half: np.ndarray
    n_cells: int

    def centroid(self, cell: int) -> tuple[float, float]:
        return self.sx[cell] / self.count[cell], self.sy[cell] / self.count[cell]


@dataclass
class LayoutState:
    ids: list[str]
    pos: np.ndarray  # (n, 2) float64
    vel: np.ndarray
    index: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.index:
            self.index = {node_id: i for i, node_id in enumerate(self.ids)}

    def bounding_box(self) -> tuple[float, float, float, float]:
        return (
            float(self.pos[:, 0].min()),
            float(self.pos[:, 1].min()),
            float(self.pos[:, 0].max()),
            float(self.pos[:, 1].max()),
        )

    def positions(self) -> list[dict]:
        return [
            {"id": node_id, "x": float(self.pos[i, 0]), "y": float(self.pos[i, 1])}
            for i, node_id in enumerate(self.ids)
        ]


def initialize(node_ids: list[str], seed: int) -> LayoutState:
    """Seeded uniform positions on a disc whose radius grows with sqrt(n)."""
    if not node_ids:
        raise ValidationError("cannot lay out an empty node set")
    ids = list(node_ids)
    n = len(ids)
    if n == 1:
        pos = np.zeros((1, 2))
    else:
        rng = np.random.default_rng(seed)
        radius = 10.0 * math.sqrt(n)
        r = radius * np.sqrt(rng.random(n))
        angle = 2.0 * math.pi * rng.random(n)
        pos = np.stack([r * np.cos(angle), r * np.sin(angle)], axis=1)
    return LayoutState(ids=ids, pos=pos, vel=np.zeros((n, 2)))


@njit(cache=True)
def _build_tree(px, py, child, is_leaf, head, nxt, count, sx, sy, cx, cy, half):
    n = px.shape[0]
    cap = child.shape[0]
    xmin, xmax = px[0], px[0]
    ymin, ymax = py[0], py[0]
    for i in range(n):
        if px[i] < xmin:
            xmin = px[i]
        if px[i] > xmax:
            xmax = px[i]
        if py[i] < ymin:
            ymin = py[i]
        if py[i] > ymax:
            ymax = py[i]
    side = max(xmax - xmin, ymax - ymin)
    if side <= 0.0:
        side = 1.0
    # root cell: a square covering all points
    cx[0] = 0.5 * (xmin + xmax)
    cy[0] = 0.5 * (ymin + ymax)
    half[0] = 0.5 * side * 1.0000001
    is_leaf[0] = True
    head[0] = -1
    n_cells = 1
    for i in range(n):
        x = px[i]
        y = py[i]
        node = 0
        depth = 0
        count[node] += 1
        sx[node] += x
        sy[node] += y
        while True:
            if is_leaf[node]:
                if head[node] == -1:
                    head[node] = i
                    nxt[i] = -1
                    break
                if depth >= _MAX_DEPTH or n_cells + 2 > cap:
                    nxt[i] = head[node]
                    head[node] = i
                    break
                # split: push the resident point one level down
                j = head[node]
                head[node] = -1
                is_leaf[node] = False
                qx = 1 if px[j] >= cx[node] else 0
                qy = 1 if py[j] >= cy[node] else 0
                q = qy * 2 + qx
                c = n_cells
                n_cells += 1
                h = 0.5 * half[node]
                cx[c] = cx[node] + (h if qx == 1 else -h)
                cy[c] = cy[node] + (h if qy == 1 else -h)
                half[c] = h
                is_leaf[c] = True
                head[c] = j
                nxt[j] = -1
                child[node, q] = c
                count[c] = 1
                sx[c] = px[j]
                sy[c] = py[j]
                # fall through: node is now internal, keep descending with i
            else:
                qx = 1 if x >= cx[node] else 0
                qy = 1 if y >= cy[node] else 0
                q = qy * 2 + qx
                c = child[node, q]
                if c == -1:
                    c = n_cells
                    n_cells += 1
                    h = 0.5 * half[node]
                    cx[c] = cx[node] + (h if qx == 1 else -h)
                    cy[c] = cy[node] + (h if qy == 1 else -h)
                    half[c] = h
                    is_leaf[c] = True
                    head[c] = i
                    nxt[i] = -1
                    child[node, q] = c
                    count[c] = 1
                    sx[c] = x
                    sy[c] = y
                    break
                node = c
                depth += 1
                count[node] += 1
                sx[node] += x
                sy[node] += y
    return n_cells


@njit(cache=True)
def _charge_forces(px, py, child, is_leaf, head, nxt, count, sx, sy, half, theta, charge, eps, fx, fy):
    n = px.shape[0]
    eps2 = eps * eps
    stack = np.empty(256, dtype=np.int32)
    for i in range(n):
        x = px[i]
        y = py[i]
        fxi = 0.0
        fyi = 0.0
        top = 0
        stack[top] = 0
        top += 1
        while top > 0:
            top -= 1
            node = stack[top]
            if count[node] == 0:
                continue
            if is_leaf[node]:
                p = head[node]
                while p != -1:
                    if p != i:
                        dx = x - px[p]
                        dy = y - py[p]
                        d2 = dx * dx + dy * dy
                        if d2 > 0.0:
                            c2 = d2 if d2 > eps2 else eps2
                            w = -charge / (c2 * math.sqrt(c2))
                            fxi += w * dx
                            fyi += w * dy
                    p = nxt[p]
            else:
                mx = sx[node] / count[node]
                my = sy[node] / count[node]
                dx = x - mx
                dy = y - my
                d2 = dx * dx + dy * dy
                s = 2.0 * half[node]
                # approximate as a point mass when s/d <= theta, else open
                if d2 > 0.0 and s * s <= theta * theta * d2:
                    c2 = d2 if d2 > eps2 else eps2
                    w = -charge * count[node] / (c2 * math.sqrt(c2))
                    fxi += w * dx
                    fyi += w * dy
                else:
                    for q in range(4):
                        c = child[node, q]
                        if c != -1:
                            stack[top] = c
                            top += 1
            if top > stack.shape[0] - 8:
                grown = np.empty(stack.shape[0] * 2, dtype=np.int32)
                grown[: stack.shape[0]] = stack
                stack = grown
        fx[i] = fxi
        fy[i] = fyi


def build_quadtree(pos: np.ndarray) -> QuadTree:
    n = pos.shape[0]
    cap = max(64, 16 * n)
    child = np.full((cap, 4), -1, dtype=np.int32)
    is_leaf = np.zeros(cap, dtype=np.bool_)
    head = np.full(cap, -1, dtype=np.int32)
    nxt = np.full(n, -1, dtype=np.int32)
    count = np.zeros(cap, dtype=np.int64)
    sx = np.zeros(cap)
    sy = np.zeros(cap)
    cx = np.zeros(cap)
    cy = np.zeros(cap)
    half = np.zeros(cap)
    n_cells = _build_tree(
        np.ascontiguousarray(pos[:, 0]), np.ascontiguousarray(pos[:, 1]),
        child, is_leaf, head, nxt, count, sx, sy, cx, cy, half,
    )
    return QuadTree(child, is_leaf, head, nxt, count, sx, sy, cx, cy, half, int(n_cells))


def charge_forces(pos: np.ndarray, theta: float, charge: float, eps: float = EPSILON) -> np.ndarray:
    """Barnes-Hut charge forces for all nodes; theta=0 degenerates to exact."""
    tree = build_quadtree(pos)
    n = pos.shape[0]
    fx = np.zeros(n)
    fy = np.zeros(n)
    _charge_forces(
        np.ascontiguousarray(pos[:, 0]), np.ascontiguousarray(pos[:, 1]),
        tree.child, tree.is_leaf, tree.head, tree.nxt, tree.count, tree.sx, tree.sy, tree.half,
        float(theta), float(charge), float(eps), fx, fy,
    )
    return np.stack([fx, fy], axis=1)


def direct_charge_forces(pos: np.ndarray, charge: float, eps: float = EPSILON, chunk: int = 2048) -> np.ndarray:
    """Exact O(n^2) pairwise summation, chunked to bound memory.

    Exactly antisymmetric per pair; coincident pairs contribute no force
    (no defined direction), matching the approximate path.
    """
    n = pos.shape[0]
    forces = np.zeros((n, 2))
    eps2 = eps * eps
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        dx = pos[start:stop, 0][:, None] - pos[None, :, 0]
        dy = pos[start:stop, 1][:, None] - pos[None, :, 1]
        d2 = dx * dx + dy * dy
        c2 = np.maximum(d2, eps2)
        w = -charge / (c2 * np.sqrt(c2))
        w[d2 == 0.0] = 0.0
        forces[start:stop, 0] = (w * dx).sum(axis=1)
        forces[start:stop, 1] = (w * dy).sum(axis=1)
    return forces


def spring_forces(pos: np.ndarray, edge_index: np.ndarray, params: LayoutParams) -> np.ndarray:
    forces = np.zeros_like(pos)
    if edge_index.size == 0:
        return forces
    a, b = edge_index[:, 0], edge_index[:, 1]
    delta = pos[b] - pos[a]
    dist = np.sqrt((delta * delta).sum(axis=1))
    safe = np.maximum(dist, EPSILON)
    scale = params.link_strength * (dist - params.rest_length) / safe
    scale[dist == 0.0] = 0.0
    pull = delta * scale[:, None]
    np.add.at(forces, a, pull)
    np.add.at(forces, b, -pull)
    return forces


def total_forces(state: LayoutState, edge_index: np.ndarray, params: LayoutParams) -> np.ndarray:
    forces = charge_forces(state.pos, params.theta, params.charge)
    forces += spring_forces(state.pos, edge_index, params)
    forces -= params.centering * state.pos
    return forces


def edge_indices(state: LayoutState, edges: list[tuple[str, str]]) -> np.ndarray:
    pairs = [
        (state.index[a], state.index[b])
        for a, b in edges
        if a in state.index and b in state.index and a != b
    ]
    return np.array(pairs, dtype=np.int64).reshape(-1, 2)


def step(state: LayoutState, edge_index: np.ndarray, params: LayoutParams) -> LayoutState:
    """One iteration: accumulate forces, integrate with velocity decay."""
    forces = total_forces(state, edge_index, params)
    state.vel = (state.vel + forces * params.step_size) * params.velocity_decay
    state.pos = state.pos + state.vel * params.step_size
    bad = np.flatnonzero(~np.isfinite(state.pos).all(axis=1))
    if bad.size:
        raise ValidationError(f"layout diverged: non-finite position for node {state.ids[int(bad[0])]!r}")
    return state


def run(node_ids: list[str], edges: list[tuple[str, str]], params: LayoutParams) -> LayoutState:
    state = initialize(node_ids, params.seed)
    index = edge_indices(state, edges)
    for _ in range(params.iterations):
        step(state, index, params)
    return state
