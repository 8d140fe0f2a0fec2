"""Independent reference implementations used by the test-suite.

Nothing here calls into the code under test beyond its data types.
"""

from __future__ import annotations

import itertools
import math
from collections import deque

import numpy as np

from ltlmanip.ltl import Always, And, Atom, Eventually, Guard, Nba, Or, Predicate, TrueF, Until
from ltlmanip.ltl.nba import Cube

# ------------------------------------------------------------------ LTL on lasso words


def lasso_holds(f, stem, loop) -> bool:
    """Truth of ``f`` at position 0 of ``stem loop^omega`` by direct recursion over positions."""
    word = list(stem) + list(loop)
    n = len(word)
    start = len(stem)

    def succ(i):
        return i + 1 if i + 1 < n else start

    def walk(i):
        """Positions i, succ(i), ... long enough to cover every reachable position."""
        out = []
        for _ in range(n + 1):
            out.append(i)
            i = succ(i)
        return out

    memo = {}

    def ev(g, i):
        key = (id(g), i)
        if key in memo:
            return memo[key]
        if isinstance(g, TrueF):
            r = True
        elif isinstance(g, Atom):
            r = g.pred in word[i]
        elif isinstance(g, And):
            r = ev(g.left, i) and ev(g.right, i)
        elif isinstance(g, Or):
            r = ev(g.left, i) or ev(g.right, i)
        elif isinstance(g, Eventually):
            r = any(ev(g.operand, j) for j in walk(i))
        elif isinstance(g, Always):
            r = all(ev(g.operand, j) for j in walk(i))
        elif isinstance(g, Until):
            r = False
            for j in walk(i):
                if ev(g.right, j):
                    r = True
                    break
                if not ev(g.left, j):
                    break
        else:
            raise TypeError(g)
        memo[key] = r
        return r

    return ev(f, 0)


def lasso_words(alphabet, max_len: int):
    """All (stem, loop) pairs with len(stem) + len(loop) <= max_len and a non-empty loop."""
    for total in range(1, max_len + 1):
        for word in itertools.product(alphabet, repeat=total):
            for split in range(total):
                yield word[:split], word[split:]


PREDICATE_POOL = [
    Predicate.move("l1"),
    Predicate.move("l2"),
    Predicate.grasp("o1"),
    Predicate.release("o1", "l2"),
]


def random_formula(rng, max_atoms: int = 4, pool=PREDICATE_POOL):
    """Random formula of the negation-free fragment with at most ``max_atoms`` atom occurrences."""
    budget = int(rng.integers(1, max_atoms + 1))

    def build(k):
        if k == 1:
            f = Atom(pool[int(rng.integers(len(pool)))])
            r = rng.random()
            if r < 0.25:
                return Eventually(f)
            if r < 0.35:
                return Always(f)
            return f
        op = rng.random()
        if op < 0.2:
            return Eventually(build(k))
        if op < 0.3:
            return Always(build(k))
        left = int(rng.integers(1, k))
        a, b = build(left), build(k - left)
        if op < 0.6:
            return And(a, b)
        if op < 0.85:
            return Or(a, b)
        return Until(a, b)

    return build(budget)


# ------------------------------------------------------------------ automata


def random_guard(rng, preds):
    r = rng.random()
    if r < 0.2:
        return Guard.true()
    if r < 0.7 or len(preds) < 2:
        return Guard.conj([preds[int(rng.integers(len(preds)))]])
    if r < 0.85:
        a, b = rng.choice(len(preds), size=2, replace=False)
        return Guard.conj([preds[int(a)], preds[int(b)]])
    a, b = rng.choice(len(preds), size=2, replace=False)
    return Guard(frozenset([Cube(frozenset([preds[int(a)]])), Cube(frozenset([preds[int(b)]]))]))


def random_nba(rng, max_states: int, max_atoms: int) -> Nba:
    n = int(rng.integers(2, max_states + 1))
    k = int(rng.integers(1, max_atoms + 1))
    preds = [Predicate.move(f"l{i + 1}") for i in range(k)]
    if k > 1 and rng.random() < 0.5:
        preds[-1] = Predicate.grasp("o1")
    states = tuple(f"q{i}" for i in range(n))
    transitions = {}
    for q in states:
        edges = []
        if rng.random() < 0.7:
            edges.append((random_guard(rng, preds), q))
        for t in states:
            if t != q and rng.random() < 0.45:
                edges.append((random_guard(rng, preds), t))
        transitions[q] = tuple(edges)
    n_fin = int(rng.integers(1, max(2, n // 2 + 1)))
    finals = frozenset(str(s) for s in rng.choice(states, size=n_fin, replace=False))
    return Nba(states, frozenset(["q0"]), finals, transitions, tuple(preds))


def all_symbols(ap, max_size: int = 2):
    ap = sorted(ap)
    out = []
    for k in range(max_size + 1):
        out += [frozenset(c) for c in itertools.combinations(ap, k)]
    return out


def brute_force_prune(nba: Nba):
    """Transitions kept when some symbol of size <= 1 enables them (size-2 symbols are never feasible)."""
    syms = [s for s in all_symbols(nba.all_predicates(), 2) if len(s) <= 1]
    return {(q, t, g) for q in nba.states for g, t in nba.edges(q) if any(g.satisfied_by(s) for s in syms)}


def enumerate_runs(nba: Nba, q: str, sym: frozenset, max_k: int):
    """Every run q, q1, ..., qK (K <= max_k) under the constant symbol ``sym`` ending in a state
    that loops on ``sym``, with no intermediate state looping on it.  Yields (target, accepting)."""

    def loops(s):
        return any(t == s and g.satisfied_by(sym) for g, t in nba.edges(s))

    def succ(s):
        return [t for g, t in nba.edges(s) if g.satisfied_by(sym)]

    stack = [(q, (q,))]
    while stack:
        s, run = stack.pop()
        if len(run) - 1 >= max_k:
            continue
        if len(run) > 1 and loops(s):
            continue
        for t in succ(s):
            r = run + (t,)
            if loops(t):
                yield t, any(x in nba.finals for x in r[1:])
            stack.append((t, r))


def brute_force_edges(nba: Nba, vertices) -> dict:
    """{(q, t): {symbol: accepting}} from exhaustive run enumeration."""
    ap = nba.all_predicates()
    syms = [frozenset()] + [frozenset([p]) for p in sorted(ap)]
    vset = set(vertices)
    out: dict = {}
    for q in vertices:
        for s in syms:
            for t, acc in enumerate_runs(nba, q, s, len(nba.states)):
                if t not in vset:
                    continue
                d = out.setdefault((q, t), {})
                d[s] = d.get(s, False) or acc
    return out


def bfs(adj: dict, src) -> dict:
    dist = {src: 0}
    queue = deque([src])
    while queue:
        v = queue.popleft()
        for w in adj.get(v, ()):
            if w not in dist:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


# ------------------------------------------------------------------ geometry


def monte_carlo_area(contains, bounds, n: int = 200_000, seed: int = 0) -> float:
    rng = np.random.default_rng(seed)
    minx, miny, maxx, maxy = bounds
    pts = rng.uniform([minx, miny], [maxx, maxy], size=(n, 2))
    return float(np.mean(contains(pts))) * (maxx - minx) * (maxy - miny)


def ray_cast_inside(ring, pts) -> np.ndarray:
    """Even-odd point-in-polygon test by horizontal ray casting."""
    ring = np.asarray(ring, dtype=float)
    if np.allclose(ring[0], ring[-1]):
        ring = ring[:-1]
    x, y = pts[:, 0], pts[:, 1]
    inside = np.zeros(len(pts), dtype=bool)
    n = len(ring)
    for i in range(n):
        x1, y1 = ring[i]
        x2, y2 = ring[(i + 1) % n]
        crosses = (y1 > y) != (y2 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (x < xint)
    return inside


def gift_wrap(points) -> list:
    """Convex hull by Jarvis march, counter-clockwise, without collinear points."""
    pts = sorted(set(map(tuple, np.asarray(points, dtype=float))))
    if len(pts) < 3:
        return pts
    start = min(pts)
    hull = [start]
    cur = start
    while True:
        cand = pts[0] if pts[0] != cur else pts[1]
        for p in pts:
            if p == cur:
                continue
            cross = (cand[0] - cur[0]) * (p[1] - cur[1]) - (cand[1] - cur[1]) * (p[0] - cur[0])
            if cross < 0 or (cross == 0 and math.dist(cur, p) > math.dist(cur, cand)):
                cand = p
        cur = cand
        if cur == start:
            break
        hull.append(cur)
    return hull


def polygon_area(ring) -> float:
    ring = np.asarray(ring, dtype=float)
    x, y = ring[:, 0], ring[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y)))


# ------------------------------------------------------------------ kinematics


def unicycle_arc(pose, v: float, omega: float, t: float) -> tuple:
    """Closed-form pose after driving with constant (v, omega) for time t."""
    x, y, th = pose
    if abs(omega) < 1e-15:
        return x + v * t * math.cos(th), y + v * t * math.sin(th), th
    th1 = th + omega * t
    return x + v / omega * (math.sin(th1) - math.sin(th)), y - v / omega * (math.cos(th1) - math.cos(th)), th1
