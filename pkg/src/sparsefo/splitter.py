"""The m-batched splitter game: simulator, exact minimax game rank,
constructive strategies for both players, and the rank sentences.

Game rules.  In each round the Localiser picks a vertex v of the current
graph; the graph is replaced by the induced radius-r ball around v; the
Splitter then removes at most m vertices from the ball.  The Splitter wins
when no vertices remain.  The (r,m)-game rank of a graph is the least d
such that the Splitter can force a win within d rounds.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .canon import canonical_code
from .errors import Budget, InputError, PreconditionError
from .logic import (
    Eq,
    Exists,
    Forall,
    FreshNames,
    Var,
    all_var_names,
    ball_minus_interpretation,
    batched_qrank,
    dist_le,
    fand,
    fnot,
    rewrite_under_interpretation,
    substitute,
)
from .structures import Embedding, Graph, ball


# ---------------------------------------------------------------------------
# Game state and simulator


@dataclass(frozen=True)
class Round:
    center: int
    ball_graph: Graph
    removed: frozenset[int]


@dataclass(frozen=True)
class GameState:
    """Current graph plus the history of completed rounds."""

    graph: Graph
    r: int
    m: int
    transcript: tuple[Round, ...] = ()

    @property
    def round_index(self) -> int:
        return len(self.transcript)


def play_game(G, r, m, splitter, localiser, max_rounds=None):
    """Run the game to completion; returns (winner, transcript).

    ``localiser(state) -> vertex``; ``splitter(state, center, ball_graph)
    -> removal set``.  Rules are enforced; illegal moves raise InputError
    with the offending round index.
    """
    if m < 1:
        raise InputError("batch size m must be at least 1")
    if r < 0:
        raise InputError("radius must be nonnegative")
    limit = max_rounds if max_rounds is not None else len(G.vertices) + 1
    state = GameState(G, r, m)
    while state.graph.vertices and state.round_index < limit:
        i = state.round_index + 1
        v = localiser(state)
        if v not in set(state.graph.vertices):
            raise InputError(f"round {i}: localiser played {v}, not a vertex")
        bg = state.graph.induced(ball(state.graph, v, r))
        removed = frozenset(splitter(state, v, bg))
        if not removed <= set(bg.vertices):
            raise InputError(f"round {i}: splitter removed vertices outside ball")
        if len(removed) > m:
            raise InputError(f"round {i}: splitter removed {len(removed)} > {m}")
        state = GameState(
            bg.without(removed), r, m, state.transcript + (Round(v, bg, removed),)
        )
    winner = "splitter" if not state.graph.vertices else "localiser"
    return winner, state.transcript


def greedy_localiser(state: GameState) -> int:
    """Pick a minimum-degree vertex (smallest id on ties)."""
    return min(state.graph.vertices, key=lambda v: (state.graph.degree(v), v))


def greedy_splitter(state: GameState, center: int, bg: Graph) -> frozenset[int]:
    """Remove a full batch minimizing (remaining edges, remaining ids)."""
    size = min(state.m, len(bg.vertices))
    best = None
    for combo in itertools.combinations(sorted(bg.vertices), size):
        rest = bg.without(combo)
        key = (len(rest.edges), rest.vertices)
        if best is None or key < best[0]:
            best = (key, frozenset(combo))
    return best[1] if best else frozenset()


# ---------------------------------------------------------------------------
# Exact game rank


def game_rank_exact(G, r, m, cap, budget=None):
    """Minimal number of rounds in which the Splitter can force a win under
    optimal play, or cap+1 when the rank exceeds cap.

    Minimax with transposition memoization; states are canonicalized by the
    multiset of connected-component canonical forms.  The Splitter may
    always be assumed to remove a full batch (removing more vertices never
    increases the rank of an induced subgraph).
    """
    if m < 1:
        raise InputError("batch size m must be at least 1")
    budget = budget or Budget()
    big = cap + 1
    memo: dict[tuple, int] = {}

    def rank(H: Graph, depth: int) -> int:
        if not H.vertices:
            return 0
        if depth == 0:
            return big
        key = (canonical_code(H), depth)
        if key in memo:
            return memo[key]
        budget.spend()
        value = 0
        seen_balls = set()
        for v in H.vertices:
            bg = H.induced(ball(H, v, r))
            bcode = canonical_code(bg)
            if bcode in seen_balls:
                continue
            seen_balls.add(bcode)
            size = min(m, len(bg.vertices))
            best = big
            seen_next = set()
            for combo in itertools.combinations(sorted(bg.vertices), size):
                nxt = bg.without(combo)
                ncode = canonical_code(nxt)
                if ncode in seen_next:
                    continue
                seen_next.add(ncode)
                sub = rank(nxt, depth - 1)
                if sub < best:
                    best = sub
                    if best == 0:
                        break
            value = max(value, big if best >= big else 1 + best)
            if value >= big:
                break
        memo[key] = value
        return value

    return rank(G, cap)


# ---------------------------------------------------------------------------
# Splitter's constructive strategy


@dataclass(frozen=True)
class StrategyConstants:
    z: int
    kprime: int
    t: int
    c: int


def tdk_size(d: int, k: int) -> int:
    """Number of vertices of the complete k-branching tree of depth d."""
    return sum(k**i for i in range(d))


def strategy_constants(d: int, r: int, k: int) -> StrategyConstants:
    """Constants controlling one round of the Splitter strategy: z is the
    largest size of any <=(r-1)-subdivision of the depth-(d-1) complete
    k-branching tree (attained by the uniform one), and k', t, c follow."""
    if d < 1:
        raise InputError("d must be at least 1")
    n = tdk_size(d - 1, k)
    z = n + max(0, (n - 1) * (r - 1))
    t = k * (z + r)
    return StrategyConstants(z, t + r, t, t**r)


def splitter_batch_bound(d: int, r: int, k: int) -> int:
    """Batch size sufficient for the constructive strategy to win in d
    rounds on graphs with no depth-(d+1) complete k-branching tree as an
    (r-1)-shallow topological minor."""
    if d < 1:
        raise InputError("d must be at least 1")
    if r == 0:
        return 1
    if d == 1:
        return sum((k - 1) ** i for i in range(r + 1))
    sc = strategy_constants(d + 1, r, k)
    return max(sc.c, splitter_batch_bound(d - 1, r, sc.kprime))


def splitter_strategy_lemma_win(d: int, r: int, k: int):
    """Strategy winning within d rounds (radius r) on any graph with no
    depth-(d+1) complete k-branching tree as an (r-1)-shallow topological
    minor.  In round j it removes the ball's roots of <=(r-1)-subdivisions
    of the depth-d_j complete k_j-branching tree, following the inductive
    k' chain; on the last round it removes the whole ball."""
    from .treerank import subdivision_roots

    if d < 1:
        raise InputError("d must be at least 1")

    def strategy(state: GameState, center: int, bg: Graph) -> frozenset[int]:
        kj = k
        dj = d
        for _ in state.transcript:
            if dj <= 1:
                break
            kj = strategy_constants(dj + 1, state.r, kj).kprime
            dj -= 1
        if state.r == 0 or dj <= 1:
            return frozenset(bg.vertices)
        kprime = strategy_constants(dj + 1, state.r, kj).kprime
        return subdivision_roots(bg, dj, kprime, state.r - 1)

    return strategy


def verify_splitter_strategy(G, r, m, splitter, d):
    """Exhaustive adversary check: does the given Splitter strategy win
    within d rounds with batches of size <= m against every Localiser line
    of play?  Returns (True, None) or (False, offending transcript)."""

    def rec(state: GameState):
        if not state.graph.vertices:
            return None
        if state.round_index == d:
            return state.transcript
        for v in sorted(state.graph.vertices):
            bg = state.graph.induced(ball(state.graph, v, r))
            removed = frozenset(splitter(state, v, bg))
            if len(removed) > m or not removed <= set(bg.vertices):
                return state.transcript + (Round(v, bg, removed),)
            nxt = GameState(
                bg.without(removed), r, m, state.transcript + (Round(v, bg, removed),)
            )
            bad = rec(nxt)
            if bad is not None:
                return bad
        return None

    bad = rec(GameState(G, r, m))
    return (bad is None), bad


# ---------------------------------------------------------------------------
# Localiser's constructive strategy


def _embedding_tree(emb: Embedding):
    """Recover the base tree shape (root, children map) from an embedding."""
    children: dict[int, list[int]] = {n: [] for n in emb.principal}
    non_roots = set()
    for child, parent in emb.paths:
        children[parent].append(child)
        non_roots.add(child)
    roots = [n for n in emb.principal if n not in non_roots]
    if len(roots) != 1:
        raise InputError("embedding is not of a single rooted tree")
    return roots[0], {n: sorted(cs) for n, cs in children.items()}


def _branch_vertices(emb: Embedding, children, node: int) -> set[int]:
    """Host vertices of the embedded subtree rooted at node (excluding the
    connecting path from node up to its parent)."""
    out = set()
    stack = [node]
    while stack:
        n = stack.pop()
        out.add(emb.principal[n])
        for c in children[n]:
            out.update(emb.paths[(c, n)][1:-1])
            stack.append(c)
    return out


def localiser_strategy_subdivision(emb: Embedding):
    """Strategy surviving at least d+1 rounds on a host containing the given
    embedded <=r-subdivision of the depth-(d+1) complete (m+1)-branching
    tree, provided the game radius is at least d(r+1): play the subdivision
    root, then recurse into a branch untouched by the Splitter's removals.

    The move is recomputed from the transcript each round, so the strategy
    is a pure function of the game state.
    """
    root, children = _embedding_tree(emb)

    def strategy(state: GameState) -> int:
        cur = root
        for rnd in state.transcript:
            ball_verts = set(rnd.ball_graph.vertices)
            chosen = None
            for c in children[cur]:
                branch = _branch_vertices(emb, children, c)
                if branch <= ball_verts and not branch & rnd.removed:
                    chosen = c
                    break
            if chosen is None:
                raise PreconditionError(
                    f"no untouched branch below node {cur}; survival not guaranteed"
                )
            cur = chosen
        v = emb.principal[cur]
        if v not in set(state.graph.vertices):
            raise PreconditionError(f"current branch root {v} was removed")
        return v

    return strategy


def verify_localiser_strategy(G, r, m, localiser, d, reply_support=None):
    """Exhaustive adversary check: does the given Localiser strategy keep
    the graph nonempty for d rounds (so the game lasts at least d+1 rounds)
    against every Splitter reply sequence?  When reply_support is given,
    Splitter removals are drawn from it (adequate when survival provably
    depends only on the removals inside the support)."""

    def rec(state: GameState) -> bool:
        if not state.graph.vertices:
            return False
        if state.round_index == d:
            return True
        v = localiser(state)
        if v not in set(state.graph.vertices):
            return False
        bg = state.graph.induced(ball(state.graph, v, r))
        pool = sorted(
            set(bg.vertices) & set(reply_support)
            if reply_support is not None
            else bg.vertices
        )
        for size in range(min(m, len(pool)) + 1):
            for combo in itertools.combinations(pool, size):
                removed = frozenset(combo)
                nxt = GameState(
                    bg.without(removed),
                    r,
                    m,
                    state.transcript + (Round(v, bg, removed),),
                )
                if not rec(nxt):
                    return False
        return True

    return rec(GameState(G, r, m))


# ---------------------------------------------------------------------------
# Rank sentences


def rank_sentence(d: int, r: int, m: int):
    """Sentence true on G exactly when the (r,m)-game rank of G is at most
    d.  It is b-batched for b = max(m+1, r) with batched quantifier rank
    exactly 3d-2 (measured and asserted)."""
    if d < 1:
        raise InputError("d must be at least 1")
    if m < 1:
        raise InputError("m must be at least 1")
    if d == 1:
        names = tuple(f"x{i}" for i in range(1, m + 2))
        xs = [Var(n) for n in names]
        distinct = [
            fnot(Eq(a, b)) for a, b in itertools.combinations(xs, 2)
        ]
        near = [dist_le(xs[0], x, r) for x in xs[1:]]
        sentence = fnot(Exists(names, fand(*distinct, *near)))
    else:
        body = rankdown_formula(d - 1, r, m)
        unames = tuple(f"u{i}" for i in range(1, m + 1))
        mapping = {"y0": Var("x")}
        mapping.update({f"y{i}": Var(u) for i, u in enumerate(unames, start=1)})
        sentence = Forall(("x",), Exists(unames, substitute(body, mapping)))
    b = max(m + 1, r)
    measured = batched_qrank(sentence, b)
    assert measured == 3 * d - 2, f"batched rank {measured} != {3 * d - 2}"
    return sentence


def rankdown_formula(d: int, r: int, m: int):
    """Formula with free variables y0..ym true of (v, u1..um) in G exactly
    when the ball of radius r around v minus {u1..um} has (r,m)-game rank
    at most d.  Its batched quantifier rank is exactly 3(d+1)-4, padded up
    with vacuous single-variable blocks when the rewriting lands lower."""
    prev = rank_sentence(d, r, m)
    interp = ball_minus_interpretation(r, m)
    f = rewrite_under_interpretation(prev, interp)
    b = max(m + 1, r)
    target = 3 * (d + 1) - 4
    measured = batched_qrank(f, b)
    if measured is None or measured > target:
        raise PreconditionError(
            f"rewritten rank formula measures {measured}, above target {target}"
        )
    fresh = FreshNames(all_var_names(f) | {f"y{i}" for i in range(m + 1)}, prefix="p")
    while measured < target:
        w = fresh.new()
        f = Exists((w,), fand(Eq(Var(w), Var("y0")), f))
        measured += 1
    return f
