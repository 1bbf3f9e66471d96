"""Exact moments of T = w' Kc w over uniformly random permutations of w.

E[(w_pi' B w_pi)^m] is expanded over the coincidence pattern of the 2m row and
column indices. For a set partition pi of the index slots with r blocks,

    E = sum_pi  A(pi) W(pi) / (n)_r

where A(pi) sums the product of kernel entries over index assignments that are
distinct across blocks of pi, W(pi) is the matching sum of products of powers
of w over distinct positions, and (n)_r is the falling factorial. Both distinct
sums are obtained from unrestricted sums by Moebius inversion on the partition
lattice. Unrestricted kernel sums are tensor contractions of a small multigraph
(one edge per kernel factor) and are evaluated component by component.
"""

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from robkat.comm.errors import InputError
from robkat.engine.kernel import KernelMatrix

ENUMERATION_LIMIT = 9
TIE_SLACK = 1e-12


@dataclass(frozen=True)
class PermutationMoments:
    """Mean, variance and skewness of T under random permutation of w."""

    mean: float
    variance: float
    skewness: float

    @property
    def std(self):
        return math.sqrt(self.variance)

    @property
    def degenerate(self):
        return self.variance <= 0.0


def _canonical(labels):
    # relabel by order of first appearance (restricted growth string)
    mapping = {}
    return tuple(mapping.setdefault(x, len(mapping)) for x in labels)


def _set_partitions(size):
    """All set partitions of range(size) as restricted growth strings."""

    def extend(prefix, top):
        if len(prefix) == size:
            yield tuple(prefix)
            return
        for label in range(top + 2):
            yield from extend(prefix + [label], max(top, label))

    if size == 0:
        return [()]
    return list(extend([0], 0))


@dataclass(frozen=True)
class PatternLattice:
    """Coincidence patterns of the 2m index slots of a product of m quadratic forms."""

    power: int
    patterns: tuple
    n_blocks: np.ndarray
    block_sizes: tuple
    moebius: np.ndarray

    @property
    def edges(self):
        return [
            [(labels[2 * t], labels[2 * t + 1]) for t in range(self.power)]
            for labels in self.patterns
        ]


@lru_cache(maxsize=None)
def pattern_lattice(power) -> PatternLattice:
    patterns = _set_partitions(2 * power)
    index = {labels: i for i, labels in enumerate(patterns)}
    moebius = np.zeros((len(patterns), len(patterns)))
    for i, labels in enumerate(patterns):
        r = max(labels) + 1
        for merge in _set_partitions(r):
            coarser = _canonical(merge[x] for x in labels)
            mu = 1
            for k in Counter(merge).values():
                mu *= (-1) ** (k - 1) * math.factorial(k - 1)
            moebius[i, index[coarser]] += mu
    n_blocks = np.array([max(labels) + 1 for labels in patterns])
    block_sizes = tuple(tuple(Counter(labels).values()) for labels in patterns)
    return PatternLattice(power, tuple(patterns), n_blocks, block_sizes, moebius)


def _components(edges):
    parent = {}

    def find(x):
        parent.setdefault(x, x)
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in edges:
        parent[find(u)] = find(v)
    groups = {}
    for u, v in edges:
        groups.setdefault(find(u), []).append((u, v))
    return list(groups.values())


def _component_sum(B, diag, edges):
    """Unrestricted sum of prod B[u, v] over a connected multigraph with <= 3 edges."""
    n = B.shape[0]
    factors = {}
    multiplicity = Counter()
    for u, v in edges:
        factors.setdefault(u, np.ones(n))
        factors.setdefault(v, np.ones(n))
        if u == v:
            factors[u] = factors[u] * diag
        else:
            multiplicity[(min(u, v), max(u, v))] += 1

    adjacency = {v: {} for v in factors}
    for (u, v), k in multiplicity.items():
        matrix = B if k == 1 else B**k
        adjacency[u][v] = matrix
        adjacency[v][u] = matrix

    while len(adjacency) > 1:
        leaf = next((v for v, nbrs in adjacency.items() if len(nbrs) == 1), None)
        if leaf is None:
            # a triangle is the only cycle possible with three simple edges
            a, b, c = adjacency
            through_b = (adjacency[a][b] * factors[b][None, :]) @ adjacency[b][c]
            return float(factors[a] @ (through_b * adjacency[c][a].T) @ factors[c])
        (nbr, matrix), = adjacency.pop(leaf).items()
        del adjacency[nbr][leaf]
        factors[nbr] = factors[nbr] * (matrix @ factors[leaf])
    (last,) = adjacency
    return float(factors[last].sum())


def unrestricted_sum(B, diag, edges):
    total = 1.0
    for component in _components(edges):
        total *= _component_sum(B, diag, component)
    return total


class PermutationMomentCalculator:
    """Exact permutation moments of w' Kc w for one centered kernel.

    The kernel-side pattern sums are computed once; ``moments(w)`` is then
    cheap, so one calculator serves every score vector tested against the
    same kernel.

    With Kc doubly centered and w centered, sum(w^2) = w' P w is permutation
    invariant, so E[T] = tr(Kc) sum(w^2) / (n - 1) and T - E[T] = w' B w with
    B = Kc - tr(Kc) / (n - 1) P. Central moments are raw moments of w' B w.
    """

    def __init__(self, Kc: KernelMatrix):
        if not Kc.centered:
            raise InputError("permutation moments need a centered kernel")
        n = Kc.n
        if n < 3:
            raise InputError(f"permutation moments need n >= 3, got n={n}")
        self.kernel = Kc
        self.n = n
        self.trace = float(np.trace(Kc.matrix))
        projection = np.eye(n) - np.full((n, n), 1.0 / n)
        self.B = Kc.matrix - self.trace / (n - 1) * projection
        self.zero = not np.any(Kc.matrix)
        self._distinct = {}
        self._falling = {}
        if not self.zero:
            diag = np.diag(self.B).copy()
            for power in (2, 3):
                lattice = pattern_lattice(power)
                sums = np.array([unrestricted_sum(self.B, diag, e) for e in lattice.edges])
                self._distinct[power] = lattice.moebius @ sums
                self._falling[power] = np.array(
                    [float(math.perm(n, int(r))) for r in lattice.n_blocks]
                )

    def _central_moment(self, power, power_sums):
        lattice = pattern_lattice(power)
        unrestricted = np.array(
            [np.prod([power_sums[k] for k in sizes]) for sizes in lattice.block_sizes]
        )
        distinct = lattice.moebius @ unrestricted
        falling = self._falling[power]
        usable = falling > 0
        return float(
            np.sum(self._distinct[power][usable] * distinct[usable] / falling[usable])
        )

    def moments(self, w) -> PermutationMoments:
        w = np.asarray(w, dtype=float)
        if w.shape != (self.n,):
            raise InputError(f"score vector has shape {w.shape}, kernel is {self.n} x {self.n}")
        if self.zero or np.ptp(w) == 0:
            return PermutationMoments(0.0, 0.0, 0.0)
        centered = w - w.mean()
        power_sums = {k: float(np.sum(centered**k)) for k in range(1, 7)}
        mean = self.trace * power_sums[2] / (self.n - 1)
        variance = max(self._central_moment(2, power_sums), 0.0)
        if variance == 0.0:
            return PermutationMoments(mean, 0.0, 0.0)
        third = self._central_moment(3, power_sums)
        return PermutationMoments(mean, variance, third / variance**1.5)


def quadratic_forms(Kc: KernelMatrix, W):
    """w' Kc w for every row w of W."""
    return np.einsum("bi,bi->b", W @ Kc.matrix, W)


def permutation_statistics(Kc: KernelMatrix, w, chunk=40320):
    """T over all n! permutations of w (n <= 9), in itertools order."""
    n = len(w)
    if n > ENUMERATION_LIMIT:
        raise InputError(f"full enumeration is limited to n <= {ENUMERATION_LIMIT}, got n={n}")
    w = np.asarray(w, dtype=float)
    perms = itertools.permutations(range(n))
    out = []
    while True:
        block = np.array(list(itertools.islice(perms, chunk)), dtype=np.intp)
        if block.size == 0:
            break
        out.append(quadratic_forms(Kc, w[block]))
    return np.concatenate(out)


def sampled_statistics(Kc: KernelMatrix, w, B, rng, chunk=10000):
    """T for B uniformly random permutations of w drawn from ``rng``."""
    w = np.asarray(w, dtype=float)
    out = []
    remaining = B
    while remaining > 0:
        size = min(chunk, remaining)
        W = rng.permuted(np.tile(w, (size, 1)), axis=1)
        out.append(quadratic_forms(Kc, W))
        remaining -= size
    return np.concatenate(out)


def exceeds(values, observed):
    return values >= observed - TIE_SLACK * abs(observed)
