"""Service-network topology, validation and connected-component decomposition."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class NetworkError(ValueError):
    """Raised when a network fails validation."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(f"{v.kind}: {v.detail}" for v in self.violations))


@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str


class ServiceNetwork:
    """Customer classes, server pools and the activities linking them.

    Parameters
    ----------
    R : (n, k) array
        Binary routing matrix; ``R[i, j] = 1`` iff activity ``j`` serves class ``i``.
    A : (m, k) array
        Capacity consumed from pool ``h`` per unit of activity ``j``.
    c : (m,) array
        Per-unit, per-period staffing cost.
    p : (n,) array
        Per-unit abandonment penalty.
    validate : bool
        Raise :class:`NetworkError` if any invariant is violated.

    Total-horizon costs are ``c * T`` (see :meth:`total_cost`).
    """

    def __init__(self, R, A, c, p, validate=True):
        self.R = np.array(R, dtype=float, ndmin=2)
        self.A = np.array(A, dtype=float, ndmin=2)
        self.c = np.array(c, dtype=float).ravel()
        self.p = np.array(p, dtype=float).ravel()
        for arr in (self.R, self.A, self.c, self.p):
            arr.setflags(write=False)
        if validate:
            problems = validate_network(self)
            if problems:
                raise NetworkError(problems)
        self._class_of = None
        self._pool_of = None

    @property
    def n(self):
        return self.R.shape[0]

    @property
    def m(self):
        return self.A.shape[0]

    @property
    def k(self):
        return self.R.shape[1]

    @property
    def class_of(self):
        """Activity -> customer class index."""
        if self._class_of is None:
            self._class_of = np.argmax(self.R, axis=0)
            self._class_of.setflags(write=False)
        return self._class_of

    @property
    def pool_of(self):
        """Activity -> server pool index."""
        if self._pool_of is None:
            self._pool_of = np.argmax(self.A, axis=0)
            self._pool_of.setflags(write=False)
        return self._pool_of

    @property
    def consumption(self):
        """``A[h(j), j]`` for every activity."""
        return self.A[self.pool_of, np.arange(self.k)]

    def activity_cost(self, cost=None):
        """``(A^T c)_j``: capacity cost of one unit of each activity."""
        return self.A.T @ (self.c if cost is None else np.asarray(cost, dtype=float))

    def total_cost(self, T):
        """Horizon staffing cost ``c * T`` per unit of capacity."""
        return self.c * T

    def activities_of_pool(self, h):
        return np.nonzero(self.pool_of == h)[0]

    def activities_of_class(self, i):
        return np.nonzero(self.class_of == i)[0]

    def subnetwork(self, pools, classes):
        """Restrict to the given pools and classes (activities inside both)."""
        pools = np.asarray(sorted(pools), dtype=int)
        classes = np.asarray(sorted(classes), dtype=int)
        acts = np.nonzero(np.isin(self.pool_of, pools) & np.isin(self.class_of, classes))[0]
        return ServiceNetwork(
            self.R[np.ix_(classes, acts)],
            self.A[np.ix_(pools, acts)],
            self.c[pools],
            self.p[classes],
        )

    def with_costs(self, c=None, p=None):
        return ServiceNetwork(self.R, self.A, self.c if c is None else c, self.p if p is None else p)

    def to_dict(self):
        return {
            "n": self.n,
            "m": self.m,
            "k": self.k,
            "R": self.R.tolist(),
            "A": self.A.tolist(),
            "c": self.c.tolist(),
            "p": self.p.tolist(),
        }

    @classmethod
    def from_dict(cls, d, validate=True):
        n, m, k = int(d["n"]), int(d["m"]), int(d["k"])
        R = np.asarray(d["R"], dtype=float)
        A = np.asarray(d["A"], dtype=float)
        # allow flat row-major lists
        if R.ndim == 1:
            R = R.reshape(n, k)
        if A.ndim == 1:
            A = A.reshape(m, k)
        net = cls(R, A, d["c"], d["p"], validate=False)
        problems = validate_network(net, expected=(n, m, k))
        if validate and problems:
            raise NetworkError(problems)
        return net

    def __repr__(self):
        return f"ServiceNetwork(n={self.n}, m={self.m}, k={self.k})"

    def __eq__(self, other):
        if not isinstance(other, ServiceNetwork):
            return NotImplemented
        return all(
            a.shape == b.shape and np.array_equal(a, b)
            for a, b in ((self.R, other.R), (self.A, other.A), (self.c, other.c), (self.p, other.p))
        )

    __hash__ = None


def validate_network(net, expected=None):
    """Return every violated invariant of ``net`` (empty list means valid).

    ``expected`` optionally gives declared ``(n, m, k)`` to check against.
    Dimension problems are reported with kind ``"dimension mismatch"``
    and stop further checks.
    """
    out = []
    R, A, c, p = net.R, net.A, net.c, net.p
    if R.ndim != 2 or A.ndim != 2:
        return [Violation("dimension mismatch", "R and A must be matrices")]
    n, k = R.shape
    m = A.shape[0]
    if A.shape[1] != k:
        out.append(Violation("dimension mismatch", f"R has {k} activities but A has {A.shape[1]}"))
    if c.size != m:
        out.append(Violation("dimension mismatch", f"c has length {c.size}, expected m={m}"))
    if p.size != n:
        out.append(Violation("dimension mismatch", f"p has length {p.size}, expected n={n}"))
    if expected is not None and tuple(expected) != (n, m, k):
        out.append(Violation("dimension mismatch", f"declared (n, m, k)={tuple(expected)}, matrices give {(n, m, k)}"))
    if out:
        return out
    for name, arr in (("R", R), ("A", A), ("c", c), ("p", p)):
        if not np.all(np.isfinite(arr)):
            out.append(Violation("non-finite", f"{name} has non-finite entries"))
    if np.any((R != 0) & (R != 1)):
        out.append(Violation("non-binary routing", "R entries must be 0 or 1"))
    for j in range(k):
        nz = np.count_nonzero(R[:, j])
        if nz != 1:
            out.append(Violation("bad routing column", f"activity {j} serves {nz} classes, expected 1"))
    if np.any(A < 0):
        out.append(Violation("negative consumption", "A entries must be nonnegative"))
    for j in range(k):
        npos = np.count_nonzero(A[:, j] > 0)
        if npos != 1:
            out.append(Violation("bad consumption column", f"activity {j} draws on {npos} pools, expected 1"))
    for i in np.nonzero(~np.any(R > 0, axis=1))[0]:
        out.append(Violation("class unreachable", f"class {i} has no activity"))
    for h in np.nonzero(~np.any(A > 0, axis=1))[0]:
        out.append(Violation("pool unused", f"pool {h} has no activity"))
    if np.any(c < 0):
        out.append(Violation("negative cost", "c must be nonnegative"))
    if np.any(p < 0):
        out.append(Violation("negative penalty", "p must be nonnegative"))
    return out


@dataclass(frozen=True)
class NetworkComponent:
    """A connected piece of the bipartite class/pool graph."""

    pools: tuple
    classes: tuple
    activities: tuple
    parent: ServiceNetwork = field(repr=False, compare=False)

    def subnetwork(self):
        return self.parent.subnetwork(self.pools, self.classes)


def decompose(net):
    """Split ``net`` into connected components ordered by smallest pool index."""
    pool_of, class_of = net.pool_of, net.class_of
    seen_pool = np.zeros(net.m, dtype=bool)
    comps = []
    for start in range(net.m):
        if seen_pool[start]:
            continue
        pools, classes = {start}, set()
        seen_pool[start] = True
        queue = deque([("pool", start)])
        while queue:
            kind, idx = queue.popleft()
            if kind == "pool":
                nbrs = class_of[pool_of == idx]
                for i in nbrs:
                    if i not in classes:
                        classes.add(int(i))
                        queue.append(("class", int(i)))
            else:
                for h in pool_of[class_of == idx]:
                    if not seen_pool[h]:
                        seen_pool[h] = True
                        pools.add(int(h))
                        queue.append(("pool", int(h)))
        acts = tuple(int(j) for j in np.nonzero(np.isin(pool_of, list(pools)))[0])
        comps.append(NetworkComponent(tuple(sorted(pools)), tuple(sorted(classes)), acts, net))
    return comps


def load_network(path):
    with open(path) as fh:
        return ServiceNetwork.from_dict(json.load(fh))


def save_network(net, path):
    Path(path).write_text(json.dumps(net.to_dict(), indent=2))


def _from_edges(n, m, edges, c, p):
    R = np.zeros((n, len(edges)))
    A = np.zeros((m, len(edges)))
    for j, (i, h) in enumerate(edges):
        R[i, j] = 1.0
        A[h, j] = 1.0
    return ServiceNetwork(R, A, c, p)


def two_class_flexible_network():
    """Two classes, three pools; the middle pool serves both classes.

    Activities in order: (class 0, pool 0), (class 0, pool 1),
    (class 1, pool 1), (class 1, pool 2). Costs ``c = (4, 6, 5)``,
    penalties ``p = (30, 32)``.
    """
    return _from_edges(2, 3, [(0, 0), (0, 1), (1, 1), (1, 2)], [4.0, 6.0, 5.0], [30.0, 32.0])


def six_class_hospital_network(T=24):
    """Six classes and seven pools with four connected components.

    Per-pool costs are the daily totals ``(50, 60, 40, 70, 60, 80, 70)``
    divided by ``T``; penalties are ``(140, 135, 130, 120, 150, 175)``.
    """
    edges = [(0, 0), (1, 1), (1, 2), (2, 3), (3, 3), (4, 4), (4, 5), (5, 5), (5, 6)]
    daily = np.array([50.0, 60.0, 40.0, 70.0, 60.0, 80.0, 70.0])
    return _from_edges(6, 7, edges, daily / T, [140.0, 135.0, 130.0, 120.0, 150.0, 175.0])
