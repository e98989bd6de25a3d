"""Graded 1D grids and finite-difference weights on nonuniform nodes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GradedGrid:
    """Geometric grid on [0, length]: node density ~ 1/(distance to x = 0).

    Blow-up problems start at ``eps_rel * length``; value problems place a
    node at 0 followed by a geometric run starting at ``h0_rel * length``.
    With ``offset`` set, value nodes are instead graded toward the point
    x = -offset, which suits profiles that are smooth at x = 0 (tiny cells
    would leave u'' to round-off there). ``per_decade`` raises the node count
    so the log-spacing stays fixed however small the offset is.
    """

    length: float
    n: int = 4001
    eps_rel: float = 1e-3
    h0_rel: float = 1e-12
    max_nodes: int = 100_000
    offset: float = 0.0
    per_decade: int = 0

    def __post_init__(self):
        if self.length <= 0 or self.n < 5:
            raise ValueError("grid needs positive length and at least 5 nodes")
        if self.n > self.max_nodes:
            raise ValueError(f"{self.n} nodes exceeds the cap of {self.max_nodes}")

    def blowup_nodes(self, eps=None):
        eps = self.eps_rel * self.length if eps is None else eps
        return np.geomspace(eps, self.length, self.n)

    def value_nodes(self):
        if self.offset > 0:
            n = self.n
            if self.per_decade:
                decades = np.log10((self.length + self.offset) / self.offset)
                n = min(max(n, int(np.ceil(self.per_decade * decades)) + 1), self.max_nodes)
            x = np.geomspace(self.offset, self.length + self.offset, n) - self.offset
            x[0], x[-1] = 0.0, self.length
            return x
        return np.concatenate([[0.0], np.geomspace(self.h0_rel * self.length, self.length, self.n - 1)])


def fd_weights(z: float, x: np.ndarray, m: int) -> np.ndarray:
    """Fornberg weights: row k approximates the k-th derivative at z from nodes x."""
    n = len(x)
    c = np.zeros((m + 1, n))
    c1, c4 = 1.0, x[0] - z
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2, c5, c4 = 1.0, c4, x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[k, i] = c1 * (k * c[k - 1, i - 1] - c5 * c[k, i - 1]) / c2
                c[0, i] = -c1 * c5 * c[0, i - 1] / c2
            for k in range(mn, 0, -1):
                c[k, j] = (c4 * c[k, j] - k * c[k - 1, j]) / c3
            c[0, j] = c4 * c[0, j] / c3
        c1 = c2
    return c


def three_point(x: np.ndarray):
    """Second-order weights for u' and u'' at interior nodes of a nonuniform grid.

    Returns (hm, hp, (w1m, w10, w1p), (w2m, w20, w2p)).
    """
    return weights_from_spacing(x[1:-1] - x[:-2], x[2:] - x[1:-1])


def weights_from_spacing(hm: np.ndarray, hp: np.ndarray):
    """As :func:`three_point`, from the left/right spacings directly."""
    s = hm + hp
    w1 = (-hp / (hm * s), (hp - hm) / (hm * hp), hm / (hp * s))
    w2 = (2.0 / (hm * s), -2.0 / (hm * hp), 2.0 / (hp * s))
    return hm, hp, w1, w2


def derivative(x: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Second-order first derivative on a nonuniform grid (one-sided at the ends)."""
    du = np.empty_like(u)
    _, _, w1, _ = three_point(x)
    du[1:-1] = w1[0] * u[:-2] + w1[1] * u[1:-1] + w1[2] * u[2:]
    for idx, sl in ((0, slice(0, 3)), (-1, slice(-3, None))):
        w = fd_weights(x[idx], x[sl], 1)[1]
        du[idx] = w @ u[sl]
    return du
