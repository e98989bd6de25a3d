"""Planar domains with analytic distance, normal and tangent fields, plus source terms."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np


class LateralBC(str, Enum):
    PERIODIC = "periodic"
    NEUMANN = "neumann"


@dataclass(frozen=True)
class Disk:
    R: float = 1.0

    def __post_init__(self):
        if self.R <= 0:
            raise ValueError("disk radius must be positive")

    @property
    def diam(self) -> float:
        return 2.0 * self.R

    @property
    def scale(self) -> float:
        """Length over which blow-up asymptotics are fitted."""
        return self.R

    @property
    def components(self) -> tuple:
        return ("outer",)

    def distance(self, x, y):
        return self.R - np.hypot(x, y)

    def normal(self, x, y):
        r = np.hypot(x, y)
        return x / r, y / r

    def tangent(self, x, y):
        nx, ny = self.normal(x, y)
        return -ny, nx


@dataclass(frozen=True)
class Annulus:
    R_in: float = 0.5
    R_out: float = 1.5

    def __post_init__(self):
        if not 0 < self.R_in < self.R_out:
            raise ValueError("annulus needs 0 < R_in < R_out")

    @property
    def diam(self) -> float:
        return 2.0 * self.R_out

    @property
    def scale(self) -> float:
        return 0.5 * (self.R_out - self.R_in)

    @property
    def components(self) -> tuple:
        return ("inner", "outer")

    def distance(self, x, y):
        r = np.hypot(x, y)
        return np.minimum(r - self.R_in, self.R_out - r)

    def normal(self, x, y):
        r = np.hypot(x, y)
        sign = np.where(r - self.R_in < self.R_out - r, -1.0, 1.0)
        return sign * x / r, sign * y / r

    def tangent(self, x, y):
        nx, ny = self.normal(x, y)
        return -ny, nx


@dataclass(frozen=True)
class HalfStrip:
    """{0 < ξ₁ < L} × {0 ≤ ξ' < W}; blow-up (or datum M) sits on ξ₁ = 0."""

    W: float = 4.0
    L: float = 10.0
    lateral_bc: LateralBC = LateralBC.PERIODIC

    def __post_init__(self):
        if self.W <= 0 or self.L <= 0:
            raise ValueError("half-strip needs W, L > 0")

    @property
    def diam(self) -> float:
        return self.L

    @property
    def scale(self) -> float:
        return self.L

    @property
    def components(self) -> tuple:
        return ("bottom",)

    def distance(self, xi1, xi2):
        return np.asarray(xi1, dtype=float) + 0.0 * np.asarray(xi2, dtype=float)

    def normal(self, xi1, xi2):
        z = np.zeros(np.broadcast(np.asarray(xi1), np.asarray(xi2)).shape)
        return z - 1.0, z

    def tangent(self, xi1, xi2):
        z = np.zeros(np.broadcast(np.asarray(xi1), np.asarray(xi2)).shape)
        return z, z + 1.0


Domain2D = Union[Disk, Annulus, HalfStrip]


def parse_domain(text: str) -> Domain2D:
    """``disk:R=1`` | ``annulus:Rin=0.5,Rout=1.5`` | ``halfstrip:W=4,L=10[,bc=neumann]``."""
    kind, _, rest = text.strip().partition(":")
    kw = {}
    for item in filter(None, rest.split(",")):
        k, _, v = item.partition("=")
        kw[k.strip().lower()] = v.strip()
    kind = kind.strip().lower()
    if kind == "disk":
        return Disk(float(kw.get("r", 1.0)))
    if kind == "annulus":
        return Annulus(float(kw.get("rin", 0.5)), float(kw.get("rout", 1.5)))
    if kind == "halfstrip":
        return HalfStrip(float(kw.get("w", 4.0)), float(kw.get("l", 10.0)), LateralBC(kw.get("bc", "periodic")))
    raise ValueError(f"unknown domain {text!r}")


@dataclass(frozen=True)
class SourceSpec:
    """f = const + A sin(k θ) g(r), with g(r) = (r/R)^k so that f is smooth at the origin.

    On the half-strip θ is read as 2π ξ'/W and g ≡ 1.
    """

    const: float = 0.0
    amplitude: float = 0.0
    mode: int = 3

    def polar(self, r, theta, R: float):
        r, theta = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(theta, dtype=float))
        out = np.full(r.shape, self.const)
        if self.amplitude:
            out = out + self.amplitude * np.sin(self.mode * theta) * (r / R) ** self.mode
        return out

    def cartesian(self, xi1, xi2, W: float):
        xi1, xi2 = np.broadcast_arrays(np.asarray(xi1, dtype=float), np.asarray(xi2, dtype=float))
        out = np.full(xi1.shape, self.const)
        if self.amplitude:
            out = out + self.amplitude * np.sin(2.0 * math.pi * self.mode * xi2 / W)
        return out

    @property
    def sup(self) -> float:
        return abs(self.const) + abs(self.amplitude)

    @property
    def radial(self) -> bool:
        return self.amplitude == 0.0


def parse_source(text: str) -> SourceSpec:
    """``0`` | ``const=1`` | ``sin:A=1,k=3[,const=c]``."""
    text = text.strip()
    try:
        return SourceSpec(const=float(text))
    except ValueError:
        pass
    kind, _, rest = text.partition(":")
    kw = {}
    for item in filter(None, (rest if rest else kind).split(",")):
        k, _, v = item.partition("=")
        kw[k.strip().lower()] = float(v)
    if kind.strip().lower() == "sin":
        return SourceSpec(kw.get("const", 0.0), kw.get("a", 1.0), int(kw.get("k", 3)))
    return SourceSpec(const=kw.get("const", 0.0))
