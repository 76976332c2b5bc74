"""Pulling a covering back along an open surjective homomorphism."""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Callable

from ..model import GroupModel
from .structure import EXHAUSTIVE, CoveringCertificate, verify_covering

PAIR_LIMIT = 10**6


class NotSurjective(ValueError):
    pass


@dataclass(eq=False)
class Homomorphism:
    source: GroupModel
    target: GroupModel
    fn: Callable
    name: str = ""

    def __call__(self, x) -> tuple:
        return tuple(self.fn(tuple(x)))

    def descriptor(self) -> dict:
        return {"name": self.name, "source": self.source.descriptor(),
                "target": self.target.descriptor()}


def reduction_mod(source_sizes, target_sizes) -> Homomorphism:
    """Coordinatewise ``Z_m -> Z_k`` reduction; needs ``k | m``."""
    source_sizes, target_sizes = tuple(source_sizes), tuple(target_sizes)
    if len(source_sizes) != len(target_sizes) or any(m % k for m, k in zip(source_sizes, target_sizes)):
        raise ValueError("each target modulus must divide its source modulus")
    G = GroupModel.cyclic_product(source_sizes)
    H = GroupModel.cyclic_product(target_sizes)
    return Homomorphism(G, H, lambda x: tuple(v % k for v, k in zip(x, target_sizes)),
                        f"mod {target_sizes}")


def drop_coordinates(sizes, keep: int) -> Homomorphism:
    """Projection onto the first ``keep`` coordinates."""
    sizes = tuple(sizes)
    G = GroupModel.cyclic_product(sizes)
    H = GroupModel.cyclic_product(sizes[:keep])
    return Homomorphism(G, H, lambda x: x[:keep], f"first {keep} coordinates")


def identity_hom(model: GroupModel) -> Homomorphism:
    return Homomorphism(model, model, lambda x: x, "identity")


@dataclass
class HomReport:
    homomorphism: bool
    surjective: bool
    graded_open: bool
    mode: str
    failure: object = None

    @property
    def passed(self) -> bool:
        return self.homomorphism and self.surjective and self.graded_open


def check_homomorphism(h: Homomorphism, seed: int = 0) -> HomReport:
    """Multiplicativity (exhaustive on small sources), surjectivity, and
    graded openness: the image of every depth-``k`` cylinder contains a
    target cylinder of depth ``<= k``."""
    G, H = h.source, h.target
    n = len(G)
    if n * n <= PAIR_LIMIT:
        mode = "exhaustive"
        pairs = itertools.product(G.elements, repeat=2)
    else:
        mode = "sampled"
        rng = random.Random(seed)
        pairs = ((rng.choice(G.elements), rng.choice(G.elements)) for _ in range(10**5))
    failure = None
    hom_ok = True
    for a, b in pairs:
        if h(G.op(a, b)) != H.op(h(a), h(b)):
            hom_ok, failure = False, ("product", a, b)
            break
    image = {h(x) for x in G.elements}
    surj = image == set(H.elements)
    if not surj and failure is None:
        failure = ("missed", min(set(H.elements) - image))
    open_ok = True
    for k in range(G.depth + 1):
        for stem in G.stems(k):
            img = {h(x) for x in G.cylinder(stem)}
            depth = min(k, H.depth)
            if not any(H.cylinder(t) <= img for t in H.stems(depth) if t in {y[:depth] for y in img}):
                open_ok = False
                if failure is None:
                    failure = ("not open", stem)
                break
        if not open_ok:
            break
    return HomReport(hom_ok, surj, open_ok, mode, failure)


def pullback_covering(h: Homomorphism, cert_H: CoveringCertificate) -> CoveringCertificate:
    """``B = h^{-1}(C)`` and one least preimage ``y`` for each translator."""
    rep = check_homomorphism(h)
    if not rep.surjective:
        raise NotSurjective(f"{h.name} misses {rep.failure}")
    if not rep.passed:
        raise ValueError(f"{h.name} is not an open homomorphism: {rep.failure}")
    if cert_H.status != EXHAUSTIVE:
        raise ValueError(f"target certificate status is {cert_H.status!r}")
    G = h.source
    B = frozenset(x for x in G.elements if h(x) in cert_H.C)
    Y = []
    for x in cert_H.X:
        Y.append(min(y for y in G.elements if h(y) == x))
    grade = min(cert_H.grade, G.depth - 1) if G.depth else 0
    cert = CoveringCertificate(G, tuple(Y), B, grade, f"pullback of {cert_H.predicate}".strip())
    return verify_covering(cert)


def shipped_homomorphisms() -> list:
    """``Z_4^2 -> Z_2^2`` by reduction and ``Z_2^3 -> Z_2^2`` by projection."""
    return [reduction_mod((4, 4), (2, 2)), drop_coordinates((2, 2, 2), 2)]
