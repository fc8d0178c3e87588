"""Lazy, cached construction of every stage for one JobConfig."""
from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .cache import CacheStore
from .config import JobConfig, default_cache_dir
from .dclattice import Block, DCLattice, build_dc_family, build_dc_lattice, stack_length, stack_weight_bases
from .filtrations import FiltrationContext, build_context, delta_component
from .hecke import LatticeOperators, RestrictedOperators, algebra_from_family, build_algebra, decompose_local
from .qseries import DirichletCharacter
from .spaces import PrecisionPolicy, build_weight_basis, make_level


@dataclass
class Check:
    label: str
    stage: str
    passed: bool
    detail: str = ""


class Pipeline:
    def __init__(self, cfg: JobConfig, cache: Optional[CacheStore] = None, use_cache: bool = True):
        self.cfg = cfg.validate()
        self.level = make_level(cfg.p, cfg.N0, cfg.r)
        self.policy = PrecisionPolicy(self.level, cfg.wmax, guard=cfg.guard)
        if cache is None and use_cache:
            cache = CacheStore(default_cache_dir(cfg))
        self.cache = cache
        self.checks: list = []
        self._memo = {}

    # ---- bookkeeping

    def check(self, label: str, stage: str, passed: bool, detail: str = "") -> bool:
        self.checks.append(Check(label, stage, bool(passed), detail))
        return bool(passed)

    def _once(self, key, build):
        if key not in self._memo:
            self._memo[key] = build()
        return self._memo[key]

    @property
    def p(self) -> int:
        return self.cfg.p

    # ---- stages

    def weight_basis(self, k: int, eps):
        """S_k(eps) at precision B + 1, cached by (k, eps)."""
        def build():
            B = self.policy.B()
            name = f"basis_{self.cfg.ident()}_k{k}_{eps.label()}"
            if self.cache is not None and self.cache.has(name):
                A, _ = self.cache.get_matrix(name)
                prm = self.cache.params(name)
                return A, prm["pivots"], prm["digits"]
            wb = build_weight_basis(k, self.level, "cuspidal", self.policy, eps, B + 1)
            if self.cache is not None:
                self.cache.put_matrix(name, wb.basis, f"Z{self.p}^{wb.digits}", "weight_basis",
                                      {"k": k, "eps": list(eps.exps), "pivots": list(wb.pivots),
                                       "digits": wb.digits})
            return wb.basis, list(wb.pivots), wb.digits
        return self._once(("wb", k, eps.label()), build)

    def stacked(self):
        def build():
            W = self.cfg.wmax
            name = f"stack_{self.cfg.ident()}"
            if self.cache is not None and self.cache.has(name):
                A, _ = self.cache.get_matrix(name)
                prm = self.cache.params(name)
                blocks = [Block(b[0], DirichletCharacter(self.level.N, tuple(b[1])), b[2], b[3], tuple(b[4]))
                          for b in prm["blocks"]]
                return np.asarray(A, dtype=object), blocks, prm["digits"]
            length = stack_length(self.level, self.policy, W)
            stack, blocks, digits = stack_weight_bases(W, self.level, self.policy, length)
            if self.cache is not None:
                prm = {"digits": digits, "length": length,
                       "blocks": [[b.weight, list(b.eps.exps), b.start, b.stop, list(b.pivots)] for b in blocks]}
                self.cache.put_matrix(name, stack, f"Z{self.p}^{digits}", "stack", prm)
            return stack, blocks, digits
        return self._once("stack", build)

    def top(self) -> DCLattice:
        return self._once("top", lambda: build_dc_lattice(self.cfg.wmax, self.level, self.policy,
                                                          stacked=self.stacked()))

    def family(self):
        return self._once("family", lambda: build_dc_family(self.cfg.wmax, self.level, self.policy, top=self.top()))

    def ops(self) -> LatticeOperators:
        return self._once("ops", lambda: LatticeOperators(self.top()))

    def ops_at(self, w: int):
        if w == self.cfg.wmax:
            return self.ops()
        return self._once(("ops", w), lambda: RestrictedOperators(self.family(), w, self.ops()))

    def algebra_at(self, w: int, n: int):
        if w == self.cfg.wmax:
            return self._once(("alg", n), lambda: build_algebra("full", self.ops(), n=n))
        return self._once(("alg", w, n), lambda: algebra_from_family(self.family(), w, self.ops(), n))

    def components_at(self, w: int, n: int) -> list:
        if w == self.cfg.wmax:
            return self.context(n).components
        return self._once(("comps", w, n), lambda: decompose_local(self.algebra_at(w, n), self.ops_at(w)))

    def context(self, n: Optional[int] = None) -> FiltrationContext:
        n = self.cfg.n if n is None else n
        return self._once(("ctx", n), lambda: build_context(self.family(), self.ops(), self.policy, n))

    def delta_component(self, n: Optional[int] = None):
        return delta_component(self.context(n))

    def direct_family(self, n: int):
        """The family D_w built straight at output precision p^n, independent of the O-stage.

        The construction precision starts at n + 16 digits and grows by 8
        until saturation certifies the full rank with n exact digits.
        """
        def build():
            from .zpmat import PrecisionError
            hi = n + 16
            while True:
                pol = PrecisionPolicy(self.level, self.cfg.wmax, guard=self.cfg.guard, digits=n,
                                      hi_digits=hi, min_digits=n)
                try:
                    top = build_dc_lattice(self.cfg.wmax, self.level, pol)
                    return build_dc_family(self.cfg.wmax, self.level, pol, top=top), hi
                except PrecisionError:
                    if hi > 4 * self.policy.hi_digits:
                        raise
                    hi += 8
        return self._once(("direct", n), build)

    # ---- reports

    def out_path(self, name: str) -> str:
        os.makedirs(self.cfg.out_dir, exist_ok=True)
        return os.path.join(self.cfg.out_dir, name)

    def write_json(self, name: str, obj) -> str:
        path = self.out_path(name)
        doc = {"schema": "dcweak-report/1", "config": self.cfg.to_text().splitlines(), "body": obj}
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1, sort_keys=True, default=_jsonable)
            fh.write("\n")
        return path

    def write_csv(self, name: str, header: list, rows: list) -> str:
        path = self.out_path(name)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["# schema=dcweak-table/1"])
            w.writerow(header)
            w.writerows(rows)
        return path

    def write_checks(self) -> str:
        return self.write_csv("checks.csv", ["label", "stage", "result", "detail"],
                              [[c.label, c.stage, "pass" if c.passed else "fail", c.detail] for c in self.checks])


def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, float) and x == float("inf"):
        return "inf"
    return str(x)
