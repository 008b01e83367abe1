"""Finite-domain constraint search for per-cell survivor offsets.

Every variable takes a value in range(D); each constraint lists its
variables and the set of allowed value tuples (encoded little-endian in
base D).  Search is depth-first with forward checking and the
smallest-domain-first rule; ties go to the lowest variable index, so the
result is deterministic.
"""
from __future__ import annotations

import sys

from .errors import BudgetExceeded


def encode(values, D: int) -> int:
    code, mult = 0, 1
    for v in values:
        code += v * mult
        mult *= D
    return code


class OffsetCSP:
    def __init__(self, nvars: int, D: int):
        self.nvars = nvars
        self.D = D
        self.cons = []          # (vars, allowed codes)
        self.by_var = [[] for _ in range(nvars)]

    def add(self, vars_, allowed):
        vars_ = tuple(vars_)
        if len(set(vars_)) != len(vars_):
            raise ValueError("a constraint may not repeat a variable")
        idx = len(self.cons)
        self.cons.append((vars_, frozenset(allowed)))
        for x in vars_:
            self.by_var[x].append(idx)

    def _prune(self, ci, dom, val):
        """Forward-check constraint ci; returns (var, new domain) or None, or False on wipe-out."""
        vars_, allowed = self.cons[ci]
        free = [x for x in vars_ if val[x] is None]
        if not free:
            return None if encode([val[x] for x in vars_], self.D) in allowed else False
        if len(free) > 1:
            return None
        z = free[0]
        keep = []
        for a in dom[z]:
            vals = [a if x == z else val[x] for x in vars_]
            if encode(vals, self.D) in allowed:
                keep.append(a)
        if not keep:
            return False
        if len(keep) == len(dom[z]):
            return None
        return z, keep

    def solve(self, budget: int = 2_000_000):
        """A satisfying assignment (list of ints) or None when none exists."""
        n, D = self.nvars, self.D
        dom = [list(range(D)) for _ in range(n)]
        val = [None] * n
        # constraints on a single variable restrict it up front
        for ci, (vars_, allowed) in enumerate(self.cons):
            if len(vars_) == 1:
                x = vars_[0]
                dom[x] = [a for a in dom[x] if a in allowed]
                if not dom[x]:
                    return None
        steps = 0
        limit = sys.getrecursionlimit()
        if limit < n + 100:
            sys.setrecursionlimit(n + 100)

        def pick():
            best, bsize = None, D + 1
            for x in range(n):
                if val[x] is None and len(dom[x]) < bsize:
                    best, bsize = x, len(dom[x])
                    if bsize == 1:
                        break
            return best

        def rec():
            nonlocal steps
            x = pick()
            if x is None:
                return True
            for a in list(dom[x]):
                steps += 1
                if steps > budget:
                    raise BudgetExceeded(f"offset search exceeded {budget} steps")
                val[x] = a
                trail = []
                ok = True
                for ci in self.by_var[x]:
                    res = self._prune(ci, dom, val)
                    if res is False:
                        ok = False
                        break
                    if res is not None:
                        z, keep = res
                        trail.append((z, dom[z]))
                        dom[z] = keep
                if ok and rec():
                    return True
                for z, old in reversed(trail):
                    dom[z] = old
                val[x] = None
            return False

        try:
            found = rec()
        finally:
            sys.setrecursionlimit(limit)
        return list(val) if found else None

    def check(self, assignment) -> bool:
        return all(encode([assignment[x] for x in vars_], self.D) in allowed
                   for vars_, allowed in self.cons)
