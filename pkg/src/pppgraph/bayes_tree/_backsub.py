"""Array-backed storage of clique solves and the top-down back-substitution kernel."""

from __future__ import annotations

import numpy as np

try:  # pragma: no cover - exercised implicitly
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f

        return wrap


@njit(cache=True)
def _backsub_kernel(roots, first_child, next_sibling, forced, a_off, nf, m_off, ns, f_off, s_off,
                    a_pool, m_pool, f_pool, s_pool, delta, tol, changed):
    stack = np.empty(first_child.size + roots.size, dtype=np.int64)
    sp = 0
    for r in roots:
        stack[sp] = r
        sp += 1
    count = 0
    while sp > 0:
        sp -= 1
        c = stack[sp]
        so = s_off[c]
        n_s = ns[c]
        if not forced[c]:
            hit = False
            for j in range(n_s):
                if changed[s_pool[so + j]]:
                    hit = True
                    break
            if not hit:
                continue
        count += 1
        fo = f_off[c]
        ao = a_off[c]
        mo = m_off[c]
        for i in range(nf[c]):
            v = a_pool[ao + i]
            base = mo + i * n_s
            for j in range(n_s):
                v -= m_pool[base + j] * delta[s_pool[so + j]]
            col = f_pool[fo + i]
            changed[col] = abs(v - delta[col]) > tol
            delta[col] = v
        ch = first_child[c]
        while ch >= 0:
            stack[sp] = ch
            sp += 1
            ch = next_sibling[ch]
    return count


class _Growable:
    __slots__ = ("data", "size")

    def __init__(self, dtype, cap=1024):
        self.data = np.zeros(cap, dtype=dtype)
        self.size = 0

    def extend(self, values) -> int:
        n = values.size
        start = self.size
        if start + n > self.data.size:
            cap = self.data.size
            while cap < start + n:
                cap *= 2
            new = np.zeros(cap, dtype=self.data.dtype)
            new[:start] = self.data[:start]
            self.data = new
        self.data[start:start + n] = values
        self.size = start + n
        return start

    def append(self, value) -> int:
        if self.size >= self.data.size:
            new = np.zeros(self.data.size * 2, dtype=self.data.dtype)
            new[: self.size] = self.data
            self.data = new
        self.data[self.size] = value
        self.size += 1
        return self.size - 1


class CliqueStore:
    """Flat copies of each clique's solve ``x_f = a - M x_s`` plus the tree links."""

    def __init__(self):
        self._reset()

    def _reset(self):
        i8 = np.int64
        self.a_off, self.nf, self.m_off, self.ns = (_Growable(i8) for _ in range(4))
        self.f_off, self.s_off = _Growable(i8), _Growable(i8)
        self.first_child, self.next_sibling = _Growable(i8), _Growable(i8)
        self.forced = _Growable(np.bool_)
        self.a_pool, self.m_pool = _Growable(np.float64, 4096), _Growable(np.float64, 16384)
        self.f_pool, self.s_pool = _Growable(i8, 4096), _Growable(i8, 4096)
        self.live_floats = 0

    def add(self, clique) -> int:
        slot = self.a_off.append(self.a_pool.extend(clique.a))
        self.nf.append(clique.a.size)
        self.m_off.append(self.m_pool.extend(clique.M.ravel()))
        self.ns.append(clique.sidx.size)
        self.f_off.append(self.f_pool.extend(clique.fidx))
        self.s_off.append(self.s_pool.extend(clique.sidx))
        self.first_child.append(-1)
        self.next_sibling.append(-1)
        self.forced.append(False)
        self.live_floats += clique.M.size + clique.a.size
        clique.slot = slot
        return slot

    def remove(self, clique) -> None:
        self.live_floats -= clique.M.size + clique.a.size

    def link(self, child, parent) -> None:
        fc = self.first_child.data
        self.next_sibling.data[child.slot] = fc[parent.slot]
        fc[parent.slot] = child.slot

    def needs_compaction(self) -> bool:
        used = self.m_pool.size + self.a_pool.size
        return used > 1_000_000 and used > 4 * self.live_floats

    def rebuild(self, roots) -> None:
        """Re-pack all live cliques (drops storage of replaced ones)."""
        self._reset()
        stack = list(roots)
        order = []
        while stack:
            c = stack.pop()
            self.add(c)
            order.append(c)
            stack.extend(c.children)
        for c in order:
            for ch in c.children:
                self.link(ch, c)

    def backsubstitute(self, roots, forced, delta, tol) -> int:
        fl = self.forced.data
        for c in forced:
            fl[c.slot] = True
        changed = np.zeros(delta.size, dtype=np.bool_)
        count = _backsub_kernel(
            np.array([r.slot for r in roots], dtype=np.int64),
            self.first_child.data[: self.first_child.size], self.next_sibling.data, fl,
            self.a_off.data, self.nf.data, self.m_off.data, self.ns.data, self.f_off.data, self.s_off.data,
            self.a_pool.data, self.m_pool.data, self.f_pool.data, self.s_pool.data, delta, float(tol), changed,
        )
        for c in forced:
            fl[c.slot] = False
        return int(count)
