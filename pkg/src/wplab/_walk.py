"""Depth-first walk over freely reduced words with per-shell accumulation.

Letters are integers 0..3 in alphabet order (g1, g2, g1^-1, g2^-1); the
inverse of letter k is (k + 2) % 4.  The walk visits words in lexicographic
order, so every shell is accumulated in canonical order and the result is
bit-reproducible.  Sums use Neumaier's compensated accumulation.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from numba import njit

MODE_COUNT = 0
MODE_PSERIES = 1
MODE_PAIRING = 2

# per-shell slots
S_SUM, S_COMP, S_N, S_SUM2, S_COMP2, S_N2, S_MINU, S_BAD = range(8)
NSLOT = 8


@njit(cache=True, nogil=True)
def riera_summand_kernel(u):
    if u > 4.0:
        # 2u atanh(1/u) - 2 = sum_k 2 u^(-2k) / (2k + 1)
        w = 1.0 / (u * u)
        acc = 0.0
        p = w
        for k in range(1, 16):
            acc += 2.0 * p / (2.0 * k + 1.0)
            p *= w
        return acc
    return u * (math.log1p(1.0 / u) - math.log1p(-1.0 / u)) - 2.0


@njit(cache=True, nogil=True)
def _add(out, n, slot, x):
    # Neumaier step on (sum, comp) stored in out[n, slot], out[n, slot + 1]
    s = out[n, slot]
    t = s + x
    if abs(s) >= abs(x):
        out[n, slot + 1] += (s - t) + x
    else:
        out[n, slot + 1] += (x - t) + s
    out[n, slot] = t


@njit(cache=True, nogil=True)
def _visit(out, n, a, b, c, d, mode, prm):
    if mode == 0:
        out[n, 2] += 1.0
    elif mode == 1:
        x = prm[0]
        y = prm[1]
        r2 = prm[2]
        t = abs(a * c * r2 + b * d + (a * d + b * c) * x) / y
        e = t + math.sqrt(1.0 + t * t)
        _add(out, n, 0, 1.0 / (e * e))
        out[n, 2] += 1.0
    else:
        m1 = prm[0]
        m2 = prm[1]
        m3 = prm[2]
        m4 = prm[3]
        root = prm[4]
        diff = (a * d + b * c) * (m1 - m4) + 2.0 * (b * d * m3 - a * c * m2)
        cs = diff / root
        u = abs(cs)
        if u < 1.0 - 1e-12:
            _add(out, n, 3, cs)
            out[n, 5] += 1.0
        elif u <= 1.0 + 1e-12:
            out[n, 7] += 1.0
        else:
            _add(out, n, 0, riera_summand_kernel(u))
            out[n, 2] += 1.0
            if u < out[n, 6]:
                out[n, 6] = u


@njit(cache=True, nogil=True)
def walk(gens, start, start_last, start_len, depth, last_ok, mode, prm, out):
    """Visit the prefix with entries ``start`` and every reduced extension
    up to ``depth`` letters, accumulating into ``out[length]``."""
    ma = np.empty(depth + 1)
    mb = np.empty(depth + 1)
    mc = np.empty(depth + 1)
    md = np.empty(depth + 1)
    let = np.empty(depth + 1, np.int64)
    nxt = np.empty(depth + 2, np.int64)
    ma[start_len] = start[0]
    mb[start_len] = start[1]
    mc[start_len] = start[2]
    md[start_len] = start[3]
    let[start_len] = start_last
    if start_last < 0 or last_ok[start_last]:
        _visit(out, start_len, start[0], start[1], start[2], start[3], mode, prm)
    if depth == start_len:
        return
    n = start_len + 1
    nxt[n] = 0
    while n > start_len:
        k = nxt[n]
        if k == 4:
            n -= 1
            continue
        nxt[n] = k + 1
        p = let[n - 1]
        if p >= 0 and k == (p + 2) % 4:
            continue
        a0 = ma[n - 1]
        b0 = mb[n - 1]
        c0 = mc[n - 1]
        d0 = md[n - 1]
        ga = gens[k, 0]
        gb = gens[k, 1]
        gc = gens[k, 2]
        gd = gens[k, 3]
        a = a0 * ga + b0 * gc
        b = a0 * gb + b0 * gd
        c = c0 * ga + d0 * gc
        d = c0 * gb + d0 * gd
        ma[n] = a
        mb[n] = b
        mc[n] = c
        md[n] = d
        let[n] = k
        if last_ok[k]:
            _visit(out, n, a, b, c, d, mode, prm)
        if n < depth:
            n += 1
            nxt[n] = 0


def thread_count() -> int:
    raw = os.environ.get("WP_LAB_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = 1
    return max(1, n)


def _new_out(depth):
    out = np.zeros((depth + 1, NSLOT))
    out[:, S_MINU] = np.inf
    return out


def shells(gens, depth, first_ok, last_ok, mode, prm, threads=None):
    """Per-shell accumulators for all reduced words of length 1..depth whose
    first letter is allowed by ``first_ok`` and last letter by ``last_ok``.

    Returns an array of shape (depth + 1, NSLOT) with compensated sums
    folded in.  The work is split into fixed prefix tasks independent of the
    thread count, so results are bit-identical for any ``threads``.
    """
    gens = np.ascontiguousarray(gens, dtype=np.float64)
    first_ok = np.asarray(first_ok, dtype=np.bool_)
    last_ok = np.asarray(last_ok, dtype=np.bool_)
    prm = np.asarray(prm, dtype=np.float64)
    if depth <= 0:
        return _new_out(max(depth, 0))
    tasks = []
    for k in range(4):
        if not first_ok[k]:
            continue
        if depth == 1:
            tasks.append((gens[k].copy(), k, 1))
            continue
        # split on the second letter; the one-letter word is visited separately
        tasks.append((gens[k].copy(), k, -1))
        for j in range(4):
            if j == (k + 2) % 4:
                continue
            g, h = gens[k], gens[j]
            m = np.array([g[0] * h[0] + g[1] * h[2], g[0] * h[1] + g[1] * h[3],
                          g[2] * h[0] + g[3] * h[2], g[2] * h[1] + g[3] * h[3]])
            tasks.append((m, j, 2))

    def run(task):
        m, last, length = task
        out = _new_out(depth)
        if length == -1:
            walk(gens, m, last, 1, 1, last_ok, mode, prm, out)
        else:
            walk(gens, m, last, length, depth, last_ok, mode, prm, out)
        return out

    threads = thread_count() if threads is None else threads
    if threads > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, tasks))
    else:
        parts = [run(t) for t in tasks]
    total = _new_out(depth)
    for n in range(depth + 1):
        for slot in (S_SUM, S_SUM2):
            total[n, slot] = math.fsum(x for p in parts for x in (p[n, slot], p[n, slot + 1]))
        for slot in (S_N, S_N2, S_BAD):
            total[n, slot] = sum(p[n, slot] for p in parts)
        total[n, S_MINU] = min(p[n, S_MINU] for p in parts)
    return total
