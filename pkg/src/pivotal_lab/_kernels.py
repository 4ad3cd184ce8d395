"""Event-loop kernels for the hypercube dynamics.

The tribes-family kernel keeps per-tribe plus-counts and the global plus
total, so each event costs O(1) no matter how large the layout is. A pure
Python twin of the kernel serves as the no-numba fallback and as an oracle
in tests.

Modes: 0 tribes indicator, 1 ternary (bribable), 2 bribed majority,
3 plain majority.
"""
from __future__ import annotations

import numpy as np

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - the sandbox ships numba
    numba = None
    HAVE_NUMBA = False


def _tribes_value(mode: int, n_full_plus: int, n_full_minus: int, sum_signs: int) -> int:
    if mode == 0:
        return 1 if n_full_plus > 0 else 0
    f = (1 if n_full_plus > 0 else 0) - (1 if n_full_minus > 0 else 0)
    if mode == 1:
        return f
    if mode == 2 and f != 0:
        return f
    return 1 if sum_signs >= 0 else -1


def tribes_chain_py(bits, tribe_plus, coords, new_bits, resample, l, mode):
    """Reference implementation; mutates bits/tribe_plus in place."""
    k = tribe_plus.shape[0]
    n = bits.shape[0]
    n_full_plus = int(np.count_nonzero(tribe_plus == l))
    n_full_minus = int(np.count_nonzero(tribe_plus == 0))
    plus_total = int(bits.sum())
    value = _tribes_value(mode, n_full_plus, n_full_minus, 2 * plus_total - n)
    initial = value
    changes = 0
    for e in range(coords.shape[0]):
        i = int(coords[e])
        old = int(bits[i])
        new = int(new_bits[e]) if resample else 1 - old
        if new != old:
            bits[i] = new
            t = i // l
            if new == 1:
                tribe_plus[t] += 1
                plus_total += 1
                if tribe_plus[t] == l:
                    n_full_plus += 1
                elif tribe_plus[t] == 1:
                    n_full_minus -= 1
            else:
                tribe_plus[t] -= 1
                plus_total -= 1
                if tribe_plus[t] == l - 1:
                    n_full_plus -= 1
                elif tribe_plus[t] == 0:
                    n_full_minus += 1
        now = _tribes_value(mode, n_full_plus, n_full_minus, 2 * plus_total - n)
        if now != value:
            changes += 1
            value = now
    return changes, initial, value


if HAVE_NUMBA:

    @numba.njit(cache=True, nogil=True)
    def tribes_chain(bits, tribe_plus, coords, new_bits, resample, l, mode):  # pragma: no cover
        k = tribe_plus.shape[0]
        n = bits.shape[0]
        n_full_plus = 0
        n_full_minus = 0
        for t in range(k):
            if tribe_plus[t] == l:
                n_full_plus += 1
            elif tribe_plus[t] == 0:
                n_full_minus += 1
        plus_total = 0
        for i in range(n):
            plus_total += bits[i]
        if mode == 0:
            value = 1 if n_full_plus > 0 else 0
        elif mode == 1:
            value = (1 if n_full_plus > 0 else 0) - (1 if n_full_minus > 0 else 0)
        elif mode == 2:
            value = (1 if n_full_plus > 0 else 0) - (1 if n_full_minus > 0 else 0)
            if value == 0:
                value = 1 if 2 * plus_total - n >= 0 else -1
        else:
            value = 1 if 2 * plus_total - n >= 0 else -1
        initial = value
        changes = 0
        for e in range(coords.shape[0]):
            i = coords[e]
            old = bits[i]
            if resample:
                new = new_bits[e]
            else:
                new = 1 - old
            if new != old:
                bits[i] = new
                t = i // l
                if new == 1:
                    tribe_plus[t] += 1
                    plus_total += 1
                    if tribe_plus[t] == l:
                        n_full_plus += 1
                    elif tribe_plus[t] == 1:
                        n_full_minus -= 1
                else:
                    tribe_plus[t] -= 1
                    plus_total -= 1
                    if tribe_plus[t] == l - 1:
                        n_full_plus -= 1
                    elif tribe_plus[t] == 0:
                        n_full_minus += 1
            if mode == 0:
                now = 1 if n_full_plus > 0 else 0
            elif mode == 1:
                now = (1 if n_full_plus > 0 else 0) - (1 if n_full_minus > 0 else 0)
            elif mode == 2:
                now = (1 if n_full_plus > 0 else 0) - (1 if n_full_minus > 0 else 0)
                if now == 0:
                    now = 1 if 2 * plus_total - n >= 0 else -1
            else:
                now = 1 if 2 * plus_total - n >= 0 else -1
            if now != value:
                changes += 1
                value = now
        return changes, initial, value

else:  # pragma: no cover
    tribes_chain = None
