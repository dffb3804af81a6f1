#!/usr/bin/env python3
"""Straight-line reference for the keyed token hash.

Prints the golden rows used by tests/unit/test_prf.cpp and data/VECTORS.tsv.
Independent of the C++ sources on purpose.
"""

MASK64 = (1 << 64) - 1
Q = [2177342782468422707, 2048842555723151407, 1920342328977880183,
     1791842102232608861, 1663341875487337657, 1534841648742066419,
     1406341421996795033, 1277841195251523757]
P2 = 2302262473113099467
P3 = 2173762246367828251
P4 = 2045262019622556907
PMIX = 1916761792877285723
SHIFT = 29


def hash_raw(token, window, key):
    h = P2 * token
    for i, w in enumerate(window):
        h += Q[i] * w
    h += P3 * key
    h = (h * P4) & MASK64
    h ^= h >> SHIFT
    m = (h * PMIX) & MASK64
    m ^= m >> SHIFT
    m = (m * PMIX) & MASK64
    m ^= m >> SHIFT
    return m & 0xFFFFFFFF


CASES = [
    (0, [0, 0, 0], 0),
    (1, [0, 0, 0], 0),
    (0, [1, 0, 0], 0),
    (0, [0, 0, 0], 1),
    (7, [1, 2, 3], 42),
    (7, [3, 2, 1], 42),
    (65, [84, 104, 101], 12345),
    (4095, [4095, 4095, 4095], 2**64 - 1),
    (17, [5], 99),
    (17, [5, 6], 99),
    (17, [5, 6, 7, 8], 99),
    (17, [1, 2, 3, 4, 5, 6, 7, 8], 99),
    (123456, [654321, 111, 222], 0xDEADBEEFCAFEBABE),
    (3, [10, 20, 30], 0x9E3779B97F4A7C15),
    (2**32 - 1, [2**32 - 1, 0, 2**32 - 1], 7),
    (100, [200, 300, 400], 2**63),
    (0, [0, 0, 0], 2**64 - 1),
    (31, [41, 59, 26], 535897932),
]

if __name__ == "__main__":
    print("# token\twindow\tkey\thash_raw\tu")
    for tok, win, key in CASES:
        h = hash_raw(tok, win, key)
        u = (h + 0.5) / 2**32
        print(f"{tok}\t{','.join(map(str, win))}\t{key}\t{h}\t{u:.17g}")
