#!/usr/bin/env python3
"""Write the (128,64) short-block LDPC parity-check matrix as an alist file.

The matrix is a 4x8 array of 16x16 blocks; each block is zero, a circulant
permutation (identity shifted right by s), or identity plus a circulant.
"""
import sys

M = 16
# (shift list) per block; [] means all-zero block, 'I' means identity summand.
BLOCKS = [
    [["I", 7], [2], [14], [6], [], [0], [13], ["I"]],
    [[6], ["I", 15], [0], [1], ["I"], [], [0], [7]],
    [[4], [1], ["I", 15], [14], [11], ["I"], [], [3]],
    [[0], [1], [9], ["I", 13], [14], [1], ["I"], []],
]


def build():
    rows, cols = 4 * M, 8 * M
    H = [[0] * cols for _ in range(rows)]
    for br, blk_row in enumerate(BLOCKS):
        for bc, terms in enumerate(blk_row):
            for t in terms:
                s = 0 if t == "I" else t
                for i in range(M):
                    H[br * M + i][bc * M + (i + s) % M] ^= 1
    return H


def rank(H):
    rows = [int("".join(map(str, r)), 2) for r in H]
    r = 0
    for bit in reversed(range(len(H[0]))):
        piv = next((i for i in range(r, len(rows)) if rows[i] >> bit & 1), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        for i in range(len(rows)):
            if i != r and rows[i] >> bit & 1:
                rows[i] ^= rows[r]
        r += 1
    return r


def alist(H):
    m, n = len(H), len(H[0])
    col_nb = [[i + 1 for i in range(m) if H[i][j]] for j in range(n)]
    row_nb = [[j + 1 for j in range(n) if H[i][j]] for i in range(m)]
    out = [f"{n} {m}", f"{max(map(len, col_nb))} {max(map(len, row_nb))}"]
    out.append(" ".join(str(len(c)) for c in col_nb))
    out.append(" ".join(str(len(r)) for r in row_nb))
    cmax, rmax = max(map(len, col_nb)), max(map(len, row_nb))
    out += [" ".join(map(str, c + [0] * (cmax - len(c)))) for c in col_nb]
    out += [" ".join(map(str, r + [0] * (rmax - len(r)))) for r in row_nb]
    return "\n".join(out) + "\n"


if __name__ == "__main__":
    H = build()
    print("rank", rank(H), file=sys.stderr)
    sys.stdout.write(alist(H))
