"""Marching squares on a regular grid."""
from __future__ import annotations

import numpy as np

# corner k and edge k run counter-clockwise: 00, 01, 11, 10
_CORNERS = ((0, 0), (0, 1), (1, 1), (1, 0))


def _edge_key(i: int, j: int, k: int) -> tuple:
    if k == 0:
        return ("h", i, j)
    if k == 1:
        return ("v", i, j + 1)
    if k == 2:
        return ("h", i + 1, j)
    return ("v", i, j)


def _edge_point(values, xs, ys, key) -> tuple[float, float]:
    kind, i, j = key
    if kind == "h":
        va, vb = values[i, j], values[i, j + 1]
        t = va / (va - vb)
        return (xs[j] + t * (xs[j + 1] - xs[j]), ys[i])
    va, vb = values[i, j], values[i + 1, j]
    t = va / (va - vb)
    return (xs[j], ys[i] + t * (ys[i + 1] - ys[i]))


def marching_squares(values: np.ndarray, xs: np.ndarray, ys: np.ndarray, centre=None):
    """Zero level set of ``values[i, j]`` sampled at ``(xs[j], ys[i])``.

    Negative samples are inside.  Ambiguous saddle cells are resolved by
    the sign of ``centre(i, j)``, the function sampled at the cell middle;
    without it the cell mean is used.

    Returns a list of ``(n, 2)`` arrays.  Closed curves repeat their first
    point at the end and are oriented counter-clockwise.
    """
    inside = values < 0
    segments: list[tuple] = []
    count = (
        inside[:-1, :-1].astype(int) + inside[:-1, 1:] + inside[1:, 1:] + inside[1:, :-1]
    )
    mixed = np.argwhere((count > 0) & (count < 4))
    for i, j in mixed:
        i, j = int(i), int(j)
        sig = [bool(inside[i + di, j + dj]) for di, dj in _CORNERS]
        cross = [k for k in range(4) if sig[k] != sig[(k + 1) % 4]]
        if len(cross) == 2:
            segments.append((_edge_key(i, j, cross[0]), _edge_key(i, j, cross[1])))
            continue
        if centre is not None:
            mid = centre(i, j) < 0
        else:
            mid = values[i : i + 2, j : j + 2].mean() < 0
        if mid == sig[0]:
            pairs = ((0, 1), (2, 3))
        else:
            pairs = ((3, 0), (1, 2))
        for a, b in pairs:
            segments.append((_edge_key(i, j, a), _edge_key(i, j, b)))

    by_edge: dict[tuple, list[int]] = {}
    for n, (a, b) in enumerate(segments):
        by_edge.setdefault(a, []).append(n)
        by_edge.setdefault(b, []).append(n)

    used = [False] * len(segments)

    def walk(start_seg: int, start_key) -> list:
        chain = [start_key]
        seg, key = start_seg, start_key
        while True:
            used[seg] = True
            a, b = segments[seg]
            key = b if key == a else a
            chain.append(key)
            nxt = [s for s in by_edge[key] if not used[s]]
            if not nxt:
                return chain
            seg = nxt[0]

    chains = []
    # open chains start at edges touched once
    for key in sorted(by_edge):
        if len(by_edge[key]) == 1 and not used[by_edge[key][0]]:
            chains.append(walk(by_edge[key][0], key))
    for n in range(len(segments)):
        if not used[n]:
            chains.append(walk(n, segments[n][0]))

    out = []
    for chain in chains:
        pts = np.array([_edge_point(values, xs, ys, k) for k in chain])
        closed = chain[0] == chain[-1]
        if closed:
            x, y = pts[:, 0], pts[:, 1]
            area = 0.5 * np.sum(x[:-1] * y[1:] - x[1:] * y[:-1])
            if area < 0:
                pts = pts[::-1]
        out.append(pts)
    return out
