"""Pattern comparison: centroid-aligned raster IoU, boundary Hausdorff distance, stitch-graph isomorphism."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .pattern import Panel, SewingPattern, loop_polygon, sample_boundary, signed_area

DEFAULT_RES = 512
MAX_EXACT_NODES = 12


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class PanelMatch:
    pred: str | None
    gt: str | None
    iou: float


def _rings(panel: Panel) -> list[np.ndarray]:
    return [loop_polygon(panel, li) for li in range(len(panel.loops))]


def _area_centroid(rings: list[np.ndarray]) -> tuple[float, np.ndarray]:
    """Area and centroid of an outer ring minus holes (hole rings subtract regardless of winding)."""
    total, moment = 0.0, np.zeros(2)
    for k, ring in enumerate(rings):
        a = abs(signed_area(ring))
        x, y = ring[:, 0], ring[:, 1]
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cross = x * yn - xn * y
        s = np.sign(cross.sum()) or 1.0
        c = np.array([((x + xn) * cross).sum(), ((y + yn) * cross).sum()]) * s / 6.0
        sign = 1.0 if k == 0 else -1.0
        total += sign * a
        moment += sign * c
    if total <= 0:
        return 0.0, np.zeros(2)
    return total, moment / total


def rasterize_panel(rings: list[np.ndarray], center: np.ndarray, half: float, res: int) -> np.ndarray:
    """Even-odd scanline fill of all rings (holes included) sampled at pixel centers."""
    t = (np.arange(res) + 0.5) / res * 2 * half - half
    xs, ys = t + center[0], t + center[1]
    a = np.vstack(rings)
    b = np.vstack([np.roll(r, -1, axis=0) for r in rings])
    hit = (a[:, 1, None] > ys[None, :]) != (b[:, 1, None] > ys[None, :])        # (edges, rows)
    e, row = np.nonzero(hit)
    ax, ay, bx, by = a[e, 0], a[e, 1], b[e, 0], b[e, 1]
    xint = ax + (ys[row] - ay) * (bx - ax) / (by - ay)
    # a crossing toggles every pixel whose center lies to its right
    first = np.searchsorted(xs, xint, side="right")
    toggles = np.zeros((res, res + 1), dtype=np.int32)
    np.add.at(toggles, (row, first), 1)
    return (np.cumsum(toggles, axis=1)[:, :res] % 2) == 1


def panel_iou(a: Panel, b: Panel, raster_res: int = DEFAULT_RES) -> float:
    if raster_res < 64:
        raise MetricError("raster resolution must be at least 64")
    ra, rb = _rings(a), _rings(b)
    area_a, ca = _area_centroid(ra)
    area_b, cb = _area_centroid(rb)
    if area_a <= 0 or area_b <= 0:
        raise MetricError(f"zero-area panel: {a.name if area_a <= 0 else b.name}")
    ra = [r - ca for r in ra]
    rb = [r - cb for r in rb]
    half = max(np.abs(np.vstack(ra)).max(), np.abs(np.vstack(rb)).max()) * 1.01
    ma = rasterize_panel(ra, np.zeros(2), half, raster_res)
    mb = rasterize_panel(rb, np.zeros(2), half, raster_res)
    union = np.count_nonzero(ma | mb)
    return float(np.count_nonzero(ma & mb) / union) if union else 0.0


def pattern_iou(pred: SewingPattern, gt: SewingPattern,
                raster_res: int = DEFAULT_RES) -> tuple[list[PanelMatch], float]:
    """Greedy one-to-one matching by descending IoU; unmatched panels count as 0 in the mean."""
    pairs = []
    for i, p in enumerate(pred.panels):
        for j, g in enumerate(gt.panels):
            pairs.append((panel_iou(p, g, raster_res), i, j))
    pairs.sort(key=lambda t: (-t[0], t[1], t[2]))
    used_p, used_g, matches = set(), set(), []
    for iou, i, j in pairs:
        if i in used_p or j in used_g:
            continue
        used_p.add(i)
        used_g.add(j)
        matches.append(PanelMatch(pred.panels[i].name, gt.panels[j].name, iou))
    matches += [PanelMatch(p.name, None, 0.0) for i, p in enumerate(pred.panels) if i not in used_p]
    matches += [PanelMatch(None, g.name, 0.0) for j, g in enumerate(gt.panels) if j not in used_g]
    mean = float(np.mean([m.iou for m in matches])) if matches else 0.0
    return matches, mean


def boundary_hausdorff(a: Panel, b: Panel, spacing: float = 0.5) -> float:
    """Symmetric Hausdorff distance between the panels' placed boundaries, in pattern units."""
    def pts(p: Panel) -> np.ndarray:
        return np.vstack([sample_boundary(p, li, spacing).points for li in range(len(p.loops))]) + np.asarray(p.placement)

    pa, pb = pts(a), pts(b)
    return float(max(cKDTree(pb).query(pa)[0].max(), cKDTree(pa).query(pb)[0].max()))


# -- stitch graphs ---------------------------------------------------------------


def stitch_multigraph(p: SewingPattern) -> tuple[list[str], Counter]:
    """Nodes and an edge multiset keyed by (min index, max index); self-stitches are loops."""
    idx = {n: i for i, n in enumerate(p.names)}
    edges = Counter()
    for s in p.stitches:
        i, j = sorted((idx[s.a.panel], idx[s.b.panel]))
        edges[(i, j)] += 1
    return p.names, edges


def _adjacency(n: int, edges: Counter) -> np.ndarray:
    A = np.zeros((n, n), dtype=int)
    for (i, j), k in edges.items():
        A[i, j] += k
        if i != j:
            A[j, i] += k
    return A


def stitch_graph_isomorphic(a: SewingPattern, b: SewingPattern) -> bool:
    na, ea = stitch_multigraph(a)
    nb, eb = stitch_multigraph(b)
    if max(len(na), len(nb)) > MAX_EXACT_NODES:
        raise MetricError(f"stitch graph has more than {MAX_EXACT_NODES} panels")
    if len(na) != len(nb) or sum(ea.values()) != sum(eb.values()):
        return False
    n = len(na)
    A, B = _adjacency(n, ea), _adjacency(n, eb)

    def sig(M, i):
        return (M[i, i], tuple(sorted(M[i])))

    sa = [sig(A, i) for i in range(n)]
    sb = [sig(B, i) for i in range(n)]
    if sorted(sa) != sorted(sb):
        return False
    order = sorted(range(n), key=lambda i: -int(A[i].sum()))
    mapping: dict[int, int] = {}
    taken = [False] * n

    def extend(k: int) -> bool:
        if k == n:
            return True
        i = order[k]
        for j in range(n):
            if taken[j] or sb[j] != sa[i]:
                continue
            if all(A[i, i2] == B[j, j2] for i2, j2 in mapping.items()):
                mapping[i] = j
                taken[j] = True
                if extend(k + 1):
                    return True
                del mapping[i]
                taken[j] = False
        return False

    return extend(0)


# -- report ------------------------------------------------------------------------


def format_report(matches: list[PanelMatch], mean: float) -> str:
    lines = ["pred,gt,iou"]
    for m in matches:
        lines.append(f"{m.pred or ''},{m.gt or ''},{m.iou:.6f}")
    lines.append(f"mean,,{mean:.6f}")
    return "\n".join(lines) + "\n"


def write_report(matches: list[PanelMatch], mean: float, path: str | Path) -> None:
    Path(path).write_text(format_report(matches, mean))
