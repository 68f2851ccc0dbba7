"""Hierarchical density-based clustering over angular distances.

The full pipeline: core distances at the min_cluster_size-th neighbor,
mutual reachability distances, an exact minimum spanning tree, the
single-linkage dendrogram, the condensed cluster tree, and stability-based
flat extraction.  Cluster count is an output, never an input, and points
far from any dense region stay labeled as noise (-1).

One deliberate deviation from the common library default: the tree root is
eligible for selection, so a set of points forming a single dense clump
comes back as one cluster rather than all-noise.  For resolver-list
discovery a one-cluster topic is a perfectly good outcome.
"""

from collections import defaultdict

import numpy as np

__all__ = [
    "cluster_topic",
    "hdbscan_from_distances",
    "pairwise_angular",
    "mutual_reachability",
    "minimum_spanning_tree",
]

_ZERO_DISTANCE_FLOOR = 1e-10  # keeps 1/distance finite on duplicate points


def pairwise_angular(vectors):
    """Dense angular distance matrix sqrt(2 - 2 cos) for unit-ish vectors."""
    x = np.asarray(vectors, dtype=float)
    cos = np.clip(x @ x.T, -1.0, 1.0)
    d = np.sqrt(np.maximum(2.0 - 2.0 * cos, 0.0))
    np.fill_diagonal(d, 0.0)
    return d


def core_distances(dist, min_samples):
    """Distance to each point's min_samples-th neighbor, counting itself."""
    k = min(min_samples, dist.shape[0])
    return np.partition(dist, k - 1, axis=1)[:, k - 1]


def mutual_reachability(dist, core):
    """max(core_i, core_j, d_ij) for every pair."""
    mr = np.maximum(dist, core[:, None])
    np.maximum(mr, core[None, :], out=mr)
    np.fill_diagonal(mr, 0.0)
    return mr


def minimum_spanning_tree(dist):
    """Exact MST of a dense distance matrix via Prim's algorithm, O(n^2)."""
    n = dist.shape[0]
    in_tree = np.zeros(n, dtype=bool)
    best = np.full(n, np.inf)
    parent = np.full(n, -1, dtype=np.int64)
    edges = np.empty((n - 1, 3))
    current = 0
    in_tree[0] = True
    for i in range(n - 1):
        row = dist[current]
        improved = (~in_tree) & (row < best)
        best[improved] = row[improved]
        parent[improved] = current
        candidate = np.where(in_tree, np.inf, best)
        nxt = int(np.argmin(candidate))
        edges[i] = (parent[nxt], nxt, best[nxt])
        in_tree[nxt] = True
        current = nxt
    return edges


def _single_linkage(edges):
    """Union-find pass turning sorted MST edges into a linkage matrix.

    Row i merges cluster ids ``(a, b)`` at distance d into new cluster
    ``n + i``; column 3 is the merged size (scipy linkage layout).
    """
    n = edges.shape[0] + 1
    order = np.argsort(edges[:, 2], kind="stable")
    parent = np.arange(2 * n - 1, dtype=np.int64)
    size = np.ones(2 * n - 1, dtype=np.int64)

    def find(x):
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    linkage = np.empty((n - 1, 4))
    for row, e in enumerate(order):
        a, b, d = edges[e]
        ra, rb = find(int(a)), find(int(b))
        new = n + row
        linkage[row] = (ra, rb, d, size[ra] + size[rb])
        parent[ra] = parent[rb] = new
        size[new] = size[ra] + size[rb]
    return linkage


def _subtree_points(linkage, node, n):
    points = []
    stack = [node]
    while stack:
        x = stack.pop()
        if x < n:
            points.append(x)
        else:
            stack.append(int(linkage[x - n, 0]))
            stack.append(int(linkage[x - n, 1]))
    return points


def _condense_tree(linkage, min_cluster_size):
    """Collapse the dendrogram into (parent, child, lambda, size) records.

    Splits where both sides reach min_cluster_size create child clusters;
    smaller side-branches fall out of their cluster as individual points at
    the split's lambda = 1/distance.  Cluster ids start at n.
    """
    n = linkage.shape[0] + 1
    root = 2 * n - 2
    relabel = {root: n}
    next_label = n + 1
    records = []  # (parent_cluster, child, lambda, size)
    stack = [root]

    def child_size(c):
        return 1 if c < n else int(linkage[c - n, 3])

    while stack:
        node = stack.pop()
        cluster = relabel[node]
        left = int(linkage[node - n, 0])
        right = int(linkage[node - n, 1])
        lam = 1.0 / max(linkage[node - n, 2], _ZERO_DISTANCE_FLOOR)
        sl, sr = child_size(left), child_size(right)
        if sl >= min_cluster_size and sr >= min_cluster_size:
            for child, sz in ((left, sl), (right, sr)):
                relabel[child] = next_label
                records.append((cluster, next_label, lam, sz))
                next_label += 1
                stack.append(child)
        elif sl < min_cluster_size and sr < min_cluster_size:
            for child in (left, right):
                for p in _subtree_points(linkage, child, n):
                    records.append((cluster, p, lam, 1))
        else:
            big, small = (left, right) if sl >= min_cluster_size else (right, left)
            relabel[big] = cluster
            stack.append(big)
            for p in _subtree_points(linkage, small, n):
                records.append((cluster, p, lam, 1))
    return records


def _stability(records, n):
    births = defaultdict(lambda: np.inf)
    for _, child, lam, _ in records:
        if child >= n:
            births[child] = min(births[child], lam)
    births[n] = 0.0  # the root exists from lambda 0
    stability = defaultdict(float)
    for parent, _, lam, size in records:
        stability[parent] += (lam - births[parent]) * size
    return dict(stability)


def _select_clusters(records, stability):
    """Excess-of-mass extraction; the root is eligible for selection."""
    children = defaultdict(list)
    for parent, child, _, _ in records:
        if child in stability:
            children[parent].append(child)
    selected = {}
    propagated = dict(stability)
    for cluster in sorted(stability, reverse=True):
        subtree = sum(propagated[c] for c in children[cluster])
        if children[cluster] and subtree > stability[cluster]:
            selected[cluster] = False
            propagated[cluster] = subtree
        else:
            selected[cluster] = True
            # deselect every descendant cluster
            stack = list(children[cluster])
            while stack:
                c = stack.pop()
                selected[c] = False
                stack.extend(children[c])
    return [c for c in sorted(selected) if selected[c]]


def _label_points(records, stability, selected, n):
    selected_set = set(selected)
    label_of = {c: i for i, c in enumerate(selected)}
    # Unselected clusters merge upward so each point's effective cluster is
    # its nearest selected ancestor, if any.
    up = {}
    for parent, child, _, _ in records:
        if child in stability and child not in selected_set:
            up[child] = parent

    def climb(c):
        while c in up:
            c = up[c]
        return c

    labels = np.full(n, -1, dtype=np.int64)
    for parent, child, _, _ in records:
        if child < n:
            top = climb(parent)
            if top in selected_set:
                labels[child] = label_of[top]
    return labels


def hdbscan_from_distances(dist, min_cluster_size):
    """Cluster a precomputed distance matrix; returns labels, noise = -1."""
    if min_cluster_size < 2:
        raise ValueError("min_cluster_size must be >= 2")
    n = dist.shape[0]
    if n < min_cluster_size:
        return np.full(n, -1, dtype=np.int64)
    core = core_distances(dist, min_cluster_size)
    mst = minimum_spanning_tree(mutual_reachability(dist, core))
    linkage = _single_linkage(mst)
    records = _condense_tree(linkage, min_cluster_size)
    stability = _stability(records, n)
    selected = _select_clusters(records, stability)
    return _label_points(records, stability, selected, n)


def cluster_topic(embeddings, min_cluster_size):
    """Density-cluster the embeddings of one topic.

    Returns an integer label per row; -1 marks noise.  All-noise is a legal
    outcome, as is a single cluster holding every point.
    """
    x = np.asarray(embeddings, dtype=float)
    if x.ndim != 2 or x.shape[0] < 1:
        raise ValueError("embeddings must be a nonempty 2-d array")
    if x.shape[0] < min_cluster_size:
        return np.full(x.shape[0], -1, dtype=np.int64)
    return hdbscan_from_distances(pairwise_angular(x), min_cluster_size)
