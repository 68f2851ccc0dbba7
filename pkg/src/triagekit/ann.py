"""Approximate nearest neighbor index over ticket embeddings.

A forest of random-projection binary trees: each internal node splits its
points with a hyperplane through the midpoint of a random point pair, and
leaves hold at most ``leaf_size`` items.  Queries run a best-first search
across all trees ordered by hyperplane margins, inspect at most
``search_budget`` distinct candidates, and re-rank those exactly, so the
returned distances are always exact and only the candidate set is
approximate.

Distances are angular: d = sqrt(2 - 2 cos) on unit vectors, in [0, 2],
ordering identically to cosine similarity.

``brute_force_knn`` is the exactness oracle used to measure recall.
"""

import struct
from dataclasses import dataclass

import numba
import numpy as np

__all__ = [
    "AnnIndex",
    "Neighbor",
    "QueryStats",
    "IndexFormatError",
    "IndexVersionError",
    "TruncatedIndexError",
    "build_index",
    "query",
    "query_with_stats",
    "brute_force_knn",
    "angular_distance",
    "save_index",
    "load_index",
]

MAGIC = b"TDAANN1"
FORMAT_VERSION = 1


class IndexFormatError(Exception):
    """The file is not an index file (bad magic bytes or structure)."""


class IndexVersionError(IndexFormatError):
    def __init__(self, found, supported):
        super().__init__(
            f"index format version {found} not supported (supported: {supported})"
        )
        self.found = found
        self.supported = supported


class TruncatedIndexError(IndexFormatError):
    """The file ended before the advertised content."""


@dataclass(frozen=True)
class Neighbor:
    """One retrieved item: ticket id, its resolver (if known), exact distance."""

    ticket_id: str
    resolver: str | None
    distance: float


@dataclass(frozen=True)
class QueryStats:
    candidates_inspected: int
    nodes_popped: int
    leaves_visited: int


@dataclass
class AnnIndex:
    """Immutable random-projection forest plus its item table."""

    dimension: int
    num_trees: int
    leaf_size: int
    seed: int
    ids: list
    vectors: np.ndarray
    resolvers: list
    planes: np.ndarray
    offsets: np.ndarray
    node_left: np.ndarray
    node_right: np.ndarray
    node_plane: np.ndarray
    leaf_lo: np.ndarray
    leaf_hi: np.ndarray
    leaf_items: np.ndarray
    roots: np.ndarray
    id_rank: np.ndarray

    def __len__(self):
        return len(self.ids)


def angular_distance(a, b):
    cos = float(np.clip(np.dot(a, b), -1.0, 1.0))
    return float(np.sqrt(max(2.0 - 2.0 * cos, 0.0)))


def _id_rank(ids):
    rank = np.empty(len(ids), dtype=np.int64)
    rank[sorted(range(len(ids)), key=ids.__getitem__)] = np.arange(len(ids))
    return rank


class _ForestBuilder:
    def __init__(self, vectors, leaf_size):
        self.vectors = vectors
        self.leaf_size = leaf_size
        self.planes = []
        self.offsets = []
        self.left = []
        self.right = []
        self.plane_row = []
        self.leaf_lo = []
        self.leaf_hi = []
        self.leaf_items = []

    def _new_node(self):
        self.left.append(-1)
        self.right.append(-1)
        self.plane_row.append(-1)
        self.leaf_lo.append(0)
        self.leaf_hi.append(0)
        return len(self.left) - 1

    def _split(self, rows, rng):
        """Pick a hyperplane through a random point pair's midpoint."""
        x = self.vectors
        for _ in range(5):
            i, j = rng.choice(len(rows), size=2, replace=False)
            a, b = x[rows[i]], x[rows[j]]
            na, nb = np.linalg.norm(a), np.linalg.norm(b)
            if na < 1e-12 or nb < 1e-12:
                continue
            normal = a / na - b / nb
            norm = np.linalg.norm(normal)
            if norm < 1e-12:
                continue
            normal = normal / norm
            offset = float(normal @ ((a + b) / 2.0))
            margins = x[rows] @ normal - offset
            mask = margins > 0
            if mask.any() and not mask.all():
                return normal, offset, rows[mask], rows[~mask]
        # Degenerate data (e.g. all points identical): split by position so
        # recursion terminates; a zero plane gives every query margin 0.
        half = len(rows) // 2
        return np.zeros(x.shape[1]), 0.0, rows[:half], rows[half:]

    def build_tree(self, rows, rng):
        root = self._new_node()
        stack = [(root, rows)]
        while stack:
            node, rows = stack.pop()
            if len(rows) <= self.leaf_size:
                self.leaf_lo[node] = len(self.leaf_items)
                self.leaf_items.extend(rows.tolist())
                self.leaf_hi[node] = len(self.leaf_items)
                continue
            normal, offset, left_rows, right_rows = self._split(rows, rng)
            self.plane_row[node] = len(self.planes)
            self.planes.append(normal)
            self.offsets.append(offset)
            left_node = self._new_node()
            right_node = self._new_node()
            self.left[node] = left_node
            self.right[node] = right_node
            stack.append((left_node, left_rows))
            stack.append((right_node, right_rows))
        return root


def build_index(vectors, num_trees=16, leaf_size=32, seed=0, resolvers=None):
    """Build a random-projection forest over ``vectors``.

    Parameters
    ----------
    vectors : mapping of ticket id -> 1-d embedding, all of one dimension
    num_trees, leaf_size, seed : forest shape; deterministic given the seed
    resolvers : mapping of ticket id -> resolver label, optional
        Carried along so query results can report who resolved each hit.
    """
    if not vectors:
        raise ValueError("cannot build an index over zero vectors")
    if num_trees < 1 or leaf_size < 1:
        raise ValueError("num_trees and leaf_size must be >= 1")
    ids = list(vectors.keys())
    mat = np.asarray([np.asarray(vectors[i], dtype=float) for i in ids])
    if mat.ndim != 2:
        raise ValueError("all vectors must share one dimension")
    dim = mat.shape[1]

    builder = _ForestBuilder(mat, leaf_size)
    roots = []
    all_rows = np.arange(len(ids))
    for t in range(num_trees):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, t))))
        roots.append(builder.build_tree(all_rows, rng))

    res_list = [None] * len(ids) if resolvers is None else [
        resolvers.get(i) for i in ids
    ]
    n_planes = len(builder.planes)
    return AnnIndex(
        dimension=dim,
        num_trees=num_trees,
        leaf_size=leaf_size,
        seed=seed,
        ids=ids,
        vectors=mat,
        resolvers=res_list,
        planes=(np.asarray(builder.planes)
                if n_planes else np.zeros((0, dim))),
        offsets=np.asarray(builder.offsets, dtype=float),
        node_left=np.asarray(builder.left, dtype=np.int32),
        node_right=np.asarray(builder.right, dtype=np.int32),
        node_plane=np.asarray(builder.plane_row, dtype=np.int32),
        leaf_lo=np.asarray(builder.leaf_lo, dtype=np.int32),
        leaf_hi=np.asarray(builder.leaf_hi, dtype=np.int32),
        leaf_items=np.asarray(builder.leaf_items, dtype=np.int32),
        roots=np.asarray(roots, dtype=np.int32),
        id_rank=_id_rank(ids),
    )


@numba.njit(cache=True)
def _heap_push(pri, node, size, p, n):
    pri[size] = p
    node[size] = n
    i = size
    while i > 0:
        parent = (i - 1) >> 1
        if pri[parent] < pri[i]:
            pri[parent], pri[i] = pri[i], pri[parent]
            node[parent], node[i] = node[i], node[parent]
            i = parent
        else:
            break
    return size + 1


@numba.njit(cache=True)
def _collect_candidates(planes, offsets, node_left, node_right, node_plane,
                        leaf_lo, leaf_hi, leaf_items, roots, q, budget,
                        n_items):
    """Best-first forest traversal; returns <= budget distinct item rows."""
    n_nodes = node_left.shape[0]
    cap = n_nodes + roots.shape[0] + 2
    heap_pri = np.empty(cap, np.float64)
    heap_node = np.empty(cap, np.int64)
    size = 0
    for r in roots:
        size = _heap_push(heap_pri, heap_node, size, np.inf, r)
    seen = np.zeros(n_items, np.uint8)
    out = np.empty(budget, np.int64)
    count = 0
    pops = 0
    leaves = 0
    dim = q.shape[0]
    while size > 0 and count < budget:
        top_pri = heap_pri[0]
        node = heap_node[0]
        size -= 1
        heap_pri[0] = heap_pri[size]
        heap_node[0] = heap_node[size]
        i = 0
        while True:
            l = 2 * i + 1
            r = l + 1
            largest = i
            if l < size and heap_pri[l] > heap_pri[largest]:
                largest = l
            if r < size and heap_pri[r] > heap_pri[largest]:
                largest = r
            if largest == i:
                break
            heap_pri[largest], heap_pri[i] = heap_pri[i], heap_pri[largest]
            heap_node[largest], heap_node[i] = heap_node[i], heap_node[largest]
            i = largest
        pops += 1
        plane_row = node_plane[node]
        if plane_row < 0:
            leaves += 1
            for j in range(leaf_lo[node], leaf_hi[node]):
                item = leaf_items[j]
                if seen[item] == 0:
                    seen[item] = 1
                    out[count] = item
                    count += 1
                    if count >= budget:
                        break
        else:
            margin = -offsets[plane_row]
            for d in range(dim):
                margin += planes[plane_row, d] * q[d]
            lp = top_pri if top_pri < margin else margin
            rp = top_pri if top_pri < -margin else -margin
            size = _heap_push(heap_pri, heap_node, size, lp, node_left[node])
            size = _heap_push(heap_pri, heap_node, size, rp, node_right[node])
    return out[:count], pops, leaves


def _rank_candidates(index, q, rows, k):
    cos = np.clip(index.vectors[rows] @ q, -1.0, 1.0)
    dist = np.sqrt(np.maximum(2.0 - 2.0 * cos, 0.0))
    order = np.lexsort((index.id_rank[rows], dist))[:k]
    return [
        Neighbor(
            ticket_id=index.ids[rows[i]],
            resolver=index.resolvers[rows[i]],
            distance=float(dist[i]),
        )
        for i in order
    ]


def query_with_stats(index, vector, k, search_budget=2000):
    """Like :func:`query` but also reports traversal statistics."""
    if len(index) == 0:
        raise ValueError("cannot query an empty index")
    if k < 1:
        raise ValueError("k must be >= 1")
    if search_budget < k:
        raise ValueError("search_budget must be >= k")
    q = np.ascontiguousarray(vector, dtype=float)
    if q.shape != (index.dimension,):
        raise ValueError(
            f"query dimension {q.shape} != index dimension ({index.dimension},)"
        )
    rows, pops, leaves = _collect_candidates(
        index.planes, index.offsets, index.node_left, index.node_right,
        index.node_plane, index.leaf_lo, index.leaf_hi, index.leaf_items,
        index.roots, q, search_budget, len(index),
    )
    neighbors = _rank_candidates(index, q, rows, min(k, len(rows)))
    return neighbors, QueryStats(
        candidates_inspected=len(rows), nodes_popped=pops, leaves_visited=leaves
    )


def query(index, vector, k, search_budget=2000):
    """The k nearest items by exact angular distance, ascending.

    The candidate set is gathered by best-first traversal over all trees
    until ``search_budget`` distinct items have been inspected; distances
    for the survivors are exact.  Ties break by ascending ticket id.
    """
    neighbors, _ = query_with_stats(index, vector, k, search_budget)
    return neighbors


def brute_force_knn(vectors, q, k, resolvers=None):
    """Exact k nearest neighbors by full scan; the recall oracle.

    ``vectors`` is a mapping of id -> embedding.  Returns min(k, n) results
    ascending by distance, ties by ascending id.
    """
    if not vectors:
        raise ValueError("cannot search zero vectors")
    ids = sorted(vectors.keys())
    mat = np.asarray([vectors[i] for i in ids])
    q = np.asarray(q, dtype=float)
    cos = np.clip(mat @ q, -1.0, 1.0)
    dist = np.sqrt(np.maximum(2.0 - 2.0 * cos, 0.0))
    order = np.lexsort((np.arange(len(ids)), dist))[: min(k, len(ids))]
    return [
        Neighbor(
            ticket_id=ids[i],
            resolver=None if resolvers is None else resolvers.get(ids[i]),
            distance=float(dist[i]),
        )
        for i in order
    ]


def _write_str(f, s):
    if s is None:
        f.write(struct.pack("<I", 0xFFFFFFFF))
    else:
        raw = s.encode("utf-8")
        f.write(struct.pack("<I", len(raw)))
        f.write(raw)


def _read_exact(f, n):
    data = f.read(n)
    if len(data) != n:
        raise TruncatedIndexError(
            f"expected {n} more bytes, file ended after {len(data)}"
        )
    return data


def _read_str(f):
    (n,) = struct.unpack("<I", _read_exact(f, 4))
    if n == 0xFFFFFFFF:
        return None
    return _read_exact(f, n).decode("utf-8")


def _write_array(f, arr, dtype):
    arr = np.ascontiguousarray(arr, dtype=dtype)
    f.write(struct.pack("<Q", arr.size))
    f.write(arr.tobytes())


def _read_array(f, dtype, shape=None):
    (n,) = struct.unpack("<Q", _read_exact(f, 8))
    raw = _read_exact(f, n * np.dtype(dtype).itemsize)
    arr = np.frombuffer(raw, dtype=dtype).copy()
    return arr.reshape(shape) if shape is not None else arr


def save_index(index, path):
    """Write the index to a little-endian binary file (bit-exact reload)."""
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<B", FORMAT_VERSION))
        f.write(struct.pack(
            "<IIIIq", index.dimension, len(index), index.num_trees,
            index.leaf_size, index.seed,
        ))
        for i, ticket_id in enumerate(index.ids):
            _write_str(f, ticket_id)
            _write_str(f, index.resolvers[i])
        _write_array(f, index.vectors, "<f8")
        _write_array(f, index.planes, "<f8")
        _write_array(f, index.offsets, "<f8")
        _write_array(f, index.node_left, "<i4")
        _write_array(f, index.node_right, "<i4")
        _write_array(f, index.node_plane, "<i4")
        _write_array(f, index.leaf_lo, "<i4")
        _write_array(f, index.leaf_hi, "<i4")
        _write_array(f, index.leaf_items, "<i4")
        _write_array(f, index.roots, "<i4")


def load_index(path):
    """Read an index written by :func:`save_index`.

    Raises IndexFormatError for unrecognized files, IndexVersionError when
    the format version is unsupported, TruncatedIndexError for short files.
    """
    with open(path, "rb") as f:
        magic = _read_exact(f, len(MAGIC))
        if magic != MAGIC:
            raise IndexFormatError(f"bad magic bytes {magic!r}")
        (version,) = struct.unpack("<B", _read_exact(f, 1))
        if version != FORMAT_VERSION:
            raise IndexVersionError(version, FORMAT_VERSION)
        dim, count, num_trees, leaf_size, seed = struct.unpack(
            "<IIIIq", _read_exact(f, struct.calcsize("<IIIIq"))
        )
        ids = []
        resolvers = []
        for _ in range(count):
            ids.append(_read_str(f))
            resolvers.append(_read_str(f))
        vectors = _read_array(f, "<f8", shape=(count, dim))
        planes = _read_array(f, "<f8")
        planes = planes.reshape((-1, dim)) if planes.size else planes.reshape((0, dim))
        return AnnIndex(
            dimension=dim,
            num_trees=num_trees,
            leaf_size=leaf_size,
            seed=seed,
            ids=ids,
            vectors=vectors,
            resolvers=resolvers,
            planes=planes,
            offsets=_read_array(f, "<f8"),
            node_left=_read_array(f, "<i4"),
            node_right=_read_array(f, "<i4"),
            node_plane=_read_array(f, "<i4"),
            leaf_lo=_read_array(f, "<i4"),
            leaf_hi=_read_array(f, "<i4"),
            leaf_items=_read_array(f, "<i4"),
            roots=_read_array(f, "<i4"),
            id_rank=_id_rank(ids),
        )
