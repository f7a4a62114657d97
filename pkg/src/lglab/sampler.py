"""Sampling G(n, p, d, r) and Erdos-Renyi graphs, plus graph file I/O.

Adjacency is stored as the strict upper triangle in row-major (i < j)
order, one bit per pair, packed little-endian within each byte.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .calibrate import ModelParams
from .connection import ConnectionSpec
from .errors import DimensionMismatch, ResourceCapError
from .seeding import SeedContext, as_seed, open_uniforms

MAX_LATENT_ENTRIES = 2**31
GRAPH_MAGIC = b"LGLGRAPH"
GRAPH_VERSION = 1


@dataclass(frozen=True, eq=False)
class LatentState:
    positions: np.ndarray

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def d(self) -> int:
        return self.positions.shape[1]

    def gram_upper(self) -> np.ndarray:
        """Inner products <x_i, x_j> for i < j, row-major."""
        x = self.positions
        g = x @ x.T
        iu = np.triu_indices(self.n, 1)
        return g[iu]


def n_pairs(n: int) -> int:
    return n * (n - 1) // 2


@dataclass(frozen=True, eq=False)
class GraphSample:
    n: int
    edges: np.ndarray  # packed uint8, length ceil(n(n-1)/16)

    @classmethod
    def from_upper(cls, n: int, upper) -> "GraphSample":
        upper = np.asarray(upper, dtype=bool)
        if upper.shape != (n_pairs(n),):
            raise DimensionMismatch(f"expected {n_pairs(n)} pair indicators, got {upper.shape}")
        packed = np.packbits(upper, bitorder="little")
        packed.setflags(write=False)
        return cls(int(n), packed)

    @classmethod
    def from_dense(cls, adj) -> "GraphSample":
        adj = np.asarray(adj)
        n = adj.shape[0]
        if adj.shape != (n, n):
            raise DimensionMismatch("adjacency must be square")
        if not np.array_equal(adj, adj.T):
            raise ValueError("adjacency must be symmetric")
        return cls.from_upper(n, adj[np.triu_indices(n, 1)] != 0)

    def upper(self) -> np.ndarray:
        return np.unpackbits(self.edges, count=n_pairs(self.n), bitorder="little").astype(bool)

    def to_dense(self, dtype=np.int8) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=dtype)
        iu = np.triu_indices(self.n, 1)
        u = self.upper()
        a[iu] = u
        a[(iu[1], iu[0])] = u
        return a

    def edge_count(self) -> int:
        return int(self.upper().sum())

    def density(self) -> float:
        m = n_pairs(self.n)
        return self.edge_count() / m if m else 0.0

    def edge_list(self) -> list[tuple[int, int]]:
        iu = np.triu_indices(self.n, 1)
        mask = self.upper()
        return list(zip(iu[0][mask].tolist(), iu[1][mask].tolist()))

    def __eq__(self, other):
        if not isinstance(other, GraphSample):
            return NotImplemented
        return self.n == other.n and self.edges.tobytes() == other.edges.tobytes()

    def __hash__(self):
        return hash((self.n, self.edges.tobytes()))


def _check_cap(n: int, d: int) -> None:
    if n * d > MAX_LATENT_ENTRIES:
        raise ResourceCapError(f"n*d = {n * d} exceeds the cap of {MAX_LATENT_ENTRIES} latent entries")


def sample_latents(n: int, d: int, seed: SeedContext | int | None) -> LatentState:
    """n independent N(0, I_d) latent positions from the ``latents`` stream."""
    if n < 1 or d < 1:
        raise ValueError("n and d must be >= 1")
    _check_cap(n, d)
    rng = as_seed(seed).child("latents").generator()
    return LatentState(rng.standard_normal((n, d)))


def _check_dims(params: ModelParams, latents: LatentState) -> None:
    if latents.n != params.n or latents.d != params.d:
        raise DimensionMismatch(
            f"latents are {latents.n}x{latents.d} but params expect {params.n}x{params.d}")


def connection_probabilities(spec: ConnectionSpec, params: ModelParams, latents: LatentState) -> np.ndarray:
    """sigma(<x_i, x_j>) for every pair i < j."""
    _check_dims(params, latents)
    return spec.cdf((latents.gram_upper() - params.mu) / params.scale)


def sample_graph_uniform(spec: ConnectionSpec, params: ModelParams, latents: LatentState,
                         seed: SeedContext | int | None) -> GraphSample:
    """One uniform per pair: edge iff U_ij < sigma(<x_i, x_j>)."""
    probs = connection_probabilities(spec, params, latents)
    u = open_uniforms(as_seed(seed).child("uniforms").generator(), probs.shape)
    return GraphSample.from_upper(params.n, u < probs)


def sample_thresholds(spec: ConnectionSpec, params: ModelParams, count: int,
                      seed: SeedContext | int | None) -> np.ndarray:
    """Draws z = mu + r sqrt(d) F^{-1}(U) from the ``thresholds`` stream."""
    u = open_uniforms(as_seed(seed).child("thresholds").generator(), count)
    return params.mu + params.scale * spec.quantile(u)


def sample_graph_threshold(spec: ConnectionSpec, params: ModelParams, latents: LatentState,
                           seed: SeedContext | int | None) -> GraphSample:
    """Edge iff <x_i, x_j> >= z_ij with independent thresholds z_ij."""
    _check_dims(params, latents)
    if not spec.has_quantile:
        spec.quantile(0.5)  # raises MissingQuantile
    z = sample_thresholds(spec, params, n_pairs(params.n), seed)
    return GraphSample.from_upper(params.n, latents.gram_upper() >= z)


def sample_graph(spec: ConnectionSpec, params: ModelParams, seed: SeedContext | int | None,
                 mechanism: str = "uniform") -> GraphSample:
    """Latents and edges for one replicate; both mechanisms share the latent stream."""
    seed = as_seed(seed)
    latents = sample_latents(params.n, params.d, seed)
    if mechanism == "uniform":
        return sample_graph_uniform(spec, params, latents, seed)
    if mechanism == "threshold":
        return sample_graph_threshold(spec, params, latents, seed)
    raise ValueError(f"unknown mechanism {mechanism!r}")


def sample_er(n: int, p: float, seed: SeedContext | int | None) -> GraphSample:
    """Erdos-Renyi G(n, p)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    u = as_seed(seed).child("er").generator().random(n_pairs(n))
    return GraphSample.from_upper(n, u < p)


# --- file formats ------------------------------------------------------------

def write_graph(graph: GraphSample, path) -> None:
    """Binary format: magic, u32 version, u32 n, packed upper-triangle bits."""
    nbytes = math.ceil(n_pairs(graph.n) / 8)
    payload = graph.edges.tobytes()
    assert len(payload) == nbytes
    with open(path, "wb") as fh:
        fh.write(GRAPH_MAGIC)
        fh.write(struct.pack("<II", GRAPH_VERSION, graph.n))
        fh.write(payload)


def read_graph(path) -> GraphSample:
    data = Path(path).read_bytes()
    if len(data) < 16 or data[:8] != GRAPH_MAGIC:
        raise ValueError(f"{path}: not a graph file (bad magic)")
    version, n = struct.unpack("<II", data[8:16])
    if version != GRAPH_VERSION:
        raise ValueError(f"{path}: unsupported graph file version {version}")
    nbytes = math.ceil(n_pairs(n) / 8)
    body = data[16:]
    if len(body) != nbytes:
        raise ValueError(f"{path}: expected {nbytes} payload bytes for n={n}, found {len(body)}")
    bits = np.frombuffer(body, dtype=np.uint8).copy()
    # ignore any padding bits past the last pair
    return GraphSample.from_upper(n, np.unpackbits(bits, count=n_pairs(n), bitorder="little").astype(bool))


def write_edgelist(graph: GraphSample, fh) -> None:
    for i, j in graph.edge_list():
        fh.write(f"{i} {j}\n")
