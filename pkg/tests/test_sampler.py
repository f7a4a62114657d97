import io
import math

import numpy as np
import pytest

import lglab.sampler as sampler
from lglab.calibrate import ModelParams, calibrate_mu
from lglab.connection import make_builtin, make_custom
from lglab.errors import DimensionMismatch, MissingQuantile, ResourceCapError
from lglab.sampler import (GraphSample, LatentState, connection_probabilities, read_graph, sample_er,
                           sample_graph, sample_graph_threshold, sample_graph_uniform, sample_latents,
                           write_edgelist, write_graph)
from lglab.seeding import SeedContext, open_uniforms

LOGISTIC = make_builtin("logistic")


def test_seed_context_streams():
    a = SeedContext(5).child("x", 1).generator().random(4)
    b = SeedContext(5).child("x", 1).generator().random(4)
    c = SeedContext(5).child("x", 2).generator().random(4)
    d = SeedContext(6).child("x", 1).generator().random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c) and not np.array_equal(a, d)


def test_open_uniforms_excludes_zero():
    class Zero:
        def random(self, size):
            return np.zeros(size)
    u = open_uniforms(Zero(), 3)
    assert np.all(u > 0) and np.all(u < 1)


def test_packed_layout_by_hand():
    # n = 4 pairs in order (0,1) (0,2) (0,3) (1,2) (1,3) (2,3); edges (0,1), (1,2), (2,3)
    g = GraphSample.from_upper(4, [1, 0, 0, 1, 0, 1])
    assert g.edges.tobytes() == bytes([0b101001])
    assert g.edge_list() == [(0, 1), (1, 2), (2, 3)]
    dense = g.to_dense()
    assert dense[1, 0] == dense[0, 1] == 1 and dense[0, 3] == 0 and np.all(np.diag(dense) == 0)
    assert GraphSample.from_dense(dense) == g


def test_graph_file_roundtrip(tmp_path):
    g = sample_er(37, 0.4, 3)
    path = tmp_path / "g.bin"
    write_graph(g, path)
    raw = path.read_bytes()
    assert raw[:8] == b"LGLGRAPH"
    assert int.from_bytes(raw[8:12], "little") == 1 and int.from_bytes(raw[12:16], "little") == 37
    assert len(raw) == 16 + math.ceil(37 * 36 / 16)
    assert read_graph(path) == g


def test_graph_file_rejects_corruption(tmp_path):
    g = sample_er(10, 0.5, 1)
    path = tmp_path / "g.bin"
    write_graph(g, path)
    raw = path.read_bytes()
    (tmp_path / "bad_magic.bin").write_bytes(b"XXXXXXXX" + raw[8:])
    (tmp_path / "short.bin").write_bytes(raw[:-1])
    (tmp_path / "version.bin").write_bytes(raw[:8] + (2).to_bytes(4, "little") + raw[12:])
    for name in ("bad_magic.bin", "short.bin", "version.bin"):
        with pytest.raises(ValueError):
            read_graph(tmp_path / name)


def test_edgelist():
    g = GraphSample.from_upper(3, [1, 0, 1])
    buf = io.StringIO()
    write_edgelist(g, buf)
    assert buf.getvalue() == "0 1\n1 2\n"


def test_er_density_and_determinism():
    g = sample_er(300, 0.3, 11)
    m = 300 * 299 / 2
    assert abs(g.density() - 0.3) <= 4 * math.sqrt(0.3 * 0.7 / m)
    assert sample_er(300, 0.3, 11) == g
    assert sample_er(300, 0.3, 12) != g


def test_sample_graph_deterministic_and_mechanisms_share_latents():
    params = calibrate_mu(LOGISTIC, 0.5, 3, 1.0, n=25)
    a = sample_graph(LOGISTIC, params, 9, "uniform")
    assert a == sample_graph(LOGISTIC, params, 9, "uniform")
    assert a != sample_graph(LOGISTIC, params, 10, "uniform")
    lat = sample_latents(25, 3, SeedContext(9))
    assert sample_graph_uniform(LOGISTIC, params, lat, SeedContext(9)) == a
    assert sample_graph_threshold(LOGISTIC, params, lat, SeedContext(9)) == sample_graph(
        LOGISTIC, params, 9, "threshold")
    with pytest.raises(ValueError):
        sample_graph(LOGISTIC, params, 9, "bogus")


def test_large_r_density_is_p():
    params = calibrate_mu(LOGISTIC, 0.3, 4, 50.0, n=200)
    g = sample_graph(LOGISTIC, params, 0)
    assert abs(g.density() - 0.3) <= 4 * math.sqrt(0.21 / (200 * 199 / 2))


def test_marginal_density_matches_p():
    params = calibrate_mu(LOGISTIC, 0.2, 2, 0.5, n=60)
    dens = [sample_graph(LOGISTIC, params, s).density() for s in range(100)]
    # pairs within a graph are dependent; use the between-replicate spread
    assert abs(np.mean(dens) - 0.2) <= 4 * np.std(dens, ddof=1) / 10


def test_connection_probabilities_formula():
    params = calibrate_mu(LOGISTIC, 0.5, 2, 1.0, n=3)
    x = np.array([[1.0, 0.0], [0.0, 2.0], [1.0, 1.0]])
    probs = connection_probabilities(LOGISTIC, params, LatentState(x))
    expected = LOGISTIC.cdf((np.array([0.0, 1.0, 2.0]) - params.mu) / params.scale)
    np.testing.assert_allclose(probs, expected, rtol=1e-15)


def test_errors():
    params = ModelParams(n=10, p=0.5, d=3, r=1.0, mu=0.0)
    with pytest.raises(DimensionMismatch):
        sample_graph_uniform(LOGISTIC, params, sample_latents(9, 3, 0), 0)
    g = LOGISTIC
    noq = make_custom(g.cdf, g.pdf, g.pdf_deriv, g.alpha, invert=False)
    with pytest.raises(MissingQuantile):
        sample_graph(noq, params, 0, "threshold")
    with pytest.raises(DimensionMismatch):
        GraphSample.from_upper(4, [1, 0])


def test_resource_cap(monkeypatch):
    monkeypatch.setattr(sampler, "MAX_LATENT_ENTRIES", 100)
    with pytest.raises(ResourceCapError):
        sample_latents(11, 10, 0)
    sample_latents(10, 10, 0)
