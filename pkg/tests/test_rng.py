import math

import numpy as np

from torsionlab import rng


def test_uniforms_deterministic_and_batch_independent():
    c = np.arange(1000, dtype=np.uint64)
    a = rng.uniforms(7, rng.TAG_WOS, np.zeros_like(c), c)
    b = rng.uniforms(7, rng.TAG_WOS, np.zeros_like(c), c)
    assert np.array_equal(a, b)
    # element k must not care about which other elements were drawn with it
    single = np.array([rng.uniforms(7, rng.TAG_WOS, 0, int(k)) for k in range(50)])
    assert np.array_equal(single, a[:50])


def test_streams_tags_and_seeds_decorrelate():
    c = np.arange(4096, dtype=np.uint64)
    base = rng.uniforms(1, rng.TAG_WOS, np.zeros_like(c), c)
    for other in (rng.uniforms(2, rng.TAG_WOS, np.zeros_like(c), c),
                  rng.uniforms(1, rng.TAG_EM_PATH, np.zeros_like(c), c),
                  rng.uniforms(1, rng.TAG_WOS, np.ones_like(c), c)):
        assert np.max(np.abs(base - other)) > 0.1
        assert abs(np.corrcoef(base, other)[0, 1]) < 0.05


def test_uniform_moments():
    c = np.arange(200_000, dtype=np.uint64)
    u = rng.uniforms(3, rng.TAG_WOS, np.zeros_like(c), c)
    assert u.min() >= 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 2e-3
    assert abs(u.var() - 1.0 / 12.0) < 1e-3


def test_normal_moments_and_slots():
    c = np.arange(200_000, dtype=np.uint64)
    g0 = rng.normals(3, rng.TAG_WOS, np.zeros_like(c), c, slot=0)
    g1 = rng.normals(3, rng.TAG_WOS, np.zeros_like(c), c, slot=1)
    for g in (g0, g1):
        assert abs(g.mean()) < 8e-3
        assert abs(g.var() - 1.0) < 1e-2
        assert abs(np.mean(g ** 3)) < 3e-2
    assert abs(np.corrcoef(g0, g1)[0, 1]) < 0.05


def test_one_sided_stable_laplace_transform():
    # E[exp(-lam S)] = exp(-lam^rho) for the normalized one-sided law
    c = np.arange(200_000, dtype=np.uint64)
    for rho in (0.5, 0.75):
        s = rng.one_sided_stable(rho, 9, rng.TAG_CALIBRATE, np.zeros_like(c), c)
        assert np.all(s > 0.0)
        for lam in (0.5, 1.0, 2.0):
            emp = float(np.mean(np.exp(-lam * s)))
            assert abs(emp - math.exp(-lam ** rho)) < 5e-3


def test_one_sided_stable_heavy_tail():
    # infinite mean for rho < 1: the sample mean should blow past any
    # light-tailed value at this sample size
    c = np.arange(100_000, dtype=np.uint64)
    s = rng.one_sided_stable(0.5, 4, rng.TAG_CALIBRATE, np.zeros_like(c), c)
    assert float(np.mean(s)) > 10.0
