import math

import numpy as np
import pytest

import torsionlab as tl
from torsionlab.errors import ValidationError


def test_distribution_table_validation():
    with pytest.raises(ValidationError):
        tl.DistributionFunction(np.array([0.0]), np.array([1.0]), 1.0)
    with pytest.raises(ValidationError):
        tl.DistributionFunction(np.array([0.0, 0.0]), np.array([1.0, 0.0]), 1.0)
    with pytest.raises(ValidationError):
        tl.DistributionFunction(np.array([0.0, 1.0]), np.array([0.5, 1.0]), 1.0)


def test_distribution_function_of_disk(disk_field):
    mu = tl.distribution_function(disk_field, slices=512)
    assert mu.total_volume == pytest.approx(math.pi, rel=2e-3)
    assert mu(0.0) == mu.total_volume
    assert mu(mu.max_level + 1.0) == 0.0
    # u = (1-r^2)/4 gives mu(t) = pi(1 - 4t) on the disk
    for t in (0.05, 0.1, 0.2):
        assert mu(t) == pytest.approx(math.pi * (1.0 - 4.0 * t), abs=2e-2)


def test_ball_distribution_plug_ins():
    assert tl.ball_distribution(2, math.pi, 0.0) == pytest.approx(math.pi)
    assert tl.ball_distribution(2, 1.0, 1.0 / (8.0 * math.pi)) == pytest.approx(0.5)
    assert tl.ball_distribution(2, 1.0, 1.0 / (4.0 * math.pi)) == 0.0
    # vanishes exactly at the peak level R^2/(2n)
    assert tl.ball_distribution(2, math.pi, 0.25) == 0.0
    ts = np.linspace(0.0, 0.3, 50)
    out = tl.ball_distribution(3, 2.0, ts)
    assert out.shape == ts.shape
    assert np.all(np.diff(out) <= 1e-12)
    with pytest.raises(ValidationError):
        tl.ball_distribution(2, -1.0, 0.1)
    with pytest.raises(ValidationError):
        tl.ball_distribution(2, 1.0, -0.1)


def test_level_cutoff_linear_table():
    mu = tl.DistributionFunction(np.array([0.0, 0.2]), np.array([1.0, 0.0]), 1.0)
    # target volume 1 - 0.25*2 = 0.5, crossed halfway up the single segment
    assert tl.level_cutoff(mu, 2.0) == pytest.approx(0.1)
    with pytest.raises(ValidationError):
        tl.level_cutoff(mu, 0.0)
    with pytest.raises(ValidationError):
        tl.level_cutoff(mu, 0.5, fraction=1.0)


def test_level_cutoff_against_scan(ellipse1_field):
    mu = tl.distribution_function(ellipse1_field, slices=512)
    asym = 0.3
    cut = tl.level_cutoff(mu, asym)
    assert cut > 0.0
    target = mu.total_volume * (1.0 - 0.25 * asym)
    ts = np.linspace(0.0, mu.max_level, 20001)
    above = ts[mu(ts) > target]
    scan = float(above[-1]) if above.size else 0.0
    assert abs(cut - scan) <= 2.0 * (ts[1] - ts[0])


def test_level_cutoff_scales_like_r_squared():
    dom = tl.Ellipse.from_flattening(0.5)
    mu = tl.distribution_function(tl.grid_torsion(dom, 256), slices=512)
    mu2 = tl.distribution_function(tl.grid_torsion(tl.scale(dom, 1.5), 256), slices=512)
    a, b = tl.level_cutoff(mu, 0.5), tl.level_cutoff(mu2, 0.5)
    assert b == pytest.approx(1.5 ** 2 * a, rel=2e-2)


def test_ball_depletion_level():
    # n = 2 closed form collapses to A/(64 pi)
    assert tl.ball_depletion_level(2, 0.8) == pytest.approx(1.0 / (80.0 * math.pi), rel=1e-12)
    for n in (2, 3, 4):
        omega = tl.unit_ball_volume(n)
        floor = 1.0 / (16.0 * n * n * omega ** (2.0 / n))
        for a in np.linspace(1e-6, 2.0, 100):
            assert tl.ball_depletion_level(n, a) >= a * floor * (1.0 - 1e-12)
    assert tl.ball_depletion_level(3, 1e-9) == pytest.approx(0.0, abs=1e-9)
    with pytest.raises(ValidationError):
        tl.ball_depletion_level(2, 0.0)
    with pytest.raises(ValidationError):
        tl.ball_depletion_level(2, 2.5)


def test_lp_norms_on_disk(disk_field):
    mu = tl.distribution_function(disk_field, slices=512)
    assert tl.lp_norm(mu, 1.0) == pytest.approx(math.pi / 8.0, rel=1.5e-2)
    assert tl.lp_norm(mu, math.inf) == pytest.approx(0.25, abs=1e-2)
    with pytest.raises(ValidationError):
        tl.lp_norm(mu, 0.5)


def test_ball_lp_norm_closed_forms():
    assert tl.ball_lp_norm(2, math.pi, 1.0) == pytest.approx(math.pi / 8.0, rel=1e-12)
    assert tl.ball_lp_norm(2, math.pi, 2.0) == pytest.approx(math.pi / 48.0, rel=1e-12)
    assert tl.ball_lp_norm(2, 1.0, 1.0) == pytest.approx(1.0 / (8.0 * math.pi), rel=1e-12)
    assert tl.ball_sup_norm(2, math.pi) == pytest.approx(0.25, rel=1e-12)
    # layer-cake of the exact ball table reproduces the closed form
    ts = np.linspace(0.0, 0.25, 4096)
    mu = tl.DistributionFunction(ts, tl.ball_distribution(2, math.pi, ts), math.pi)
    assert tl.lp_norm(mu, 2.0) == pytest.approx(tl.ball_lp_norm(2, math.pi, 2.0), rel=1e-4)
    with pytest.raises(ValidationError):
        tl.ball_lp_norm(2, math.pi, 0.5)


def test_rearrangement_fixes_the_disk(disk_field):
    prof = tl.rearrangement(disk_field)
    assert prof.support_radius == pytest.approx(1.0, abs=2e-2)
    for r in np.linspace(0.1, 0.9, 9):
        assert prof(r) == pytest.approx((1.0 - r * r) / 4.0, abs=1.5e-2)
    assert prof(5.0) == 0.0


def test_rearrangement_is_equimeasurable(ellipse05_field):
    f = ellipse05_field
    g = tl.rearrangement(f).as_field(f.h)
    for t in (0.05, 0.1, 0.2, 0.3):
        vol_f = float(np.count_nonzero(f.values > t)) * f.cell_volume
        vol_g = float(np.count_nonzero(g.values > t)) * g.cell_volume
        # resampling the profile onto a grid costs a ring of cells per level
        assert abs(vol_f - vol_g) <= 8.0 * math.pi * f.h
    assert g.integral() == pytest.approx(f.integral(), rel=2e-2)
    empty = tl.ScalarField(f.origin, f.h, np.zeros_like(f.values),
                           np.zeros_like(f.mask))
    with pytest.raises(ValidationError):
        tl.rearrangement(empty)


def test_rearranged_lifetime_sits_below_the_ball(disk_field, ellipse05_field):
    # pointwise comparison against the lifetime of the equal-volume ball
    for f in (disk_field, ellipse05_field):
        prof = tl.rearrangement(f)
        vol = float(np.count_nonzero(f.mask)) * f.cell_volume
        rad = tl.equivalent_ball_radius(vol, 2)
        rs = np.linspace(0.0, rad, 400)
        ball = (rad * rad - rs * rs) / 4.0
        excess = float(np.max(prof(rs) - ball))
        assert excess <= f.max() / 64.0


def test_energy_derivative_identity(disk_field, ellipse05_field):
    assert tl.energy_derivative_check(disk_field) <= 5e-2
    assert tl.energy_derivative_check(ellipse05_field) <= 5e-2
    with pytest.raises(ValidationError):
        tl.energy_derivative_check(disk_field, levels=4)
    with pytest.raises(ValidationError):
        tl.energy_derivative_check(disk_field.zeros_like())


def test_distribution_csv_round_trip(disk_field):
    mu = tl.distribution_function(disk_field, slices=64)
    text = mu.to_csv()
    lines = text.strip().split("\n")
    assert lines[0] == "t,mu"
    assert len(lines) == 65
    got = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    assert np.array_equal(got[:, 0], mu.levels)
    assert np.array_equal(got[:, 1], mu.volumes)
