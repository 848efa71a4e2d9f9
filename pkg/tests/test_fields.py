import numpy as np
import pytest

import torsionlab as tl
from torsionlab.errors import MaskMismatchError, ValidationError
from torsionlab.fields import ScalarField, field_from_function, mask_field


def test_field_from_function_and_integral():
    dom = tl.Ball(1.0)
    f = field_from_function(dom, lambda p: np.ones(p.shape[0]), 128)
    # integral of 1 over the mask is the grid volume of the disk
    assert f.integral() == pytest.approx(np.pi, rel=2e-3)
    assert f.max() == 1.0
    assert f.values[~f.mask].sum() == 0.0


def test_sample_interpolates_linear_fields_exactly():
    dom = tl.Box([(-0.5, -0.5), (0.5, 0.5)])
    f = field_from_function(dom, lambda p: 2.0 * p[:, 0] + 3.0 * p[:, 1] + 1.0, 64)
    pts = np.array([[0.1, 0.07], [-0.2, 0.2], [0.0, 0.0]])
    expect = 2.0 * pts[:, 0] + 3.0 * pts[:, 1] + 1.0
    got = f.sample(pts)
    assert np.allclose(got, expect, atol=1e-12)
    # outside the grid the field is zero
    assert f.sample((5.0, 5.0)) == 0.0


def test_sample_shape_validation():
    f = mask_field(tl.Ball(1.0), 32)
    with pytest.raises(ValidationError):
        f.sample(np.zeros((3, 3)))


def test_json_round_trip():
    f = tl.grid_torsion(tl.Ball(1.0), 32)
    g = ScalarField.from_json(f.to_json())
    assert np.array_equal(f.values, g.values)
    assert np.array_equal(f.mask, g.mask)
    assert g.h == f.h
    assert np.array_equal(g.origin, f.origin)


def test_csv_export_shape():
    f = mask_field(tl.Ball(1.0), 16)
    lines = f.to_csv().strip().splitlines()
    assert lines[0] == "x,y,value,inside"
    assert len(lines) == 1 + f.values.size


def test_mask_shape_mismatch_raises():
    with pytest.raises(MaskMismatchError):
        ScalarField(np.zeros(2), 0.1, np.zeros((4, 4)), np.ones((3, 3), dtype=bool))


def test_zeros_like_and_copy_are_independent():
    f = mask_field(tl.Ball(1.0), 16)
    z = f.zeros_like()
    assert z.values.sum() == 0.0
    assert np.array_equal(z.mask, f.mask)
    c = f.copy()
    c.values[0, 0] = 99.0
    assert f.values[0, 0] != 99.0
