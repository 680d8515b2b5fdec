"""Model construction: coupling inverse, matrices, currents, voltage."""

import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import parapack as pp
from parapack.kirchhoff import numeric_inverse, reference_branch_currents


def test_cell_params_validation():
    with pytest.raises(pp.ParameterError):
        pp.CellParams(r0=-0.001, r1=0.001, c1=1000.0, q=2.0)
    with pytest.raises(pp.ParameterError):
        pp.CellParams(r0=0.001, r1=float("nan"), c1=1000.0, q=2.0)
    with pytest.raises(pp.ParameterError):
        pp.CellParams(r0=0.001, r1=0.001, c1=0.0, q=2.0)
    with pytest.raises(pp.ParameterError):
        pp.CellParams(r0=1e-13, r1=0.001, c1=1000.0, q=2.0)


def test_pack_needs_two_cells(reference_curve):
    cell = pp.CellParams(r0=0.001, r1=0.001, c1=1000.0, q=2.0)
    with pytest.raises(pp.ParameterError):
        pp.PackConfig(cells=(cell,), ocv=reference_curve)


def test_kirchhoff_matrix_structure():
    a = pp.kirchhoff_matrix([2.0, 4.0, 5.0])
    expected = np.array([
        [2.0, -4.0, 0.0],
        [2.0, 0.0, -5.0],
        [1.0, 1.0, 1.0],
    ])
    np.testing.assert_array_equal(a, expected)


def test_closed_form_inverse_identical_pair():
    # Two equal resistances: currents split evenly and the potential
    # difference drives half an ampere per volt per ohm each way.
    m = pp.invert_kirchhoff_matrix([1.0, 1.0])
    np.testing.assert_allclose(m, [[0.5, 0.5], [-0.5, 0.5]], atol=1e-15)


def test_resistance_guard():
    with pytest.raises(pp.ParameterError):
        pp.invert_kirchhoff_matrix([1e-13, 1.0])
    with pytest.raises(pp.ParameterError):
        pp.kirchhoff_matrix([0.5])


@settings(max_examples=120, deadline=None)
@given(
    st.lists(st.floats(1e-4, 10.0), min_size=2, max_size=10)
)
def test_closed_form_inverse_properties(resistances):
    """The closed form inverts the coupling matrix and matches the
    elimination route entrywise."""
    r = np.array(resistances)
    a = pp.kirchhoff_matrix(r)
    m = pp.invert_kirchhoff_matrix(r)
    n = r.size
    assert np.max(np.abs(a @ m - np.eye(n))) < 1e-9
    reference = numeric_inverse(a)
    scale = max(1.0, np.max(np.abs(reference)))
    assert np.max(np.abs(m - reference)) < 1e-9 * scale


def test_identical_cells_split_evenly(reference_curve):
    cells = tuple(pp.CellParams(r0=0.002, r1=0.001, c1=900.0, q=2.0)
                  for _ in range(4))
    model = pp.build_pack_model(pp.PackConfig(cells=cells, ocv=reference_curve))
    np.testing.assert_allclose(model.split, 0.25, atol=1e-14)


def test_model_shapes_and_selectors(reference_model):
    n = reference_model.n
    assert reference_model.A.shape == (2 * n, 2 * n)
    assert reference_model.B_ocv.shape == (2 * n, n)
    assert reference_model.B_I.shape == (2 * n,)
    assert reference_model.C.shape == (n, 2 * n)
    assert reference_model.D_ocv.shape == (n, n)
    assert reference_model.D_I.shape == (n,)
    x = np.arange(2 * n, dtype=float)
    np.testing.assert_array_equal(reference_model.Z @ x, x[0::2])
    np.testing.assert_array_equal(reference_model.W @ x, x[1::2])


def test_model_conductance_identities(reference_model):
    m = reference_model
    g = 1.0 / m.r0
    s = g.sum()
    assert m.split == pytest.approx(g / s, abs=1e-15)
    np.testing.assert_allclose(m.pot_gain, np.outer(g, g) / s - np.diag(g),
                               atol=1e-9)
    np.testing.assert_allclose(m.pot_gain.sum(axis=1), 0.0, atol=1e-10 * s)
    np.testing.assert_allclose(m.D_I, 1.0 / s, atol=1e-15)


def test_voltage_feedthrough_is_averaging_projection(reference_model):
    """Every row of the OCV feedthrough equals the current split: the
    pack has one terminal voltage, the conductance-weighted average."""
    m = reference_model
    np.testing.assert_allclose(
        m.D_ocv, np.outer(np.ones(m.n), m.split), atol=1e-12
    )
    np.testing.assert_allclose(m.D_ocv @ m.D_ocv, m.D_ocv, atol=1e-12)


def test_state_equation_assembly(reference_model):
    m = reference_model
    np.testing.assert_allclose(m.A, m.A11 + m.B_in @ m.pot_gain @ m.W,
                               atol=1e-12)
    np.testing.assert_allclose(m.B_ocv, m.B_in @ m.pot_gain, atol=1e-12)
    np.testing.assert_allclose(m.B_I, m.B_in @ m.split, atol=1e-15)
    np.testing.assert_allclose(m.C, m.D_ocv @ m.W, atol=1e-15)


def test_branch_currents_match_reference(reference_model):
    rng = np.random.default_rng(42)
    n = reference_model.n
    for _ in range(50):
        z = rng.uniform(0.0, 1.0, size=n)
        w = rng.uniform(-0.1, 0.1, size=n)
        total = rng.uniform(-5.0, 5.0)
        x = pp.assemble_state(z, w)
        i_model = pp.branch_currents(reference_model, x, total)
        potentials = reference_model.ocv.eval(z) + w
        i_ref = reference_branch_currents(reference_model.r0, potentials, total)
        np.testing.assert_allclose(i_model, i_ref, atol=1e-10)
        assert i_model.sum() == pytest.approx(total, abs=1e-10)


def test_terminal_voltage_at_rest(reference_model):
    n = reference_model.n
    x = pp.assemble_state(np.full(n, 0.42), np.zeros(n))
    v = pp.terminal_voltage(reference_model, x, 0.0)
    assert v == pytest.approx(reference_model.ocv.eval(0.42), abs=1e-12)


def test_terminal_voltage_consistency_guard(reference_model):
    # A corrupted feedthrough makes the redundant voltage routes
    # disagree, which must be caught rather than averaged away.
    broken = dataclasses.replace(reference_model,
                                 D_I=reference_model.D_I + 1e-3)
    n = reference_model.n
    x = pp.assemble_state(np.full(n, 0.4), np.zeros(n))
    with pytest.raises(pp.InternalConsistencyError):
        pp.terminal_voltage(broken, x, 1.0)


def test_state_helpers_roundtrip():
    z = np.array([0.1, 0.2, 0.3])
    w = np.array([-1.0, 0.0, 1.0])
    x = pp.assemble_state(z, w)
    np.testing.assert_array_equal(pp.soc_part(x), z)
    np.testing.assert_array_equal(pp.relax_part(x), w)
    with pytest.raises(pp.ParameterError):
        pp.assemble_state(z, w[:2])


def test_model_arrays_are_read_only(reference_model):
    with pytest.raises(ValueError):
        reference_model.A[0, 0] = 1.0
