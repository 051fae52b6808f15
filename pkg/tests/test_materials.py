import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decaphi import BoxMeshSpec, Region, build_complex, build_incidence, build_source, generate_box_mesh, make_port
from decaphi.errors import (
    ClosedPathWarning,
    EmptyPath,
    LossyMaterialInEigenproblem,
    MaterialError,
    NegativeConductivity,
    PortError,
    UncoveredTet,
    ZeroCurrent,
    ZeroFrequency,
)
from decaphi.materials import EPS0, MU0, material_map, port_from_points, resolve_materials


@pytest.fixture(scope="module")
def box():
    return generate_box_mesh(BoxMeshSpec((2.0, 1.0, 1.0), (2, 1, 1)))


def test_vacuum_chi_with_inverse_eps0_alpha(box):
    m = resolve_materials([], box, omega=1.0, alpha=1 / EPS0)
    np.testing.assert_allclose(m.chi, MU0 * EPS0, rtol=1e-15)


def test_default_alpha_gives_classical_lorenz_chi(box):
    m = resolve_materials([], box, omega=1.0)
    np.testing.assert_allclose(m.chi, MU0 * EPS0**2, rtol=1e-15)


def test_copper_permittivity_at_1ghz(box):
    cu = Region("cu", sigma=5.8e7)
    m = resolve_materials([cu], box, omega=2 * np.pi * 1e9)
    np.testing.assert_allclose(m.eps, EPS0 + 1j * 5.8e7 / (2 * np.pi * 1e9), rtol=1e-15)
    assert np.all(m.eps.imag >= 0)


def test_lossless_region_has_real_eps(box):
    m = resolve_materials([Region("glass", eps_r=4.0)], box, omega=1e6)
    assert np.all(m.eps.imag == 0)
    np.testing.assert_allclose(m.eps.real, 4 * EPS0)


def test_later_regions_override(box):
    regs = [Region("a", eps_r=2.0), Region("b", eps_r=3.0, box=((1, 0, 0), (2, 1, 1)))]
    mm = material_map(regs, box)
    right = box.centroids()[:, 0] > 1
    assert np.all(mm.eps_r[right] == 3.0) and np.all(mm.eps_r[~right] == 2.0)
    assert {mm.regions[i].name for i in mm.region_index[right]} == {"b"}


def test_tag_selection():
    v = np.vstack([np.eye(3), [[0, 0, 0]], [[1, 1, 1]]])
    cx = build_complex(v, [[3, 0, 1, 2], [0, 1, 2, 4]], tags=[7, 9])
    mm = material_map([Region("cu", sigma=1.0, tag=9)], cx)
    assert list(mm.sigma) == [0.0, 1.0]
    with pytest.raises(MaterialError):
        material_map([Region("x", tag=1)], generate_box_mesh(BoxMeshSpec((1, 1, 1), (1, 1, 1))))


def test_uncovered_tet(box):
    with pytest.raises(UncoveredTet):
        material_map([Region("half", box=((0, 0, 0), (1, 1, 1)))], box, default=None)


def test_invalid_region_values():
    with pytest.raises(NegativeConductivity):
        Region("bad", sigma=-1.0)
    with pytest.raises(MaterialError):
        Region("bad", eps_r=1e-9)
    with pytest.raises(MaterialError):
        Region("bad", mu_r=0.0)


def test_lossless_refuses_conductors_by_name(box):
    mm = material_map([Region("copper", sigma=5.8e7, box=((1, 0, 0), (2, 1, 1)))], box)
    with pytest.raises(LossyMaterialInEigenproblem, match="copper"):
        mm.lossless()


def test_zero_frequency_rejected(box):
    with pytest.raises(ZeroFrequency):
        resolve_materials([], box, omega=0.0)


def test_one_edge_source_charges(box):
    inc = build_incidence(box)
    port = make_port(box, [0, 1], current=1.0)
    om = 2 * np.pi * 1e9
    src = build_source(port, om, box, inc.d0)
    e = box.edge_index(0, 1)
    assert src.J[e] == 1 and np.count_nonzero(src.J) == 1
    expect = np.zeros(box.N0, dtype=complex)
    expect[0], expect[1] = 1 / (1j * om), -1 / (1j * om)
    np.testing.assert_allclose(src.rho, expect, rtol=1e-15)


def test_closed_loop_deposits_no_charge(box):
    a, b, c = box.faces[0]
    port = make_port(box, [a, b, c, a])
    assert port.closed
    with pytest.warns(ClosedPathWarning):
        src = build_source(port, 1.0, box)
    assert np.all(src.rho == 0)


def test_reversed_path_negates_sources(box):
    port = make_port(box, [0, 1, 4])
    s1 = build_source(port, 3.0, box)
    s2 = build_source(port.reversed(), 3.0, box)
    assert np.array_equal(s1.J, -s2.J) and np.array_equal(s1.rho, -s2.rho)


def test_port_errors(box):
    with pytest.raises(EmptyPath):
        make_port(box, [0])
    with pytest.raises(ZeroCurrent):
        make_port(box, [0, 1], current=0)
    far = int(np.argmax(np.linalg.norm(box.vertices, axis=1)))
    with pytest.raises(PortError):
        make_port(box, [0, far])
    with pytest.raises(PortError):
        port_from_points(box, [(0, 0, 0), (0.3, 0.3, 0.3)])


def test_port_from_points(box):
    p = port_from_points(box, [(0, 0, 0), (1, 0, 0)], current=2.0)
    assert p.vertices == (0, 1) and p.current == 2.0


@settings(max_examples=30, deadline=None)
@given(st.randoms(use_true_random=False), st.floats(1e-3, 1e10), st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3))
def test_charge_continuity_holds(r, omega, current):
    cx = generate_box_mesh(BoxMeshSpec((1.0, 1.0, 1.0), (2, 2, 2)))
    inc = build_incidence(cx)
    # random self-avoiding walk along mesh edges
    nbrs = {i: set() for i in range(cx.N0)}
    for a, b in cx.edges:
        nbrs[a].add(b)
        nbrs[b].add(a)
    path = [r.randrange(cx.N0)]
    for _ in range(r.randrange(1, 6)):
        options = sorted(nbrs[path[-1]] - set(path))
        if not options:
            break
        path.append(r.choice(options))
    if len(path) < 2:
        return
    src = build_source(make_port(cx, path, current), omega, cx, inc.d0)
    lhs = -(inc.d0.T @ src.J)
    np.testing.assert_allclose(lhs, 1j * omega * src.rho, rtol=1e-14, atol=1e-14 * abs(current))
    nz = set(np.flatnonzero(src.rho))
    assert nz <= {path[0], path[-1]}


def test_source_independent_of_tet_order(box):
    perm = box.tets[::-1, [1, 0, 2, 3]]
    other = build_complex(box.vertices, perm)
    s1 = build_source(make_port(box, [0, 1, 4]), 2.0, box)
    s2 = build_source(make_port(other, [0, 1, 4]), 2.0, other)
    assert np.array_equal(s1.J, s2.J) and np.array_equal(s1.rho, s2.rho)


def test_no_warning_for_open_path(box):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        build_source(make_port(box, [0, 1]), 1.0, box)
