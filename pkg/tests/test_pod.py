import numpy as np
import pytest

from cutrom import pod
from cutrom.errors import InvalidArgumentError
from cutrom.mesh import build_structured_mesh, mass_matrix
from cutrom.snapshot import SnapshotSet


@pytest.fixture(scope="module")
def mesh_mass():
    mesh = build_structured_mesh((0, 1, 0, 1), 0.1)
    return mesh, mass_matrix(mesh)


def _smooth_set(mesh, M=20, seed=0):
    rng = np.random.default_rng(seed)
    x, y = mesh.vertices.T
    mus = rng.uniform(0.5, 3.0, size=(M, 2))
    fields = np.array([np.sin(a * x) * np.cos(b * y) for a, b in mus])
    return SnapshotSet("scalar", fields, mus)


def test_single_and_duplicated_snapshot(mesh_mass):
    mesh, M = mesh_mass
    v = 1 + mesh.vertices[:, 0]
    nrm2 = v @ M @ v
    assert np.allclose(pod.correlation(SnapshotSet("scalar", v[None], [[0.0]]), M), [[nrm2]])
    twice = SnapshotSet("scalar", np.stack([v, v]), [[0.0], [1.0]])
    assert np.allclose(pod.correlation(twice, M), nrm2 * np.ones((2, 2)))
    basis = pod.compress(twice, 2, M)
    assert basis.N == 1
    assert np.allclose(basis.eigenvalues, [2 * nrm2, 0.0], atol=1e-12 * nrm2)
    assert np.allclose(abs(basis.modes[0]), v / np.sqrt(nrm2))


def test_disjoint_support_gives_diagonal(mesh_mass):
    mesh, M = mesh_mass
    x = mesh.vertices[:, 0]
    a = np.where(x < 0.25, 1.0, 0.0)
    b = np.where(x > 0.75, 1.0, 0.0)
    C = pod.correlation(SnapshotSet("scalar", np.stack([a, b]), [[0.0], [1.0]]), M)
    assert C[0, 1] == 0.0 and C[0, 0] > 0 and C[1, 1] > 0


def test_empty_and_range_errors(mesh_mass):
    mesh, M = mesh_mass
    s = _smooth_set(mesh, 4)
    with pytest.raises(InvalidArgumentError):
        pod.compress(s, 5, M)
    with pytest.raises(InvalidArgumentError):
        pod.compress(s, 0, M)
    with pytest.raises(InvalidArgumentError):
        pod.correlation(SnapshotSet("scalar", np.zeros((0, mesh.n_vertices)), np.zeros((0, 1))), M)


@pytest.mark.parametrize("method", ["jacobi", "lapack"])
def test_orthonormal_modes_and_projection_identity(mesh_mass, method):
    mesh, M = mesh_mass
    s = _smooth_set(mesh)
    basis = pod.compress(s, 12, M, method=method)
    G = pod.inner(M, basis.modes, basis.modes)
    assert np.abs(G - np.eye(basis.N)).max() <= 1e-8
    lam = basis.eigenvalues
    for N in (1, 3, 6):
        tail = lam[N:].sum()
        assert abs(pod.projection_error(s, basis, N, M) - tail) <= 1e-6 * tail
    assert basis.normalized_eigenvalues[0] == 1.0
    assert np.all(np.diff(lam) <= 1e-12 * lam[0])


def test_jacobi_and_lapack_agree(mesh_mass):
    mesh, M = mesh_mass
    s = _smooth_set(mesh)
    a = pod.compress(s, 5, M, "jacobi")
    b = pod.compress(s, 5, M, "lapack")
    assert np.allclose(a.eigenvalues[:5], b.eigenvalues[:5], rtol=1e-10)
    assert np.allclose(np.abs(pod.inner(M, a.modes, b.modes)), np.eye(5), atol=1e-6)


def test_vector_fields(mesh_mass):
    mesh, M = mesh_mass
    s = _smooth_set(mesh, 6)
    vec = SnapshotSet("velocity", np.stack([s.fields, 2 * s.fields[::-1]], axis=-1), s.parameters)
    basis = pod.compress(vec, 4, M)
    assert basis.modes.shape == (4, mesh.n_vertices, 2)
    assert np.allclose(pod.inner(M, basis.modes, basis.modes), np.eye(4), atol=1e-10)


def test_stokes_spaces_order(mesh_mass):
    mesh, M = mesh_mass
    s = _smooth_set(mesh, 6)
    vec = SnapshotSet("velocity", np.stack([s.fields, s.fields], axis=-1), s.parameters)
    sup = SnapshotSet("supremizer", np.stack([s.fields, -s.fields], axis=-1), s.parameters)
    v, w, p = pod.compress(vec, 3, M), pod.compress(sup, 3, M), pod.compress(s, 3, M)
    spaces = pod.build_stokes_spaces(v, w, p, 1)
    assert spaces.size == 3
    assert np.array_equal(spaces.velocity[0], v.modes[0])
    assert np.array_equal(spaces.velocity[1], w.modes[0])
    assert np.array_equal(spaces.pressure[0], p.modes[0])
    with pytest.raises(InvalidArgumentError):
        pod.build_stokes_spaces(v, w, p, 4)


def test_basis_round_trip(tmp_path, mesh_mass):
    mesh, M = mesh_mass
    basis = pod.compress(_smooth_set(mesh), 4, M)
    pod.save_basis(basis, tmp_path / "b")
    back = pod.load_basis(tmp_path / "b")
    assert back.modes.tobytes() == basis.modes.tobytes()
    assert back.eigenvalues.tobytes() == basis.eigenvalues.tobytes()
    assert back.truncate(2).N == 2
