import numpy as np
import pytest

from cobweb.projmetric import build_gram

# Parameter triples that appear in the reference tables.
TABLE_TRIPLES = [
    (3, 7, 3), (4, 5, 4), (5, 4, 5), (5, 5, 5), (6, 4, 6),
    (7, 4, 7), (7, 3, 7), (6, 6, 6), (10, 10, 10), (14, 14, 14),
]

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def g454():
    return build_gram(4, 5, 4)


@pytest.fixture
def g666():
    return build_gram(6, 6, 6)


def random_proper_points(g, rng, n, radius=1.5):
    """Random proper points within ``radius`` of an interior centre of O.

    Points are spread around the hull of the sites and rejected when they
    fall too far out, where <X,X> loses digits to cancellation.
    """
    from cobweb.orthoscheme import site_vectors
    from cobweb.projmetric import canonicalize

    V = canonicalize(np.array(list(site_vectors(g).values())), g)
    V *= np.sign(-(V @ g.A @ V[0]))[:, None]
    c = V.mean(axis=0)
    c /= np.sqrt(-(c @ g.A @ c))
    X = rng.dirichlet(np.ones(len(V)), size=n) @ V + 0.2 * rng.normal(size=(n, 4))
    q = np.einsum("ij,jk,ik->i", X, g.A, X)
    X, q = X[q < 0], q[q < 0]
    cosh = np.abs(X @ g.A @ c) / np.sqrt(-q)
    return X[cosh < np.cosh(radius)]


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
