import numpy as np

from drsc import spectral


def spectral_invariants_hold(A, tol=1e-8):
    """Zero-eigenvalue count equals component count and the spectrum sits in [0, 2]."""
    lam = spectral.laplacian_spectrum(A)
    ok_range = lam.min() >= -tol and lam.max() <= 2 + tol
    return ok_range and int(np.sum(lam < tol)) == spectral.num_components(A)


def cliques(sizes):
    N = sum(sizes)
    A = np.zeros((N, N))
    start = 0
    for s in sizes:
        A[start:start + s, start:start + s] = 1.0
        start += s
    np.fill_diagonal(A, 0.0)
    labels = np.repeat(np.arange(len(sizes)), sizes)
    return A, labels


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
