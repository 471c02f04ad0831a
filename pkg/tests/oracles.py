"""Independent brute-force oracles for the test suite.

Everything here is deliberately slow and explicit (index loops, matrix
exponentials, numerical quadrature) so that it exercises none of the
production code paths it is used to check.
"""

import numpy as np
from scipy.linalg import expm


def kron_loop(a, b):
    """Entrywise Kronecker product."""
    da, db = a.shape[0], b.shape[0]
    out = np.zeros((da * db, da * db), dtype=complex)
    for i in range(da):
        for j in range(da):
            for p in range(db):
                for q in range(db):
                    out[i * db + p, j * db + q] = a[i, j] * b[p, q]
    return out


def ptrace_first_loop(x, d1):
    """Partial trace over the first factor by explicit index summation."""
    d2 = x.shape[0] // d1
    out = np.zeros((d2, d2), dtype=complex)
    for p in range(d2):
        for q in range(d2):
            for i in range(d1):
                out[p, q] += x[i * d2 + p, i * d2 + q]
    return out


def map_matrix_loop(rho, ds, dt):
    """Vectorized matrix of X -> Tr_1[(X (x) 1) rho], column by column."""
    eye = np.eye(dt, dtype=complex)
    cols = []
    for i in range(ds):
        for j in range(ds):
            basis = np.zeros((ds, ds), dtype=complex)
            basis[i, j] = 1.0
            image = ptrace_first_loop(kron_loop(basis, eye) @ rho, ds)
            cols.append(image.reshape(-1))
    return np.stack(cols, axis=1)


def thermal_state(nu, cutoff):
    """Truncated thermal density matrix (not renormalized)."""
    j = np.arange(cutoff + 1, dtype=float)
    if nu == 0.0:
        w = np.zeros(cutoff + 1)
        w[0] = 1.0
    else:
        w = nu**j / (1.0 + nu) ** (j + 1)
    return np.diag(w)


def beam_splitter_counter_oracle(eta_p, nu, fock_cutoff, env_cutoff):
    """P(count k | Fock input n) from the explicit two-mode beam splitter.

    Works sector by sector in total photon number T (the beam splitter
    conserves it): within the sector basis |j, T-j> (j photons in the
    detected mode) the generator of the rotation is tridiagonal and the
    amplitudes come from a matrix exponential.  The thermal environment is
    truncated at env_cutoff and mixed in classically.

    Returns M[k, n] for k = 0..fock_cutoff+env_cutoff, n = 0..fock_cutoff.
    """
    theta = np.arccos(np.sqrt(eta_p))
    total_max = fock_cutoff + env_cutoff
    j_env = np.arange(env_cutoff + 1, dtype=float)
    if nu == 0.0:
        thermal = np.zeros(env_cutoff + 1)
        thermal[0] = 1.0
    else:
        thermal = nu**j_env / (1.0 + nu) ** (j_env + 1)

    # rotation amplitudes per total-photon sector
    sector_u = {}
    for total in range(total_max + 1):
        gen = np.zeros((total + 1, total + 1))
        for j in range(total):
            val = np.sqrt((j + 1) * (total - j))
            gen[j + 1, j] = val
            gen[j, j + 1] = -val
        sector_u[total] = expm(theta * gen)

    out = np.zeros((total_max + 1, fock_cutoff + 1))
    for n in range(fock_cutoff + 1):
        for j_e in range(env_cutoff + 1):
            total = n + j_e
            amps = sector_u[total][:, n]  # start with n photons in the signal mode
            out[: total + 1, n] += thermal[j_e] * amps**2
    return out


def quadrature_integral(f_values, xs):
    return float(np.trapezoid(f_values, xs))


def chi2_statistic(observed_counts, expected_probs, n_total):
    """Pearson chi^2 against expected cell probabilities."""
    expected = np.asarray(expected_probs, dtype=float) * n_total
    observed = np.asarray(observed_counts, dtype=float)
    mask = expected > 0
    return float(((observed[mask] - expected[mask]) ** 2 / expected[mask]).sum()), int(
        mask.sum()
    )


def random_hermitian(rng, dim):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (g + g.conj().T) / 2.0


def random_density(rng, dim):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho)
