import numpy as np
import pytest

from decoh.core import PhaseSpacePoint, PhysicalConstants, PotentialSpec, SpatialGrid, potential_values
from decoh.decoherence import (
    BracketReport,
    TransitionTable,
    bracket_expansion,
    bracket_value,
    commutation_function,
    hamilton_rate_extraction,
    most_likely_destination,
    reversibility_check,
    transition_amplitudes,
)
from decoh.errors import ConfigurationError, DegenerateFitError

C = PhysicalConstants()
GRID64 = SpatialGrid(32.0, 64)
TAUS = [1e-2, 5e-3, 2.5e-3, 1.25e-3, 6.25e-4]

ALL_SPECS = [
    PotentialSpec.free(),
    PotentialSpec.harmonic(1.0),
    PotentialSpec.quartic(0.002),
    PotentialSpec.double_well(0.001, 0.1),
    PotentialSpec.cosine(1.0, 2 * np.pi / 32.0),
]


def dense_propagator_oracle(grid, spec, consts, tau):
    """Independent e^{-i H tau / hbar} on the grid, built from the explicit
    DFT matrix rather than the package's spectral application."""
    M = grid.n_points
    j = np.arange(M)
    F = np.exp(-2j * np.pi * np.outer(j, j) / M)  # F @ psi = fft(psi)
    Finv = F.conj().T / M
    p = grid.momenta()
    K = Finv @ np.diag(p * p / (2 * consts.mass)) @ F
    H = K + np.diag(potential_values(spec, grid.positions()))
    H = 0.5 * (H + H.conj().T)
    w, V = np.linalg.eigh(H)
    return (V * np.exp(-1j * w * tau / grid.hbar)) @ V.conj().T


def project_modes(grid, amp):
    ft = np.fft.fft(amp)
    modes = grid.momentum_modes()
    phase = np.exp(1j * modes * grid.momentum_spacing * grid.box_length / (2 * grid.hbar))
    a = grid.spacing / np.sqrt(grid.box_length) * phase * ft
    order = np.argsort(modes)
    return modes[order], a[order]


def test_free_transition_table_is_diagonal():
    table = transition_amplitudes(GRID64, PotentialSpec.free(), C, 3, 1e-3)
    assert table.probability(3) == pytest.approx(1.0, abs=1e-12)
    off = np.abs(table.amplitudes) ** 2
    off[np.searchsorted(table.modes, 3)] = 0.0
    assert np.max(off) < 1e-24


def test_transition_unitarity_all_potentials():
    for spec in ALL_SPECS:
        table = transition_amplitudes(GRID64, spec, C, 2, 1e-3)
        assert abs(np.sum(np.abs(table.amplitudes) ** 2) - 1.0) < 1e-10


def test_harmonic_diagonal_defect_matches_dense_oracle_and_scales():
    spec = PotentialSpec.harmonic(1.0)
    defects = []
    for tau in (1e-3, 5e-4, 2.5e-4):
        table = transition_amplitudes(GRID64, spec, C, 3, tau)
        defect = 1.0 - table.probability(3)
        U = dense_propagator_oracle(GRID64, spec, C, tau)
        from decoh.schrodinger import init_momentum_eigenstate

        zeta = init_momentum_eigenstate(GRID64, 3).amplitudes
        _, a = project_modes(GRID64, U @ zeta)
        oracle = 1.0 - abs(a[np.searchsorted(np.sort(GRID64.momentum_modes()), 3)]) ** 2
        assert defect == pytest.approx(oracle, rel=1e-5)
        defects.append(defect)
    assert defects[0] / defects[1] == pytest.approx(4.0, abs=0.1)
    assert defects[1] / defects[2] == pytest.approx(4.0, abs=0.1)


def test_diagonal_defect_slope_two_across_potentials():
    taus = np.array([2e-3, 1e-3, 5e-4, 2.5e-4])
    for spec in ALL_SPECS[1:]:  # free is exactly diagonal
        defects = []
        for tau in taus:
            table = transition_amplitudes(GRID64, spec, C, 2, tau)
            defects.append(1.0 - table.probability(2))
        slope = np.polyfit(np.log(taus), np.log(defects), 1)[0]
        assert abs(slope - 2.0) < 0.2


def test_cosine_first_order_sidebands():
    j = 2
    u0 = 0.5
    spec = PotentialSpec.cosine(u0, 2 * np.pi / 32.0 * j)
    tau = 1e-3
    table = transition_amplitudes(GRID64, spec, C, 3, tau)
    for target in (3 + j, 3 - j):
        amp = abs(table.amplitudes[np.searchsorted(table.modes, target)])
        assert amp == pytest.approx(u0 * tau / 2.0, rel=2e-2)


def test_most_likely_destination():
    table = transition_amplitudes(GRID64, PotentialSpec.free(), C, 5, 1e-3)
    assert most_likely_destination(table) == 5
    grid = SpatialGrid(16.0, 64)  # small box keeps tau = 1e-2 inside the guard
    for tau in (1e-3, 1e-2):
        table = transition_amplitudes(grid, PotentialSpec.harmonic(1.0), C, 5, tau)
        assert most_likely_destination(table) == 5


def test_most_likely_destination_tie_break():
    modes = np.array([-3, -1, 0, 1, 3])
    amps = np.array([0.6, 0.2, 0.2, 0.2, 0.6], dtype=complex)
    amps /= np.sqrt(np.sum(np.abs(amps) ** 2))
    table = TransitionTable(source_mode=0, tau=1e-3, modes=modes, amplitudes=amps)
    assert most_likely_destination(table) == 3


def test_reversibility_all_potentials():
    for spec in ALL_SPECS:
        f = reversibility_check(GRID64, spec, C, 3, 1e-3)
        assert f >= 1.0 - 1e-10
    assert reversibility_check(GRID64, PotentialSpec.free(), C, 3, 1e-3) >= 1.0 - 1e-14


def test_bracket_frozen_identity_exact():
    x = PhaseSpacePoint([1.3], [-0.7])
    spec = PotentialSpec.double_well(1.0, 1.0)
    from decoh.core import hamiltonian_value

    h = hamiltonian_value(C, spec, x)
    for tau in TAUS:
        b = bracket_value(spec, C, x, "frozen", tau)
        assert b - 1.0 == pytest.approx(tau**2 * h**2, rel=1e-12)
    report = bracket_expansion(spec, C, x, "frozen", TAUS)
    assert report.fitted_slope == pytest.approx(2.0, abs=1e-6)


def test_bracket_anti_rule_slope_two():
    x = PhaseSpacePoint([1.0], [1.0])
    report = bracket_expansion(PotentialSpec.harmonic(1.0), C, x, "anti", TAUS)
    assert abs(report.fitted_slope - 2.0) < 0.2


def test_bracket_product_structure():
    # The product's real cross term (tau/hbar)^2 H H' is rule-independent to
    # O(tau^4), so |b - 1| converges at slope 2 for the hamilton rule as well:
    # the two-factor product certifies first-order energy conservation of the
    # update, not the direction of the flow (the time-reversed update gives an
    # identical product through O(tau^3)).
    x = PhaseSpacePoint([1.0], [1.0])
    spec = PotentialSpec.harmonic(1.0)
    rep_h = bracket_expansion(spec, C, x, "hamilton", TAUS)
    assert abs(rep_h.fitted_slope - 2.0) < 0.05
    for tau in TAUS:
        bh = bracket_value(spec, C, x, "hamilton", tau)
        ba = bracket_value(spec, C, x, "anti", tau)
        assert abs(bh - ba) < 10 * tau**4


def test_bracket_custom_rule():
    # a mispaired update (position moved along grad_q H) breaks the first-order
    # cancellation; the defect is dominated by the imaginary first-order term
    def swapped(x, tau):
        return tau * x.q, -tau * x.p

    x = PhaseSpacePoint([2.0], [0.5])
    report = bracket_expansion(PotentialSpec.harmonic(1.0), C, x, swapped, TAUS)
    assert report.rule == "custom"
    assert report.fitted_slope == pytest.approx(2.0, abs=0.3)
    b = bracket_value(PotentialSpec.harmonic(1.0), C, x, swapped, 1e-3)
    assert abs(b.imag) > 0.5 * abs(b - 1)  # first-order term survives


def test_bracket_degenerate_fit_reported():
    # H = 0 exactly at (q, p) = (1, 0) for the double well with a = b = 1,
    # so the frozen-rule errors all sit at zero
    x = PhaseSpacePoint([1.0], [0.0])
    with pytest.raises(DegenerateFitError):
        bracket_expansion(PotentialSpec.double_well(1.0, 1.0), C, x, "frozen", TAUS)


def test_bracket_validates_tau_list():
    x = PhaseSpacePoint([1.0], [1.0])
    with pytest.raises(ConfigurationError):
        bracket_expansion(PotentialSpec.harmonic(1.0), C, x, "hamilton", [1e-2, 5e-3, 2.5e-3])
    with pytest.raises(ConfigurationError):
        bracket_expansion(PotentialSpec.harmonic(1.0), C, x, "hamilton", [1e-2, 6e-3, 3e-3, 1.5e-3, 7.5e-4])


def test_rate_extraction_free_exact():
    x = PhaseSpacePoint([0.4], [1.7])
    res = hamilton_rate_extraction(PotentialSpec.free(), C, x)
    assert res.converged
    assert res.p_dot[0] == 0.0
    assert res.q_dot[0] == pytest.approx(1.7, rel=1e-12)


def test_rate_extraction_harmonic_and_quartic():
    res = hamilton_rate_extraction(PotentialSpec.harmonic(1.0), C, PhaseSpacePoint([2.0], [1.0]))
    assert res.converged
    assert res.q_dot[0] == pytest.approx(1.0, abs=1e-3)
    assert res.p_dot[0] == pytest.approx(-2.0, abs=1e-3)
    res = hamilton_rate_extraction(PotentialSpec.quartic(1.0), C, PhaseSpacePoint([1.0], [3.0]))
    assert res.converged
    assert res.q_dot[0] == pytest.approx(3.0, abs=1e-3)
    assert res.p_dot[0] == pytest.approx(-4.0, abs=1e-3)


def test_rate_extraction_matches_hamiltonian_gradients():
    from decoh.core import hamiltonian_gradients

    rng = np.random.default_rng(7)
    for spec in ALL_SPECS:
        for _ in range(20):
            q, p = rng.uniform(-2, 2, size=2)
            x = PhaseSpacePoint([q], [p])
            res = hamilton_rate_extraction(spec, C, x)
            gq, gp = hamiltonian_gradients(C, spec, x)
            assert abs(res.q_dot[0] - gp[0]) < 1e-3
            assert abs(res.p_dot[0] - (-gq[0])) < 1e-3


def test_rate_extraction_reports_non_convergence():
    # an oversized halving sequence pushes the Newton solve out of its
    # trust region; the fitted values are still reported
    taus = [0.8 * 0.5**k for k in range(5)]
    res = hamilton_rate_extraction(PotentialSpec.quartic(1.0), C, PhaseSpacePoint([2.0], [1.0]), taus)
    assert not res.converged
    assert np.isfinite(res.alpha) and np.isfinite(res.gamma)


def test_commutation_function_free_is_unity():
    spec = PotentialSpec.free()
    for n in (0, 3, -5):
        for qi in (0, 17, 50):
            w = commutation_function(GRID64, spec, C, 0.2, n, qi)
            assert abs(w - 1.0) < 1e-10


def test_commutation_function_harmonic_high_temperature():
    spec = PotentialSpec.harmonic(1.0)
    w = commutation_function(GRID64, spec, C, 0.01, 4, GRID64.n_points // 2)
    assert abs(w - 1.0) < 0.02


def test_commutation_function_beta_halving_monotone():
    spec = PotentialSpec.harmonic(1.0)
    betas = [0.16, 0.08, 0.04, 0.02, 0.01]
    vals = [abs(commutation_function(GRID64, spec, C, b, 4, GRID64.n_points // 2) - 1.0) for b in betas]
    assert all(vals[i] > vals[i + 1] for i in range(len(vals) - 1))


def test_commutation_function_guards():
    with pytest.raises(ConfigurationError):
        commutation_function(SpatialGrid(32.0, 512), PotentialSpec.free(), C, 0.1, 0, 0)
    with pytest.raises(ConfigurationError):
        commutation_function(GRID64, PotentialSpec.free(), C, -0.1, 0, 0)
    with pytest.raises(ConfigurationError):
        commutation_function(GRID64, PotentialSpec.free(), C, 0.1, 0, 64)
