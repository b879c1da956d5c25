import numpy as np
import pytest

from pnpfd import dense
from pnpfd.diagnostics import (
    CSV_COLUMNS,
    DiagnosticsRecord,
    dissipation,
    energy,
    masses,
    min_concentration,
    read_csv,
    record,
    write_csv,
)
from pnpfd.grid import GridSpec
from pnpfd.scheme import SchemeParams, initial_state, mobilities


def test_energy_of_uniform_fields():
    g = GridSpec(2, 8)
    assert energy(g, g.full(1.0), g.full(1.0)) == 0.0
    c = 0.01
    assert energy(GridSpec(2, 8, 2.0), g.full(c), g.full(c)) == pytest.approx(2 * c * np.log(c) * 4.0, rel=1e-14)


def test_energy_against_dense_transcription(rng):
    g = GridSpec(2, 4, 1.3)
    n, p = rng.uniform(0.2, 2.0, (2, 4, 4))
    q = np.ravel(n - p)
    q -= q.mean()
    K = dense.weighted_laplacian_matrix(g)
    v = dense.solve_mean_zero(K, q)
    want = g.h**2 * (np.sum(n * np.log(n) + p * np.log(p)) + 0.5 * q @ v)
    assert energy(g, n, p) == pytest.approx(want, rel=1e-11)


def test_energy_with_fixed_charge_uses_total_charge(rng):
    g = GridSpec(2, 8)
    n, p = rng.uniform(0.5, 1.5, (2, 8, 8))
    rho = n - p
    assert energy(g, n, p, rho) == pytest.approx(energy(g, g.full(1.0), g.full(1.0)) + g.h**2 * np.sum(n * np.log(n) + p * np.log(p)), abs=1e-13)


def test_energy_domain_error():
    g = GridSpec(2, 4)
    with pytest.raises(ValueError):
        energy(g, g.full(-1.0), g.full(1.0))


def test_min_concentration_and_masses():
    g = GridSpec(2, 4, 2.0)
    n, p = g.full(0.01), g.full(0.01)
    assert min_concentration(n, p) == 0.01
    assert masses(g, n, p) == pytest.approx((0.04, 0.04))
    n[1, 2] = -1e-3
    assert min_concentration(n, p) < 0


def test_dissipation_zero_at_rest_and_nonnegative(rng):
    g = GridSpec(2, 8)
    params = SchemeParams(0.01)
    s = initial_state(g, g.full(0.5), g.full(0.5), params)
    assert dissipation(g, s, s, mobilities(g, s, s, params), params) == 0.0
    a = initial_state(g, rng.uniform(0.5, 1.0, g.shape), rng.uniform(0.5, 1.0, g.shape), params)
    b = initial_state(g, rng.uniform(0.5, 1.0, g.shape), rng.uniform(0.5, 1.0, g.shape), params)
    assert dissipation(g, a, b, mobilities(g, b, a, params), params) > 0


def test_csv_roundtrip_full_precision(tmp_path):
    recs = [DiagnosticsRecord(m, 0.1 * m, -1.0 / 3.0 + m, np.pi, np.e, 1e-300, 0.0, 7 * m) for m in range(3)]
    path = tmp_path / "d.csv"
    write_csv(path, recs)
    assert path.read_text().splitlines()[0] == ",".join(CSV_COLUMNS)
    assert read_csv(path) == recs


def test_csv_rejects_foreign_header(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_csv(path)


def test_record_fields():
    g = GridSpec(2, 4)
    params = SchemeParams(0.1)
    s = initial_state(g, g.full(0.3), g.full(0.2), params)
    rec = record(g, s, params, R=0.5, picard_iters=3)
    assert rec.step == 0 and rec.c_min == 0.2 and rec.picard_iters == 3
    assert rec.mass_n == pytest.approx(0.3)
