"""Acceptance criteria 1-10, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines inline;
they are also collected in the terminal summary.
"""

import json
import math
import warnings

import numpy as np

from stifftomo import FieldPoint, IndenterShape, InclusionParams, MaterialParams
from stifftomo.boussinesq import strain_at_inclusion, strain_fd_oracle
from stifftomo.cli import main
from stifftomo.elastic import contact_modulus
from stifftomo.errors import FiniteDifferenceWarning
from stifftomo.forward import (
    GridSpec,
    indentation_curve_exact,
    m3_spherical_general,
    m3_spherical_incompressible,
    stiffness_asymptotic,
    stiffness_map_forward,
)
from stifftomo.inverse import ModelParams5, extract_inclusion, fit_map
from stifftomo.polarization import cavity_ks_gs, polarization_matrix_spherical, rigid_ks_gs, spherical_ks_gs


def test_c01_strain_oracle_equivalence(criterion):
    worst = 0.0
    for nu in (0.0, 0.3, 0.49):
        m = MaterialParams(1e4, nu)
        for xi in (0.0, 0.5, 1.0, 2.0):
            p = FieldPoint(xi, 3e-6)
            with warnings.catch_warnings():
                warnings.simplefilter("error", FiniteDifferenceWarning)
                fd = strain_fd_oracle(p.position, m)
            exact = strain_at_inclusion(p, m)
            worst = max(worst, np.max(np.abs(fd - exact)) / np.max(np.abs(exact)))
    assert criterion(1, "strain oracle equivalence", worst < 1e-6, f"max rel err {worst:.2e} (tol 1e-6)")


def test_c02_hertz_sneddon(criterion):
    worst = 0.0
    for nu in (0.0, 0.3, 0.5):
        m = MaterialParams(1e4, nu)
        theta1 = contact_modulus(m)
        estar = m.E / (1 - nu**2)
        R = 2e-6
        sphere = IndenterShape.sphere(R)
        cone = IndenterShape.cone(70.0)
        for w in np.geomspace(1e-9, 1e-6, 7):
            st = indentation_curve_exact(w, sphere, theta1, 0.0)
            worst = max(worst, abs(st.P / (4.0 / 3.0 * estar * math.sqrt(R) * w**1.5) - 1))
            st = indentation_curve_exact(w, cone, theta1, 0.0)
            worst = max(worst, abs(0.5 * math.pi * cone.A * st.a / w - 1))
    assert criterion(2, "Hertz/Sneddon reduction", worst < 1e-10, f"max rel err {worst:.2e} (tol 1e-10)")


def test_c03_polarization_limits(criterion):
    worst = 0.0
    for nu in (0.0, 0.3, 0.45):
        for nu0 in (0.0, 0.3, 0.45):
            for alpha, ref in ((1e-10, cavity_ks_gs(nu)), (1e10, rigid_ks_gs(nu))):
                got = spherical_ks_gs(alpha, nu, nu0)
                worst = max(worst, abs(got.k_s / ref.k_s - 1), abs(got.g_s / ref.g_s - 1))
    assert criterion(3, "polarization limits", worst < 1e-6, f"max rel err {worst:.2e} (tol 1e-6)")


def test_c04_matched_inclusion(criterion):
    xi = np.linspace(-4.0, 4.0, 41)
    ok = True
    for g3 in (0.0, 1e-3):
        for nu in (0.0, 0.3, 0.45):
            incl = InclusionParams(d=3e-6, r_eps=0.6e-6, alpha=1.0, nu0=nu)
            ok &= bool(np.all(g3 + m3_spherical_general(MaterialParams(1e4, nu), incl, xi) == g3))
        incl = InclusionParams(d=3e-6, r_eps=0.6e-6, alpha=1.0, nu0=0.5)
        ok &= bool(np.all(g3 + m3_spherical_incompressible(MaterialParams(1e4, 0.5), incl, xi) == g3))
    assert criterion(4, "matched-inclusion invisibility", ok, "m3 == g3 bit-exactly at 41 xi values" if ok else "nonzero m3")


def test_c05_incompressible_limit(criterion):
    monotone = True
    final = 0.0
    for alpha in (0.1, 2.0, 10.0):
        incl = InclusionParams(d=3e-6, r_eps=0.6e-6, alpha=alpha, nu0=0.5)
        for xi in (0.0, 1.0):
            ref = m3_spherical_incompressible(MaterialParams(1e4, 0.5), incl, xi)
            errs = [abs(m3_spherical_general(MaterialParams(1e4, 0.5 - 10.0**-k), incl, xi) / ref - 1) for k in (2, 3, 4)]
            monotone &= errs[0] > errs[1] > errs[2]
            final = max(final, errs[2])
    ok = monotone and final < 1e-2
    assert criterion(5, "incompressible-limit consistency", ok, f"monotone={monotone}, rel err at k=4 {final:.2e} (tol 1e-2)")


def test_c06_asymptotic_order(criterion):
    theta1 = contact_modulus(MaterialParams(1e4, 0.5))
    w = 0.2e-6
    x = np.logspace(-4, -1, 13)
    slopes = []
    for lam, A in ((1.0, 1.0 / math.tan(math.radians(70.0))), (1.5, 1e3), (2.0, 2.5e5)):
        ind = IndenterShape(lam, A)
        _, s0 = stiffness_asymptotic(w, ind, theta1, 0.0)
        for sign in (1.0, -1.0):
            gap = []
            for v in x:
                m3 = sign * v / s0
                gap.append(abs(indentation_curve_exact(w, ind, theta1, m3).S - stiffness_asymptotic(w, ind, theta1, m3)[0]) / s0)
            slopes.append(np.polyfit(np.log(x), np.log(gap), 1)[0])
    worst = min(slopes)
    assert criterion(6, "asymptotic order", worst >= 1.9, f"min fitted slope {worst:.3f} over 6 sweeps (need >= 1.9)")


def test_c07_definiteness(criterion):
    ok = True
    for nu in (0.0, 0.3, 0.45):
        m = MaterialParams(1e4, nu)
        for alpha in (2.0, 10.0, 0.1, 0.5):
            ev = polarization_matrix_spherical(m, InclusionParams(d=3e-6, r_eps=0.6e-6, alpha=alpha, nu0=nu)).eigenvalues()
            ok &= bool(np.all(ev > 0) if alpha > 1 else np.all(ev < 0))
    assert criterion(7, "polarization definiteness", ok, "eigenvalue signs as expected" if ok else "sign violation")


def test_c08_noiseless_round_trip(criterion):
    m = MaterialParams(1e4, 0.5)
    ind = IndenterShape.sphere(2e-6)
    incl = InclusionParams(d=3e-6, x0=(0.4e-6, -0.3e-6), r_eps=0.9e-6, alpha=10.0, nu0=0.5)
    w = 0.3e-6
    smap = stiffness_map_forward(GridSpec.around(incl), m, incl, ind, w)
    s0 = smap.metadata["S0"]
    c0 = -float(m3_spherical_incompressible(m, incl, 0.0)) * (4.0 / 3.0) * s0**2 * incl.d**6
    truth = ModelParams5(s0, c0, incl.d, *incl.x0)
    fit = fit_map(smap)
    rel = np.abs(fit.params.as_array() / truth.as_array() - 1)
    alpha = extract_inclusion(fit, m, ind, 0.5, volume=incl.volume).alpha
    rel_alpha = abs(alpha / incl.alpha - 1)
    ok = fit.converged and np.max(rel) < 1e-6 and rel_alpha < 1e-4
    detail = f"max param rel err {np.max(rel):.2e} (tol 1e-6), alpha rel err {rel_alpha:.2e} (tol 1e-4)"
    assert criterion(8, "noiseless inversion round trip", ok, detail)


def test_c09_noisy_robustness(criterion):
    # Statistical criterion: medians over 50 seeds, not per-seed bounds.
    m = MaterialParams(1e4, 0.5)
    ind = IndenterShape.sphere(2e-6)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        incl = InclusionParams(d=3e-6, x0=(0.4e-6, -0.3e-6), r_eps=1.35e-6, alpha=20.0, nu0=0.5)
        grid = GridSpec.around(incl)
        spacing = grid.extent[0] / (grid.counts[0] - 1)
        depth_err, epi_err = [], []
        for seed in range(50):
            smap = stiffness_map_forward(grid, m, incl, ind, 0.4e-6, noise_sigma=0.01, seed=seed)
            p = fit_map(smap).params
            depth_err.append(abs(p.d / incl.d - 1))
            epi_err.append(math.hypot(p.x10 - incl.x0[0], p.x20 - incl.x0[1]) / spacing)
    md, me = float(np.median(depth_err)), float(np.median(epi_err))
    ok = md < 0.05 and me < 1.0
    detail = f"median depth err {md:.3%} (tol 5%), median epicentre err {me:.3f} spacings (tol 1)"
    assert criterion(9, "noisy inversion robustness", ok, detail)


def test_c10_determinism(criterion, tmp_path):
    cfg = {
        "material": {"E": "10 kPa", "nu": 0.5},
        "indenter": {"shape": "sphere", "R": "2 um"},
        "inclusion": {"d": "3 um", "x0": ["0.4 um", "-0.3 um"], "r_eps": "0.9 um", "alpha": 10.0, "nu0": 0.5},
        "protocol": {"w": "0.3 um", "noise": {"sigma": 0.01, "seed": 2024}},
    }
    cfg_path = tmp_path / "run.json"
    cfg_path.write_text(json.dumps(cfg))
    runs = []
    for k in range(3):
        csv_path, fit_path = tmp_path / f"map{k}.csv", tmp_path / f"fit{k}.json"
        codes = (
            main(["generate", "--config", str(cfg_path), "--out", str(csv_path)]),
            main(["fit", "--in", str(csv_path), "--out", str(fit_path), "--multistart", "3"]),
        )
        runs.append((codes, csv_path.read_bytes(), (tmp_path / f"map{k}.csv.meta.json").read_bytes(), fit_path.read_bytes()))
    ok = runs[0][0] == (0, 0) and runs[0] == runs[1] == runs[2]
    assert criterion(10, "determinism", ok, "3 generate/fit runs byte-identical" if ok else "outputs differ")
