"""Acceptance gate: ten end-to-end criteria at their stated tolerances.

Each test prints a single PASS line on success (visible with pytest -s);
a failure of any assertion marks the criterion as failed.
"""

import itertools
import json
import time

import numpy as np
import pytest

from freegeo.cli import main as cli_main
from freegeo.free_space import (FreeElement, MoleculeCombination, delta,
                                dual_face, face_coordinate_ranges, free_norm,
                                is_gateaux, molecule, norming_functional,
                                pairing)
from freegeo.gromov import analyze_pair, gromov_product
from freegeo.lipschitz import aux_f_xy, from_values, lip_norm, pair_slope, \
    peaking_check
from freegeo.metric import (branching_tree, cantor_endpoints, gallery,
                            gamma_fatten, gamma_thin, line_space,
                            space_to_json_str,
                            uniform_discreteness_constant)
from freegeo.ssd import (CERTIFIED, almost_aligned_certificate,
                         bilipschitz_distortion, exposedness_probe,
                         perturbation_pipeline, single_molecule_perturb)
from conftest import random_euclidean_space, random_zero_sum


def _ok(num, text):
    print(f"ACCEPTANCE {num}: PASS — {text}")


# ---------------------------------------------------------------------------
# 1. LP duality on random instances
# ---------------------------------------------------------------------------

def test_acceptance_01_lp_duality():
    rng = np.random.default_rng(2024)
    start = time.monotonic()
    for _ in range(500):
        space = random_euclidean_space(rng, int(rng.integers(4, 9)))
        mu = FreeElement(space, random_zero_sum(rng, space.n))
        cert = free_norm(mu)
        assert abs(cert.primal_value - cert.dual_value) <= 1e-9 * (
            1.0 + abs(cert.value))
    elapsed = time.monotonic() - start
    assert elapsed < 60.0
    _ok(1, f"500 random instances, primal = dual within 1e-9 "
           f"in {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 2. l1 oracles
# ---------------------------------------------------------------------------

def test_acceptance_02_l1_oracles():
    tree = branching_tree(20)   # base plus 20 leaves at distance 1
    rng = np.random.default_rng(7)
    for _ in range(100):
        a = rng.standard_normal(20)
        masses = np.concatenate([[0.0], a])
        mu = sum((a[k] * delta(tree, k + 1) for k in range(1, 20)),
                 a[0] * delta(tree, 1))
        assert np.allclose(mu.masses[1:], masses[1:])
        assert abs(free_norm(mu).value - np.abs(a).sum()) <= 1e-9 * (
            1.0 + np.abs(a).sum())

    for coords in ([0.0, 1.0, 2.0, 3.0],
                   sorted(rng.uniform(0.0, 10.0, size=12).tolist()),
                   sorted(rng.uniform(-5.0, 5.0, size=9).tolist())):
        coords = np.asarray(coords)
        coords -= coords[0]
        space = line_space(coords)
        c = rng.standard_normal(space.n - 1)
        mu = sum((c[i] * molecule(space, i + 1, i)
                  for i in range(1, space.n - 1)),
                 c[0] * molecule(space, 1, 0))
        assert abs(free_norm(mu).value - np.abs(c).sum()) <= 1e-9 * (
            1.0 + np.abs(c).sum())

    cantor = cantor_endpoints(3)
    c = rng.standard_normal(cantor.n - 1)
    mu = sum((c[i] * molecule(cantor, i + 1, i)
              for i in range(1, cantor.n - 1)),
             c[0] * molecule(cantor, 1, 0))
    assert abs(free_norm(mu).value - np.abs(c).sum()) <= 1e-9 * (
        1.0 + np.abs(c).sum())
    _ok(2, "tree, collinear and Cantor norms match the l1 values")


# ---------------------------------------------------------------------------
# 3. Gateaux tests on the line
# ---------------------------------------------------------------------------

def test_acceptance_03_gateaux():
    space = line_space([0.0, 1.0, 2.0, 3.0])
    third = 1.0 / 3.0
    smooth = MoleculeCombination(
        space, ((third, 1, 0), (third, 2, 1), (third, 3, 2))).element()
    assert is_gateaux(smooth, tol=1e-7)
    split = MoleculeCombination(space, ((0.5, 1, 0), (0.5, 3, 2))).element()
    assert not is_gateaux(split, tol=1e-7)
    ranges = face_coordinate_ranges(dual_face(split))
    assert ranges[2][0] == pytest.approx(0.0, abs=1e-7)
    assert ranges[2][1] == pytest.approx(2.0, abs=1e-7)
    _ok(3, "smoothness flags and the face range [0, 2] at f(2)")


# ---------------------------------------------------------------------------
# 4. product-gap vs peaking equivalence with quantitative bounds
# ---------------------------------------------------------------------------

def _gallery_spaces_upto_12():
    spaces = [line_space([0.0, 1.0, 2.0, 3.0]),
              gallery("three_point_aligned"),
              cantor_endpoints(1), cantor_endpoints(2)]
    spaces += [gallery("equilateral", n=k) for k in (3, 4, 5, 6)]
    spaces += [branching_tree(k) for k in (3, 4, 6)]
    for name in ("almost_aligned", "rotund_no_gap", "branching_tree_family",
                 "nonaligned_not_discrete"):
        spaces.append(gallery(name).generate(3)[0])
    return [s for s in spaces if s.n <= 12]


def _check_pair_equivalence(space, x, y):
    rep = analyze_pair(space, x, y)
    peak = peaking_check(aux_f_xy(space, x, y), x, y)
    assert rep.has_gromov_gap == (peak is not None)
    if peak is not None:
        d = space.d(x, y)
        assert rep.eta >= (1.0 / peak - 1.0) * d - 1e-9
        assert peak <= d / (d + rep.eta) + 1e-9


def test_acceptance_04_gap_peaking_equivalence():
    for space in _gallery_spaces_upto_12():
        for x, y in itertools.combinations(space.points(), 2):
            if space.n < 3:
                continue
            _check_pair_equivalence(space, x, y)
    rng = np.random.default_rng(11)
    for _ in range(100):
        space = random_euclidean_space(rng, int(rng.integers(4, 9)))
        for x, y in itertools.combinations(space.points(), 2):
            _check_pair_equivalence(space, x, y)
    _ok(4, "gap iff peaking, with the quantitative bounds, on gallery and "
           "100 random spaces")


# ---------------------------------------------------------------------------
# 5. rotundity chain and the counterexample families
# ---------------------------------------------------------------------------

def test_acceptance_05_rotundity_chain():
    rng = np.random.default_rng(13)
    pairs = []
    for _ in range(30):
        space = random_euclidean_space(rng, 7)
        pairs += [(space, x, y) for x, y
                  in itertools.combinations(space.points(), 2)]
    for space in _gallery_spaces_upto_12():
        pairs += [(space, x, y) for x, y
                  in itertools.combinations(space.points(), 2)]
    for space, x, y in pairs:
        rep = analyze_pair(space, x, y)
        if np.isfinite(rep.eta) and rep.eta > 1e-9:
            assert rep.delta_rotund >= min(
                1.0, rep.eta / space.d(x, y)) - 1e-9
    fam = gallery("rotund_no_gap")
    for k in range(1, 11):
        space, (x, y) = fam.generate(k)
        rep = analyze_pair(space, x, y)
        assert rep.delta_rotund == 0.5
        assert abs(rep.eta - 1.0 / (4 * k)) <= 1e-12
    fam = gallery("almost_aligned")
    for k in range(1, 11):
        space, (x, y) = fam.generate(k)
        assert analyze_pair(space, x, y).eta == 2.0 ** -k
    _ok(5, "rotundity lower bound on every pair; counterexample family "
           "values exact")


# ---------------------------------------------------------------------------
# 6. perturbation pipeline certification on 20 configurations
# ---------------------------------------------------------------------------

def _pipeline_configs():
    from freegeo.metric import PointedMetricSpace
    rng = np.random.default_rng(99)
    configs = []
    line4 = line_space([0.0, 1.0, 2.0, 3.0])
    line4_small = line_space([0.0, 0.2, 0.4, 0.6])
    line6_small = line_space([0.0, 0.2, 0.4, 0.6, 0.8, 1.0])
    tree_small = PointedMetricSpace(branching_tree(5).dist * 0.3)
    for _ in range(2):
        configs.append((line4, 1.0, ((1.0, 1, 0),)))
        configs.append((line4_small, 1.0, ((0.5, 1, 0), (0.5, 3, 2))))
        configs.append((line6_small, 1.0, ((1 / 3, 1, 0), (1 / 3, 3, 2),
                                           (1 / 3, 5, 4))))
        configs.append((tree_small, 1.0, ((1.0, 1, 0),)))
        configs.append((tree_small, 1.0, ((0.5, 1, 0), (0.5, 2, 0))))
        configs.append((gallery("equilateral", n=4, scale=0.5), 1.0,
                        ((1.0, 1, 2),)))
    for _ in range(8):
        space = random_euclidean_space(rng, int(rng.integers(6, 11)),
                                       scale=0.03)
        configs.append((space, 0.1, ((1.0, 1, 0),)))
    out = []
    det = configs[:12]
    rnd = configs[12:]
    for i, cfg in enumerate(det):
        out.append((*cfg, 0.01 if i < 6 else 0.04))
    for i, cfg in enumerate(rnd):
        out.append((*cfg, 0.01 if i % 2 == 0 else 0.04))
    return out


def test_acceptance_06_pipeline_certification():
    from freegeo.ssd import find_common_norming
    start = time.monotonic()
    configs = _pipeline_configs()
    assert len(configs) == 20
    for space, gamma, terms, eps in configs:
        fattened = gamma_fatten(space, gamma)
        comb = MoleculeCombination(fattened, terms)
        f = find_common_norming(space, MoleculeCombination(space, terms))
        mu = comb.element()
        g = norming_functional(mu)
        res = perturbation_pipeline(space, gamma, comb, f, g, eps)
        assert res.status == CERTIFIED, (res.status, res.message, gamma, eps)
        # independent re-verification of the certificate claims
        assert abs(pairing(res.psi, mu) - lip_norm(res.psi)) <= 1e-8
        dist = lip_norm(from_values(fattened, res.psi.values - g.values))
        beta = res.beta
        assert dist <= max(eps, beta * eps / gamma) + 2.0 * np.sqrt(eps) \
            + 1e-9
        gap = next(c for c in res.verified if c.name == "slope_gap")
        assert gap.margin >= 1e-8
    elapsed = time.monotonic() - start
    assert elapsed < 120.0
    _ok(6, f"20 configurations certified and re-verified in {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 7. the 4-eps certificate at truncation 12
# ---------------------------------------------------------------------------

def test_acceptance_07_alignment_certificate():
    space, (x, y) = gallery("almost_aligned").generate(12)
    eps = 0.1
    f = norming_functional(molecule(space, x, y))
    f = from_values(space, f.values / lip_norm(f))
    cert = almost_aligned_certificate(space, lambda k: 2.0 ** -k, eps, f)
    assert abs(pair_slope(cert.h, x, y) - 1.0) <= 1e-9
    diff = lip_norm(from_values(space, cert.h.values - f.values))
    assert diff <= 0.4 + 1e-8
    for prefix in ("case1", "case2", "case3", "case4"):
        relevant = [c for c in cert.checks if c.name.startswith(prefix)]
        assert relevant and all(c.margin >= 0.0 for c in relevant)
    _ok(7, "certificate at truncation 12: slope one, distance <= 0.4, all "
           "case margins nonnegative")


# ---------------------------------------------------------------------------
# 8. modulus contrast experiment
# ---------------------------------------------------------------------------

def test_acceptance_08_modulus_contrast():
    start = time.monotonic()
    sizes = range(2, 21)
    plain = []
    for n in sizes:
        tree = branching_tree(n)
        comb = MoleculeCombination(
            tree, tuple((1.0 / n, k, 0) for k in range(1, n + 1)))
        curve = exposedness_probe(comb.element(), [0.05], 128, seed=n)
        plain.append(curve.entries[0][1])
    assert all(b >= a - 1e-9 for a, b in zip(plain, plain[1:]))

    from freegeo.ssd import find_common_norming
    eps = 0.04
    bound = None
    for n in sizes:
        tree = branching_tree(n)
        gamma = 1.0
        fattened = gamma_fatten(tree, gamma)
        terms = tuple((1.0 / n, k, 0) for k in range(1, n + 1))
        comb = MoleculeCombination(fattened, terms)
        mu = comb.element()
        f = find_common_norming(tree, MoleculeCombination(tree, terms))
        g = norming_functional(mu)
        res = perturbation_pipeline(tree, gamma, comb, f, g, eps)
        assert res.status == CERTIFIED
        bound = res.bound
        curve = exposedness_probe(mu, [res.rho / 2.0], 128, seed=n)
        assert curve.entries[0][1] <= bound
    elapsed = time.monotonic() - start
    assert elapsed < 300.0
    _ok(8, f"worst distance nondecreasing in n; fattened values below "
           f"{bound:.3f} in {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 9. transform laws
# ---------------------------------------------------------------------------

def test_acceptance_09_transform_laws():
    rng = np.random.default_rng(17)
    for _ in range(200):
        space = random_euclidean_space(rng, int(rng.integers(4, 9)))
        gamma = float(rng.uniform(0.01, 1.0))
        fat = gamma_fatten(space, gamma)
        thinned, report = gamma_thin(fat, gamma)
        assert thinned is not None and report.ok
        assert np.abs(thinned.dist - space.dist).max() <= 1e-12
        # validity of thinning the *original* space matches the criterion
        gamma2 = float(rng.uniform(0.001, 0.5))
        thin2, rep2 = gamma_thin(space, gamma2)
        min_dist = space.dist[~np.eye(space.n, dtype=bool)].min()
        min_prod = min(
            gromov_product(space, z, x, y)
            for x, y in itertools.combinations(space.points(), 2)
            for z in space.points() if z not in (x, y))
        expected = min_dist > gamma2 and min_prod >= gamma2
        assert (thin2 is not None) == expected
    for space in (branching_tree(4), line_space([0.0, 0.25, 1.0]),
                  gallery("equilateral", n=5)):
        theta = uniform_discreteness_constant(space)
        for gamma in (0.1, 0.5, 1.0):
            assert bilipschitz_distortion(space, gamma) == 1.0 + gamma / theta
        eps = 0.25
        assert bilipschitz_distortion(space, eps * theta) == 1.0 + eps
    _ok(9, "thin-fatten identity, thinning criterion on 200 spaces, exact "
           "distortion formula")


# ---------------------------------------------------------------------------
# 10. CLI determinism
# ---------------------------------------------------------------------------

def test_acceptance_10_cli_determinism(tmp_path):
    space_file = tmp_path / "line.json"
    space_file.write_text(space_to_json_str(line_space([0.0, 1.0, 2.0, 3.0])))
    el_file = tmp_path / "el.json"
    el_file.write_text(json.dumps({"molecules": [[1.0, 1, 0]]}))
    commands = [
        ["modulus", "--space", str(space_file), "--element", str(el_file),
         "--eta-grid", "0.1,0.01", "--samples", "16", "--seed", "7"],
        ["perturb", "--space", str(space_file), "--element", str(el_file),
         "--gamma", "1", "--epsilon", "0.04"],
        ["classify-space", "--gallery", "equilateral", "--params", "n=4"],
        ["family-trend", "--gallery", "rotund_no_gap", "--indices", "1-5",
         "--format", "csv"],
    ]
    for i, argv in enumerate(commands):
        blobs = []
        for rep in range(2):
            out = tmp_path / f"out_{i}_{rep}"
            assert cli_main(argv + ["--out", str(out)]) == 0
            blobs.append(out.read_bytes())
        assert blobs[0] == blobs[1]
    _ok(10, "repeated CLI runs with fixed seed are byte-identical")
