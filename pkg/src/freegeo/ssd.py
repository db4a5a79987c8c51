"""Strong-subdifferentiability machinery.

Exposedness-modulus probing, certified perturbation pipelines that move a
near-norming function onto the dual face of a molecule combination, the
tilde-f witness that feeds one fattening level into the next, the 4-epsilon
certificate for the almost-aligned family, and the fattening distortion
constant.  Every pipeline records each inequality it relies on together
with its numeric margin, so results can be re-checked independently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import lp
from .free_space import (FreeElement, MoleculeCombination, free_norm,
                         lipschitz_ball_rows, molecule, pairing)
from .lipschitz import (LipFunction, LipschitzError, cutoff_xi,
                        f_gamma_construct, from_values, g_gamma_construct,
                        lip_norm, mcshane_extend, pair_slope, peaking_check,
                        slope_matrix)
from .metric import (PointedMetricSpace, gamma_fatten, radius_beta, subspace,
                     uniform_discreteness_constant)
from .tolerances import lp_tol

CERTIFIED = "certified"
RHO_TOO_LARGE = "rho_too_large"
PRECONDITION_FAILED = "precondition_failed"


class SsdError(ValueError):
    pass


# ---------------------------------------------------------------------------
# named inequality checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Check:
    name: str
    margin: float      # bound minus observed value; >= 0 means the check holds
    ok: bool

    def to_json(self) -> dict:
        return {"name": self.name, "margin": self.margin, "ok": self.ok}


def _check(verified: list, name: str, margin: float, strict=False) -> bool:
    ok = margin > 0.0 if strict else margin >= 0.0
    verified.append(Check(name, float(margin), bool(ok)))
    return ok


# ---------------------------------------------------------------------------
# exposedness probing (lower bound on the exposedness modulus)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModulusCurve:
    """worst observed Lip-distance from slab points to the dual face.

    Entries are (eta, worst_dist, samples).  The curve is a lower bound on
    the true modulus: it only sees the sampled extreme points of each slab
    {lip_norm(f) <= 1, pairing(f, mu) >= ||mu|| (1 - eta)}.
    """

    mu_masses: tuple
    seed: int
    entries: tuple   # of (eta, worst_dist, samples)

    def to_json(self) -> dict:
        return {"mu": {"masses": list(self.mu_masses)}, "seed": self.seed,
                "entries": [list(e) for e in self.entries]}

    def to_csv(self) -> str:
        lines = ["eta,worst_dist,samples"]
        for eta, dist, k in self.entries:
            lines.append(f"{eta!r},{dist!r},{k}")
        return "\n".join(lines) + "\n"


def _slab_sample(space, mu, eta, objective, norm_mu):
    """Maximize a linear objective over the eta-slab of the unit ball."""
    A, b = lipschitz_ball_rows(space)
    rows = np.vstack([A, -mu.masses[1:]])
    rhs = np.concatenate([b, [-(norm_mu * (1.0 - eta))]])
    senses = [lp.LE] * len(rhs)
    sol = lp.solve(lp.LpProblem.build(objective, rows, senses, rhs,
                                      maximize=True))
    if sol.status != "optimal":
        raise SsdError(f"slab sampling LP ended with status {sol.status}")
    return from_values(space, np.concatenate([[0.0], sol.x]))


def face_distance(f: LipFunction, mu: FreeElement, norm_mu=None) -> float:
    """Lip-distance from f to the dual face D(mu) = {g : ||g|| <= 1,
    pairing(g, mu) = ||mu||}, computed as one LP (variables g and t)."""
    space = f.space
    n = space.n
    if norm_mu is None:
        norm_mu = free_norm(mu).value
    A, b = lipschitz_ball_rows(space)           # g stays in the unit ball
    k = A.shape[0]
    rows = [np.concatenate([A, np.zeros((k, 1))], axis=1)]
    rhs = [b]
    senses = [lp.LE] * k
    # |(f - g)(p) - (f - g)(q)| <= t d(p, q)
    for p in range(n):
        for q in range(p + 1, n):
            r = np.zeros(n)
            if p > 0:
                r[p - 1] = 1.0
            if q > 0:
                r[q - 1] = -1.0
            r[-1] = -space.d(p, q)
            diff = f(p) - f(q)
            rows.append(np.stack([r, np.concatenate([-r[:-1], [r[-1]]])]))
            rhs.append(np.array([diff, -diff]))
            senses += [lp.LE, lp.LE]
    rows.append(np.concatenate([mu.masses[1:], [0.0]])[None, :])
    rhs.append(np.array([norm_mu]))
    senses.append(lp.EQ)
    c = np.zeros(n)
    c[-1] = 1.0
    lb = np.full(n, -np.inf)
    lb[-1] = 0.0
    sol = lp.solve(lp.LpProblem.build(c, np.vstack(rows),
                                      senses, np.concatenate(rhs), lb=lb))
    if sol.status != "optimal":
        raise SsdError(f"face-distance LP ended with status {sol.status}")
    return float(sol.value)


def exposedness_probe(mu: FreeElement, eta_grid, samples_per_eta: int,
                      seed: int) -> ModulusCurve:
    """Probe the exposedness modulus of mu by sampling slab extreme points.

    For each eta, maximizes seeded pseudo-random objectives over the slab
    and records the max Lip-distance of the maximizers to the dual face.
    The result is post-processed to a monotone (nondecreasing in eta)
    envelope; it is deterministic given the seed and a lower bound on the
    true modulus.
    """
    if mu.is_zero():
        raise SsdError("cannot probe the zero element")
    eta_grid = [float(e) for e in eta_grid]
    if any(not 0.0 <= e < 1.0 for e in eta_grid):
        raise SsdError("slab depths must lie in [0, 1)")
    if samples_per_eta < 1:
        raise SsdError("need at least one sample per slab depth")
    space = mu.space
    norm_mu = free_norm(mu).value
    rng = np.random.default_rng(seed)
    tol = lp_tol()
    raw = []
    for eta in eta_grid:
        worst = 0.0
        for _ in range(samples_per_eta):
            f = _slab_sample(space, mu, eta, rng.standard_normal(space.n - 1),
                             norm_mu)
            assert lip_norm(f) <= 1.0 + tol
            assert pairing(f, mu) >= norm_mu * (1.0 - eta) - tol
            worst = max(worst, face_distance(f, mu, norm_mu))
        raw.append((eta, worst))
    # monotone envelope: the true modulus is nondecreasing in eta
    order = sorted(range(len(raw)), key=lambda i: raw[i][0])
    running = 0.0
    env = {}
    for i in order:
        running = max(running, raw[i][1])
        env[i] = running
    entries = tuple((raw[i][0], env[i], samples_per_eta)
                    for i in range(len(raw)))
    return ModulusCurve(tuple(float(v) for v in mu.masses), int(seed),
                        entries)


# ---------------------------------------------------------------------------
# single-molecule perturbation via a peaking function
# ---------------------------------------------------------------------------

def single_molecule_perturb(space: PointedMetricSpace, x: int, y: int,
                            f_peaking: LipFunction, gamma_peak: float,
                            g: LipFunction, eps: float):
    """Move g onto the norming set of m_{x,y} using a peaking function.

    Blends h = (1 - eps/4) g + (eps/4) f_peaking and normalizes.  Requires
    pairing(g, m_{x,y}) > 1 - gamma_eps where gamma_eps is half the window
    eps (1 - gamma_peak) / (4 - eps); under that closeness the blend attains
    its norm at the molecule and the normalized blend stays within
    1 - (1 - eps/4)(1 - gamma_eps) + eps/4 of g.
    """
    tol = lp_tol()
    witness = peaking_check(f_peaking, x, y)
    if witness is None:
        raise SsdError(f"no peaking witness at the pair ({x}, {y})")
    if witness > gamma_peak + tol:
        raise SsdError(
            f"measured peaking level {witness!r} exceeds gamma_peak")
    if not 0.0 < eps < 1.0:
        raise SsdError("eps must lie in (0, 1)")
    gamma_eps = 0.5 * eps * (1.0 - gamma_peak) / (4.0 - eps)
    mol = molecule(space, x, y)
    if abs(lip_norm(g) - 1.0) > tol:
        raise SsdError("g must have norm one")
    if not pairing(g, mol) > 1.0 - gamma_eps:
        raise SsdError(
            f"pairing(g, m_xy) = {pairing(g, mol)!r} is not above "
            f"1 - gamma_eps = {1.0 - gamma_eps!r}")
    h = from_values(space, (1.0 - eps / 4.0) * g.values
                    + (eps / 4.0) * f_peaking.values)
    norm_h = lip_norm(h)
    if abs(norm_h - pair_slope(h, x, y)) > tol:
        raise SsdError("blend does not attain its norm at the molecule")
    h_hat = from_values(space, h.values / norm_h)
    bound = 1.0 - (1.0 - eps / 4.0) * (1.0 - gamma_eps) + eps / 4.0
    dist = lip_norm(from_values(space, h_hat.values - g.values))
    if dist > bound + tol:
        raise SsdError(f"distance {dist!r} exceeds certified bound {bound!r}")
    return h_hat, bound


# ---------------------------------------------------------------------------
# the fattened-space perturbation pipeline
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PerturbationResult:
    status: str
    psi: LipFunction | None
    g: LipFunction
    eps: float
    gamma: float
    beta: float = np.nan
    T: float = np.nan
    T0: float = np.nan
    S: float = np.nan
    c: float = np.nan
    K: float = np.nan
    rho: float = np.nan
    bound: float = np.nan
    verified: tuple = ()
    message: str = ""

    def to_json(self) -> dict:
        return {"status": self.status, "eps": self.eps, "gamma": self.gamma,
                "beta": self.beta, "T": self.T, "T0": self.T0, "S": self.S,
                "c": self.c, "K": self.K, "rho": self.rho,
                "bound": self.bound, "message": self.message,
                "psi": None if self.psi is None else self.psi.to_json(),
                "verified": [c.to_json() for c in self.verified]}


def _off_support_slope_sup(f: LipFunction, in_n: np.ndarray) -> float:
    """sup |slope| over pairs with at least one endpoint off the subset."""
    s = np.abs(slope_matrix(f))
    np.fill_diagonal(s, 0.0)
    both_in = np.outer(in_n, in_n)
    s[both_in] = 0.0
    return float(s.max())


def _search_T(beta: float, gamma: float):
    """Smallest T = beta + 2^k making the taper-tail estimate strict."""
    k = 0
    while True:
        T = beta + 2.0 ** k
        T0 = (gamma / 4.0) * (T - beta) / (beta + gamma / 2.0)
        lhs = ((2.0 * beta + 1.5 * gamma) / (T0 + gamma)
               + (beta + gamma / 2.0) / (T - beta))
        if lhs < 0.75:
            return T, T0, 0.75 - lhs
        k += 1
        if k > 200:
            raise SsdError("no taper length satisfies the tail estimate")


def _projection_lp(sub_space, h_vals, mu_masses, norm_h):
    """min ||phi - h||_Lip0 over {||phi|| <= ||h||, pairing(phi, mu) = ||h||}
    on the finite subset; returns (optimum, phi values)."""
    n = sub_space.n
    A, b = lipschitz_ball_rows(sub_space, scale=norm_h)
    k = A.shape[0]
    rows = [np.concatenate([A, np.zeros((k, 1))], axis=1)]
    rhs = [b]
    senses = [lp.LE] * k
    for p in range(n):
        for q in range(p + 1, n):
            r = np.zeros(n)
            if p > 0:
                r[p - 1] = 1.0
            if q > 0:
                r[q - 1] = -1.0
            r[-1] = -sub_space.d(p, q)
            diff = h_vals[p] - h_vals[q]
            rows.append(np.stack([r, np.concatenate([-r[:-1], [r[-1]]])]))
            rhs.append(np.array([diff, -diff]))
            senses += [lp.LE, lp.LE]
    rows.append(np.concatenate([mu_masses[1:], [0.0]])[None, :])
    rhs.append(np.array([norm_h]))
    senses.append(lp.EQ)
    c = np.zeros(n)
    c[-1] = 1.0
    lb = np.full(n, -np.inf)
    lb[-1] = 0.0
    sol = lp.solve(lp.LpProblem.build(c, np.vstack(rows), senses,
                                      np.concatenate(rhs), lb=lb))
    if sol.status != "optimal":
        raise SsdError(f"projection LP ended with status {sol.status}")
    return float(sol.value), np.concatenate([[0.0], sol.x[:-1]])


def perturbation_pipeline(space: PointedMetricSpace, gamma: float,
                          combination: MoleculeCombination,
                          f: LipFunction, g: LipFunction,
                          eps: float) -> PerturbationResult:
    """Certified construction of a norm-attaining psi near g.

    Inputs: combination (weights summing to one) lives in the fattened
    metric; f is 1-Lipschitz in the *original* metric and norms every pair
    (f(x_i) - f(y_i) = d(x_i, y_i)); g has norm one in the fattened metric
    and pairs with the combination above 1 - rho, where rho is derived
    from the geometry.  Each inequality the construction relies on is
    recorded in `verified` with its margin.
    """
    tol = lp_tol()
    verified: list = []
    fattened = gamma_fatten(space, gamma)
    terms = combination.terms

    def fail(status, msg):
        return PerturbationResult(status=status, psi=None, g=g, eps=eps,
                                  gamma=gamma, verified=tuple(verified),
                                  message=msg)

    if not 0.0 < eps < 1.0:
        return fail(PRECONDITION_FAILED, "eps must lie in (0, 1)")
    if abs(combination.weight_sum() - 1.0) > tol:
        return fail(PRECONDITION_FAILED, "weights must sum to one")
    mu = MoleculeCombination(fattened, terms).element()

    # (i) source and sink supports may not meet
    xs = [t[1] for t in terms]
    ys = [t[2] for t in terms]
    if not _check(verified, "disjoint_supports",
                  -float(len(set(xs) & set(ys)))
                  if set(xs) & set(ys) else 1.0, strict=True):
        return fail(PRECONDITION_FAILED,
                    "source and sink supports intersect")
    for i, (lam, x, y) in enumerate(terms):
        if abs((f(x) - f(y)) - space.d(x, y)) > tol:
            return fail(PRECONDITION_FAILED,
                        f"f does not norm the pair of term {i}")
    if abs(lip_norm(f) - 1.0) > tol:
        return fail(PRECONDITION_FAILED,
                    "f must have norm one in the original metric")
    if abs(lip_norm(g) - 1.0) > tol:
        return fail(PRECONDITION_FAILED,
                    "g must have norm one in the fattened metric")

    # (ii) clip-extend f from the support set N
    N = sorted({0, *xs, *ys})
    in_n = np.zeros(space.n, dtype=bool)
    in_n[N] = True
    beta = radius_beta(space, N)
    f_ext = mcshane_extend(space, N, [f(p) for p in N], 1.0,
                           clip=(-beta, beta))
    _check(verified, "clipped_extension_bounded",
           beta - float(np.abs(f_ext.values).max()) + tol)

    # (iii) lift to the fattened metric
    f_gamma = f_gamma_construct(space, gamma, terms, f_ext, fattened)
    _check(verified, "lift_norm_one", tol - abs(lip_norm(f_gamma) - 1.0))
    _check(verified, "lift_pairing_one", tol - abs(pairing(f_gamma, mu) - 1.0))

    # (iv) taper length
    T, T0, t_margin = _search_T(beta, gamma)
    _check(verified, "taper_tail", t_margin, strict=True)
    G = g_gamma_construct(space, f_gamma, cutoff_xi(beta, T))
    _check(verified, "taper_pairing_one", tol - abs(pairing(G, mu) - 1.0))

    # (v) off-support slope supremum of the tapered lift
    S = _off_support_slope_sup(G, in_n)
    _check(verified, "off_support_sup_below_one", 1.0 - S, strict=True)
    if S >= 1.0:
        return fail(PRECONDITION_FAILED,
                    "tapered lift reaches slope one off the support set")
    # per-pair bound for pairs inside the radius-beta ball
    d0 = space.dist[0]
    case1_bound = (2.0 * beta + gamma / 2.0) / (2.0 * beta + gamma)
    worst_case1 = np.inf
    sl = np.abs(slope_matrix(G))
    for p in range(space.n):
        for q in range(p + 1, space.n):
            if (in_n[p] and in_n[q]) or d0[p] > beta or d0[q] > beta:
                continue
            worst_case1 = min(worst_case1, case1_bound - sl[p, q])
    if np.isfinite(worst_case1):
        _check(verified, "inner_pair_bound", float(worst_case1) + tol)
    c = (max(S, 0.5 + 10.0 * tol) + 1.0) / 2.0
    K = gamma * (c - 0.5) / (1.0 - c)
    ratio = (K + gamma / 2.0) / (K + gamma)
    _check(verified, "slope_gap", ratio - S - 10.0 * tol)

    # (vi) closeness requirement on g
    rho = 0.5 * (math.sqrt(eps) * gamma / (2.0 * (K + gamma))
                 - beta * eps / gamma) / (1.0 - math.sqrt(eps))
    if not _check(verified, "rho_positive", rho, strict=True):
        return fail(PRECONDITION_FAILED,
                    f"eps too large for (beta, gamma, K) = "
                    f"({beta!r}, {gamma!r}, {K!r})")
    pg = pairing(g, mu)
    if not _check(verified, "g_close_enough", pg - (1.0 - rho), strict=True):
        return fail(PRECONDITION_FAILED,
                    f"pairing(g, mu) = {pg!r} is not above 1 - rho "
                    f"= {1.0 - rho!r}")

    # (vii) the blend pairs above anything it can do off the support set
    se = math.sqrt(eps)
    h = from_values(fattened, (1.0 - se) * g.values + se * G.values)
    off_sup_h = _off_support_slope_sup(h, in_n)
    ph = pairing(h, mu)
    if not _check(verified, "blend_dominates_off_support", ph - off_sup_h,
                  strict=True):
        return fail(PRECONDITION_FAILED,
                    "blend does not dominate its off-support slopes")
    norm_h = lip_norm(h)
    _check(verified, "blend_norm_on_support",
           tol - abs(norm_h - lip_norm(from_values(
               *_restrict(fattened, h, N)))))

    # (viii) project the restriction onto the finite face
    sub, kept = subspace(fattened, N)
    pos = {old: new for new, old in enumerate(kept)}
    mu_n = MoleculeCombination(
        sub, tuple((lam, pos[x], pos[y]) for lam, x, y in terms)).element()
    h_n = np.array([h(p) for p in kept])
    proj_dist, phi_vals = _projection_lp(sub, h_n, mu_n.masses, norm_h)
    if not _check(verified, "face_projection_within_eps", eps - proj_dist,
                  strict=True):
        return PerturbationResult(
            status=RHO_TOO_LARGE, psi=None, g=g, eps=eps, gamma=gamma,
            beta=beta, T=T, T0=T0, S=S, c=c, K=K, rho=rho,
            verified=tuple(verified),
            message=f"face projection distance {proj_dist!r} is not below "
                    f"eps; supply g with pairing above {1.0 - rho / 2.0!r}")

    # (ix) stitch and verify
    psi_vals = h.values.copy()
    psi_vals[kept] = phi_vals
    psi = from_values(fattened, psi_vals)
    p_psi = pairing(psi, mu)
    s_abs = np.abs(slope_matrix(psi))
    np.fill_diagonal(s_abs, 0.0)
    both_in = np.outer(in_n, in_n)
    both_out = np.outer(~in_n, ~in_n)
    mixed = ~(both_in | both_out)
    _check(verified, "attainment_inside",
           p_psi - float(s_abs[both_in].max()) + tol)
    if both_out.any():
        _check(verified, "attainment_outside",
               p_psi - float(s_abs[both_out].max()) + tol)
    if mixed.any():
        _check(verified, "attainment_mixed",
               p_psi - float(s_abs[mixed].max()) + tol)
    _check(verified, "norm_attained", 1e-8 - abs(p_psi - lip_norm(psi)))
    bound = max(eps, beta * eps / gamma) + 2.0 * se
    dist = lip_norm(from_values(fattened, psi.values - g.values))
    _check(verified, "distance_bound", bound + tol - dist)
    if not all(chk.ok for chk in verified):
        bad = [chk.name for chk in verified if not chk.ok]
        return PerturbationResult(
            status=PRECONDITION_FAILED, psi=psi, g=g, eps=eps, gamma=gamma,
            beta=beta, T=T, T0=T0, S=S, c=c, K=K, rho=rho, bound=bound,
            verified=tuple(verified), message=f"failed checks: {bad}")
    return PerturbationResult(
        status=CERTIFIED, psi=psi, g=g, eps=eps, gamma=gamma, beta=beta,
        T=T, T0=T0, S=S, c=c, K=K, rho=rho, bound=bound,
        verified=tuple(verified))


def _restrict(fattened, h, N):
    sub, kept = subspace(fattened, N)
    return sub, np.array([h(p) for p in kept])


def find_common_norming(space: PointedMetricSpace,
                        combination: MoleculeCombination) -> LipFunction:
    """A norm-one f in the original metric with f(x_i) - f(y_i) = d(x_i, y_i)
    for every term, found by LP; raises if no such function exists."""
    A, b = lipschitz_ball_rows(space)
    rows, rhs, senses = [A], [b], [lp.LE] * A.shape[0]
    for lam, x, y in combination.terms:
        r = np.zeros(space.n - 1)
        if x > 0:
            r[x - 1] = 1.0
        if y > 0:
            r[y - 1] = -1.0
        rows.append(r[None, :])
        rhs.append(np.array([space.d(x, y)]))
        senses.append(lp.EQ)
    sol = lp.solve(lp.LpProblem.build(np.zeros(space.n - 1), np.vstack(rows),
                                      senses, np.concatenate(rhs)))
    if sol.status != "optimal":
        raise SsdError(
            "no norm-one function norms every pair of the combination")
    return from_values(space, np.concatenate([[0.0], sol.x]))


# ---------------------------------------------------------------------------
# the tilde-f witness: one fattening level feeds the next
# ---------------------------------------------------------------------------

def common_norming_witness(space: PointedMetricSpace, gamma: float,
                           combination: MoleculeCombination) -> LipFunction:
    """For a combination optimal in the doubly fattened metric, build the
    shifted common norming function on the singly fattened metric.

    The combination must satisfy sum(lam_i) = free_norm within tolerance
    (optimal representation).  A norming f in the doubly fattened metric is
    found by LP (with extra rows keeping the shifted values 1-Lipschitz
    against the base); the witness takes f(x_i) - gamma at sources and
    f(y_i) at sinks, is verified 1-Lipschitz pair by pair in the singly
    fattened metric, and is McShane-extended to the whole space.  It norms
    every pair there, so it can seed perturbation_pipeline with fattening
    gamma, certifying the combination in the doubly fattened space.
    """
    tol = lp_tol()
    if gamma <= 0:
        raise SsdError("gamma must be positive")
    single = gamma_fatten(space, gamma)
    double = gamma_fatten(space, 2.0 * gamma)
    terms = combination.terms
    mu = MoleculeCombination(double, terms).element()
    nrm = free_norm(mu).value
    if abs(combination.weight_sum() - nrm) > 10.0 * tol * (1.0 + nrm):
        raise SsdError(
            f"representation is not optimal: weight sum "
            f"{combination.weight_sum()!r} differs from norm {nrm!r}")
    xs = [t[1] for t in terms]
    ys = [t[2] for t in terms]
    if 0 in xs:
        raise SsdError("the base point may not appear as a source; "
                       "re-root the space at a sink or unused point")
    # find f norming every pair in the double metric, with extra rows that
    # keep the shifted values compatible with the base point
    A, b = lipschitz_ball_rows(double)
    rows, rhs, senses = [A], [b], [lp.LE] * A.shape[0]
    for lam, x, y in terms:
        r = np.zeros(space.n - 1)
        if x > 0:
            r[x - 1] = 1.0
        if y > 0:
            r[y - 1] = -1.0
        rows.append(r[None, :])
        rhs.append(np.array([double.d(x, y)]))
        senses.append(lp.EQ)
    extra_rows, extra_rhs = [], []
    for x in set(xs):
        r = np.zeros(space.n - 1)
        r[x - 1] = 1.0
        # |f(x_i) - gamma| <= d_single(0, x_i)
        extra_rows += [r, -r]
        extra_rhs += [single.d(0, x) + gamma, single.d(0, x) - gamma]
    for y in set(ys) - {0}:
        r = np.zeros(space.n - 1)
        r[y - 1] = 1.0
        extra_rows += [r, -r]
        extra_rhs += [single.d(0, y), single.d(0, y)]
    rows.append(np.array(extra_rows))
    rhs.append(np.array(extra_rhs))
    senses += [lp.LE] * len(extra_rhs)
    sol = lp.solve(lp.LpProblem.build(np.zeros(space.n - 1), np.vstack(rows),
                                      senses, np.concatenate(rhs)))
    if sol.status != "optimal":
        raise SsdError("no common norming function is compatible with the "
                       "base point shift")
    f = from_values(double, np.concatenate([[0.0], sol.x]))

    shifted = {0: 0.0}
    for x in xs:
        shifted[x] = f(x) - gamma
    for y in ys:
        shifted[y] = f(y)
    # pairwise verification in the singly fattened metric, split as the two
    # sign cases of the shifted difference
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            if x == y:
                continue
            diff = shifted[x] - shifted[y]
            if diff >= 0:
                margin = single.d(x, y) - (f(x) - f(y) - gamma)
            else:
                margin = single.d(x, y) + diff
            if margin < -tol:
                raise SsdError(
                    f"shifted witness is not 1-Lipschitz on the pair "
                    f"({x}, {y}); margin {margin!r}")
    keys = sorted(shifted)
    witness = mcshane_extend(single, keys, [shifted[k] for k in keys], 1.0)
    for i, (lam, x, y) in enumerate(terms):
        if abs((witness(x) - witness(y)) - single.d(x, y)) > tol:
            raise SsdError(f"witness fails to norm the pair of term {i}")
    if lip_norm(witness) > 1.0 + tol:
        raise SsdError("witness escapes the unit ball")
    return witness


# ---------------------------------------------------------------------------
# the 4-eps certificate on the almost-aligned family
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AlignmentCertificate:
    h: LipFunction
    eps: float
    gamma_cut: float
    n0: int
    distance: float
    checks: tuple

    def to_json(self) -> dict:
        return {"eps": self.eps, "gamma_cut": self.gamma_cut, "n0": self.n0,
                "distance": self.distance, "h": self.h.to_json(),
                "checks": [c.to_json() for c in self.checks]}


def almost_aligned_certificate(space: PointedMetricSpace, eps_of, eps: float,
                               f: LipFunction) -> AlignmentCertificate:
    """Certify that the distinguished molecule of an almost-aligned
    truncation admits norm-attaining functions near any near-norming f.

    The space is a truncation {x=0(base), y, z_1..z_m} with d(x,y) = 1,
    d(x,z_k) = 1/2, d(y,z_k) = 1/2 + eps_of(k).  Given f with
    pairing(f, m_{x,y}) > 1 - eps/4, projects f (normalized) on the head
    subset {x, y, z_1..z_n0} onto the exact norming face, extends back with
    norm one, and verifies the per-pair distance bounds; the total
    Lip-distance from f to the result is certified at most 4 eps.
    """
    tol = lp_tol()
    if eps <= 0:
        raise SsdError("eps must be positive")
    m = space.n - 2
    if m < 1:
        raise SsdError("truncation needs at least one interior point")
    eps_k = [float(eps_of(k)) for k in range(1, m + 1)]
    n0 = next((k for k in range(1, m + 1) if eps_k[k - 1] < eps), None)
    if n0 is None or any(e >= eps for e in eps_k[n0 - 1:]):
        raise SsdError("truncation too small: tail levels must drop "
                       "below eps")
    gamma_cut = eps / 4.0
    x, y = 0, 1
    mol = molecule(space, x, y)
    pf = pairing(f, mol)
    if not pf > 1.0 - gamma_cut:
        raise SsdError(f"pairing(f, m_xy) = {pf!r} is not above "
                       f"1 - gamma_cut = {1.0 - gamma_cut!r}")
    if abs(lip_norm(f) - 1.0) > tol:
        raise SsdError("f must have norm one")
    checks: list = []

    # near-norming slope consequences on every interior point
    for k in range(1, m + 1):
        z = k + 1
        e = eps_k[k - 1]
        _check(checks, f"slope_floor_xz_{k}",
               pair_slope(f, x, z) - (1.0 - (2.0 * e + 2.0 * gamma_cut))
               + tol)
        _check(checks, f"slope_floor_zy_{k}",
               pair_slope(f, z, y)
               - (1.0 - (2.0 * e + 2.0 * gamma_cut) / (1.0 + 2.0 * e)) + tol)

    # project the normalized head restriction onto the exact norming face
    head = list(range(0, n0 + 2))   # x, y, z_1..z_n0
    sub, kept = subspace(space, head)
    f_head = np.array([f(p) for p in kept])
    head_norm = lip_norm(LipFunction(sub, f_head))
    f_tilde = f_head / head_norm
    mu_head = molecule(sub, 0, 1)
    proj_dist, h_head = _projection_lp(sub, f_tilde, mu_head.masses, 1.0)
    if not _check(checks, "head_projection_within_eps", eps - proj_dist,
                  strict=True):
        raise SsdError(
            f"projection distance {proj_dist!r} on the head subset is not "
            f"below eps; supply f with pairing closer to one")

    # extend with norm one and verify the case bounds
    h = mcshane_extend(space, kept, h_head, 1.0)
    _check(checks, "h_norms_molecule", tol - abs(pair_slope(h, x, y) - 1.0))
    _check(checks, "h_norm_one", tol - abs(lip_norm(h) - 1.0))
    diff = from_values(space, h.values - f.values)
    _check(checks, "case1_molecule",
           eps - abs(pair_slope(diff, x, y)), strict=True)
    for k in range(1, m + 1):
        z = k + 1
        dx = abs(pair_slope(diff, x, z))
        dy = abs(pair_slope(diff, z, y))
        if k <= n0:
            _check(checks, f"case2_xz_{k}", 2.0 * eps - dx, strict=True)
            _check(checks, f"case2_zy_{k}", 2.0 * eps - dy, strict=True)
        else:
            e = eps_k[k - 1]
            _check(checks, f"case3_xz_{k}",
                   2.0 * e + 2.0 * gamma_cut - dx + tol)
            _check(checks, f"case3_xz_{k}_under_4eps",
                   4.0 * eps - dx, strict=True)
            _check(checks, f"case3_zy_{k}",
                   (2.0 * e + 2.0 * gamma_cut) / (1.0 + 2.0 * e) - dy + tol)
            _check(checks, f"case3_zy_{k}_under_4eps",
                   4.0 * eps - dy, strict=True)
    worst4 = 0.0
    for i in range(1, m + 1):
        for j in range(i + 1, m + 1):
            dz = abs(pair_slope(diff, i + 1, j + 1))
            if i <= n0 and j <= n0:
                bound = 2.0 * eps
            elif i <= n0:
                bound = 3.0 * eps
            else:
                bound = 4.0 * eps
            worst4 = max(worst4, dz - bound)
    if m >= 2:
        _check(checks, "case4_interior_pairs", -worst4 + tol)
    distance = lip_norm(diff)
    _check(checks, "total_distance_4eps", 4.0 * eps + tol - distance)
    if not all(c.ok for c in checks):
        bad = [c.name for c in checks if not c.ok]
        raise SsdError(f"certificate checks failed: {bad}")
    return AlignmentCertificate(h, float(eps), gamma_cut, n0,
                                float(distance), tuple(checks))


# ---------------------------------------------------------------------------
# fattening distortion
# ---------------------------------------------------------------------------

def bilipschitz_distortion(space: PointedMetricSpace, gamma: float) -> float:
    """Lipschitz constant of the identity from the original to the fattened
    metric scale: 1 + gamma / (min off-diagonal distance).  The inverse
    direction is contractive, so this is the full distortion."""
    if space.n < 2:
        raise SsdError("need at least two points")
    if gamma <= 0:
        raise SsdError("gamma must be positive")
    theta = uniform_discreteness_constant(space)
    return 1.0 + gamma / theta
