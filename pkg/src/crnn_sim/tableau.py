"""CV stabilizer tableau: the ground-truth oracle for sequential nullifier
and CV-Pauli measurements.

State model
-----------
* ``continuous`` entries (u, c) assert that exp(i t (u . xhat - c)) stabilizes
  the state for every real t, i.e. the quadrature combination u . xhat is
  sharp with value c.  Vectors are stored as 2n scalars, first n entries the
  qhat coefficients, last n the phat coefficients.
* ``discrete`` entries are PauliWords g with g|psi> = +|psi> (the measured
  phase is folded into the word's theta).

Invariants: continuous directions are mutually symplectically orthogonal;
discrete generators commute exactly with every continuous direction and
pairwise have symplectic form in 4*pi*Z.

Measurements follow the standard stabilizer update, adapted to the mixed
continuous/lattice structure:

* a nullifier measurement removes the symplectically-conjugate continuous
  pivot (after Gram-Schmidt correcting the other directions) and prunes the
  discrete group down to the subgroup commuting with exp(i t s. xhat);
* a Pauli measurement converts the conjugate continuous pivot into a lattice
  generator with vector (4*pi/w) u (the finest power that commutes with the
  measured word) and Euclid-reduces the discrete generators until at most
  one fails to commute, which is then raised to the smallest commuting power.

Unconstrained outcome distributions are a simulation choice, not physics:
nullifier values are Gaussian (float backend) or drawn from a rational grid
of pi multiples (exact backend); free Pauli phases are uniform on a
2**prec-point grid unless a power of the word is a stabilizer, in which case
the phase is drawn uniformly from the corresponding roots.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from . import ratlinalg
from .cvpauli import (
    PauliWord,
    identity_word,
    pauli_adjoint,
    pauli_mul,
    pauli_power,
    word_from_coeffs,
)
from .scalars import (
    GP,
    GQ,
    PI,
    Backend,
    ExactBackend,
    ExactScalar,
    FloatBackend,
)

NULLIFIER = "nullifier"
PAULI = "pauli"


class TableauError(ValueError):
    pass


@dataclass
class TableauConfig:
    sigma: float = 1.0          # width of unconstrained nullifier outcomes
    prec: int = 16              # free Pauli phases on a 2**prec grid
    power_max: int = 16         # maximal k searched for coset constraints
    grid_denom: int = 8         # exact-mode outcome grid: (j/grid_denom)*pi
    grid_radius: int = 16
    debug: bool = False         # invariant sweep after every update


@dataclass(frozen=True)
class MeasurementOutcome:
    kind: str
    value: object
    deterministic: bool


@dataclass
class ContinuousStab:
    vec: tuple   # 2n scalars: [0:n] qhat coefficients, [n:2n] phat coefficients
    center: object


def _is_zero(backend, s) -> bool:
    if backend.kind == "exact":
        return s.is_zero()
    return abs(s) <= backend.tol


class StabilizerTableau:
    def __init__(self, n: int, backend: Backend, config: TableauConfig = None):
        if n < 1:
            raise TableauError("mode count must be >= 1")
        self.n = n
        self.backend = backend
        self.continuous: List[ContinuousStab] = []
        self.discrete: List[PauliWord] = []
        self.config = config or TableauConfig()

    # -- construction -------------------------------------------------------

    @classmethod
    def init_squeezed(cls, n: int, backend: Backend = None, config=None) -> "StabilizerTableau":
        """State with every qhat_j sharp at 0."""
        backend = backend or FloatBackend()
        t = cls(n, backend, config)
        for j in range(n):
            vec = _unit_vec(n, j, "q", backend)
            t.continuous.append(ContinuousStab(vec, _zero_center(backend)))
        t._debug_sweep()
        return t

    @classmethod
    def init_gkp(cls, n: int, backend: Backend = None, config=None) -> "StabilizerTableau":
        """Grid state with support q = 0 (mod 2*pi) per mode: generators
        exp(i qhat_j) and exp(-4*pi*i*phat_j).

        Exact backend requires rho == 1 (units g_q = 1, g_p = pi).
        """
        backend = backend or FloatBackend()
        if backend.kind == "exact" and backend.rho != 1:
            raise TableauError("exact GKP tableau requires a rho == 1 unit system")
        t = cls(n, backend, config)
        for j in range(n):
            a = [0] * n
            b = [0] * n
            a[j] = 1
            t.discrete.append(word_from_coeffs(a, [0] * n, backend))
            if backend.kind == "exact":
                t.discrete.append(word_from_coeffs([0] * n, _delta(n, j, -4), backend))
            else:
                t.discrete.append(
                    word_from_coeffs([0] * n, _delta(n, j, -4 * math.pi), backend)
                )
        t._debug_sweep()
        return t

    @classmethod
    def from_graph(cls, spec: "GraphSpec", backend: Backend, config=None) -> "StabilizerTableau":
        """Loopless weighted graph state: nullifiers phat_i - e_i . qhat,
        all centered at 0 (directions stored alpha-scaled, which leaves the
        stabilized rays unchanged)."""
        n = spec.n
        t = cls(n, backend, config)
        for i in range(n):
            if backend.kind == "exact":
                vec = tuple(backend.q_coef(-Fraction(spec.weights[i][j])) for j in range(n)) + tuple(
                    backend.p_coef(1 if j == i else 0) for j in range(n)
                )
            else:
                vec = tuple(-float(spec.weights[i][j]) for j in range(n)) + tuple(
                    1.0 if j == i else 0.0 for j in range(n)
                )
            t.continuous.append(ContinuousStab(vec, _zero_center(backend)))
        t._debug_sweep()
        return t

    # -- helpers ------------------------------------------------------------

    def copy(self) -> "StabilizerTableau":
        t = StabilizerTableau(self.n, self.backend, self.config)
        t.continuous = [ContinuousStab(tuple(s.vec), s.center) for s in self.continuous]
        t.discrete = list(self.discrete)
        return t

    def _omega_vec(self, u: Sequence, v: Sequence):
        be = self.backend
        n = self.n
        if be.kind == "exact":
            total = be.zero(PI)
            for j in range(n):
                total = total + be.mul_qp(u[j], v[n + j]) - be.mul_qp(v[j], u[n + j])
            return total
        total = 0.0
        for j in range(n):
            total += u[j] * v[n + j] - v[j] * u[n + j]
        return total

    def _strip(self, vec: Sequence):
        if self.backend.kind == "exact":
            return [s.coef for s in vec]
        return np.asarray(vec, dtype=float)

    def _word_from_vec(self, vec, theta=None) -> PauliWord:
        n = self.n
        if self.backend.kind == "exact":
            th = theta if theta is not None else self.backend.zero(PI)
        else:
            th = theta if theta is not None else 0.0
        return PauliWord(n, tuple(vec[:n]), tuple(vec[n:]), th, self.backend)

    def _scale_vec(self, vec, r):
        if self.backend.kind == "exact":
            return tuple(s.scale(Fraction(r)) for s in vec)
        return tuple(float(r) * x for x in vec)

    def _sub_scaled(self, vec, lam, pivot):
        if self.backend.kind == "exact":
            return tuple(x - p.scale(Fraction(lam)) for x, p in zip(vec, pivot))
        return tuple(x - lam * p for x, p in zip(vec, pivot))

    def _center_sub_scaled(self, c, lam, cpiv):
        if self.backend.kind == "exact":
            return c - cpiv.scale(Fraction(lam))
        return c - lam * cpiv

    def check_invariants(self):
        be = self.backend
        for s1, s2 in itertools.combinations(self.continuous, 2):
            w = self._omega_vec(s1.vec, s2.vec)
            if not _is_zero(be, w):
                raise TableauError("continuous directions are not symplectically orthogonal")
        for s in self.continuous:
            for g in self.discrete:
                w = self._omega_vec(s.vec, g.vector())
                if not _is_zero(be, w):
                    raise TableauError("discrete generator fails to commute with a direction")
        for g1, g2 in itertools.combinations(self.discrete, 2):
            if be.omega_class(self._omega_vec(g1.vector(), g2.vector())) != "commute":
                raise TableauError("discrete generators do not commute")

    def _debug_sweep(self):
        if self.config.debug:
            self.check_invariants()

    # -- membership ---------------------------------------------------------

    def _solve_continuous(self, target_vec):
        cols = [self._strip(s.vec) for s in self.continuous]
        if self.backend.kind == "exact":
            return ratlinalg.solve_columns_fraction(cols, self._strip(target_vec))
        return ratlinalg.solve_columns_float(
            cols, self._strip(target_vec), tol=self.backend.tol * 100
        )

    def _solve_mixed(self, target_vec):
        span = [self._strip(s.vec) for s in self.continuous]
        lat = [self._strip(g.vector()) for g in self.discrete]
        if self.backend.kind == "exact":
            return ratlinalg.mixed_solve_fraction(span, lat, self._strip(target_vec))
        return ratlinalg.mixed_solve_float(span, lat, self._strip(target_vec), tol=1e-7)

    def contains(self, p: PauliWord):
        """Classify a word: ('det', forced_phase) | ('free', None) |
        ('clash', None)."""
        be = self.backend
        pv = p.vector()
        for s in self.continuous:
            if not _is_zero(be, self._omega_vec(s.vec, pv)):
                return "clash", None
        for g in self.discrete:
            if be.omega_class(self._omega_vec(g.vector(), pv)) != "commute":
                return "clash", None
        sol = self._solve_mixed(pv)
        if sol is None:
            return "free", None
        t, m = sol
        stab = self._group_element(t, m)
        if be.kind == "exact":
            phase = be.mod_2pi(p.theta - stab.theta)
        else:
            phase = be.mod_2pi(p.theta - stab.theta)
        return "det", phase

    def _group_element(self, t_coeffs, m_coeffs) -> PauliWord:
        """The stabilizer word sum t_k u_k (+ centers) times prod g_j^{m_j}."""
        be = self.backend
        n = self.n
        if be.kind == "exact":
            vec = [be.zero(GQ)] * n + [be.zero(GP)] * n
            ctot = be.zero(PI)
            for tc, s in zip(t_coeffs, self.continuous):
                lam = Fraction(tc)
                vec = [x + y.scale(lam) for x, y in zip(vec, s.vec)]
                ctot = ctot + s.center.scale(lam)
            e_word = self._word_from_vec(tuple(vec), be.mod_2pi(-ctot))
        else:
            vec = np.zeros(2 * n)
            ctot = 0.0
            for tc, s in zip(t_coeffs, self.continuous):
                vec += float(tc) * np.asarray(s.vec, dtype=float)
                ctot += float(tc) * s.center
            e_word = self._word_from_vec(tuple(vec), be.mod_2pi(-ctot))
        out = e_word
        for mj, g in zip(m_coeffs, self.discrete):
            if mj:
                out = pauli_mul(out, pauli_power(g, int(mj)))
        return out

    # -- nullifier measurement ----------------------------------------------

    def measure_nullifier(self, s_vec, rng=None, value=None) -> MeasurementOutcome:
        """Measure the quadrature combination s . xhat.

        ``s_vec`` uses the same 2n layout as continuous directions.  When
        ``value`` is given the tableau conditions on it for free outcomes;
        deterministic outcomes always return the forced value.
        """
        be = self.backend
        if all(_is_zero(be, x) for x in s_vec):
            raise TableauError("cannot measure the zero direction")
        lam = self._solve_continuous(s_vec)
        if lam is not None:
            forced = _center_combination(self, lam)
            return MeasurementOutcome(NULLIFIER, forced, True)

        # Gram-Schmidt the continuous block so only the first clashing
        # direction pairs with s, then drop that pivot.
        ws = [self._omega_vec(st.vec, s_vec) for st in self.continuous]
        nz = [i for i, w in enumerate(ws) if not _is_zero(be, w)]
        if nz:
            piv = nz[0]
            pv, pc, pw = self.continuous[piv].vec, self.continuous[piv].center, ws[piv]
            for i in nz[1:]:
                lam_i = be.ratio(ws[i], pw) if be.kind == "exact" else ws[i] / pw
                st = self.continuous[i]
                self.continuous[i] = ContinuousStab(
                    self._sub_scaled(st.vec, lam_i, pv),
                    self._center_sub_scaled(st.center, lam_i, pc),
                )
            del self.continuous[piv]

        # keep the discrete subgroup with exactly-zero pairing against s
        self._euclid_reduce_discrete(s_vec, modulus=None)

        if value is None:
            value = self._sample_nullifier_value(s_vec, rng)
        vec = tuple(s_vec)
        self.continuous.append(ContinuousStab(vec, value))
        self._debug_sweep()
        return MeasurementOutcome(NULLIFIER, value, False)

    def _sample_nullifier_value(self, s_vec, rng):
        be = self.backend
        # coset constraint: a discrete generator whose vector decomposes over
        # span(continuous + s) with a nonzero s coefficient pins the value to
        # a lattice of offsets.
        cols = [self._strip(st.vec) for st in self.continuous] + [self._strip(s_vec)]
        for g in self.discrete:
            sol = (
                ratlinalg.solve_columns_fraction(cols, self._strip(g.vector()))
                if be.kind == "exact"
                else ratlinalg.solve_columns_float(cols, self._strip(g.vector()), tol=1e-7)
            )
            if sol is None:
                continue
            t_s = sol[-1]
            if (be.kind == "exact" and t_s != 0) or (be.kind != "exact" and abs(t_s) > 1e-9):
                base_phase = _center_combination_partial(self, sol[:-1])
                k = rng.integers(-self.config.grid_radius, self.config.grid_radius + 1)
                if be.kind == "exact":
                    # g.theta + t_s * value + base ≡ 0 (mod 2pi)
                    val = (be.phase(2 * int(k)) - g.theta - base_phase).scale(1 / Fraction(t_s))
                    return val
                val = (2 * math.pi * int(k) - g.theta - base_phase) / t_s
                return val
        if be.kind == "exact":
            j = int(rng.integers(-self.config.grid_radius, self.config.grid_radius + 1))
            return be.phase(Fraction(j, self.config.grid_denom))
        return float(rng.normal(0.0, self.config.sigma))

    # -- Pauli measurement ----------------------------------------------------

    def measure_pauli(self, p: PauliWord, rng=None, value=None) -> MeasurementOutcome:
        if p.is_identity():
            raise TableauError("cannot measure the identity word")
        if p.backend != self.backend or p.n != self.n:
            raise TableauError("word backend/mode count does not match the tableau")
        status, phase = self.contains(p)
        if status == "det":
            return MeasurementOutcome(PAULI, phase, True)
        if status == "clash":
            self._reduce_for_pauli(p)
        if value is None:
            value = self._sample_pauli_phase(p, rng)
        be = self.backend
        stab = PauliWord(p.n, p.a, p.b, be.mod_2pi(p.theta - value), be)
        self.discrete.append(stab)
        self._debug_sweep()
        return MeasurementOutcome(PAULI, value, False)

    def _reduce_for_pauli(self, p: PauliWord):
        be = self.backend
        pv = p.vector()
        ws = [self._omega_vec(st.vec, pv) for st in self.continuous]
        nz = [i for i, w in enumerate(ws) if not _is_zero(be, w)]
        if nz:
            piv = nz[0]
            pvec, pc, pw = self.continuous[piv].vec, self.continuous[piv].center, ws[piv]
            for i in nz[1:]:
                lam_i = be.ratio(ws[i], pw) if be.kind == "exact" else ws[i] / pw
                st = self.continuous[i]
                self.continuous[i] = ContinuousStab(
                    self._sub_scaled(st.vec, lam_i, pvec),
                    self._center_sub_scaled(st.center, lam_i, pc),
                )
            del self.continuous[piv]
            # lattice-ize: exp(i t u.xhat) survives for t = 4*pi/w
            if be.kind == "exact":
                fac = Fraction(4) / pw.coef
                theta = be.mod_2pi(-pc.scale(fac))
            else:
                fac = 4 * math.pi / pw
                theta = be.mod_2pi(-fac * pc)
            gvec = self._scale_vec(pvec, fac)
            self.discrete.append(self._word_from_vec(gvec, theta))

        self._euclid_reduce_discrete(pv, modulus="4pi")
        self._debug_sweep()

    def _euclid_reduce_discrete(self, target_vec, modulus):
        """Reduce discrete generators so at most one pairs nontrivially with
        target_vec; modulus '4pi' treats pairings mod 4*pi (Pauli case) and
        None requires exact zero (nullifier case).  The surviving pivot is
        raised to its smallest commuting power (Pauli) or dropped
        (nullifier)."""
        be = self.backend

        def signed_residue(w):
            if modulus is None:
                return w
            if be.kind == "exact":
                r = w.coef % 4  # pi units
                if r > 2:
                    r -= 4
                return ExactScalar(r, PI) if r != 0 else be.zero(PI)
            r = math.fmod(w, 4 * math.pi)
            if r < 0:
                r += 4 * math.pi
            if r > 2 * math.pi:
                r -= 4 * math.pi
            return r

        def magnitude(w):
            if be.kind == "exact":
                return abs(w.coef)
            return abs(w)

        snapshot = list(self.discrete)
        res0 = [signed_residue(self._omega_vec(g.vector(), target_vec)) for g in self.discrete]
        res = list(res0)
        clean = True
        max_norm = 1e6
        for _ in range(48):
            nz = [j for j in range(len(self.discrete)) if not _is_zero(be, res[j])]
            if len(nz) <= 1:
                break
            nz.sort(key=lambda j: magnitude(res[j]))
            a = nz[0]
            progress = False
            for j in nz[1:]:
                if be.kind == "exact":
                    q = round(res[j].coef / res[a].coef)
                else:
                    q = round(res[j] / res[a])
                if q:
                    combined = pauli_mul(self.discrete[j], pauli_power(self.discrete[a], -q))
                    if be.kind != "exact" and max(abs(x) for x in combined.vector()) > max_norm:
                        clean = False
                        break
                    self.discrete[j] = combined
                    res[j] = signed_residue(
                        res[j] - res[a].scale(q) if be.kind == "exact" else res[j] - q * res[a]
                    )
                    progress = True
            if not clean or not progress:
                break
        else:
            clean = False
        if sum(1 for r in res if not _is_zero(be, r)) > 1:
            clean = False

        if not clean:
            # incommensurate pairings: no nonzero combination commutes, so
            # plainly remove the generators that pair with the target
            self.discrete = [
                g for g, r in zip(snapshot, res0) if _is_zero(be, r)
            ]
            return

        nz = [j for j in range(len(self.discrete)) if not _is_zero(be, res[j])]
        for j in sorted(nz, reverse=True):
            if modulus is None:
                del self.discrete[j]
                continue
            k = self._commuting_power(res[j])
            if k is None:
                del self.discrete[j]
            else:
                self.discrete[j] = pauli_power(self.discrete[j], k)

    def _commuting_power(self, residue) -> Optional[int]:
        """Smallest k >= 2 with k * residue in 4*pi*Z."""
        be = self.backend
        if be.kind == "exact":
            c = residue.coef  # pi units; want k*c ≡ 0 mod 4
            q = Fraction(c, 4)
            return q.denominator if q.denominator > 1 else None
        for k in range(2, self.config.power_max + 1):
            r = math.fmod(k * residue, 4 * math.pi)
            if min(abs(r), abs(4 * math.pi - abs(r))) <= 1e-7:
                return k
        return None

    def _sample_pauli_phase(self, p: PauliWord, rng):
        be = self.backend
        for k in range(2, self.config.power_max + 1):
            status, phase = self.contains(pauli_power(p, k))
            if status == "det":
                m = int(rng.integers(0, k))
                if be.kind == "exact":
                    return be.mod_2pi(phase.scale(Fraction(1, k)) + be.phase(Fraction(2 * m, k)))
                return be.mod_2pi(phase / k + 2 * math.pi * m / k)
        j = int(rng.integers(0, 2 ** self.config.prec))
        if be.kind == "exact":
            return be.phase(Fraction(2 * j, 2 ** self.config.prec))
        return 2 * math.pi * j / 2 ** self.config.prec

    # -- serialization --------------------------------------------------------

    def snapshot(self) -> dict:
        be = self.backend
        return {
            "n": self.n,
            "backend": be.kind,
            "continuous": [
                {
                    "vec": [be.scalar_to_json(x) for x in s.vec],
                    "center": be.scalar_to_json(s.center),
                }
                for s in self.continuous
            ],
            "discrete": [g.to_json() for g in self.discrete],
        }


def _unit_vec(n, j, kind, backend):
    if backend.kind == "exact":
        a = [backend.zero(GQ)] * n
        b = [backend.zero(GP)] * n
        if kind == "q":
            a[j] = backend.q_coef(1)
        else:
            b[j] = backend.p_coef(1)
        return tuple(a + b)
    v = [0.0] * (2 * n)
    v[j if kind == "q" else n + j] = 1.0
    return tuple(v)


def _delta(n, j, val):
    v = [0] * n
    v[j] = val
    return v


def _zero_center(backend):
    return backend.zero(PI) if backend.kind == "exact" else 0.0


def _center_combination(t: StabilizerTableau, lam):
    be = t.backend
    if be.kind == "exact":
        total = be.zero(PI)
        for l, s in zip(lam, t.continuous):
            total = total + s.center.scale(Fraction(l))
        return total
    return float(sum(l * s.center for l, s in zip(lam, t.continuous)))


def _center_combination_partial(t: StabilizerTableau, lam):
    return _center_combination(t, lam)


def orthogonal_witness(
    t1: StabilizerTableau,
    t2: StabilizerTableau,
    coeff_range=(1, -1, 2, -2),
    max_support: int = 2,
) -> Optional[PauliWord]:
    """A word forced by both tableaux with phases differing by exactly pi
    (the states are then eigenstates of the word with opposite signs).

    Every stabilizer of t1 is forced to phase 0 by t1, so it suffices to
    enumerate t1 group elements (small integer/half-integer combinations
    over at most ``max_support`` continuous directions and discrete
    generators) and ask t2 for their forced phase.  Returns None when no
    witness is found within the search budget.
    """
    if t1.n != t2.n:
        raise TableauError("mode counts differ")
    be = t1.backend
    half_turn = be.phase(1)
    nc, nd = len(t1.continuous), len(t1.discrete)

    def supports(count):
        for k in range(0, min(count, max_support) + 1):
            for idx in itertools.combinations(range(count), k):
                for vals in itertools.product(coeff_range, repeat=k):
                    coeffs = [0] * count
                    for i, v in zip(idx, vals):
                        coeffs[i] = v
                    yield coeffs

    for t_coeffs in supports(nc):
        for m_coeffs in supports(nd):
            if not any(t_coeffs) and not any(m_coeffs):
                continue
            cand = t1._group_element(t_coeffs, m_coeffs)
            if cand.is_identity():
                continue
            st2, ph2 = t2.contains(cand)
            if st2 != "det":
                continue
            if be.kind == "exact":
                if be.phase_eq(ph2, half_turn):
                    return cand
            elif abs(be.mod_2pi(ph2) - math.pi) <= 1e-9:
                return cand
    return None


# ---------------------------------------------------------------------------
# graphs and the two-step distinguishing sequence
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GraphSpec:
    """Loopless weighted graph: symmetric matrix with zero diagonal."""

    n: int
    weights: tuple

    def __post_init__(self):
        w = tuple(tuple(row) for row in self.weights)
        object.__setattr__(self, "weights", w)
        if len(w) != self.n or any(len(r) != self.n for r in w):
            raise ValueError("weights must be n x n")
        for i in range(self.n):
            if w[i][i] != 0:
                raise ValueError("graph must be loopless")
            for j in range(self.n):
                if w[i][j] != w[j][i]:
                    raise ValueError("weights must be symmetric")


@dataclass(frozen=True)
class DistinguishingSequence:
    m1: PauliWord
    m2: PauliWord
    branch: str          # 'pair' | 'single_j' | 'single_i'
    i: int
    j: int
    backend: Backend


def _mod_pi_distance(x: float) -> float:
    r = math.fmod(x, math.pi)
    if r < 0:
        r += math.pi
    return min(r, math.pi - r)


def distinguishing_sequence(
    g1: GraphSpec,
    g2: GraphSpec,
    backend_kind: str = "exact",
    branch: str = "pair",
) -> DistinguishingSequence:
    """Two-measurement sequence separating the graph states of g1 and g2.

    Locates an entry (i, j) where the adjacencies differ (mod pi), scales
    all stabilizers by alpha with 4*zeta*alpha^2 = 2*pi (mod 4*pi) so the
    crossed pairs anticommute, and returns

        m1 = the difference word  (a stabilizer of the all-q-squeezed state),
        m2 = the g1-stabilizer product whose forced phase flips between the
             post-measurement tableaux.

    ``branch`` selects the pair construction or the single-index fallbacks
    used when the stabilizer phases make the pair branch degenerate.
    """
    if g1.n != g2.n:
        raise TableauError("graphs must share the mode count")
    n = g1.n
    best = None
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            z = g1.weights[i][j] - g2.weights[i][j]
            if backend_kind == "exact":
                # rational entries: distinct modulo pi iff distinct
                if z != 0:
                    best = (i, j, Fraction(z))
                    break
            else:
                # prefer the best-conditioned differing entry
                d = _mod_pi_distance(float(z))
                if d > 1e-9 and (best is None or d > best[3]):
                    best = (i, j, float(z), d)
        if best and backend_kind == "exact":
            break
    if best is None:
        raise TableauError("graphs are equal modulo pi: no distinguishing entry")
    i, j, zeta = best[0], best[1], best[2]

    if backend_kind == "exact":
        rho = 1 / (2 * zeta) if zeta > 0 else -1 / (2 * zeta)
        backend = ExactBackend(rho=rho)
        alpha_sq = None  # folded into the units
    else:
        backend = FloatBackend()
        # 4*zeta*alpha^2 must be an odd multiple of 2*pi; use the raw entry
        # difference (the crossed commutation phases are linear in it)
        alpha_sq = math.pi / (2 * abs(float(zeta)))

    def scaled(coeffs_a, coeffs_b):
        if backend_kind == "exact":
            return word_from_coeffs(coeffs_a, coeffs_b, backend)
        al = math.sqrt(alpha_sq)
        return word_from_coeffs(
            [al * float(x) for x in coeffs_a], [al * float(x) for x in coeffs_b], backend
        )

    de = [
        [g1.weights[r][c] - g2.weights[r][c] for c in range(n)] for r in range(n)
    ]

    def diff_word(rows):
        a = [0] * n
        for r in rows:
            for c in range(n):
                a[c] = a[c] + 2 * de[r][c]
        return scaled(a, [0] * n)

    def stab_word(rows):
        a = [0] * n
        b = [0] * n
        for r in rows:
            for c in range(n):
                a[c] = a[c] + 2 * g1.weights[r][c]
            b[r] = b[r] - 2
        return scaled(a, b)

    if branch == "pair":
        m1, m2 = diff_word([i, j]), stab_word([i, j])
    elif branch == "single_j":
        m1, m2 = diff_word([j]), stab_word([j])
    elif branch == "single_i":
        m1, m2 = diff_word([i]), stab_word([i])
    else:
        raise ValueError(f"unknown branch {branch!r}")
    return DistinguishingSequence(m1, m2, branch, i, j, backend)
