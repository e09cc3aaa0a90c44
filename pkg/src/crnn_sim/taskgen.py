"""Generation and verification of stabilizer-measurement-translation tasks.

An instance is an (n+k) x 2n input matrix: the first n rows describe
quadrature (nullifier) measurements s . xhat, the final k rows describe
measurements of exp(i (s_q . qhat + s_p . phat)).  The oracle transcript
is produced by replaying the rows through a stabilizer tableau from the
configured initial state.

The adversarial family follows the hollow-symmetric construction

    Q(B) = ( B + H/2 | ||B||_F I_n ),

whose rows are symplectically orthogonal and prepare loopless graph
states.  An adversarial triple shares a two-row suffix built from the
distinguishing sequence of the two non-trivial graphs; the certificate
checks that no single pair of suffix answers is consistent with all three
prefixes (the first instance pins the first answer, and the other two
force second answers a definite gap apart).

Replays and generated datasets use the float backend: ||B||_F is
irrational for generic rational B, so these instances have no exact
representation in the unit-system backend.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .cvpauli import PauliWord, word_from_coeffs
from .scalars import FloatBackend, circular_distance
from .tableau import (
    NULLIFIER,
    PAULI,
    GraphSpec,
    StabilizerTableau,
    TableauConfig,
    TableauError,
    distinguishing_sequence,
)

SCHEMA_VERSION = 1

FLOAT = FloatBackend()


class TaskError(ValueError):
    pass


@dataclass
class TranscriptStep:
    kind: str
    value: float
    deterministic: bool

    def to_json(self):
        return {"kind": self.kind, "value": self.value, "deterministic": self.deterministic}

    @classmethod
    def from_json(cls, d):
        return cls(d["kind"], float(d["value"]), bool(d["deterministic"]))


@dataclass
class TaskInstance:
    n: int
    k: int
    inputs: np.ndarray          # (n+k, 2n)
    transcript: List[TranscriptStep]
    init_state: str = "squeezed"
    modified: bool = False
    metadata: dict = field(default_factory=dict)

    def to_json(self):
        return {
            "schema": SCHEMA_VERSION,
            "n": self.n,
            "k": self.k,
            "inputs": [list(map(float, row)) for row in self.inputs],
            "transcript": [s.to_json() for s in self.transcript],
            "init_state": self.init_state,
            "modified": self.modified,
            "metadata": self.metadata,
        }

    @classmethod
    def from_json(cls, d):
        if d.get("schema") != SCHEMA_VERSION:
            raise TaskError(f"unsupported schema version {d.get('schema')!r}")
        return cls(
            n=int(d["n"]),
            k=int(d["k"]),
            inputs=np.asarray(d["inputs"], dtype=float),
            transcript=[TranscriptStep.from_json(s) for s in d["transcript"]],
            init_state=d["init_state"],
            modified=bool(d["modified"]),
            metadata=d.get("metadata", {}),
        )


@dataclass
class AdversarialTriple:
    instances: Tuple[TaskInstance, TaskInstance, TaskInstance]
    certificate: dict


@dataclass
class StepVerdict:
    index: int
    forced: bool
    ok: bool
    expected: Optional[float]
    got: float


@dataclass
class ConsistencyReport:
    steps: List[StepVerdict]
    consistent: bool


# ---------------------------------------------------------------------------
# construction helpers
# ---------------------------------------------------------------------------


def hollow_ones(n: int) -> np.ndarray:
    return np.ones((n, n)) - np.eye(n)


def build_Q(B: np.ndarray) -> np.ndarray:
    """Q = (B + H/2 | ||B||_F I); requires B hollow symmetric with entries
    in [-1/4, 1/4].  Rows are pairwise symplectically orthogonal and have
    full rank."""
    B = np.asarray(B, dtype=float)
    n = B.shape[0]
    if B.shape != (n, n):
        raise TaskError("B must be square")
    if np.max(np.abs(np.diag(B))) > 0:
        raise TaskError("B must be hollow (zero diagonal)")
    if np.max(np.abs(B - B.T)) > 1e-12:
        raise TaskError("B must be symmetric")
    if np.max(np.abs(B)) > 0.25 + 1e-12:
        raise TaskError("B entries must lie in [-1/4, 1/4]")
    left = B + hollow_ones(n) / 2.0
    right = np.linalg.norm(B) * np.eye(n)
    return np.concatenate([left, right], axis=1)


def sample_hollow_B(n: int, rng: np.random.Generator, denom: int = 32, radius: int = 8):
    """Hollow symmetric B with entries on the grid {j/denom : |j| <= radius}
    (radius/denom <= 1/4 keeps the Theorem construction's bound)."""
    B = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            B[i, j] = B[j, i] = rng.integers(-radius, radius + 1) / denom
    return B


def modified_transform(row: np.ndarray) -> np.ndarray:
    """Elementwise x -> 1/x with 0 -> 0."""
    row = np.asarray(row, dtype=float)
    out = np.zeros_like(row)
    nz = row != 0
    out[nz] = 1.0 / row[nz]
    return out


def graph_from_B(B: np.ndarray) -> GraphSpec:
    """Adjacency of the graph state prepared by measuring the rows of Q(B):
    normalizing row i by ||B||_F gives nullifier phat_i - e_i . qhat with
    e = -(B + H/2)/||B||_F."""
    norm = np.linalg.norm(B)
    if norm == 0:
        raise TaskError("B = 0 prepares the all-q-squeezed state, not a graph state")
    n = B.shape[0]
    E = -(B + hollow_ones(n) / 2.0) / norm
    return GraphSpec(n, tuple(tuple(row) for row in E))


# ---------------------------------------------------------------------------
# replay engine
# ---------------------------------------------------------------------------


def _replay(
    inputs: np.ndarray,
    n: int,
    init_state: str,
    modified: bool,
    rng: Optional[np.random.Generator],
    candidates: Optional[Sequence[float]] = None,
    tol: float = 1e-6,
    config: Optional[TableauConfig] = None,
):
    """Run rows through a fresh tableau.  Without candidates: sample free
    outcomes with rng and return (transcript, tableau).  With candidates:
    condition free steps on the candidate values, compare forced steps
    within tol, and return (verdicts, tableau)."""
    if init_state == "squeezed":
        t = StabilizerTableau.init_squeezed(n, FLOAT, config)
    elif init_state == "gkp":
        t = StabilizerTableau.init_gkp(n, FLOAT, config)
    else:
        raise TaskError(f"unknown initial state {init_state!r}")
    transcript: List[TranscriptStep] = []
    verdicts: List[StepVerdict] = []
    for i, row in enumerate(np.asarray(inputs, dtype=float)):
        is_null = i < n
        cand = None if candidates is None else float(candidates[i])
        if is_null:
            out = t.measure_nullifier(tuple(row), rng, value=cand)
        else:
            vec = modified_transform(row) if modified else row
            word = word_from_coeffs(vec[:n], vec[n:], FLOAT)
            out = t.measure_pauli(word, rng, value=cand)
        if candidates is None:
            transcript.append(TranscriptStep(out.kind, float(out.value), out.deterministic))
        else:
            if out.deterministic:
                if out.kind == PAULI:
                    ok = circular_distance(out.value, cand) <= tol
                else:
                    ok = abs(out.value - cand) <= tol
                verdicts.append(StepVerdict(i, True, ok, float(out.value), cand))
            else:
                verdicts.append(StepVerdict(i, False, True, None, cand))
    return (transcript, t) if candidates is None else (verdicts, t)


def gen_instance(
    n: int,
    k: int,
    rng: np.random.Generator,
    B: Optional[np.ndarray] = None,
    suffix: Optional[np.ndarray] = None,
    init_state: str = "squeezed",
    modified: bool = False,
    metadata: Optional[dict] = None,
) -> TaskInstance:
    """Assemble inputs (prefix = rows of Q(B), suffix = CV Pauli rows) and
    replay them for the oracle transcript."""
    if n < 2:
        raise TaskError("task needs n >= 2")
    if k < 0:
        raise TaskError("k must be >= 0")
    if B is None:
        B = sample_hollow_B(n, rng)
    prefix = build_Q(B)
    if suffix is None:
        suffix = rng.integers(-8, 9, size=(k, 2 * n)) / 8.0
    else:
        suffix = np.asarray(suffix, dtype=float)
        if suffix.shape != (k, 2 * n):
            raise TaskError("suffix must be (k, 2n)")
    inputs = np.concatenate([prefix, suffix], axis=0) if k else prefix
    transcript, _ = _replay(inputs, n, init_state, modified, rng)
    return TaskInstance(
        n, k, inputs, transcript, init_state, modified, metadata or {"B": B.tolist()}
    )


def consistency_check(
    instance: TaskInstance, candidate_outputs: Sequence[float], tol: float = 1e-6
) -> ConsistencyReport:
    """Replay candidate outcomes: forced steps must match within tol, free
    steps are accepted and condition the tableau."""
    if len(candidate_outputs) != instance.n + instance.k:
        raise TaskError("candidate outputs have the wrong arity")
    verdicts, _ = _replay(
        instance.inputs,
        instance.n,
        instance.init_state,
        instance.modified,
        None,
        candidates=list(candidate_outputs),
        tol=tol,
    )
    return ConsistencyReport(verdicts, all(v.ok for v in verdicts))


# ---------------------------------------------------------------------------
# adversarial triples
# ---------------------------------------------------------------------------


_BRANCHES = ("pair", "single_j", "single_i")


def gen_adversarial_triple(
    n: int,
    rng: np.random.Generator,
    margin: float = math.pi / 4,
    max_tries: int = 50,
) -> AdversarialTriple:
    """Three instances sharing a two-row distinguishing suffix: prefixes
    prepare the all-q-squeezed state (B = 0) and two distinct graph states;
    the certificate pins the forced suffix answers apart by at least
    ``margin``."""
    if n < 2:
        raise TaskError("adversarial triples need n >= 2")
    for _ in range(max_tries):
        B2 = sample_hollow_B(n, rng)
        B3 = sample_hollow_B(n, rng)
        if np.linalg.norm(B2) == 0 or np.linalg.norm(B3) == 0:
            continue
        if np.allclose(B2, B3):
            continue
        g2, g3 = graph_from_B(B2), graph_from_B(B3)
        diff = np.asarray(g2.weights) - np.asarray(g3.weights)
        offdiag = diff[~np.eye(n, dtype=bool)]
        dist = np.abs(np.mod(offdiag + math.pi / 2, math.pi) - math.pi / 2)
        if np.max(dist) < 0.05:  # equal modulo pi: no distinguishing entry
            continue

        prefix1 = build_Q(np.zeros((n, n)))
        prefix2, prefix3 = build_Q(B2), build_Q(B3)
        tr2, t2 = _replay(prefix2, n, "squeezed", False, rng)
        tr3, t3 = _replay(prefix3, n, "squeezed", False, rng)

        found = None
        for branch in _BRANCHES:
            try:
                seq = distinguishing_sequence(g2, g3, "float", branch)
            except TableauError:
                continue
            m1 = word_from_coeffs(np.asarray(seq.m1.a), np.asarray(seq.m1.b), FLOAT)
            m2 = word_from_coeffs(np.asarray(seq.m2.a), np.asarray(seq.m2.b), FLOAT)
            c2, c3 = t2.copy(), t3.copy()
            o2 = c2.measure_pauli(m1, rng, value=0.0)
            o3 = c3.measure_pauli(m1, rng, value=0.0)
            if o2.deterministic or o3.deterministic:
                continue
            s2, p2 = c2.contains(m2)
            s3, p3 = c3.contains(m2)
            if s2 != "det" or s3 != "det":
                continue
            gap = circular_distance(p2, p3)
            if gap >= margin:
                found = (seq, branch, p2, p3, gap)
                break
        if found is None:
            continue
        seq, branch, p2, p3, gap = found

        suffix = np.stack(
            [
                np.concatenate([np.asarray(seq.m1.a), np.asarray(seq.m1.b)]),
                np.concatenate([np.asarray(seq.m2.a), np.asarray(seq.m2.b)]),
            ]
        )
        instances = []
        for idx, (prefix, pre_tr, tab) in enumerate(
            [
                (prefix1, None, None),
                (prefix2, tr2, t2),
                (prefix3, tr3, t3),
            ]
        ):
            inputs = np.concatenate([prefix, suffix], axis=0)
            if pre_tr is None:
                transcript, tab1 = _replay(inputs[:n], n, "squeezed", False, rng)
                work = tab1
            else:
                transcript = list(pre_tr)
                work = tab.copy()
            m1w = word_from_coeffs(suffix[0, :n], suffix[0, n:], FLOAT)
            m2w = word_from_coeffs(suffix[1, :n], suffix[1, n:], FLOAT)
            out1 = work.measure_pauli(m1w, rng)
            out2 = work.measure_pauli(m2w, rng)
            transcript.append(TranscriptStep(out1.kind, float(out1.value), out1.deterministic))
            transcript.append(TranscriptStep(out2.kind, float(out2.value), out2.deterministic))
            meta = {"triple_member": idx, "branch": branch}
            instances.append(
                TaskInstance(n, 2, inputs, transcript, "squeezed", False, meta)
            )

        # instance 1 sanity: the first suffix answer is pinned to zero
        first = instances[0].transcript[n]
        if not (first.deterministic and abs(first.value) <= 1e-9):
            continue
        certificate = {
            "branch": branch,
            "probe_m1": 0.0,
            "forced_m2_graph1": float(p2),
            "forced_m2_graph2": float(p3),
            "gap": float(gap),
        }
        return AdversarialTriple(tuple(instances), certificate)
    raise TaskError("failed to sample an adversarial triple (degenerate draws)")


def triple_is_unanswerable(triple: AdversarialTriple, tol: float = 1e-6) -> bool:
    """No single suffix response (r1, r2) is consistent with all three
    prefixes: r1 is pinned to 0 by the first instance, and at r1 = 0 the
    other two force second answers that differ."""
    inst1 = triple.instances[0]
    n = inst1.n
    step = inst1.transcript[n]
    if not step.deterministic or abs(step.value) > tol:
        return False
    gap = circular_distance(
        triple.certificate["forced_m2_graph1"], triple.certificate["forced_m2_graph2"]
    )
    return gap > 2 * tol


# ---------------------------------------------------------------------------
# dataset io
# ---------------------------------------------------------------------------


def write_dataset(instances: Sequence[TaskInstance], path):
    with open(path, "w") as fh:
        for inst in instances:
            fh.write(json.dumps(inst.to_json(), sort_keys=True) + "\n")


def read_dataset(path) -> List[TaskInstance]:
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(TaskInstance.from_json(json.loads(line)))
    return out


def _gen_plain_job(args):
    n, k, seed, i, init_state, modified = args
    rng = np.random.default_rng((seed, 0, i))
    return gen_instance(n, k, rng, init_state=init_state, modified=modified)


def _gen_triple_job(args):
    n, seed, i = args
    rng = np.random.default_rng((seed, 1, i))
    triple = gen_adversarial_triple(n, rng)
    for member in triple.instances:
        member.metadata["triple_id"] = i
        member.metadata["certificate"] = triple.certificate
    return triple


def gen_dataset(
    n: int,
    k: int,
    count: int,
    seed: int,
    init_state: str = "squeezed",
    modified: bool = False,
    adversarial_triples: int = 0,
    workers: int = 1,
) -> List[TaskInstance]:
    """Deterministic dataset: per-instance rngs are derived from the seed,
    so the result is identical for any worker count."""
    plain_jobs = [(n, k, seed, i, init_state, modified) for i in range(count)]
    triple_jobs = [(n, seed, i) for i in range(adversarial_triples)]
    if workers > 1 and (plain_jobs or triple_jobs):
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            plain = list(pool.map(_gen_plain_job, plain_jobs))
            triples = list(pool.map(_gen_triple_job, triple_jobs))
    else:
        plain = [_gen_plain_job(j) for j in plain_jobs]
        triples = [_gen_triple_job(j) for j in triple_jobs]
    instances: List[TaskInstance] = list(plain)
    for triple in triples:
        instances.extend(triple.instances)
    return instances
