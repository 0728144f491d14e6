"""Samplers for the loop model: direct Poisson draws, the Metropolis
birth-death chain targeting the 2^(loops)-weighted measure, and the
equivalent continuous-time (Gillespie) chain.

Chain acceptance ratios follow from the density of a configuration with m
events relative to the marked Poisson reference: inserting a proposed event z
is accepted with min(1, 2^dL * beta*|E| / (m+1)) and deleting a uniformly
chosen event with min(1, 2^dL * m / (beta*|E|)), where dL is the loop-count
change.  Kind proposal probabilities equal the process intensities, so they
cancel exactly; at the extreme couplings the vanished kind is never proposed.
"""

import concurrent.futures
import os
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .config import LoopConfig, dump_config, load_config
from .observables import EstimatorResult
from .state import PackedState

__all__ = [
    "ModelParams",
    "ChainState",
    "ChainRun",
    "sample_poisson",
    "direct_weight_estimate",
    "run_chain",
    "run_chains",
    "run_gillespie",
    "insertion_acceptance",
    "deletion_acceptance",
]


@dataclass(frozen=True)
class ModelParams:
    """Coupling u in [-1, 1] and inverse temperature beta > 0.

    Per edge, events arrive at total rate 1; each is a crossing with
    probability (1+u)/2 and a bar with probability (1-u)/2.
    """

    u: float
    beta: float

    def __post_init__(self):
        if not -1.0 <= self.u <= 1.0:
            raise ValueError(f"u={self.u} outside [-1, 1]")
        if not self.beta > 0:
            raise ValueError(f"beta={self.beta} must be positive")

    @property
    def crossing_intensity(self):
        return (1.0 + self.u) / 2.0

    @property
    def bar_intensity(self):
        return (1.0 - self.u) / 2.0


def _as_rng(seed_or_rng):
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def insertion_acceptance(delta_loops, n_events, beta_edges):
    return min(1.0, (2.0 ** delta_loops) * beta_edges / (n_events + 1))


def deletion_acceptance(delta_loops, n_events, beta_edges):
    return min(1.0, (2.0 ** delta_loops) * n_events / beta_edges)


def sample_poisson(graph, params, rng):
    """One draw of the unweighted marked Poisson process as a LoopConfig."""
    rng = _as_rng(rng)
    packed = PackedState(graph, params.beta)
    while True:
        status = K.sample_poisson_kernel(
            graph.n, params.beta, packed.edges_a, packed.edges_b,
            params.crossing_intensity, *packed._table_args(), rng)
        if status == K.STATUS_OK:
            return LoopConfig.from_packed(graph, params.beta, packed)
        packed.grow()  # overflow tail beyond preallocation; redraw


def direct_weight_run(graph, params, n_samples, rng, hist_size=None):
    """Direct-sampling accumulators for E[2^loops] under the Poisson law.

    Returns (EstimatorResult, loop-count histogram, kind counts).
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = _as_rng(rng)
    packed = PackedState(graph, params.beta)
    if hist_size is None:
        hist_size = graph.n + packed.cap + 2
    acc = np.zeros(3, dtype=np.float64)
    hist = np.zeros(hist_size, dtype=np.int64)
    kind_counts = np.zeros(2, dtype=np.int64)
    remaining = int(n_samples)
    while remaining > 0:
        done = K.direct_weight_kernel(
            graph.n, params.beta, packed.edges_a, packed.edges_b,
            params.crossing_intensity, remaining, *packed._table_args(),
            packed.arc_off, packed.arc_loop, packed.arc_dir, packed.loop_len,
            acc, hist, kind_counts, rng)
        remaining -= int(done)
        if remaining > 0:
            packed.grow()
    n = int(n_samples)
    mean = acc[0] / n
    var = max(acc[1] / n - mean * mean, 0.0)
    stderr = float(np.sqrt(var / max(n - 1, 1)))
    result = EstimatorResult(
        "partition_weight", float(mean), stderr, n,
        {"graph": graph.spec, "u": params.u, "beta": params.beta,
         "mean_events": float(acc[2] / n)})
    return result, hist, kind_counts


def direct_weight_estimate(graph, params, n_samples, rng):
    """Sample mean of 2^(loop count) over direct Poisson draws.

    The reference process is a probability measure, so this estimates the
    loop-model normalization constant directly.  Variance grows quickly with
    beta*|E|; intended for desk-scale graphs.
    """
    result, _, _ = direct_weight_run(graph, params, n_samples, rng)
    return result


class ChainState:
    """Mutable state of one weighted-measure chain (single writer).

    Tracks the packed configuration, the cached loop count (updated by the
    local delta on every accepted move), the RNG stream, and acceptance
    counters.
    """

    def __init__(self, graph, params, rng, origin=0):
        self.graph = graph
        self.params = params
        self.rng = _as_rng(rng)
        self.packed = PackedState(graph, params.beta)
        self.counters = np.zeros(K.N_COUNTERS, dtype=np.int64)
        self.loop_count_box = np.array([graph.n], dtype=np.int64)
        self.tau_box = np.zeros(1, dtype=np.float64)
        self.origin = int(origin)

    @property
    def loop_count(self):
        return int(self.loop_count_box[0])

    @property
    def n_events(self):
        return self.packed.n_events

    @property
    def steps(self):
        return int(self.counters[K.C_STEPS])

    def acceptance_rate(self):
        c = self.counters
        proposals = int(c[K.C_PROP_INS] + c[K.C_PROP_DEL])
        if proposals == 0:
            return 0.0
        return float((c[K.C_ACC_INS] + c[K.C_ACC_DEL]) / proposals)

    def _empty_meas(self):
        n = self.graph.n
        return (np.zeros(0, np.int64), np.zeros(0, np.int64),
                np.zeros(0, np.float64), np.zeros(0, np.int64),
                np.zeros((0, n), np.int32), np.zeros((0, n), np.int8),
                np.zeros((0, 1), np.float64))

    def _run_kernel(self, n_steps_total, sps, burn_in, thin, meas):
        p = self.packed
        while True:
            status = K.run_mh_kernel(
                self.graph.n, self.params.beta, p.edges_a, p.edges_b,
                self.params.crossing_intensity, *p._table_args(),
                self.counters, self.loop_count_box,
                int(n_steps_total), int(sps), int(burn_in), int(thin),
                self.origin, *meas,
                p.arc_off, p.arc_loop, p.arc_dir, p.loop_len,
                p.scratch_count, self.rng)
            if status == K.STATUS_OK:
                return
            p.grow()

    def mh_step(self):
        """One Metropolis step; returns the accept/reject record."""
        before = self.counters.copy()
        self._run_kernel(self.steps + 1, 1, 0, 1, self._empty_meas())
        d = self.counters - before
        if d[K.C_PROP_INS]:
            proposal = "insert"
            accepted = bool(d[K.C_ACC_INS])
        else:
            proposal = "delete"
            accepted = bool(d[K.C_ACC_DEL])
        return {
            "proposal": proposal,
            "accepted": accepted,
            "auto_rejected": bool(d[K.C_AUTOREJ_DEL]),
            "duplicate_rejected": bool(d[K.C_DUP_REJ]),
            "loop_count": self.loop_count,
            "n_events": self.n_events,
        }

    def gillespie_step(self):
        """One continuous-time transition attempt (thinning step).

        Candidate insertions arrive at rate sqrt(2)*beta*|E| and candidate
        deletions at sqrt(2)*m; a candidate executes with probability
        2^(dL/2)/sqrt(2), realizing split/merge rates sqrt(2) and 1/sqrt(2)
        and rate 1 for internal rewirings.  Returns (time increment, record).
        """
        p = self.packed
        params = self.params
        rng = self.rng
        n_edges = self.graph.n_edges
        b_e = params.beta * n_edges
        m = self.n_events
        rate = np.sqrt(2.0) * (b_e + m)
        dt = -np.log(1.0 - rng.random()) / rate
        self.tau_box[0] += dt
        record = {"dt": float(dt), "transition": None,
                  "loop_count": self.loop_count}
        if rng.random() < b_e / (b_e + m):
            self.counters[K.C_PROP_INS] += 1
            ei = min(int(rng.random() * n_edges), n_edges - 1)
            a, b = int(p.edges_a[ei]), int(p.edges_b[ei])
            t = params.beta * rng.random()
            pc = params.crossing_intensity
            if pc >= 1.0:
                kind = K.KIND_CROSS
            elif pc <= 0.0:
                kind = K.KIND_BAR
            else:
                kind = K.KIND_CROSS if rng.random() < pc else K.KIND_BAR
            if (t <= 0.0 or t >= params.beta
                    or K._find_exact(p.vlist, p.vcount, p.ev_t, a, t) >= 0
                    or K._find_exact(p.vlist, p.vcount, p.ev_t, b, t) >= 0):
                self.counters[K.C_DUP_REJ] += 1
            else:
                dl = p.delta_insert(a, b, t, kind)
                p_acc = (2.0 ** (0.5 * dl)) / np.sqrt(2.0)
                if p_acc >= 1.0 or rng.random() < p_acc:
                    p.insert(a, b, t, kind)
                    self.loop_count_box[0] += dl
                    self.counters[K.C_ACC_INS] += 1
                    record["transition"] = ("insert", dl)
        else:
            self.counters[K.C_PROP_DEL] += 1
            if m == 0:
                self.counters[K.C_AUTOREJ_DEL] += 1
            else:
                idx = min(int(rng.random() * m), m - 1)
                slot = int(p.alive[idx])
                dl = p.delta_remove(slot)
                p_acc = (2.0 ** (0.5 * dl)) / np.sqrt(2.0)
                if p_acc >= 1.0 or rng.random() < p_acc:
                    p.remove(slot)
                    self.loop_count_box[0] += dl
                    self.counters[K.C_ACC_DEL] += 1
                    record["transition"] = ("delete", dl)
        record["loop_count"] = self.loop_count
        return dt, record

    def as_config(self):
        """View the current configuration as a LoopConfig (shared state)."""
        return LoopConfig.from_packed(self.graph, self.params.beta, self.packed)

    def counter_dict(self):
        names = ["steps", "prop_ins", "prop_del", "acc_ins", "acc_del",
                 "autorej_del", "dup_rej", "n_meas"]
        return {name: int(self.counters[i]) for i, name in enumerate(names)}

    def save(self, path):
        """Checkpoint: configuration dump plus the chain counters."""
        text = dump_config(self.as_config(), counters=self.counter_dict())
        with open(path, "w") as fh:
            fh.write(text)

    @classmethod
    def load(cls, path, params, rng, origin=0):
        with open(path) as fh:
            cfg, counters = load_config(fh.read())
        state = cls(cfg.graph, params, rng, origin=origin)
        state.packed = cfg.packed
        names = ["steps", "prop_ins", "prop_del", "acc_ins", "acc_del",
                 "autorej_del", "dup_rej", "n_meas"]
        for i, name in enumerate(names):
            state.counters[i] = counters.get(name, 0)
        n_loops, _ = state.packed.trace()
        state.loop_count_box[0] = n_loops
        return state


@dataclass
class ChainRun:
    """Measurement stream of one chain plus the full schedule echo."""

    params: dict
    n: int
    beta: float
    origin: int
    counters: np.ndarray
    n_loops: np.ndarray
    m_events: np.ndarray
    origin_len: np.ndarray
    sum_c2: np.ndarray
    t0_loop: np.ndarray
    t0_dir: np.ndarray
    top: np.ndarray

    @property
    def n_meas(self):
        return len(self.n_loops)

    def acceptance_rate(self):
        c = self.counters
        proposals = int(c[K.C_PROP_INS] + c[K.C_PROP_DEL])
        return float((c[K.C_ACC_INS] + c[K.C_ACC_DEL]) / proposals) \
            if proposals else 0.0


def steps_per_sweep(graph, params):
    """A sweep is beta*|E| attempted steps (at least one)."""
    return max(1, int(round(params.beta * graph.n_edges)))


def _validate_schedule(sweeps, burn_in, thin):
    if sweeps < 0 or burn_in < 0 or thin < 1:
        raise ValueError("need sweeps >= 0, burn_in >= 0, thin >= 1")
    if burn_in > sweeps:
        raise ValueError(f"burn_in={burn_in} exceeds sweeps={sweeps}")


def _alloc_meas(n_meas, n, top_k):
    return (np.zeros(n_meas, np.int64), np.zeros(n_meas, np.int64),
            np.zeros(n_meas, np.float64), np.zeros(n_meas, np.int64),
            np.zeros((n_meas, n), np.int32), np.zeros((n_meas, n), np.int8),
            np.zeros((n_meas, max(1, top_k)), np.float64))


def _make_run(kind, graph, params, schedule, seed_label, origin, state, meas):
    nm = int(state.counters[K.C_NMEAS])
    nloops, mevents, olen, sumc2, t0l, t0d, top = meas
    return ChainRun(
        params={"sampler": kind, "graph": graph.spec, "u": params.u,
                "beta": params.beta, "seed": seed_label, "origin": origin,
                **schedule},
        n=graph.n, beta=params.beta, origin=origin,
        counters=state.counters.copy(),
        n_loops=nloops[:nm].copy(), m_events=mevents[:nm].copy(),
        origin_len=olen[:nm].copy(), sum_c2=sumc2[:nm].copy(),
        t0_loop=t0l[:nm].copy(), t0_dir=t0d[:nm].copy(), top=top[:nm].copy())


def run_chain(graph, params, sweeps, burn_in=0, thin=1, seed=0, origin=0,
              top_k=None, hooks=None, return_state=False):
    """Run one Metropolis chain; deterministic given the seed.

    Measurements are taken every `thin` sweeps after `burn_in` sweeps.  With
    `hooks` given (a list of callables), the chain is stepped in Python and
    each hook is called with the ChainState at every measurement point; the
    per-hook result lists are returned instead of a ChainRun.  With
    `return_state`, the final ChainState is returned alongside the run (for
    checkpointing).
    """
    _validate_schedule(sweeps, burn_in, thin)
    sweeps, burn_in, thin = int(sweeps), int(burn_in), int(thin)
    if top_k is None:
        top_k = min(graph.n, 256)
    rng = _as_rng(seed)
    seed_label = seed if isinstance(seed, int) else "generator"
    sps = steps_per_sweep(graph, params)
    n_meas = (sweeps - burn_in) // thin
    state = ChainState(graph, params, rng, origin=origin)
    schedule = {"sweeps": sweeps, "burn_in": burn_in, "thin": thin,
                "steps_per_sweep": sps}
    if hooks is not None:
        outputs = [[] for _ in hooks]
        for sweep in range(1, sweeps + 1):
            for _ in range(sps):
                state.mh_step()
            if sweep > burn_in and (sweep - burn_in) % thin == 0:
                for hook, out in zip(hooks, outputs):
                    out.append(hook(state))
        return outputs
    meas = _alloc_meas(n_meas, graph.n, top_k)
    state._run_kernel(sweeps * sps, sps, burn_in, thin, meas)
    run = _make_run("mh", graph, params, schedule, seed_label, origin,
                    state, meas)
    return (run, state) if return_state else run


def run_chains(graph, params, sweeps, burn_in=0, thin=1, seed=0, origin=0,
               top_k=None, n_chains=1):
    """Independent chains with RNG streams spawned from the master seed.

    Chains run concurrently on threads when the compiled kernels are active
    (they release the GIL); results merge associatively downstream.
    """
    seq = np.random.SeedSequence(seed)
    children = seq.spawn(n_chains)

    def one(i):
        run = run_chain(graph, params, sweeps, burn_in, thin,
                        seed=np.random.default_rng(children[i]),
                        origin=origin, top_k=top_k)
        run.params["seed"] = f"{seed}:{i}"
        return run

    if K.HAS_NUMBA and n_chains > 1:
        workers = min(n_chains, os.cpu_count() or 1)
        with concurrent.futures.ThreadPoolExecutor(workers) as pool:
            return list(pool.map(one, range(n_chains)))
    return [one(i) for i in range(n_chains)]


def run_gillespie(graph, params, n_meas, meas_dt=1.0, burn_in_time=0.0,
                  seed=0, origin=0, top_k=None):
    """Continuous-time chain measured at fixed chain-time epochs.

    Stationary law matches the Metropolis chain; used as a cross-check.
    """
    if n_meas < 0 or meas_dt <= 0 or burn_in_time < 0:
        raise ValueError("invalid gillespie schedule")
    if top_k is None:
        top_k = min(graph.n, 256)
    rng = _as_rng(seed)
    seed_label = seed if isinstance(seed, int) else "generator"
    state = ChainState(graph, params, rng, origin=origin)
    meas = _alloc_meas(int(n_meas), graph.n, top_k)
    p = state.packed
    while True:
        status = K.run_gillespie_kernel(
            graph.n, params.beta, p.edges_a, p.edges_b,
            params.crossing_intensity, *p._table_args(),
            state.counters, state.loop_count_box, state.tau_box,
            float(burn_in_time), float(meas_dt), int(origin), *meas,
            p.arc_off, p.arc_loop, p.arc_dir, p.loop_len, p.scratch_count,
            rng)
        if status == K.STATUS_OK:
            break
        p.grow()
    schedule = {"n_meas": int(n_meas), "meas_dt": float(meas_dt),
                "burn_in_time": float(burn_in_time)}
    return _make_run("gillespie", graph, params, schedule, seed_label,
                     origin, state, meas)
