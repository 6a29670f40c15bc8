"""Offline and error-analysis pipelines shared by the CLI and the tests.

Parameter samples come from numpy's PCG64 bit generator seeded with
``SeedSequence(seed, spawn_key=(stream,))``; each 64-bit output ``x`` is
turned into a uniform number ``(x >> 11) * 2**-53`` and scaled to the
parameter box.  Training uses stream 0 and testing stream 1, so the two
sets never share draws.
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
import logging

import numpy as np

from . import pod, rom, snapshot
from .cases import make_case
from .errors import SingularMatrixError
from .geometry import classify

log = logging.getLogger(__name__)

TRAIN_STREAM, TEST_STREAM = 0, 1


def sample_parameters(box, count, seed, stream=TRAIN_STREAM):
    """``count`` uniform samples in the box ``[(lo, hi), ...]``."""
    box = np.asarray(box, dtype=float)
    k = len(box)
    bitgen = np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(stream,)))
    raw = bitgen.random_raw(count * k).astype(np.uint64)
    u = (raw >> np.uint64(11)).astype(float) * 2.0**-53
    u = u.reshape(count, k)
    return box[:, 0] + (box[:, 1] - box[:, 0]) * u


def error_grid(nmax, step=5):
    """``1, 1 + step, ...`` up to ``nmax``, always ending with ``nmax``."""
    grid = list(range(1, nmax + 1, step))
    if grid[-1] != nmax:
        grid.append(nmax)
    return grid


@dataclass(frozen=True)
class Variant:
    extension: str = "natural"
    transported: bool = False

    @property
    def label(self):
        return self.extension + ("+transport" if self.transported else "")


# worker processes keep their case (and any payload) here
_STATE = {}


def _init_worker(config, payload):
    _STATE["case"] = make_case(config)
    _STATE["payload"] = payload


def _run(func, items, case, workers, payload=None):
    if workers <= 1 or len(items) <= 1:
        return [func(case, item, payload) for item in items]
    with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(case.config, payload)) as pool:
        return list(pool.map(_dispatch, [func] * len(items), items, chunksize=max(1, len(items) // (4 * workers))))


def _dispatch(func, item):
    return func(_STATE["case"], item, _STATE["payload"])


def snapshot_fields(case, mu, variants):
    """HF solve at ``mu`` turned into background fields for every variant."""
    active = case.classify(mu)
    hf = case.solve_hf(mu, active)
    extended = {}
    complement = None
    out = {}
    for v in variants:
        if v.extension not in extended:
            if v.extension == "harmonic" and complement is None:
                complement = classify(case.mesh, case.domain.complement(), active.mu, active.subdivision, check=False)
            extended[v.extension] = {
                kind: snapshot.extend(fv, v.extension, complement) for kind, fv in hf.items()
            }
        fields = extended[v.extension]
        if v.transported:
            fields = {
                kind: snapshot.transport_compose(case.mesh, f, case.transport, mu, "forward")
                for kind, f in fields.items()
            }
        out[v] = fields
    return out


def _snapshot_task(case, mu, variants):
    return snapshot_fields(case, mu, variants)


def collect_snapshots(case, params, variants, workers=1):
    """``{variant: {kind: SnapshotSet}}`` for the training parameters."""
    variants = list(variants)
    results = _run(_snapshot_task, list(params), case, workers, variants)
    sets = {}
    for v in variants:
        sets[v] = {}
        for kind in case.kinds:
            sets[v][kind] = snapshot.SnapshotSet(
                kind=kind,
                fields=np.stack([r[v][kind] for r in results]),
                parameters=np.asarray(params),
                extension_mode=v.extension,
                transported=v.transported,
                transport_reference=tuple(case.transport.reference) if v.transported else None,
            )
    return sets


def hf_lift(case):
    """Naturally extended HF velocity and pressure at the reference parameter."""
    mu = case.transport.reference
    active = case.classify(mu)
    hf = case.solve_hf(mu, active)
    return hf["velocity"].to_background(), hf["pressure"].to_background()


def subtract_lift(sets, lift):
    """Fluctuation sets around a lift; the supremizer set is left alone."""
    lv, lp = lift
    out = dict(sets)
    for kind, base in (("velocity", lv), ("pressure", lp)):
        s = sets[kind]
        out[kind] = snapshot.SnapshotSet(
            s.kind, s.fields - base[None], s.parameters, s.extension_mode,
            s.transported, s.transport_reference, {**s.extra, "lifted": True},
        )
    return out


def compress_sets(case, sets, nmax, method="jacobi"):
    return {kind: pod.compress(s, nmax, case.mass, method=method) for kind, s in sets.items()}


@dataclass
class OnlineModel:
    """A trained reduced model ready for queries: bases plus optional lift."""

    bases: dict
    lift: tuple = None

    @property
    def available(self):
        return min(b.N for b in self.bases.values())


def _online(case, model, mu, nmax):
    problem = case.problem()
    if case.name == "darcy-ellipse":
        return rom.DarcyOnline(model.bases["scalar"].truncate(nmax), problem, case.mesh, mu, case.transport)
    b = model.bases
    spaces = pod.build_stokes_spaces(b["velocity"], b["supremizer"], b["pressure"], nmax)
    return rom.StokesOnline(spaces, problem, case.mesh, mu, case.transport, lift=model.lift)


def field_names(case):
    return ("scalar",) if case.name == "darcy-ellipse" else ("velocity", "pressure")


def _error_task(case, mu, payload):
    models, grid = payload
    active = case.classify(mu)
    hf = {k: fv.to_background() for k, fv in case.solve_hf(mu, active).items()}
    out = {}
    for label, model in models.items():
        nmax = min(max(grid), model.available)
        online = _online(case, model, mu, nmax)
        rows = []
        for N in grid:
            try:
                sol = online.solve(min(N, nmax))
            except SingularMatrixError as exc:
                # a basis without support on D(mu) reconstructs the zero field
                log.info("mu=%s, N=%d: %s; counting relative error 1", np.round(mu, 4).tolist(), N, exc)
                rows.append([1.0] * len(field_names(case)))
                continue
            if case.name == "darcy-ellipse":
                rows.append([rom.relative_error(hf["scalar"], sol.field, active)])
            else:
                rows.append([
                    rom.relative_error(hf["velocity"], sol.velocity, active),
                    rom.relative_error(hf["pressure"], sol.pressure, active),
                ])
        out[label] = np.array(rows)
    return out


def error_analysis(case, models, test_params, grid, workers=1):
    """Mean relative L2 errors ``{label: (len(grid), n_fields)}`` over the test set.

    Grid entries larger than a model's basis are evaluated with the whole basis.
    """
    results = _run(_error_task, list(test_params), case, workers, (models, list(grid)))
    return {label: np.mean([r[label] for r in results], axis=0) for label in models}


def train(case, variants, params, nmax, lifting=False, workers=1, method="jacobi"):
    """Snapshots, bases and online models for several variants sharing HF solves."""
    sets = collect_snapshots(case, params, variants, workers)
    lift = hf_lift(case) if lifting else None
    models, bases_out = {}, {}
    for v in variants:
        s = subtract_lift(sets[v], lift) if lift is not None else sets[v]
        bases = compress_sets(case, s, nmax, method)
        bases_out[v] = bases
        models[v.label] = OnlineModel(bases, lift)
    return sets, bases_out, models
