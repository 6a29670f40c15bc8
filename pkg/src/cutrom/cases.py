"""The two model problems: a Darcy problem in a moving ellipse and Stokes flow past a cylinder."""
from dataclasses import asdict, dataclass, fields, replace
import json
from typing import Optional

import numpy as np

from . import darcy, snapshot, stokes
from .errors import InvalidArgumentError
from .geometry import classify, cylinder_levelset, cylinder_transport, ellipse_levelset, ellipse_transport
from .mesh import build_structured_mesh, mass_matrix

CASES = ("darcy-ellipse", "stokes-cylinder")

CASE_DEFAULTS = {
    "darcy-ellipse": dict(h=0.05, train=400, test=30, nmax=140),
    "stokes-cylinder": dict(h=0.035, train=600, test=100, nmax=50),
}


@dataclass
class RunConfig:
    """Everything a CLI run depends on.  ``None`` fields take case defaults."""

    case: str = "darcy-ellipse"
    h: Optional[float] = None
    train: Optional[int] = None
    test: Optional[int] = None
    nmax: Optional[int] = None
    extension: str = "natural"
    transport: bool = False
    gamma_d: float = 10.0
    gamma_n: float = 0.0
    gamma_1: float = 0.1
    gamma_1u: float = 0.1
    gamma_1p: float = 0.1
    paper_faces: bool = False
    lifting: bool = False
    seed: int = 0
    workers: int = 1
    out: str = "out"

    def __post_init__(self):
        if self.case not in CASES:
            raise InvalidArgumentError(f"unknown case {self.case!r}; choose from {', '.join(CASES)}")
        for key, value in CASE_DEFAULTS[self.case].items():
            if getattr(self, key) is None:
                setattr(self, key, value)
        if self.extension not in snapshot.EXTENSION_MODES:
            raise InvalidArgumentError(f"unknown extension {self.extension!r}")
        if not self.h > 0:
            raise InvalidArgumentError(f"mesh size must be positive, got {self.h}")
        if not 1 <= self.nmax <= self.train:
            raise InvalidArgumentError(f"need 1 <= nmax <= train, got nmax={self.nmax}, train={self.train}")
        if self.test < 1 or self.workers < 1:
            raise InvalidArgumentError("test count and worker count must be positive")

    @classmethod
    def from_json(cls, path, **overrides):
        with open(path) as f:
            data = json.load(f)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidArgumentError(f"unknown config keys: {', '.join(sorted(unknown))}")
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)

    def to_dict(self):
        return asdict(self)

    def with_(self, **changes):
        return replace(self, **changes)


def make_case(config):
    return DarcyEllipseCase(config) if config.case == "darcy-ellipse" else StokesCylinderCase(config)


class DarcyEllipseCase:
    """Poisson problem with ``g = 20`` and ``g_D = 0.5 + xy`` inside a parametrized ellipse."""

    name = "darcy-ellipse"
    box = (-1.2, 1.2, -1.2, 1.2)
    kinds = ("scalar",)
    vector_kinds = ()

    def __init__(self, config):
        self.config = config
        self.mesh = build_structured_mesh(self.box, config.h)
        self.domain = ellipse_levelset(0.05)
        self.transport = ellipse_transport()
        self.mass = mass_matrix(self.mesh)

    @property
    def parameter_box(self):
        return self.domain.parameter_box

    def problem(self):
        c = self.config
        return darcy.DarcyProblem(
            self.domain, g=20.0, g_D=lambda p, mu: 0.5 + p[:, 0] * p[:, 1],
            gamma_D=c.gamma_d, gamma_N=c.gamma_n, gamma_1=c.gamma_1,
        )

    def classify(self, mu):
        return classify(self.mesh, self.domain, mu)

    def solve_hf(self, mu, active=None):
        active = self.classify(mu) if active is None else active
        return {"scalar": darcy.solve(self.problem(), active)}


class StokesCylinderCase:
    """Channel flow with a strong unit inlet past a cylinder at height ``mu``."""

    name = "stokes-cylinder"
    box = (-2.0, 2.0, -1.0, 1.0)
    kinds = ("velocity", "supremizer", "pressure")
    vector_kinds = ("velocity", "supremizer")

    def __init__(self, config):
        self.config = config
        self.mesh = build_structured_mesh(self.box, config.h, pattern="alternating", even=True)
        self.domain = cylinder_levelset()
        self.transport = cylinder_transport()
        self.mass = mass_matrix(self.mesh)

    @property
    def parameter_box(self):
        return self.domain.parameter_box

    def problem(self):
        c = self.config
        return stokes.StokesProblem(
            self.domain, gamma_D=c.gamma_d, gamma_1u=c.gamma_1u, gamma_1p=c.gamma_1p,
            paper_faces=c.paper_faces,
        )

    def classify(self, mu):
        return classify(self.mesh, self.domain, mu)

    def solve_hf(self, mu, active=None):
        active = self.classify(mu) if active is None else active
        problem = self.problem()
        sol = stokes.solve_stokes(problem, active)
        sup = stokes.solve_supremizer(
            sol.pressure, active, edges=problem.dirichlet_edges,
            gamma_D=problem.gamma_D, gamma_1=self.config.gamma_1,
        )
        return {"velocity": sol.velocity_field(), "supremizer": sup, "pressure": sol.pressure_field()}
