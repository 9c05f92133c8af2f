"""Run configuration: YAML on disk, validated dataclasses in memory."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import yaml

from .eigensolver import DEFAULT_DROP_TOL
from .errors import ConfigError, FreePlateError
from .geometry import Ball, DomainSpec, PlateParams, Rectangle


def domain_from_dict(d: Dict[str, Any], where: str = "domain") -> DomainSpec:
    if not isinstance(d, dict):
        raise ConfigError(where, "expected a mapping")
    kind = d.get("kind")
    try:
        if kind == "ball":
            extra = set(d) - {"kind", "radius", "n"}
            if extra:
                raise ConfigError(where, f"unknown keys {sorted(extra)}")
            return Ball(float(d.get("radius", 1.0)), int(d.get("n", 2)))
        if kind == "rectangle":
            extra = set(d) - {"kind", "sides"}
            if extra:
                raise ConfigError(where, f"unknown keys {sorted(extra)}")
            if "sides" not in d:
                raise ConfigError(f"{where}.sides", "required for rectangles")
            return Rectangle(tuple(float(a) for a in d["sides"]))
    except ConfigError:
        raise
    except (FreePlateError, TypeError, ValueError) as exc:
        raise ConfigError(where, str(exc)) from None
    raise ConfigError(f"{where}.kind", f"must be 'ball' or 'rectangle', got {kind!r}")


def domain_to_dict(domain: DomainSpec) -> Dict[str, Any]:
    if isinstance(domain, Ball):
        return {"kind": "ball", "radius": domain.radius, "n": domain.n}
    return {"kind": "rectangle", "sides": list(domain.sides)}


@dataclass(frozen=True)
class Grids:
    tau: Tuple[float, ...] = ()
    sigma: Tuple[float, ...] = ()
    p: Tuple[int, ...] = ()
    m: Tuple[int, ...] = ()

    def empty(self) -> bool:
        return not (self.tau or self.sigma or self.p or self.m)


@dataclass(frozen=True)
class RunConfig:
    domain: DomainSpec
    tau: float
    sigma: float
    p: int = 12
    k: int = 10
    m_max: int = 8
    drop_tol: float = DEFAULT_DROP_TOL
    retest_p: Optional[int] = None
    out: str = "out"
    workers: int = 1
    grids: Grids = field(default_factory=Grids)
    compare: Tuple[DomainSpec, ...] = ()
    compare_p: int = 14
    compare_retest_p: Optional[int] = None
    dump_matrices: bool = False
    plot_data: bool = False

    @property
    def n(self) -> int:
        return self.domain.n

    @property
    def params(self) -> PlateParams:
        return PlateParams(self.n, self.tau, self.sigma)

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "domain": domain_to_dict(self.domain),
            "params": {"tau": self.tau, "sigma": self.sigma},
            "basis_degree": self.p,
            "k": self.k,
            "m_max": self.m_max,
            "drop_tol": self.drop_tol,
            "retest_p": self.retest_p,
            "output": {"dir": self.out, "workers": self.workers},
            "sweep": {
                "tau": list(self.grids.tau),
                "sigma": list(self.grids.sigma),
                "p": list(self.grids.p),
                "m": list(self.grids.m),
            },
            "compare": {
                "domains": [domain_to_dict(d) for d in self.compare],
                "p": self.compare_p,
                "retest_p": self.compare_retest_p,
            },
            "flags": {"dump_matrices": self.dump_matrices, "plot_data": self.plot_data},
        }


_TOP_KEYS = {"domain", "params", "basis_degree", "k", "m_max", "drop_tol", "retest_p",
             "output", "sweep", "compare", "flags"}


def _num(value, where, kind=float):
    if isinstance(value, bool):
        raise ConfigError(where, f"expected a number, got {value!r}")
    try:
        out = kind(value)
    except (TypeError, ValueError):
        raise ConfigError(where, f"expected a number, got {value!r}") from None
    if kind is int and out != value:
        raise ConfigError(where, f"expected an integer, got {value!r}")
    return out


def _list(raw, where, kind):
    if raw is None:
        return ()
    if not isinstance(raw, (list, tuple)):
        raise ConfigError(where, "expected a list")
    return tuple(_num(v, f"{where}[{i}]", kind) for i, v in enumerate(raw))


def config_from_dict(raw: Dict[str, Any]) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a mapping")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError("<root>", f"unknown keys {sorted(unknown)}")
    if "domain" not in raw:
        raise ConfigError("domain", "required")
    domain = domain_from_dict(raw["domain"])
    params = raw.get("params") or {}
    unknown = set(params) - {"tau", "sigma", "n"}
    if unknown:
        raise ConfigError("params", f"unknown keys {sorted(unknown)}")
    if "n" in params and _num(params["n"], "params.n", int) != domain.n:
        raise ConfigError("params.n", f"{params['n']} does not match the domain dimension {domain.n}")
    tau = _num(params.get("tau", 0.0), "params.tau")
    sigma = _num(params.get("sigma", 0.0), "params.sigma")
    try:
        PlateParams(domain.n, tau, sigma)
    except FreePlateError as exc:
        field_name = "params.tau" if "tau" in str(exc) else "params.sigma"
        raise ConfigError(field_name, str(exc)) from None

    p = _num(raw.get("basis_degree", 12), "basis_degree", int)
    if p < 2:
        raise ConfigError("basis_degree", "must be >= 2")
    k = _num(raw.get("k", 10), "k", int)
    if k < 1:
        raise ConfigError("k", "must be >= 1")
    m_max = _num(raw.get("m_max", 8), "m_max", int)
    if m_max < 1:
        raise ConfigError("m_max", "must be >= 1")
    drop_tol = _num(raw.get("drop_tol", DEFAULT_DROP_TOL), "drop_tol")
    if not 0 < drop_tol < 1:
        raise ConfigError("drop_tol", "must lie in (0, 1)")
    retest_p = raw.get("retest_p")
    if retest_p is not None:
        retest_p = _num(retest_p, "retest_p", int)
        if retest_p <= p:
            raise ConfigError("retest_p", "must exceed basis_degree")

    output = raw.get("output") or {}
    out = str(output.get("dir", "out"))
    workers = _num(output.get("workers", 1), "output.workers", int)
    if workers < 1:
        raise ConfigError("output.workers", "must be >= 1")

    sweep = raw.get("sweep") or {}
    unknown = set(sweep) - {"tau", "sigma", "p", "m"}
    if unknown:
        raise ConfigError("sweep", f"unknown keys {sorted(unknown)}")
    grids = Grids(
        tau=_list(sweep.get("tau"), "sweep.tau", float),
        sigma=_list(sweep.get("sigma"), "sweep.sigma", float),
        p=_list(sweep.get("p"), "sweep.p", int),
        m=_list(sweep.get("m"), "sweep.m", int),
    )
    for i, t in enumerate(grids.tau):
        if t < 0:
            raise ConfigError(f"sweep.tau[{i}]", "tension must be >= 0")
    lo = -1.0 / (domain.n - 1)
    for i, s in enumerate(grids.sigma):
        if not lo < s < 1:
            raise ConfigError(f"sweep.sigma[{i}]", f"must lie in ({lo:.6g}, 1)")
    for i, q in enumerate(grids.p):
        if q < 2:
            raise ConfigError(f"sweep.p[{i}]", "must be >= 2")
    for i, m in enumerate(grids.m):
        if m < 0:
            raise ConfigError(f"sweep.m[{i}]", "must be >= 0")

    compare = raw.get("compare") or {}
    cdomains = tuple(
        domain_from_dict(d, f"compare.domains[{i}]") for i, d in enumerate(compare.get("domains") or [])
    )
    unknown = set(compare) - {"domains", "p", "retest_p"}
    if unknown:
        raise ConfigError("compare", f"unknown keys {sorted(unknown)}")
    compare_p = _num(compare.get("p", 14), "compare.p", int)
    if compare_p < 2:
        raise ConfigError("compare.p", "must be >= 2")
    compare_retest_p = compare.get("retest_p")
    if compare_retest_p is not None:
        compare_retest_p = _num(compare_retest_p, "compare.retest_p", int)
        if compare_retest_p <= compare_p:
            raise ConfigError("compare.retest_p", "must exceed compare.p")
    for i, d in enumerate(cdomains):
        if d.n != domain.n:
            raise ConfigError(f"compare.domains[{i}]", f"dimension {d.n} differs from domain dimension {domain.n}")

    flags = raw.get("flags") or {}
    unknown = set(flags) - {"dump_matrices", "plot_data"}
    if unknown:
        raise ConfigError("flags", f"unknown keys {sorted(unknown)}")
    for key in ("dump_matrices", "plot_data"):
        if not isinstance(flags.get(key, False), bool):
            raise ConfigError(f"flags.{key}", "expected true or false")
    return RunConfig(
        domain=domain, tau=tau, sigma=sigma, p=p, k=k, m_max=m_max, drop_tol=drop_tol,
        retest_p=retest_p, out=out, workers=workers, grids=grids, compare=cdomains,
        compare_p=compare_p, compare_retest_p=compare_retest_p, dump_matrices=bool(flags.get("dump_matrices", False)),
        plot_data=bool(flags.get("plot_data", False)),
    )


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc}") from None
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("--config", f"invalid YAML: {exc}") from None
    return config_from_dict(raw)


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)
