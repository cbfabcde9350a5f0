"""Run configuration: loading, validation, canonical hashing.

A config file is a flat, human-editable description of one experiment:
dimension, exponent, potential, the eps schedule, the window constants,
grid policy and tolerances.  JSON is the primary format; a TOML-style
``key = value`` file (with dotted keys for the nested tables) is accepted
as well so configs can be written without quoting ceremony.

Every numeric knob of the pipeline lives here; there is no hidden state
and no randomness anywhere, which is what makes byte-identical replay a
meaningful contract.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field

from .exceptions import ConfigError
from .potentials import PotentialSpec

_POTENTIAL_FAMILIES = ("zero", "sine", "cosine", "poly", "tabulated")


@dataclass(frozen=True)
class GridPolicy:
    """Step sizes and tail padding shared by all stages.

    h_reduce is the reduction/scan step, h_solve the full-solve step; the
    domain extends tail/lambda0 decay lengths past the outermost radius of
    interest so Dirichlet truncation sits far below the other error terms.
    """

    h_reduce: float = 0.02
    h_solve: float = 2e-3
    tail: float = 40.0


@dataclass(frozen=True)
class Tolerances:
    reduce_tol: float = 1e-10      # projected solve residual target
    solve_tol_coeff: float = 1e-10  # full Newton: tol = coeff * (1 + max|u|^p)
    alpha_factor: float = 1e-9      # |alpha(rho*)| <= factor * ||zdot||


@dataclass(frozen=True)
class RunConfig:
    n: int
    p: float
    potential: dict
    schedule: tuple
    C1: float
    C2: float
    t_bracket: tuple
    beta_floor: float = 0.05
    gamma: float = 2.0
    eta: float | None = None
    trunc_K: float | None = None
    rho_samples: int = 33
    grid: GridPolicy = field(default_factory=GridPolicy)
    tolerances: Tolerances = field(default_factory=Tolerances)
    outdir: str = "out"
    random_free: bool = True

    def spec(self) -> PotentialSpec:
        return build_potential(self.potential)

    def config_hash(self) -> str:
        """sha256 over the scientific payload; the output directory is
        excluded so relocated runs share a hash."""
        payload = asdict(self)
        payload.pop("outdir")
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def validate(self) -> None:
        if int(self.n) != self.n or self.n < 2:
            raise ConfigError("n: need an integer dimension >= 2")
        if not self.p > 1.0:
            raise ConfigError("p: need p > 1")
        sched = self.schedule
        if len(sched) == 0:
            raise ConfigError("schedule: empty")
        if any(e <= 0.0 for e in sched):
            raise ConfigError("schedule: entries must be positive")
        for a, b in zip(sched, sched[1:]):
            if b >= a:
                raise ConfigError("schedule: must decrease strictly")
            if b / a < 0.7:
                raise ConfigError(
                    f"schedule: step {a:g} -> {b:g} shrinks by more than 30%")
        if not (self.C1 > 0.0 and self.C2 > 0.0):
            raise ConfigError("C1/C2: must be positive")
        if not self.C1 < 4.0 * self.C2:
            raise ConfigError("C1/C2: configuration window [C1/(2e^3), 2 C2/e^3] is empty")
        lo, hi = self.t_bracket
        if not (0.0 < lo < hi):
            raise ConfigError("t_bracket: need 0 < lo < hi")
        for e in sched:
            w_lo, w_hi = self.C1 / (2.0 * e**3), 2.0 * self.C2 / e**3
            if max(w_lo, lo / e) >= min(w_hi, hi / e):
                raise ConfigError(
                    f"t_bracket: window empty at eps={e:g}; "
                    "widen C1/C2 or move the bracket")
        if not self.gamma > 0.0:
            raise ConfigError("gamma: must be positive")
        if not 0.0 < self.beta_floor < 1.0:
            raise ConfigError("beta_floor: must lie in (0, 1)")
        if self.eta is not None and not self.eta > 0.0:
            raise ConfigError("eta: must be positive when given")
        if self.trunc_K is not None and not self.trunc_K > 0.0:
            raise ConfigError("trunc_K: must be positive when given")
        if self.rho_samples < 8:
            raise ConfigError("rho_samples: need at least 8")
        g = self.grid
        if not (g.h_reduce > 0.0 and g.h_solve > 0.0 and g.tail > 0.0):
            raise ConfigError("grid: steps and tail must be positive")
        if g.h_solve > g.h_reduce:
            raise ConfigError("grid: h_solve must not exceed h_reduce")
        t = self.tolerances
        if not (t.reduce_tol > 0.0 and t.solve_tol_coeff > 0.0 and t.alpha_factor > 0.0):
            raise ConfigError("tolerances: must be positive")
        if self.random_free is not True:
            raise ConfigError("random_free: the pipeline is deterministic; "
                              "the flag documents it and must stay true")
        spec = self.spec()
        eps_max = float(sched[0])
        if 1.0 - eps_max**2 * spec.bound_V <= 0.0:
            raise ConfigError(
                f"potential: ellipticity floor 1 - eps^2 sup|V| vanishes at eps={eps_max:g}")


def build_potential(d: dict) -> PotentialSpec:
    if not isinstance(d, dict) or "family" not in d:
        raise ConfigError("potential: need a table with a 'family' key")
    fam = d["family"]
    extra = {k: v for k, v in d.items() if k != "family"}

    def take(allowed: tuple) -> dict:
        unknown = set(extra) - set(allowed)
        if unknown:
            raise ConfigError(
                f"potential: unknown key '{sorted(unknown)[0]}' for family '{fam}'")
        return extra

    if fam == "zero":
        take(())
        return PotentialSpec.zero()
    if fam in ("sine", "cosine"):
        kw = take(("amplitude", "frequency", "phase"))
        ctor = PotentialSpec.sine if fam == "sine" else PotentialSpec.cosine
        return ctor(**kw)
    if fam == "poly":
        kw = take(("coeffs",))
        if "coeffs" not in kw:
            raise ConfigError("potential: family 'poly' needs 'coeffs'")
        return PotentialSpec.bounded_poly(kw["coeffs"])
    if fam == "tabulated":
        kw = take(("r", "v"))
        if "r" not in kw or "v" not in kw:
            raise ConfigError("potential: family 'tabulated' needs 'r' and 'v'")
        return PotentialSpec.tabulated(kw["r"], kw["v"])
    raise ConfigError(
        f"potential: unknown family '{fam}' (choose from {', '.join(_POTENTIAL_FAMILIES)})")


_TOP_KEYS = ("n", "p", "potential", "schedule", "C1", "C2", "t_bracket",
             "beta_floor", "gamma", "eta", "trunc_K", "rho_samples",
             "grid", "tolerances", "outdir", "random_free")


def config_from_dict(data: dict) -> RunConfig:
    unknown = set(data) - set(_TOP_KEYS)
    if unknown:
        raise ConfigError(f"unknown field '{sorted(unknown)[0]}'")
    missing = [k for k in ("n", "p", "potential", "schedule", "C1", "C2", "t_bracket")
               if k not in data]
    if missing:
        raise ConfigError(f"missing field '{missing[0]}'")
    kw = dict(data)
    for name in ("p", "C1", "C2", "beta_floor", "gamma", "eta", "trunc_K"):
        if name in kw and kw[name] is not None:
            try:
                kw[name] = float(kw[name])
            except (TypeError, ValueError):
                raise ConfigError(f"{name}: must be a number") from None
    for name in ("n", "rho_samples"):
        if name in kw:
            if not isinstance(kw[name], int) or isinstance(kw[name], bool):
                raise ConfigError(f"{name}: must be an integer")
    for name, cls in (("grid", GridPolicy), ("tolerances", Tolerances)):
        if name in kw:
            sub = kw[name]
            if not isinstance(sub, dict):
                raise ConfigError(f"{name}: need a table")
            bad = set(sub) - {f for f in cls.__dataclass_fields__}
            if bad:
                raise ConfigError(f"{name}: unknown field '{sorted(bad)[0]}'")
            kw[name] = cls(**sub)
    for name in ("schedule", "t_bracket"):
        seq = kw[name]
        if not isinstance(seq, (list, tuple)):
            raise ConfigError(f"{name}: need a list")
        try:
            kw[name] = tuple(float(v) for v in seq)
        except (TypeError, ValueError):
            raise ConfigError(f"{name}: entries must be numbers") from None
    if len(kw["t_bracket"]) != 2:
        raise ConfigError("t_bracket: need exactly [lo, hi]")
    try:
        cfg = RunConfig(**kw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    cfg.validate()
    return cfg


def _parse_kv(text: str) -> dict:
    """TOML-style 'key = value' lines; values are JSON fragments, keys may
    be dotted to address the nested tables."""
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        try:
            value = json.loads(val)
        except json.JSONDecodeError:
            value = val.strip('"')  # bare string
        node = out
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"line {lineno}: '{part}' is not a table")
        node[parts[-1]] = value
    return out


def load_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    else:
        data = _parse_kv(text)
    if not isinstance(data, dict):
        raise ConfigError("config must be a table of key/value pairs")
    return config_from_dict(data)
