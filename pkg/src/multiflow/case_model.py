"""Network data model, case-file parsing and bus admittance assembly.

Two input formats map onto the same :class:`Network`:

* a Matpower-style ``.m`` file (``mpc.baseMVA``, ``mpc.bus``, ``mpc.gen``,
  ``mpc.branch``; columns in Matpower order), and
* a JSON document with keys ``baseMVA``, ``bus``, ``gen`` and ``branch``
  holding the same numeric tables.

All quantities are stored in per-unit on ``base_mva``; branch phase shifts
are stored in radians.
"""
from __future__ import annotations

import dataclasses
import enum
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import CaseIOError, ModelError, ParseError

DEFAULT_R_FLOOR = 1e-4

# Matpower column positions (0-based) for the supported subset.
BUS_I, BUS_TYPE, PD, QD, GS, BS, VM = 0, 1, 2, 3, 4, 5, 7
GEN_BUS, PG, QG, VG, GEN_STATUS = 0, 1, 2, 5, 7
F_BUS, T_BUS, BR_R, BR_X, BR_B, TAP, SHIFT, BR_STATUS = 0, 1, 2, 3, 4, 8, 9, 10

_MIN_COLS = {"bus": 8, "gen": 8, "branch": 11}


class BusKind(str, enum.Enum):
    PQ = "PQ"
    PV = "PV"
    SLACK = "Slack"


@dataclass(frozen=True)
class Bus:
    id: int
    kind: BusKind
    p_load: float = 0.0
    q_load: float = 0.0
    p_gen: float = 0.0
    v_magnitude_setpoint: float = 1.0
    shunt_g: float = 0.0
    shunt_b: float = 0.0
    q_gen: float = 0.0  # only meaningful on PQ buses carrying a fixed-Q machine

    @property
    def p_injection(self) -> float:
        return self.p_gen - self.p_load

    @property
    def q_injection(self) -> float:
        return self.q_gen - self.q_load


@dataclass(frozen=True)
class Branch:
    from_bus: int
    to_bus: int
    r: float
    x: float
    b_charging: float = 0.0
    tap_ratio: float = 1.0
    phase_shift: float = 0.0


@dataclass(frozen=True)
class Network:
    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...]
    base_mva: float = 100.0
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "buses", tuple(self.buses))
        object.__setattr__(self, "branches", tuple(self.branches))

    @property
    def n_bus(self) -> int:
        return len(self.buses)

    @property
    def n_gen(self) -> int:
        """Number of PV buses."""
        return sum(b.kind is BusKind.PV for b in self.buses)

    @property
    def slack(self) -> int:
        """0-based position of the slack bus."""
        return next(i for i, b in enumerate(self.buses) if b.kind is BusKind.SLACK)

    def validate(self) -> "Network":
        n = self.n_bus
        if n == 0:
            raise ModelError("network has no buses")
        if [b.id for b in self.buses] != list(range(1, n + 1)):
            raise ModelError("bus indices must be contiguous 1..N_bus")
        n_slack = sum(b.kind is BusKind.SLACK for b in self.buses)
        if n_slack != 1:
            raise ModelError(f"network must have exactly one slack bus, found {n_slack}")
        for b in self.buses:
            if b.kind is not BusKind.PQ and not b.v_magnitude_setpoint > 0:
                raise ModelError(f"bus {b.id}: voltage setpoint must be positive")
        for k, br in enumerate(self.branches, 1):
            if br.from_bus == br.to_bus:
                raise ModelError(f"branch {k}: from_bus equals to_bus")
            if not (1 <= br.from_bus <= n and 1 <= br.to_bus <= n):
                raise ModelError(f"branch {k}: unknown terminal bus")
            if br.r == 0 and br.x == 0:
                raise ModelError(f"branch {k}: zero impedance (r = x = 0)")
        if n > 1:
            rows = [br.from_bus - 1 for br in self.branches]
            cols = [br.to_bus - 1 for br in self.branches]
            adj = sp.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
            n_comp, _ = connected_components(adj, directed=False)
            if n_comp != 1:
                raise ModelError(f"network graph is disconnected ({n_comp} islands)")
        return self


@dataclass(frozen=True)
class AdmittanceMatrix:
    g: sp.csr_matrix
    b: sp.csr_matrix

    @property
    def y(self) -> sp.csr_matrix:
        return (self.g + 1j * self.b).tocsr()


# --------------------------------------------------------------------------
# parsing

_ASSIGN = re.compile(r"mpc\.(\w+)\s*=\s*")


def _strip_comment(line: str) -> str:
    # '%' never appears inside numeric tables; strings are only version tags
    return line.split("%", 1)[0]


def _parse_number(tok: str, lineno: int) -> float:
    try:
        return float(tok)
    except ValueError:
        if tok.lower() in ("inf", "+inf"):
            return math.inf
        if tok.lower() == "-inf":
            return -math.inf
        raise ParseError(f"malformed numeric field {tok!r}", lineno) from None


def _parse_matpower_tables(text: str) -> tuple[float, dict[str, list[tuple[int, list[float]]]]]:
    lines = text.splitlines()
    base_mva = None
    tables: dict[str, list[tuple[int, list[float]]]] = {}
    i = 0
    while i < len(lines):
        line = _strip_comment(lines[i])
        m = _ASSIGN.search(line)
        if not m:
            i += 1
            continue
        key, rest = m.group(1), line[m.end():]
        if key == "baseMVA":
            val = rest.strip().rstrip(";").strip()
            base_mva = _parse_number(val, i + 1)
            i += 1
            continue
        if key not in _MIN_COLS or not rest.lstrip().startswith("["):
            i += 1
            continue
        # collect rows until the closing bracket
        body = rest.lstrip()[1:]
        rows = []
        lineno = i + 1
        while True:
            closed = "]" in body
            chunk = body.split("]", 1)[0]
            for rec in chunk.split(";"):
                toks = rec.replace(",", " ").split()
                if toks:
                    rows.append((lineno, [_parse_number(t, lineno) for t in toks]))
            if closed:
                break
            i += 1
            if i >= len(lines):
                raise ParseError(f"unterminated table mpc.{key}", lineno)
            lineno = i + 1
            body = _strip_comment(lines[i])
        tables[key] = rows
        i += 1
    if base_mva is None:
        raise ParseError("missing mpc.baseMVA")
    return base_mva, tables


def _network_from_tables(base_mva, tables, name="") -> Network:
    for key in ("bus", "gen", "branch"):
        if key not in tables:
            raise ParseError(f"missing mpc.{key} table")
        for lineno, row in tables[key]:
            if len(row) < _MIN_COLS[key]:
                raise ParseError(
                    f"mpc.{key} row has {len(row)} columns, expected at least {_MIN_COLS[key]}",
                    lineno)
    if base_mva <= 0:
        raise ModelError("baseMVA must be positive")

    bus_rows = tables["bus"]
    ext_ids = [int(row[BUS_I]) for _, row in bus_rows]
    if len(set(ext_ids)) != len(ext_ids):
        raise ModelError("duplicate bus numbers")
    order = sorted(range(len(ext_ids)), key=lambda k: ext_ids[k])
    index = {ext_ids[k]: pos + 1 for pos, k in enumerate(order)}

    pg = {}
    qg = {}
    vg = {}
    for lineno, row in tables["gen"]:
        if row[GEN_STATUS] <= 0:
            continue
        ext = int(row[GEN_BUS])
        if ext not in index:
            raise ParseError(f"generator at unknown bus {ext}", lineno)
        pg[ext] = pg.get(ext, 0.0) + row[PG]
        qg[ext] = qg.get(ext, 0.0) + row[QG]
        vg.setdefault(ext, row[VG])

    buses = []
    for k in order:
        lineno, row = bus_rows[k]
        ext = ext_ids[k]
        code = int(row[BUS_TYPE])
        if code == 3:
            kind = BusKind.SLACK
        elif code == 2:
            kind = BusKind.PV if ext in vg else BusKind.PQ
        elif code == 1:
            kind = BusKind.PQ
        else:
            raise ModelError(f"bus {ext}: unsupported bus type {code}")
        vset = vg.get(ext, row[VM]) if kind is not BusKind.PQ else 1.0
        buses.append(Bus(
            id=index[ext], kind=kind,
            p_load=row[PD] / base_mva, q_load=row[QD] / base_mva,
            p_gen=pg.get(ext, 0.0) / base_mva,
            q_gen=qg.get(ext, 0.0) / base_mva if kind is BusKind.PQ else 0.0,
            v_magnitude_setpoint=vset,
            shunt_g=row[GS] / base_mva, shunt_b=row[BS] / base_mva,
        ))

    branches = []
    for lineno, row in tables["branch"]:
        if row[BR_STATUS] <= 0:
            continue
        f, t = int(row[F_BUS]), int(row[T_BUS])
        if f not in index or t not in index:
            raise ParseError(f"branch references unknown bus ({f}, {t})", lineno)
        tap = row[TAP] if row[TAP] != 0 else 1.0
        branches.append(Branch(index[f], index[t], row[BR_R], row[BR_X], row[BR_B],
                               tap, math.radians(row[SHIFT])))
    return Network(buses, branches, base_mva, name).validate()


def parse_case(text: str, name: str = "") -> Network:
    """Parse a Matpower-style case (or its JSON equivalent) into a Network."""
    if text.lstrip().startswith("{"):
        return parse_case_json(text, name)
    base_mva, tables = _parse_matpower_tables(text)
    return _network_from_tables(base_mva, tables, name)


def parse_case_json(text: str, name: str = "") -> Network:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno) from None
    if "baseMVA" not in doc:
        raise ParseError("missing baseMVA")
    tables = {}
    for key in ("bus", "gen", "branch"):
        if key not in doc:
            raise ParseError(f"missing {key} table")
        try:
            tables[key] = [(None, [float(v) for v in row]) for row in doc[key]]
        except (TypeError, ValueError):
            raise ParseError(f"non-numeric entry in {key} table") from None
    return _network_from_tables(float(doc["baseMVA"]), tables, doc.get("name", name))


def load_case(path) -> Network:
    """Read a case from ``path``; bare names resolve to bundled cases."""
    p = Path(path)
    if not p.exists():
        bundled = bundled_case_path(str(path))
        if bundled is None:
            raise CaseIOError(f"case file not found: {path}")
        p = bundled
    try:
        text = p.read_text()
    except OSError as exc:
        raise CaseIOError(f"cannot read {p}: {exc}") from exc
    return parse_case(text, name=p.stem)


DATA_DIR = Path(__file__).parent / "data"


def bundled_case_path(name: str) -> Path | None:
    stem = Path(name).stem
    for ext in (".m", ".json"):
        p = DATA_DIR / (stem + ext)
        if p.exists():
            return p
    return None


def bundled_cases() -> list[str]:
    return sorted(p.stem for p in DATA_DIR.glob("case*.m"))


def _tables_from_network(net: Network):
    mva = net.base_mva
    bus, gen, branch = [], [], []
    for b in net.buses:
        code = {BusKind.PQ: 1, BusKind.PV: 2, BusKind.SLACK: 3}[b.kind]
        vm = b.v_magnitude_setpoint if b.kind is not BusKind.PQ else 1.0
        bus.append([b.id, code, b.p_load * mva, b.q_load * mva, b.shunt_g * mva,
                    b.shunt_b * mva, 1, vm, 0])
        if b.kind is not BusKind.PQ or b.p_gen != 0 or b.q_gen != 0:
            gen.append([b.id, b.p_gen * mva, b.q_gen * mva, 0, 0, vm, mva, 1])
    for br in net.branches:
        branch.append([br.from_bus, br.to_bus, br.r, br.x, br.b_charging, 0, 0, 0,
                       br.tap_ratio, math.degrees(br.phase_shift), 1])
    return bus, gen, branch


def serialize_case(net: Network) -> str:
    """Write ``net`` in the Matpower subset understood by :func:`parse_case`."""
    bus, gen, branch = _tables_from_network(net)

    def table(rows):
        return "\n".join("\t" + "\t".join(repr(float(v)) for v in row) + ";" for row in rows)

    return (
        f"function mpc = {net.name or 'case'}\n"
        "mpc.version = '2';\n"
        f"mpc.baseMVA = {net.base_mva!r};\n"
        "%\tbus_i\ttype\tPd\tQd\tGs\tBs\tarea\tVm\tVa\n"
        f"mpc.bus = [\n{table(bus)}\n];\n"
        "%\tbus\tPg\tQg\tQmax\tQmin\tVg\tmBase\tstatus\n"
        f"mpc.gen = [\n{table(gen)}\n];\n"
        "%\tfbus\ttbus\tr\tx\tb\trateA\trateB\trateC\tratio\tangle\tstatus\n"
        f"mpc.branch = [\n{table(branch)}\n];\n"
    )


def serialize_case_json(net: Network) -> str:
    bus, gen, branch = _tables_from_network(net)
    return json.dumps({"name": net.name, "baseMVA": net.base_mva,
                       "bus": bus, "gen": gen, "branch": branch}, indent=1)


# --------------------------------------------------------------------------
# preprocessing and admittance assembly

def regularize_lossless(net: Network, r_floor: float = DEFAULT_R_FLOOR) -> Network:
    """Give every lossless branch (r == 0) the resistance ``r_floor``."""
    if r_floor < 0:
        raise ValueError("r_floor must be non-negative")
    if r_floor == 0:
        return net
    branches = [dataclasses.replace(br, r=r_floor) if br.r == 0 else br for br in net.branches]
    return dataclasses.replace(net, branches=tuple(branches))


def build_admittance(net: Network) -> AdmittanceMatrix:
    """Assemble Y = G + jB with the standard pi branch model.

    Off-nominal taps and phase shifters follow the usual convention of a
    tap on the from side: Y_ff = (y + jb/2)/|t|^2, Y_ft = -y/conj(t),
    Y_tf = -y/t, Y_tt = y + jb/2.
    """
    n = net.n_bus
    rows, cols, vals = [], [], []
    for k, br in enumerate(net.branches, 1):
        z = complex(br.r, br.x)
        if z == 0:
            raise ModelError(f"branch {k}: singular branch (r = x = 0)")
        ys = 1.0 / z
        tap = br.tap_ratio * np.exp(1j * br.phase_shift)
        ytt = ys + 0.5j * br.b_charging
        f, t = br.from_bus - 1, br.to_bus - 1
        rows += [f, f, t, t]
        cols += [f, t, f, t]
        vals += [ytt / (tap * tap.conjugate()), -ys / tap.conjugate(), -ys / tap, ytt]
    for i, b in enumerate(net.buses):
        if b.shunt_g or b.shunt_b:
            rows.append(i)
            cols.append(i)
            vals.append(complex(b.shunt_g, b.shunt_b))
    y = sp.coo_matrix((np.asarray(vals, dtype=complex), (rows, cols)), shape=(n, n)).tocsr()
    y.sum_duplicates()
    return AdmittanceMatrix(sp.csr_matrix(y.real), sp.csr_matrix(y.imag))
