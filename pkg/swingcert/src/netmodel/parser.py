"""
Case readers and the canonical native JSON writer.

Native JSON is the interchange format; MATPOWER ``.m`` text is import-only and
limited to ``mpc.baseMVA``, ``mpc.bus``, ``mpc.gen`` and ``mpc.branch``.
Machine dynamics for MATPOWER cases come from a JSON sidecar.
"""
import json
import logging
import math
import re
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from pydantic import ValidationError

from swingcert.schema.case import (
    BranchRecord,
    BusRecord,
    BusType,
    CaseFormat,
    GeneratorDynamics,
    NetworkCase,
)
from swingcert.src.core.errors import (
    CaseFormatError,
    CaseSyntaxError,
    DanglingReferenceError,
    DuplicateBusError,
    MissingDynamicsError,
)

logger = logging.getLogger(__name__)

# Column positions of the MATPOWER tables (0-based)
BUS_I, BUS_TYPE, PD, QD, GS, BS, VM, VA, BASE_KV = 0, 1, 2, 3, 4, 5, 7, 8, 9
GEN_BUS, PG, VG, GEN_STATUS = 0, 1, 5, 7
F_BUS, T_BUS, BR_R, BR_X, BR_B, TAP, SHIFT, BR_STATUS = 0, 1, 2, 3, 4, 8, 9, 10

# Widths of the standard case tables; anything wider is ignored with a warning
STANDARD_WIDTH = {"bus": 13, "gen": 21, "branch": 13}
MIN_WIDTH = {"bus": 9, "gen": 2, "branch": 4}

MATPOWER_BUS_TYPES = {1: BusType.PQ, 2: BusType.PV, 3: BusType.SLACK}
ISOLATED = 4

_ASSIGNMENT = re.compile(r"^\s*mpc\.(\w+)\s*=\s*")
_TOKEN = re.compile(r"[^\s,;]+")


# --- Native JSON ---

def parse_native_json(source: str, name: str = "case") -> NetworkCase:
    try:
        doc = json.loads(source)
    except json.JSONDecodeError as e:
        raise CaseSyntaxError(f"Invalid JSON: {e.msg}", e.lineno, e.colno) from e

    if not isinstance(doc, dict):
        raise CaseFormatError("Case document must be a JSON object")
    doc.setdefault("name", name)

    try:
        return NetworkCase.model_validate(doc)
    except ValidationError as e:
        raise CaseFormatError(f"Case document does not match the schema: {e}") from e


def emit_case(case: NetworkCase) -> str:
    """
    Canonical native JSON: sorted keys, two-space indent, trailing newline.
    """
    doc = case.model_dump(mode="json", exclude_none=True)
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


# --- MATPOWER subset ---

def _strip_comment(line: str) -> str:
    cut = line.find("%")
    return line if cut < 0 else line[:cut]


def _read_tables(source: str) -> Tuple[Dict[str, float], Dict[str, List[List[Tuple[str, int, int]]]]]:
    """
    Returns scalar assignments and tables of raw tokens tagged with (line, column).
    """
    lines = source.splitlines()
    scalars: Dict[str, float] = {}
    tables: Dict[str, List[List[Tuple[str, int, int]]]] = {}

    k = 0
    while k < len(lines):
        text = _strip_comment(lines[k])
        match = _ASSIGNMENT.match(text)
        if not match:
            k += 1
            continue

        key = match.group(1)
        rest = text[match.end():]
        offset = match.end()
        stripped = rest.lstrip()

        if stripped.startswith("[") or stripped.startswith("{"):
            opener = stripped[0]
            closer = "]" if opener == "[" else "}"
            start_line = k + 1
            offset += len(rest) - len(stripped) + 1
            segment = stripped[1:]
            rows: List[List[Tuple[str, int, int]]] = []
            closed = False
            while True:
                end = segment.find(closer)
                body = segment if end < 0 else segment[:end]
                if opener == "[":
                    position = 0
                    for chunk in body.split(";"):
                        row = [(m.group(0), k + 1, offset + position + m.start() + 1) for m in _TOKEN.finditer(chunk)]
                        if row:
                            rows.append(row)
                        position += len(chunk) + 1
                if end >= 0:
                    closed = True
                    break
                k += 1
                if k >= len(lines):
                    break
                segment = _strip_comment(lines[k])
                offset = 0
            if not closed:
                raise CaseSyntaxError(f"Unterminated table mpc.{key} opened on line {start_line}", len(lines), 1)
            if opener == "[":
                tables[key] = rows
        else:
            token = stripped.rstrip().rstrip(";").strip()
            try:
                scalars[key] = float(token)
            except ValueError:
                if key == "baseMVA":
                    raise CaseSyntaxError(f"Invalid number {token!r} for mpc.baseMVA", k + 1, offset + 1)
                logger.debug("[Parser] Skipping non-numeric mpc.%s", key)
        k += 1

    return scalars, tables


def _numeric_table(key: str, rows) -> List[List[float]]:
    values = []
    for row in rows:
        parsed = []
        for token, line, column in row:
            try:
                parsed.append(float(token))
            except ValueError:
                raise CaseSyntaxError(f"Invalid number {token!r} in mpc.{key}", line, column)
        if len(parsed) < MIN_WIDTH[key]:
            _, line, column = row[0]
            raise CaseSyntaxError(
                f"mpc.{key} row has {len(parsed)} columns, expected at least {MIN_WIDTH[key]}", line, column
            )
        values.append(parsed)

    width = max((len(r) for r in values), default=0)
    if width > STANDARD_WIDTH[key]:
        logger.warning("[Parser] Ignoring %d unknown column(s) in mpc.%s", width - STANDARD_WIDTH[key], key)
    return values


def _column(row: List[float], k: int, default: float) -> float:
    return row[k] if len(row) > k else default


def parse_matpower(source: str, dynamics: Optional[dict] = None, name: str = "case") -> NetworkCase:
    scalars, tables = _read_tables(source)

    if "baseMVA" not in scalars:
        raise CaseFormatError("mpc.baseMVA is missing")
    for key in ("bus", "gen", "branch"):
        if key not in tables:
            raise CaseFormatError(f"mpc.{key} is missing")

    base_mva = scalars["baseMVA"]
    if base_mva <= 0.0:
        raise CaseFormatError(f"mpc.baseMVA must be positive, got {base_mva}")

    bus_rows = _numeric_table("bus", tables["bus"])
    gen_rows = _numeric_table("gen", tables["gen"])
    branch_rows = _numeric_table("branch", tables["branch"])

    isolated = set()
    buses: List[BusRecord] = []
    for row in bus_rows:
        label, code = int(row[BUS_I]), int(row[BUS_TYPE])
        if code == ISOLATED:
            isolated.add(label)
            logger.warning("[Parser] Bus %d is isolated and was dropped", label)
            continue
        if code not in MATPOWER_BUS_TYPES:
            raise CaseFormatError(f"Bus {label} has unknown type {code}")
        buses.append(BusRecord(
            id=label,
            bus_type=MATPOWER_BUS_TYPES[code],
            p_load=row[PD] / base_mva,
            q_load=row[QD] / base_mva,
            g_shunt=row[GS] / base_mva,
            b_shunt=row[BS] / base_mva,
            v_mag=row[VM] if row[VM] > 0.0 else 1.0,
            v_ang=math.radians(row[VA]),
            base_kv=_column(row, BASE_KV, 0.0),
        ))

    # One machine per bus: in-service units at the same bus are lumped
    dispatch: Dict[int, float] = {}
    setpoint: Dict[int, float] = {}
    for row in gen_rows:
        label = int(row[GEN_BUS])
        if _column(row, GEN_STATUS, 1.0) <= 0.0 or label in isolated:
            continue
        if label in dispatch:
            logger.info("[Parser] Lumping several generators at bus %d", label)
        dispatch[label] = dispatch.get(label, 0.0) + row[PG] / base_mva
        if len(row) > VG and row[VG] > 0.0:
            setpoint[label] = row[VG]

    for k, bus in enumerate(buses):
        if bus.id in setpoint and bus.bus_type != BusType.PQ:
            buses[k] = bus.model_copy(update={"v_mag": setpoint[bus.id]})

    branches: List[BranchRecord] = []
    for row in branch_rows:
        f, t = int(row[F_BUS]), int(row[T_BUS])
        if f in isolated or t in isolated:
            continue
        tap = _column(row, TAP, 0.0)
        if _column(row, SHIFT, 0.0) != 0.0:
            logger.warning("[Parser] Phase shift on branch %d-%d ignored", f, t)
        try:
            branches.append(BranchRecord(
                from_bus=f,
                to_bus=t,
                r=row[BR_R],
                x=row[BR_X],
                b_shunt=_column(row, BR_B, 0.0),
                tap=tap if tap > 0.0 else 1.0,
                status=_column(row, BR_STATUS, 1.0) > 0.0,
            ))
        except ValidationError as e:
            raise CaseFormatError(f"Invalid branch {f}-{t}: {e}") from e

    dynamics = dynamics or {}
    by_bus = {int(entry["bus"]): entry for entry in dynamics.get("generators", [])}
    generators = []
    for label, p in dispatch.items():
        entry = by_bus.get(label, {})
        try:
            generators.append(GeneratorDynamics(
                bus=label,
                inertia_m=entry.get("inertia_m"),
                damping_d=entry.get("damping_d"),
                xd_prime=entry.get("xd_prime"),
                p_mech=p,
            ))
        except ValidationError as e:
            raise CaseFormatError(f"Invalid dynamics for bus {label}: {e}") from e

    return NetworkCase(
        name=name,
        base_mva=base_mva,
        omega_s=dynamics.get("omega_s"),
        buses=buses,
        branches=branches,
        generators=generators,
    )


# --- Cross references ---

def check_references(case: NetworkCase, require_dynamics: bool = False) -> None:
    if case.reduced is not None and not case.buses:
        return

    seen = set()
    for bus in case.buses:
        if bus.id in seen:
            raise DuplicateBusError(f"Duplicate bus id {bus.id}", bus=bus.id)
        seen.add(bus.id)

    slack = [bus.id for bus in case.buses if bus.bus_type == BusType.SLACK]
    if len(slack) != 1:
        raise CaseFormatError(f"Expected exactly one slack bus, found {len(slack)}")

    for br in case.branches:
        for label in (br.from_bus, br.to_bus):
            if label not in seen:
                raise DanglingReferenceError(
                    f"Branch {br.from_bus}-{br.to_bus} references unknown bus {label}", bus=label
                )

    machine_buses = set()
    for gen in case.generators:
        if gen.bus not in seen:
            raise DanglingReferenceError(f"Generator references unknown bus {gen.bus}", bus=gen.bus)
        if gen.bus in machine_buses:
            raise CaseFormatError(f"More than one generator at bus {gen.bus}")
        machine_buses.add(gen.bus)
        if require_dynamics and not gen.has_dynamics:
            raise MissingDynamicsError(f"Generator at bus {gen.bus} has no dynamics block", bus=gen.bus)

    if case.solution is not None and len(case.solution.v_mag) != len(case.buses):
        raise CaseFormatError("solution must list one voltage per bus")


def parse_case(
    source: str,
    format: Union[CaseFormat, str] = CaseFormat.NATIVE_JSON,
    dynamics: Optional[str] = None,
    name: str = "case",
    require_dynamics: bool = False,
) -> NetworkCase:
    """
    Parses a case and resolves its cross references; powers end up per-unit on base_mva.

    Args:
        source: Case text.
        format: matpower_subset or native_json.
        dynamics: JSON sidecar text with machine data (MATPOWER only).
        require_dynamics: Fail when a generator lacks M, D or x'_d.
    """
    format = CaseFormat(format)
    if format == CaseFormat.NATIVE_JSON:
        case = parse_native_json(source, name=name)
    else:
        sidecar = None
        if dynamics is not None:
            try:
                sidecar = json.loads(dynamics)
            except json.JSONDecodeError as e:
                raise CaseSyntaxError(f"Invalid dynamics JSON: {e.msg}", e.lineno, e.colno) from e
        case = parse_matpower(source, dynamics=sidecar, name=name)

    check_references(case, require_dynamics=require_dynamics)
    logger.info(
        "[Parser] %s: %d buses, %d branches, %d generators",
        case.name, len(case.buses), len(case.branches), len(case.generators),
    )
    return case


def normalize(source: str, format: Union[CaseFormat, str] = CaseFormat.NATIVE_JSON, dynamics: Optional[str] = None) -> str:
    return emit_case(parse_case(source, format, dynamics=dynamics))


def load_case(path: Union[str, Path], dynamics_path: Optional[Union[str, Path]] = None, require_dynamics: bool = False) -> NetworkCase:
    path = Path(path)
    format = CaseFormat.MATPOWER_SUBSET if path.suffix.lower() == ".m" else CaseFormat.NATIVE_JSON
    dynamics = None
    if dynamics_path is not None:
        dynamics = Path(dynamics_path).read_text(encoding="utf-8")
    elif format == CaseFormat.MATPOWER_SUBSET:
        sidecar = path.with_name(f"{path.stem}_dynamics.json")
        if sidecar.exists():
            dynamics = sidecar.read_text(encoding="utf-8")
    return parse_case(
        path.read_text(encoding="utf-8"),
        format,
        dynamics=dynamics,
        name=path.stem,
        require_dynamics=require_dynamics,
    )
