"""Construction of labeled evaluation streams.

Two sources: stitching separately captured benign/ransomware segments
into one timeline (with labels and a drift schedule), and fully
synthetic generators with planted, known structure — a Bernoulli change
stream for drift-detector tests and a Sysmon-shaped event stream whose
ransomware "families" plant family-specific token patterns in the
TargetObject/Task/CallTrace/ParentImage/IntegrityLevel fields.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import BadConfig, BadParameter, EmptySegment, MissingSegment
from .events import LABEL_BENIGN, LABEL_RANSOMWARE, SysmonEvent

_BASE_TIME = datetime(2024, 1, 1, tzinfo=timezone.utc)
_EVENT_GAP = timedelta(milliseconds=10)

SIGNAL_FIELDS = ("TargetObject", "Task", "CallTrace", "ParentImage", "IntegrityLevel")


# -- stitched streams -----------------------------------------------------------


@dataclass
class StitchEntry:
    tag: str
    label: int
    family: str | None = None
    start: int = 0
    length: int | None = None


@dataclass
class StitchSchedule:
    segments: list[StitchEntry]

    def declared_counts(self, segment_store: Mapping[str, Sequence[SysmonEvent]]) -> tuple[int, int]:
        benign = ransomware = 0
        for entry in self.segments:
            events = segment_store.get(entry.tag)
            n = len(events) - entry.start if entry.length is None else entry.length
            if entry.label == LABEL_RANSOMWARE:
                ransomware += n
            else:
                benign += n
        return benign, ransomware

    def declared_prevalence(self, segment_store) -> float:
        benign, ransomware = self.declared_counts(segment_store)
        total = benign + ransomware
        return ransomware / total if total else 0.0


def stitch(
    segment_store: Mapping[str, Sequence[SysmonEvent]],
    schedule: StitchSchedule,
) -> Iterator[SysmonEvent]:
    """Emit segments in schedule order on a fresh monotonic 10 ms timeline.

    Every emitted event carries the entry's label/family and its tag as
    source_host, so the output round-trips through the label manifest path.
    """
    index = 0
    for entry in schedule.segments:
        if entry.tag not in segment_store:
            raise MissingSegment(f"segment tag {entry.tag!r} not in the store")
        events = segment_store[entry.tag]
        stop = len(events) if entry.length is None else entry.start + entry.length
        window = events[entry.start : stop]
        if not window:
            raise EmptySegment(f"segment {entry.tag!r} selects no events")
        for event in window:
            yield replace(
                event,
                timestamp=_BASE_TIME + index * _EVENT_GAP,
                source_host=entry.tag,
                label=entry.label,
                family=entry.family,
            )
            index += 1


# -- Bernoulli drift stream ----------------------------------------------------------


@dataclass
class BernoulliDriftConfig:
    regimes: list[tuple[float, int]]  # (success probability, length)
    seed: int = 0


def synth_bernoulli_drift(cfg: BernoulliDriftConfig) -> tuple[np.ndarray, list[int]]:
    """i.i.d. Bernoulli values per regime plus the ground-truth changepoints."""
    if not cfg.regimes:
        raise BadParameter("at least one regime is required")
    for p, length in cfg.regimes:
        if not 0.0 <= p <= 1.0:
            raise BadParameter(f"Bernoulli parameter {p} outside [0, 1]")
        if length < 0:
            raise BadParameter(f"regime length {length} is negative")
    rng = np.random.default_rng(cfg.seed)
    parts = []
    changepoints = []
    offset = 0
    for i, (p, length) in enumerate(cfg.regimes):
        if i > 0:
            changepoints.append(offset)
        parts.append((rng.random(length) < p).astype(np.float64))
        offset += length
    return np.concatenate(parts) if parts else np.zeros(0), changepoints


# -- Sysmon-shaped synthetic stream ------------------------------------------------------


@dataclass
class SysmonLikeConfig:
    n_events: int
    prevalence: float = 0.105
    initial_family: str = "quicklock"
    changepoints: tuple[int, ...] = ()
    introduced_families: tuple[str, ...] = ()
    benign_profiles: int = 3
    seed: int = 42

    def validate(self) -> None:
        if self.n_events < 1:
            raise BadConfig("n_events must be >= 1")
        if not 0.0 <= self.prevalence <= 1.0:
            raise BadConfig(f"prevalence {self.prevalence} outside [0, 1]")
        if self.benign_profiles < 1:
            raise BadConfig("at least one benign profile is required")
        if not self.initial_family:
            raise BadConfig("an initial family is required")
        if len(self.changepoints) != len(self.introduced_families):
            raise BadConfig("changepoints and introduced_families must pair up")
        last = 0
        for cp in self.changepoints:
            if not 0 < cp < self.n_events:
                raise BadConfig(f"changepoint {cp} outside (0, {self.n_events})")
            if cp <= last:
                raise BadConfig("changepoints must be strictly increasing")
            last = cp


@dataclass
class GroundTruth:
    n_events: int
    changepoints: list[int]
    labels: list[int]
    family_segments: list[dict]
    prevalence_declared: float
    prevalence_realized: float
    seed: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "n_events": self.n_events,
                "changepoints": self.changepoints,
                "labels": self.labels,
                "family_segments": self.family_segments,
                "prevalence_declared": self.prevalence_declared,
                "prevalence_realized": self.prevalence_realized,
                "seed": self.seed,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "GroundTruth":
        return cls(**json.loads(text))


_BENIGN_APPS = [
    "onedrive", "chrome", "msedge", "teams", "outlook", "excel", "winword",
    "notepad", "explorer", "svchost", "searchindexer", "spoolsv", "mmc",
    "taskhostw", "powershell", "conhost", "runtimebroker", "dwm",
]
_SYSTEM_DLLS = [
    "ntdll.dll", "KERNEL32.dll", "KERNELBASE.dll", "user32.dll", "RPCRT4.dll",
    "combase.dll", "shell32.dll", "advapi32.dll", "sechost.dll", "msvcrt.dll",
    "win32u.dll", "gdi32full.dll", "ws2_32.dll", "crypt32.dll",
]
_REG_HIVES = ["HKLM\\SOFTWARE", "HKU\\S-1-5-21-77\\Software", "HKLM\\SYSTEM\\CurrentControlSet"]
_TASK_GROUPS = [
    "\\Microsoft\\Windows\\Defrag", "\\Microsoft\\Windows\\UpdateOrchestrator",
    "\\Microsoft\\Windows\\Diagnosis", "\\Microsoft\\Office", "\\Adobe\\Acrobat",
]
_USERS = ["NT AUTHORITY\\SYSTEM", "NT AUTHORITY\\LOCAL SERVICE", "LAB\\alice", "LAB\\bob", "LAB\\csvc"]
_HOSTS = ["ws01", "ws02", "ws03", "ws04", "ws05"]
_BENIGN_EVENT_IDS = [1, 3, 5, 7, 10, 11, 13, 22]
_RANSOM_EVENT_IDS = [1, 11, 12, 13, 23, 25]


def _call_trace(rng: np.random.Generator, extra: str | None = None) -> str:
    count = int(rng.integers(3, 6))
    picks = [str(_SYSTEM_DLLS[int(rng.integers(len(_SYSTEM_DLLS)))]) for _ in range(count)]
    if extra is not None:
        picks.insert(int(rng.integers(len(picks))), extra)
    return "|".join(f"C:\\Windows\\System32\\{name}+{int(rng.integers(0x1000, 0xfffff)):x}" for name in picks)


def _benign_pools(rng: np.random.Generator, profiles: int) -> dict[str, list[str]]:
    apps = _BENIGN_APPS[: max(6, min(len(_BENIGN_APPS), 6 * profiles))]
    images = [f"C:\\Program Files\\{a.capitalize()}\\{a}.exe" for a in apps] + [
        f"C:\\Windows\\System32\\{a}.exe" for a in apps[:8]
    ]
    return {
        "TargetObject": [
            f"{_REG_HIVES[int(rng.integers(len(_REG_HIVES)))]}\\{a.capitalize()}\\{key}"
            for a in apps
            for key in ("Run", "Settings\\Telemetry", "Update\\Channel")
        ],
        "Task": [
            f"{grp}\\{a.capitalize()}{suffix}"
            for grp in _TASK_GROUPS
            for a, suffix in zip(apps, ("Maintenance", "Refresh", "Scan", "Sync", "Report", "Backup"))
        ],
        "CallTrace": [_call_trace(rng) for _ in range(60)],
        "ParentImage": images,
        "IntegrityLevel": ["Medium", "Medium", "Medium", "Medium", "Medium", "High", "High", "System", "System", "Low"],
        "Image": images,
        "CommandLine": [
            f'"{img}" {flag}' for img in images for flag in ("/background", "-embedding", "--type=utility", "")
        ],
        "User": _USERS,
        "DestinationPort": ["443", "80", "53", "8080", "135", "5985"],
        "Protocol": ["tcp", "tcp", "tcp", "udp"],
        "RuleName": ["-", "-", "-", "technique_id=T1036", "technique_id=T1059"],
        "ParentCommandLine": [f'"{img}"' for img in images],
        "Hashes": [f"SHA256={int(rng.integers(1 << 62)):016x}{int(rng.integers(1 << 62)):016x}" for _ in range(40)],
    }


def _family_pools(rng: np.random.Generator, family: str, benign: dict[str, list[str]]) -> dict[str, list[str]]:
    loader_dir = "C:\\Users\\alice\\AppData\\Local\\Temp"
    parents = [f"{loader_dir}\\{family}{kind}.exe" for kind in ("loader", "payload", "dropper", "svc")]
    return {
        "TargetObject": [
            f"HKLM\\SOFTWARE\\{family}\\{key}"
            for key in ("EncryptionKey", "Campaign\\Id", "Recover\\Note", "Sweep\\State", "PeerList")
        ]
        + [f"HKU\\S-1-5-21-77\\Software\\{family}\\{key}" for key in ("Session", "Staging")],
        "Task": [f"\\{family}updater\\{name}" for name in ("ShadowWipe", "EncryptSweep", "NoteDrop", "Beacon")],
        "CallTrace": [_call_trace(rng, extra=f"{family}crypt.dll") for _ in range(12)]
        + [_call_trace(rng, extra=f"{family}lib.dll") for _ in range(8)],
        "ParentImage": parents,
        "IntegrityLevel": ["High", "High", "High", "System", "System", "System", "System", "Medium"],
        "CommandLine": [f'"{p}" -enc {family}' for p in parents] + list(benign["CommandLine"][:10]),
    }


def synth_sysmon_like(cfg: SysmonLikeConfig) -> tuple[Iterator[SysmonEvent], GroundTruth]:
    """Labelled Sysmon-shaped stream with planted family signatures.

    Ransomware prevalence is allocated exactly per family regime (rounded
    per segment), and each regime's positives carry that family's tokens
    in the five signal fields; all other fields draw from the shared
    benign pools. Deterministic given the config.
    """
    cfg.validate()
    plan_seq, event_seq = np.random.SeedSequence(cfg.seed).spawn(2)
    plan_rng = np.random.default_rng(plan_seq)

    boundaries = [0, *cfg.changepoints, cfg.n_events]
    families = [cfg.initial_family, *cfg.introduced_families]
    labels = np.zeros(cfg.n_events, dtype=np.int64)
    family_of_regime: list[tuple[int, int, str]] = []
    for i, fam in enumerate(families):
        start, stop = boundaries[i], boundaries[i + 1]
        family_of_regime.append((start, stop, fam))
        n_pos = int(round(cfg.prevalence * (stop - start)))
        if n_pos > 0:
            positions = plan_rng.choice(stop - start, size=n_pos, replace=False)
            labels[start + positions] = 1

    realized = float(labels.mean()) if cfg.n_events else 0.0
    truth = GroundTruth(
        n_events=cfg.n_events,
        changepoints=list(cfg.changepoints),
        labels=labels.tolist(),
        family_segments=[
            {"start": start, "stop": stop, "family": fam} for start, stop, fam in family_of_regime
        ],
        prevalence_declared=cfg.prevalence,
        prevalence_realized=realized,
        seed=cfg.seed,
    )

    def generate() -> Iterator[SysmonEvent]:
        rng = np.random.default_rng(event_seq)
        benign = _benign_pools(rng, cfg.benign_profiles)
        by_family = {fam: _family_pools(rng, fam, benign) for fam in dict.fromkeys(families)}
        core_fields = [f for f in benign if f not in ("ParentCommandLine", "Hashes")]
        regime = 0
        for i in range(cfg.n_events):
            while i >= family_of_regime[regime][1]:
                regime += 1
            fam = family_of_regime[regime][2]
            is_ransom = labels[i] == 1
            family_pools = by_family[fam]
            fields: dict[str, str] = {}
            for name in core_fields:
                # family pools override the signal fields (and CommandLine)
                # on ransomware events; everything else stays benign-shaped
                pool = family_pools[name] if is_ransom and name in family_pools else benign[name]
                fields[name] = pool[int(rng.integers(len(pool)))]
            # sparse noise fields exercise the absent-field-is-zero path
            if rng.random() < 0.2:
                fields["ParentCommandLine"] = benign["ParentCommandLine"][
                    int(rng.integers(len(benign["ParentCommandLine"])))
                ]
            if rng.random() < 0.3:
                fields["Hashes"] = benign["Hashes"][int(rng.integers(len(benign["Hashes"])))]
            ids = _RANSOM_EVENT_IDS if is_ransom else _BENIGN_EVENT_IDS
            yield SysmonEvent(
                event_id=ids[int(rng.integers(len(ids)))],
                timestamp=_BASE_TIME + i * _EVENT_GAP,
                fields=fields,
                source_host=_HOSTS[int(rng.integers(len(_HOSTS)))],
                label=int(labels[i]),
                family=fam if is_ransom else None,
            )

    return generate(), truth
