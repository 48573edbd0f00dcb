"""Run configuration and its ``key = value`` file format.

Example file::

    # reference run, virtual clock
    width = 4
    height = 5
    iterations = 100
    interval = 1
    max_random = 12
    packsize = 256
    sched = dynamic:4
    seed = 7
    clock = virtual
    backend = memory
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .clock import HOP_COST
from .crypto import DEFAULT_ROUNDS, CipherConfig, SchedulingMode
from .errors import ConfigurationError
from .topology import GridConfig
from .transport import TransportConfig
from .wire import ENCODED_SIZE, MessageKind, check_packsize, EncodingError

CLOCK_MODES = ("real", "virtual")


@dataclass(frozen=True)
class SimConfig:
    width: int = 4
    height: int = 5
    iterations: int = 100
    interval: float = 1.0
    max_random: int = 12
    packsize: int = 256
    sched: SchedulingMode = SchedulingMode.dynamic(4)
    seed: int = 0
    clock: str = "real"
    transport: TransportConfig = field(default_factory=TransportConfig)
    cipher: CipherConfig = field(default_factory=CipherConfig)
    out_dir: Path = Path("wsn_out")
    key_file: Path | None = None

    def __post_init__(self):
        GridConfig(self.width, self.height)
        if self.iterations < -1:
            raise ConfigurationError(f"iterations must be >= 0 or -1, got {self.iterations}")
        if self.interval < 0:
            raise ConfigurationError(f"interval must be >= 0, got {self.interval}")
        if self.max_random < 2:
            raise ConfigurationError(f"max_random must be >= 2, got {self.max_random}")
        if self.max_random > 2**32:
            raise ConfigurationError("max_random must fit an unsigned 32-bit value")
        try:
            check_packsize(self.packsize)
        except EncodingError as exc:
            raise ConfigurationError(str(exc)) from exc
        if self.packsize < ENCODED_SIZE[MessageKind.EVENT]:
            raise ConfigurationError(
                f"packsize {self.packsize} cannot hold an event frame "
                f"({ENCODED_SIZE[MessageKind.EVENT]} bytes)"
            )
        if self.clock not in CLOCK_MODES:
            raise ConfigurationError(f"clock must be one of {CLOCK_MODES}, got {self.clock!r}")
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError("seed must be an unsigned 64-bit integer")
        object.__setattr__(self, "out_dir", Path(self.out_dir))

    @property
    def grid(self) -> GridConfig:
        return GridConfig(self.width, self.height)

    @property
    def unbounded(self) -> bool:
        return self.iterations == -1

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)

    def to_items(self) -> dict[str, str]:
        """Flat view in config-file vocabulary."""
        return {
            "width": str(self.width),
            "height": str(self.height),
            "iterations": str(self.iterations),
            "interval": repr(self.interval),
            "max_random": str(self.max_random),
            "packsize": str(self.packsize),
            "sched": self.sched.label,
            "seed": str(self.seed),
            "clock": self.clock,
            "backend": self.transport.backend,
            "base_port": str(self.transport.base_port),
            "rounds": str(self.cipher.rounds),
            "out_dir": str(self.out_dir),
            "key_file": "" if self.key_file is None else str(self.key_file),
        }

    def write(self, path) -> None:
        lines = [f"{k} = {v}" for k, v in self.to_items().items()]
        lines.append(f"# hop_cost = {HOP_COST}")
        Path(path).write_text("\n".join(lines) + "\n")


KEYS = ("width", "height", "iterations", "interval", "max_random", "packsize", "sched",
        "seed", "clock", "backend", "base_port", "rounds", "out_dir", "key_file")


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    items: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep:
            raise ConfigurationError(f"{source}:{lineno}: expected 'key = value'")
        if key not in KEYS:
            raise ConfigurationError(f"{source}:{lineno}: unknown key {key!r}")
        items[key] = value.strip()
    return items


def load_config_file(path) -> dict[str, str]:
    path = Path(path)
    return parse_config_text(path.read_text(), str(path))


def build_config(items: Mapping[str, Any], base: SimConfig | None = None) -> SimConfig:
    """Apply string or typed overrides in ``items`` on top of ``base``."""
    base = base or SimConfig()
    cur = base.to_items()
    cur.update({k: str(v) for k, v in items.items() if v is not None})
    try:
        key_file = Path(cur["key_file"]) if cur["key_file"] else None
        rounds = int(cur["rounds"])
        if key_file is not None:
            cipher = CipherConfig.from_key_file(key_file, rounds)
        else:
            cipher = dataclasses.replace(base.cipher, rounds=rounds)
        return SimConfig(
            width=int(cur["width"]),
            height=int(cur["height"]),
            iterations=int(cur["iterations"]),
            interval=float(cur["interval"]),
            max_random=int(cur["max_random"]),
            packsize=int(cur["packsize"]),
            sched=SchedulingMode.parse(cur["sched"]),
            seed=int(cur["seed"]),
            clock=cur["clock"],
            transport=TransportConfig(cur["backend"], int(cur["base_port"])),
            cipher=cipher,
            out_dir=Path(cur["out_dir"]),
            key_file=key_file,
        )
    except ValueError as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"invalid configuration value: {exc}") from exc


def derive_node_seed(master_seed: int, rank: int) -> int:
    """Per-rank 64-bit seed, hashed from the master seed and the rank."""
    ss = np.random.SeedSequence([master_seed, rank])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


__all__ = ["SimConfig", "build_config", "load_config_file", "parse_config_text",
           "derive_node_seed", "DEFAULT_ROUNDS"]
