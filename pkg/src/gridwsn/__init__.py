"""Grid wireless sensor network simulator.

Sensor nodes on a ``width x height`` grid exchange AES-192-CTR encrypted,
fixed-size frames with their four nearest neighbours, detect events with
a depth-2 sliding-window match, and report to a logging base station.
"""

from .base import BaseStation, EventRecord, RunSummary
from .config import SimConfig, build_config, derive_node_seed, load_config_file
from .crypto import (CipherConfig, SchedulingMode, TimingSample, block_encrypt,
                     counter_block, keystream_nonzero, xcrypt)
from .errors import (AnalysisError, ConfigurationError, DomainError, EncodingError,
                     ProtocolError, SimulationError, TransportClosed, WSNError)
from .sim import Simulation, run
from .topology import (GridConfig, GridPosition, NeighborSet, neighbor_count,
                       neighbors_of, position_of, validate_layout)

__version__ = "0.1.0"
