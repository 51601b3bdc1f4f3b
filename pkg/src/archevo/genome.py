"""Discrete search space for encoder-decoder segmentation architectures.

A genome is a fixed-length record of ten genes: three node-wiring genes
(i2, i3, i4), four node-operation genes (o1..o4), the encoder depth n_c,
the filter exponent n_f, and a learning-rate level.  The decoded network
is a U-shaped stack of 2*n_c + 1 cells, every cell containing the same
four-node block wired by (i2, i3, i4) and operated by (o1..o4).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

CONV2D = "CONV2D"
CONV3D = "CONV3D"
P3D = "P3D"
OPERATIONS = (CONV2D, CONV3D, P3D)

FIELD_NAMES = ("i2", "i3", "i4", "o1", "o2", "o3", "o4", "n_c", "n_f", "lr_level")

FIELD_DOMAINS: dict[str, tuple] = {
    "i2": (0, 1),
    "i3": (0, 1, 2),
    "i4": (0, 1, 2, 3),
    "o1": OPERATIONS,
    "o2": OPERATIONS,
    "o3": OPERATIONS,
    "o4": OPERATIONS,
    "n_c": (2, 3, 4),
    "n_f": (3, 4, 5),
    "lr_level": (1, 2, 3, 4, 5, 6, 7, 8, 9),
}

SPACE_SIZE = math.prod(len(FIELD_DOMAINS[name]) for name in FIELD_NAMES)


class InvalidGenomeError(ValueError):
    """A genome value fell outside its field's domain."""


class EmptyRestrictionError(ValueError):
    """A space restriction left some field with no admissible values."""


@dataclass(frozen=True)
class Genome:
    """One point of the search space.  Immutable and hashable."""

    i2: int
    i3: int
    i4: int
    o1: str
    o2: str
    o3: str
    o4: str
    n_c: int
    n_f: int
    lr_level: int

    @property
    def learning_rate(self) -> float:
        return self.lr_level * 1e-6

    def values(self) -> tuple:
        return tuple(getattr(self, name) for name in FIELD_NAMES)

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in FIELD_NAMES}

    @classmethod
    def from_dict(cls, data: Mapping) -> "Genome":
        try:
            genome = cls(**{name: data[name] for name in FIELD_NAMES})
        except (KeyError, TypeError) as exc:
            raise InvalidGenomeError(f"malformed genome record: {exc}") from exc
        if not validate(genome):
            raise InvalidGenomeError(f"genome out of domain: {dict(data)}")
        return genome


def validate(genome: Genome) -> bool:
    """True iff every gene lies in its domain (with the right type)."""
    for name in FIELD_NAMES:
        value = getattr(genome, name)
        domain = FIELD_DOMAINS[name]
        if isinstance(domain[0], int):
            if isinstance(value, bool) or not isinstance(value, int):
                return False
        elif not isinstance(value, str):
            return False
        if value not in domain:
            return False
    return True


@dataclass(frozen=True)
class NodeSpec:
    """One compute node inside a cell.

    source 0 is the cell input; source k >= 1 is the output of node k.
    Every node applies its convolution followed by instance norm and a
    fixed nonlinearity (parameter-free), and emits F channels where F is
    the cell's filter count.
    """

    source: int
    op: str


@dataclass(frozen=True)
class Architecture:
    """Decoded network structure: cell filter ladder plus the node block."""

    num_cells: int
    cell_filters: tuple[int, ...]
    nodes: tuple[NodeSpec, ...]


def decode(genome: Genome) -> Architecture:
    """Expand a genome into its macro structure.

    The network has n_c encoder cells, one bottleneck cell and n_c decoder
    cells.  Cell i (0-based) uses NF1 * 2**min(i, 2*n_c - i) filters with
    NF1 = 2**n_f, i.e. the ladder doubles down to the bottleneck and
    mirrors back up.  Node 1 always reads the cell input; node b reads the
    source selected by gene i_b.
    """
    if not validate(genome):
        raise InvalidGenomeError(f"genome out of domain: {genome!r}")
    n_c = genome.n_c
    nf1 = 2 ** genome.n_f
    num_cells = 2 * n_c + 1
    filters = tuple(nf1 * 2 ** min(i, 2 * n_c - i) for i in range(num_cells))
    nodes = (
        NodeSpec(0, genome.o1),
        NodeSpec(genome.i2, genome.o2),
        NodeSpec(genome.i3, genome.o3),
        NodeSpec(genome.i4, genome.o4),
    )
    return Architecture(num_cells, filters, nodes)


def longest_chain(arch: Architecture) -> int:
    """Length of the longest source-to-node chain inside one cell (1..4)."""
    depths = [0]  # depth of the cell input
    for node in arch.nodes:
        depths.append(depths[node.source] + 1)
    return max(depths[1:])


def _conv_params(op: str, c_in: int, c_out: int) -> int:
    if op == CONV2D:
        return 9 * c_in * c_out + c_out
    if op == CONV3D:
        return 27 * c_in * c_out + c_out
    if op == P3D:
        # 3x3x1 spatial conv into 1x1x3 temporal conv, mid channels = c_out,
        # both with bias.
        return (9 * c_in * c_out + c_out) + (3 * c_out * c_out + c_out)
    raise InvalidGenomeError(f"unknown operation {op!r}")


def count_params(arch: Architecture, num_classes: int, in_channels: int = 1) -> int:
    """Exact trainable-parameter count for a decoded architecture.

    Conventions (fixed; reimplementations must match them exactly):

    * Node convolutions: CONV2D is 3x3x1 (9*Cin*F + F params), CONV3D is
      3x3x3 (27*Cin*F + F), P3D is a 3x3x1 conv followed by a 1x1x3 conv
      with mid channels = F ((9*Cin*F + F) + (3*F*F + F)).
    * Every node adds an affine instance norm (2*F params).  Nonlinearities
      are parameter-free.
    * Node input channels: a node reading the cell input sees the cell's
      input channels; a node reading another node sees F channels.
    * Cell input channels: the first cell sees in_channels; the remaining
      encoder cells and the bottleneck see the previous cell's F (the
      downsampling between them is parameter-free pooling); every decoder
      cell sees its own F because the transpose conv ahead of it halves
      the channel count.
    * Decoder transpose convolutions: 2x2x2 kernels, 8*Cin*Cout + Cout
      params each, one per decoder step (n_c of them), halving channels.
    * Output head: a 1x1x1 conv from NF1 channels to num_classes, with
      bias.
    """
    filters = arch.cell_filters
    n_cells = arch.num_cells
    half = n_cells // 2
    total = 0
    for ci in range(n_cells):
        f = filters[ci]
        if ci == 0:
            cell_in = in_channels
        elif ci <= half:
            cell_in = filters[ci - 1]
        else:
            cell_in = f
        for node in arch.nodes:
            src_channels = cell_in if node.source == 0 else f
            total += _conv_params(node.op, src_channels, f)
            total += 2 * f
    for ci in range(half, n_cells - 1):
        total += 8 * filters[ci] * filters[ci + 1] + filters[ci + 1]
    total += filters[0] * num_classes + num_classes
    return total


def _restricted_domains(
    restriction: Mapping[str, Sequence] | None,
) -> list[tuple]:
    if restriction is None:
        return [FIELD_DOMAINS[name] for name in FIELD_NAMES]
    for key in restriction:
        if key not in FIELD_DOMAINS:
            raise EmptyRestrictionError(f"unknown field in restriction: {key!r}")
    domains = []
    for name in FIELD_NAMES:
        domain = FIELD_DOMAINS[name]
        if name in restriction:
            allowed = set(restriction[name])
            extra = allowed.difference(domain)
            if extra:
                raise EmptyRestrictionError(
                    f"restriction for {name!r} contains out-of-domain values: {sorted(map(str, extra))}"
                )
            domain = tuple(v for v in domain if v in allowed)
            if not domain:
                raise EmptyRestrictionError(f"restriction for {name!r} is empty")
        domains.append(domain)
    return domains


def space_size(restriction: Mapping[str, Sequence] | None = None) -> int:
    return math.prod(len(d) for d in _restricted_domains(restriction))


def enumerate_space(
    restriction: Mapping[str, Sequence] | None = None,
) -> Iterator[Genome]:
    """Yield every genome in canonical order (last field varies fastest)."""
    domains = _restricted_domains(restriction)
    for values in itertools.product(*domains):
        yield Genome(*values)
