"""Tabletop blocks world: pick, place, stack, and check layouts.

Blocks are 0.1 m cubes (0.05 m half-extent) on a 2D table.  Support
relations form a forest: a block can rest on the table or on exactly one
other block, and cannot be picked while anything rests on it.  Layout goals
are expressed against a declared cell grid so scenario files, generated
programs, and the goal predicate all talk about the same coordinates.
"""

from __future__ import annotations

from ..errors import BadParams, Blocked, GripperEmpty, GripperFull, Overlap
from .base import World

HALF_EXTENT = 0.05
FOOTPRINT = 2 * HALF_EXTENT


class Block:
    __slots__ = ("name", "color", "x", "y", "on_top_of")

    def __init__(self, name: str, color: str, x: float, y: float):
        self.name = name
        self.color = color
        self.x = float(x)
        self.y = float(y)
        self.on_top_of: str | None = None

    def to_dict(self, held: bool) -> dict:
        return {
            "name": self.name,
            "color": self.color,
            "position": None if held else [self.x, self.y],
            "on_top_of": self.on_top_of or "",
        }


class BlocksWorld(World):
    kind = "blocks"

    def __init__(
        self,
        seed: int = 0,
        blocks: list[dict] | None = None,
        grid_origin: tuple[float, float] = (0.0, 0.0),
        cell_size: float = 0.12,
        target_layout: list[dict] | None = None,
    ):
        super().__init__(seed)
        if cell_size < FOOTPRINT:
            raise BadParams(f"cell size {cell_size} smaller than a block footprint {FOOTPRINT}")
        self.grid_origin = (float(grid_origin[0]), float(grid_origin[1]))
        self.cell_size = float(cell_size)
        self.target_layout = list(target_layout or [])
        self.holding: str | None = None
        self.blocks: dict[str, Block] = {}
        for spec in blocks or []:
            b = Block(spec["name"], spec.get("color", "plain"), spec["x"], spec["y"])
            if b.name in self.blocks:
                raise BadParams(f"duplicate block name {b.name!r}")
            self.blocks[b.name] = b
        self._check_no_overlap()

    # --- queries ---

    def _get(self, name: str) -> Block:
        if name not in self.blocks:
            raise BadParams(f"no block named {name!r}")
        return self.blocks[name]

    def _clear(self, name: str) -> bool:
        return all(b.on_top_of != name for b in self.blocks.values())

    def _level(self, block: Block) -> int:
        level = 0
        cur = block
        while cur.on_top_of is not None:
            cur = self.blocks[cur.on_top_of]
            level += 1
        return level

    def _check_no_overlap(self) -> None:
        placed = [b for b in self.blocks.values() if b.name != self.holding]
        for i, a in enumerate(placed):
            for b in placed[i + 1:]:
                if self._level(a) != self._level(b):
                    continue
                if abs(a.x - b.x) < FOOTPRINT - 1e-9 and abs(a.y - b.y) < FOOTPRINT - 1e-9:
                    raise Overlap(f"blocks {a.name!r} and {b.name!r} overlap")

    def cell_center(self, cell: tuple[int, int] | list[int]) -> tuple[float, float]:
        i, j = int(cell[0]), int(cell[1])
        return (
            self.grid_origin[0] + i * self.cell_size,
            self.grid_origin[1] + j * self.cell_size,
        )

    # --- manipulation ---

    def pick_up(self, name: str) -> None:
        block = self._get(name)
        if self.holding is not None:
            raise GripperFull(f"already holding {self.holding!r}")
        if not self._clear(name):
            raise Blocked(f"{name!r} has something on top")
        block.on_top_of = None
        self.holding = name
        self._notify()

    def place_on(self, name: str) -> None:
        target = self._get(name)
        if self.holding is None:
            raise GripperEmpty("nothing in the gripper")
        if name == self.holding:
            raise BadParams("cannot place a block onto itself")
        if not self._clear(name):
            raise Blocked(f"{name!r} already has something on top")
        held = self.blocks[self.holding]
        held.x, held.y = target.x, target.y
        held.on_top_of = name
        self.holding = None
        self._check_no_overlap()
        self._notify()

    def place_at(self, x: float, y: float) -> None:
        if self.holding is None:
            raise GripperEmpty("nothing in the gripper")
        for b in self.blocks.values():
            if b.name == self.holding:
                continue
            if abs(b.x - float(x)) < FOOTPRINT - 1e-9 and abs(b.y - float(y)) < FOOTPRINT - 1e-9:
                raise Overlap(f"spot ({x}, {y}) collides with {b.name!r}")
        held = self.blocks[self.holding]
        held.x, held.y = float(x), float(y)
        held.on_top_of = None
        self.holding = None
        self._notify()

    def gripper_state(self) -> str | None:
        return self.holding

    def list_blocks(self) -> list[dict]:
        return [b.to_dict(held=b.name == self.holding) for b in self.blocks.values()]

    def check_layout(self, target: list[dict] | None = None) -> bool:
        """True iff every named block sits at its target cell center."""
        layout = self.target_layout if target is None else target
        if not layout:
            return False
        for want in layout:
            block = self.blocks.get(want["name"])
            if block is None or block.name == self.holding:
                return False
            cx, cy = self.cell_center(want["cell"])
            if abs(block.x - cx) > 1e-6 or abs(block.y - cy) > 1e-6:
                return False
        return True

    def misplaced_count(self, target: list[dict] | None = None) -> int:
        layout = self.target_layout if target is None else target
        count = 0
        for want in layout:
            block = self.blocks.get(want["name"])
            cx, cy = self.cell_center(want["cell"])
            if (
                block is None
                or block.name == self.holding
                or abs(block.x - cx) > 1e-6
                or abs(block.y - cy) > 1e-6
            ):
                count += 1
        return count

    # --- session plumbing ---

    def api_effects(self) -> dict:
        return {
            "list_blocks": self.list_blocks,
            "pick_up": self.pick_up,
            "place_on": self.place_on,
            "place_at": self.place_at,
            "gripper_state": lambda: self.holding or "",
            "check_layout": lambda: self.check_layout(),
            "cell_position": lambda i, j: list(self.cell_center((int(i), int(j)))),
        }

    def snapshot(self) -> dict:
        return {
            "kind": self.kind,
            "blocks": self.list_blocks(),
            "holding": self.holding or "",
            "grid": {"origin": list(self.grid_origin), "cell_size": self.cell_size},
        }
