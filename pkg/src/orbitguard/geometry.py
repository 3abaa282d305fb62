"""Axis-aligned boxes in space and space-time, and a dynamic AABB tree.

Internally a 4D box is a flat 8-tuple ``(x0, y0, z0, t0, x1, y1, z1, t1)``;
:class:`Box3` and :class:`Box4` are the public value types and convert to
that layout via :meth:`Box4.bounds`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Iterator, Sequence, Union

from .interval import Interval

Bounds = tuple[float, float, float, float, float, float, float, float]
ObjectId = Hashable


class DuplicateObject(KeyError):
    pass


class UnknownObject(KeyError):
    pass


@dataclass(frozen=True, slots=True)
class Box3:
    min: tuple[float, float, float]
    max: tuple[float, float, float]

    def __post_init__(self) -> None:
        for k in range(3):
            if not self.min[k] <= self.max[k]:
                raise ValueError(f"invalid box: min={self.min} max={self.max}")

    @classmethod
    def cube(cls, center: Sequence[float], r: float) -> Box3:
        x, y, z = center
        return cls((x - r, y - r, z - r), (x + r, y + r, z + r))

    def intersects(self, other: Box3) -> bool:
        a0, a1, b0, b1 = self.min, self.max, other.min, other.max
        return (a0[0] <= b1[0] and b0[0] <= a1[0] and a0[1] <= b1[1]
                and b0[1] <= a1[1] and a0[2] <= b1[2] and b0[2] <= a1[2])

    def contains(self, other: Box3) -> bool:
        return all(self.min[k] <= other.min[k] and other.max[k] <= self.max[k] for k in range(3))

    def inflate(self, r: float) -> Box3:
        return Box3(tuple(v - r for v in self.min), tuple(v + r for v in self.max))

    def volume(self) -> float:
        return math.prod(self.max[k] - self.min[k] for k in range(3))


@dataclass(frozen=True, slots=True)
class Box4:
    space: Box3
    time: Interval

    @classmethod
    def from_bounds(cls, b: Sequence[float]) -> Box4:
        return cls(Box3((b[0], b[1], b[2]), (b[4], b[5], b[6])), Interval(b[3], b[7]))

    @property
    def bounds(self) -> Bounds:
        s, t = self.space, self.time
        return (s.min[0], s.min[1], s.min[2], t.lo, s.max[0], s.max[1], s.max[2], t.hi)

    def intersects(self, other: Box4) -> bool:
        return self.time.overlaps(other.time) and self.space.intersects(other.space)

    def contains(self, other: Box4) -> bool:
        return self.time.contains(other.time) and self.space.contains(other.space)


BoxLike = Union[Box4, Sequence[float]]


def _as_bounds(box: BoxLike) -> Bounds:
    if isinstance(box, Box4):
        return box.bounds
    b = tuple(float(v) for v in box)
    if len(b) != 8:
        raise ValueError("4D bounds need 8 values")
    for k in range(4):
        if not b[k] <= b[k + 4]:
            raise ValueError(f"invalid 4D bounds {b}")
    return b  # type: ignore[return-value]


def overlaps(a: Bounds, b: Bounds) -> bool:
    """Closed overlap: touching faces count."""
    return (a[0] <= b[4] and b[0] <= a[4] and a[1] <= b[5] and b[1] <= a[5]
            and a[2] <= b[6] and b[2] <= a[6] and a[3] <= b[7] and b[3] <= a[7])


def encloses(a: Bounds, b: Bounds) -> bool:
    return (a[0] <= b[0] and a[1] <= b[1] and a[2] <= b[2] and a[3] <= b[3]
            and b[4] <= a[4] and b[5] <= a[5] and b[6] <= a[6] and b[7] <= a[7])


def union(a: Bounds, b: Bounds) -> Bounds:
    return (
        a[0] if a[0] < b[0] else b[0],
        a[1] if a[1] < b[1] else b[1],
        a[2] if a[2] < b[2] else b[2],
        a[3] if a[3] < b[3] else b[3],
        a[4] if a[4] > b[4] else b[4],
        a[5] if a[5] > b[5] else b[5],
        a[6] if a[6] > b[6] else b[6],
        a[7] if a[7] > b[7] else b[7],
    )


class AabbTree4d:
    """Dynamic bounding volume hierarchy over 4D boxes.

    Insertion picks the sibling that minimises the growth of a 4D surface
    measure (sum of pairwise extent products, with the time extent scaled by
    ``time_weight``), then walks back to the root refitting bounds and
    applying AVL-style rotations to keep the tree height logarithmic.

    Queries are exact on the stored boxes: they return every object whose box
    overlaps the query box, closed on all faces.
    """

    def __init__(self, time_weight: float = 1.0) -> None:
        self.time_weight = time_weight
        # struct-of-lists node storage; freed slots are recycled
        self._box: list[Bounds | None] = []
        self._parent: list[int] = []
        self._left: list[int] = []
        self._right: list[int] = []
        self._height: list[int] = []
        self._obj: list[ObjectId | None] = []
        self._free: list[int] = []
        self._root = -1
        self._leaf: dict[ObjectId, int] = {}

    # -- bookkeeping -------------------------------------------------------

    def __len__(self) -> int:
        return len(self._leaf)

    def __contains__(self, obj: ObjectId) -> bool:
        return obj in self._leaf

    def __iter__(self) -> Iterator[ObjectId]:
        return iter(self._leaf)

    def box_of(self, obj: ObjectId) -> Bounds:
        try:
            return self._box[self._leaf[obj]]  # type: ignore[return-value]
        except KeyError:
            raise UnknownObject(obj) from None

    @property
    def height(self) -> int:
        return self._height[self._root] if self._root >= 0 else -1

    def _alloc(self, box: Bounds, obj: ObjectId | None) -> int:
        if self._free:
            i = self._free.pop()
            self._box[i] = box
            self._parent[i] = -1
            self._left[i] = -1
            self._right[i] = -1
            self._height[i] = 0
            self._obj[i] = obj
            return i
        self._box.append(box)
        self._parent.append(-1)
        self._left.append(-1)
        self._right.append(-1)
        self._height.append(0)
        self._obj.append(obj)
        return len(self._box) - 1

    def _release(self, i: int) -> None:
        self._box[i] = None
        self._obj[i] = None
        self._free.append(i)

    def _cost(self, b: Bounds) -> float:
        ex = b[4] - b[0]
        ey = b[5] - b[1]
        ez = b[6] - b[2]
        et = (b[7] - b[3]) * self.time_weight
        return ex * ey + ex * ez + ey * ez + et * (ex + ey + ez)

    # -- public operations -------------------------------------------------

    def insert(self, obj: ObjectId, box: BoxLike) -> None:
        if obj in self._leaf:
            raise DuplicateObject(obj)
        b = _as_bounds(box)
        leaf = self._alloc(b, obj)
        self._leaf[obj] = leaf
        self._insert_leaf(leaf)

    def remove(self, obj: ObjectId) -> None:
        leaf = self._leaf.pop(obj, None)
        if leaf is None:
            raise UnknownObject(obj)
        self._remove_leaf(leaf)
        self._release(leaf)

    def update(self, obj: ObjectId, box: BoxLike) -> None:
        leaf = self._leaf.get(obj)
        if leaf is None:
            raise UnknownObject(obj)
        b = _as_bounds(box)
        old = self._box[leaf]
        if encloses(old, b):  # type: ignore[arg-type]
            # shrinking in place keeps the topology valid; just tighten ancestors
            self._box[leaf] = b
            self._refit(self._parent[leaf])
            return
        self._remove_leaf(leaf)
        self._box[leaf] = b
        self._insert_leaf(leaf)

    def query(self, box: BoxLike) -> list[ObjectId]:
        if self._root < 0:
            return []
        q = _as_bounds(box)
        return self._query(q)

    def _query(self, q: Bounds) -> list[ObjectId]:
        out = []
        if self._root < 0:
            return out
        boxes, left, right, objs = self._box, self._left, self._right, self._obj
        q0, q1, q2, q3, q4, q5, q6, q7 = q
        stack = [self._root]
        pop, push = stack.pop, stack.append
        while stack:
            i = pop()
            b = boxes[i]
            if (b[0] <= q4 and q0 <= b[4] and b[1] <= q5 and q1 <= b[5]
                    and b[2] <= q6 and q2 <= b[6] and b[3] <= q7 and q3 <= b[7]):
                l = left[i]
                if l < 0:
                    out.append(objs[i])
                else:
                    push(l)
                    push(right[i])
        return out

    # -- internals ---------------------------------------------------------

    def _insert_leaf(self, leaf: int) -> None:
        if self._root < 0:
            self._root = leaf
            self._parent[leaf] = -1
            return
        boxes, left, right = self._box, self._left, self._right
        cost = self._cost
        lb = boxes[leaf]

        # descend towards the cheapest sibling
        i = self._root
        while left[i] >= 0:
            ib = boxes[i]
            area = cost(ib)
            combined = cost(union(ib, lb))
            here = 2.0 * combined
            inherit = 2.0 * (combined - area)

            c1 = left[i]
            u1 = cost(union(lb, boxes[c1]))
            cost1 = u1 + inherit if left[c1] < 0 else u1 - cost(boxes[c1]) + inherit
            c2 = right[i]
            u2 = cost(union(lb, boxes[c2]))
            cost2 = u2 + inherit if left[c2] < 0 else u2 - cost(boxes[c2]) + inherit

            if here < cost1 and here < cost2:
                break
            i = c1 if cost1 < cost2 else c2

        sibling = i
        old_parent = self._parent[sibling]
        parent = self._alloc(union(lb, boxes[sibling]), None)
        self._parent[parent] = old_parent
        self._height[parent] = self._height[sibling] + 1
        left[parent] = sibling
        right[parent] = leaf
        self._parent[sibling] = parent
        self._parent[leaf] = parent
        if old_parent < 0:
            self._root = parent
        elif left[old_parent] == sibling:
            left[old_parent] = parent
        else:
            right[old_parent] = parent

        self._refit(self._parent[leaf])

    def _remove_leaf(self, leaf: int) -> None:
        if leaf == self._root:
            self._root = -1
            return
        parent = self._parent[leaf]
        grand = self._parent[parent]
        sibling = self._right[parent] if self._left[parent] == leaf else self._left[parent]
        if grand < 0:
            self._root = sibling
            self._parent[sibling] = -1
        else:
            if self._left[grand] == parent:
                self._left[grand] = sibling
            else:
                self._right[grand] = sibling
            self._parent[sibling] = grand
            self._refit(grand)
        self._release(parent)
        self._parent[leaf] = -1

    def _refit(self, i: int) -> None:
        boxes, left, right, height, parent = self._box, self._left, self._right, self._height, self._parent
        while i >= 0:
            i = self._balance(i)
            l, r = left[i], right[i]
            boxes[i] = union(boxes[l], boxes[r])
            hl, hr = height[l], height[r]
            height[i] = 1 + (hl if hl > hr else hr)
            i = parent[i]

    def _balance(self, a: int) -> int:
        """Rotate around ``a`` if its subtrees differ in height by more than one.

        Returns the index of the node now occupying ``a``'s position.
        """
        left, right, height, parent, boxes = self._left, self._right, self._height, self._parent, self._box
        if left[a] < 0 or height[a] < 2:
            return a
        b, c = left[a], right[a]
        balance = height[c] - height[b]
        if balance > 1:
            return self._rotate_up(a, c, b)
        if balance < -1:
            return self._rotate_up(a, b, c)
        return a

    def _rotate_up(self, a: int, c: int, b: int) -> int:
        """Promote the taller child ``c`` of ``a`` (``b`` is the other child)."""
        left, right, height, parent, boxes = self._left, self._right, self._height, self._parent, self._box
        f, g = left[c], right[c]

        # c takes a's place
        pa = parent[a]
        parent[c] = pa
        parent[a] = c
        if pa < 0:
            self._root = c
        elif left[pa] == a:
            left[pa] = c
        else:
            right[pa] = c

        # the taller grandchild stays under c, the shorter moves under a
        if height[f] > height[g]:
            keep, move = f, g
        else:
            keep, move = g, f
        left[c] = a
        right[c] = keep
        if left[a] == c:
            left[a] = move
        else:
            right[a] = move
        parent[move] = a

        boxes[a] = union(boxes[b], boxes[move])
        boxes[c] = union(boxes[a], boxes[keep])
        height[a] = 1 + max(height[b], height[move])
        height[c] = 1 + max(height[a], height[keep])
        return c

    # -- diagnostics -------------------------------------------------------

    def check_invariants(self) -> None:
        """Raise AssertionError if containment, parent links or leaf map are broken."""
        if self._root < 0:
            assert not self._leaf
            return
        assert self._parent[self._root] == -1
        seen = {}
        stack = [self._root]
        while stack:
            i = stack.pop()
            l, r = self._left[i], self._right[i]
            if l < 0:
                assert r < 0
                obj = self._obj[i]
                assert obj not in seen, f"object {obj!r} in two leaves"
                seen[obj] = i
                assert self._height[i] == 0
                continue
            for ch in (l, r):
                assert self._parent[ch] == i
                assert encloses(self._box[i], self._box[ch]), f"node {i} does not enclose child {ch}"
            assert self._height[i] == 1 + max(self._height[l], self._height[r])
            stack.extend((l, r))
        assert seen == self._leaf

    def path_length(self) -> int:
        """Sum of leaf depths."""
        if self._root < 0:
            return 0
        total = 0
        stack = [(self._root, 0)]
        while stack:
            i, d = stack.pop()
            if self._left[i] < 0:
                total += d
            else:
                stack.append((self._left[i], d + 1))
                stack.append((self._right[i], d + 1))
        return total
