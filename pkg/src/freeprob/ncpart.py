"""
Noncrossing partitions of a finite linearly ordered set.

====================  =========================================================
``SetPartition``      value type: ground set plus canonical block list
``is_noncrossing``    crossing test (a<b<c<d with a,c and b,d in two blocks)
``enumerate_noncrossing``  all of NC(n), deterministic order, Catalan count
``refines``           refinement order (every block of p inside a block of q)
``nc_join``           least upper bound inside the noncrossing lattice
``kreweras_complement``  maximal sigma on X2 with p union sigma noncrossing
====================  =========================================================

Everything here is pure and value-semantic.
"""
from bisect import bisect_right
from functools import lru_cache
import json

from .errors import InvalidInputError, ResourceLimitError

__all__ = [
    "SetPartition",
    "ENUMERATION_CAP",
    "is_noncrossing",
    "enumerate_noncrossing",
    "nc_index_partitions",
    "refines",
    "nc_join",
    "kreweras_complement",
    "catalan",
]

ENUMERATION_CAP = 14


class SetPartition:
    """A partition of a finite set of positive integers.

    Parameters
    ----------
    blocks : iterable of iterables of int
        The blocks.  They are sorted internally and ordered by minimum.
    ground : iterable of int, optional
        The ground set.  Defaults to the union of the blocks; when given it
        must equal that union.
    """

    __slots__ = ("ground", "blocks")

    def __init__(self, blocks, ground=None):
        blks = []
        seen = set()
        for b in blocks:
            bb = tuple(sorted(int(x) for x in b))
            if not bb:
                raise InvalidInputError("empty block")
            for x in bb:
                if x in seen:
                    raise InvalidInputError(f"element {x} appears in two blocks")
                seen.add(x)
            if len(set(bb)) != len(bb):
                raise InvalidInputError(f"repeated element in block {bb}")
            blks.append(bb)
        blks.sort(key=lambda b: b[0])
        if ground is None:
            g = tuple(sorted(seen))
        else:
            g = tuple(sorted(int(x) for x in ground))
            if len(set(g)) != len(g):
                raise InvalidInputError("ground set has repeated elements")
            if set(g) != seen:
                raise InvalidInputError("blocks do not cover the ground set exactly")
        object.__setattr__(self, "ground", g)
        object.__setattr__(self, "blocks", tuple(blks))

    def __setattr__(self, name, value):
        raise AttributeError("SetPartition is immutable")

    # constructors
    @classmethod
    def singletons(cls, ground):
        return cls([[x] for x in ground], ground)

    @classmethod
    def one(cls, ground):
        g = list(ground)
        return cls([g] if g else [], g)

    @classmethod
    def intervals(cls, sizes, start=1):
        """Interval partition with consecutive blocks of the given sizes."""
        blocks = []
        pos = start
        for k in sizes:
            if k <= 0:
                raise InvalidInputError("interval sizes must be positive")
            blocks.append(range(pos, pos + k))
            pos += k
        return cls(blocks, range(start, pos))

    @classmethod
    def from_json(cls, data, ground=None):
        if isinstance(data, str):
            data = json.loads(data)
        return cls(data, ground)

    def to_json(self):
        return [list(b) for b in self.blocks]

    def __len__(self):
        return len(self.blocks)

    def __iter__(self):
        return iter(self.blocks)

    def __eq__(self, other):
        if not isinstance(other, SetPartition):
            return NotImplemented
        return self.ground == other.ground and self.blocks == other.blocks

    def __hash__(self):
        return hash((self.ground, self.blocks))

    def __repr__(self):
        inner = ",".join("{" + ",".join(map(str, b)) + "}" for b in self.blocks)
        return "{" + inner + "}"

    def block_of(self, x):
        for b in self.blocks:
            if x in b:
                return b
        raise InvalidInputError(f"{x} not in ground set")

    def labels(self):
        """Mapping element -> index of its block."""
        return {x: i for i, b in enumerate(self.blocks) for x in b}

    def restrict_positions(self):
        """Blocks as 0-based index tuples into the sorted ground set."""
        pos = {x: i for i, x in enumerate(self.ground)}
        return tuple(tuple(pos[x] for x in b) for b in self.blocks)


def catalan(n):
    """n-th Catalan number."""
    c = 1
    for k in range(n):
        c = c * 2 * (2 * k + 1) // (k + 2)
    return c


def _check(p):
    if not isinstance(p, SetPartition):
        raise InvalidInputError(f"expected SetPartition, got {type(p).__name__}")


def _blocks_cross(a, b):
    # collapse the label sequence of a union b; ABAB (length >= 4) means crossing
    merged = sorted([(x, 0) for x in a] + [(x, 1) for x in b])
    runs = 1
    for (_, la), (_, lb) in zip(merged, merged[1:]):
        if la != lb:
            runs += 1
            if runs >= 4:
                return True
    return False


def _is_nc_blocks(blocks):
    for i in range(len(blocks)):
        for j in range(i + 1, len(blocks)):
            if _blocks_cross(blocks[i], blocks[j]):
                return False
    return True


def is_noncrossing(p):
    """True iff no a<b<c<d has a,c in one block and b,d in another."""
    _check(p)
    return _is_nc_blocks(p.blocks)


def _gen_nc(elems):
    # recursive first-block placement: grow the block of elems[0] to the right;
    # every skipped stretch is partitioned on its own
    if not elems:
        yield ()
        return
    yield from _grow((elems[0],), elems[1:])


def _grow(block, rest):
    for tail in _gen_nc(rest):
        yield (block,) + tail
    for j in range(len(rest)):
        for gap in _gen_nc(rest[:j]):
            for more in _grow(block + (rest[j],), rest[j + 1:]):
                yield (more[0],) + gap + more[1:]


def _enumerate_blocks(elems, cap):
    n = len(elems)
    if n > cap:
        raise ResourceLimitError(
            f"NC enumeration of {n} elements exceeds the cap of {cap}")
    out = []
    for blocks in _gen_nc(tuple(elems)):
        out.append(tuple(sorted(blocks, key=lambda b: b[0])))
    return out


def enumerate_noncrossing(n, cap=ENUMERATION_CAP):
    """All noncrossing partitions of {1..n}.

    The order is deterministic: the block containing 1 is grown left to
    right, and the stretch skipped by each extension is partitioned
    recursively.  ``n = 0`` yields the single empty partition.
    """
    if not isinstance(n, int) or n < 0:
        raise InvalidInputError("n must be a nonnegative integer")
    ground = tuple(range(1, n + 1))
    return [SetPartition(b, ground) for b in _enumerate_blocks(ground, cap)]


@lru_cache(maxsize=None)
def nc_index_partitions(n):
    """NC(n) as tuples of 0-based index blocks, cached.

    The full partition 1_n comes first.
    """
    if n > ENUMERATION_CAP:
        raise ResourceLimitError(
            f"NC enumeration of {n} elements exceeds the cap of {ENUMERATION_CAP}")
    parts = _enumerate_blocks(tuple(range(n)), ENUMERATION_CAP)
    full = tuple([tuple(range(n))]) if n else ()
    rest = [p for p in parts if p != full]
    return (full,) + tuple(rest)


def refines(p, q):
    """True iff every block of ``p`` lies inside a block of ``q``."""
    _check(p)
    _check(q)
    if p.ground != q.ground:
        raise InvalidInputError("ground-set mismatch")
    lab = q.labels()
    return all(len({lab[x] for x in b}) == 1 for b in p.blocks)


class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)

    def groups(self):
        out = {}
        for x in self.parent:
            out.setdefault(self.find(x), []).append(x)
        return list(out.values())


def _nc_closure(blocks, ground):
    # merge crossing blocks until the partition is noncrossing
    blocks = [tuple(sorted(b)) for b in blocks]
    while True:
        uf = _UnionFind(ground)
        merged = False
        for i in range(len(blocks)):
            for j in range(i + 1, len(blocks)):
                if _blocks_cross(blocks[i], blocks[j]):
                    uf.union(blocks[i][0], blocks[j][0])
                    merged = True
        if not merged:
            return blocks
        for b in blocks:
            for x in b[1:]:
                uf.union(b[0], x)
        blocks = [tuple(sorted(g)) for g in uf.groups()]


def nc_join(p, q):
    """Least upper bound of two noncrossing partitions in NC."""
    _check(p)
    _check(q)
    if p.ground != q.ground:
        raise InvalidInputError("ground-set mismatch")
    if not (_is_nc_blocks(p.blocks) and _is_nc_blocks(q.blocks)):
        raise InvalidInputError("nc_join requires noncrossing partitions")
    uf = _UnionFind(p.ground)
    for b in p.blocks + q.blocks:
        for x in b[1:]:
            uf.union(b[0], x)
    return SetPartition(_nc_closure(uf.groups(), p.ground), p.ground)


def kreweras_complement(p, inner, outer):
    """Relative Kreweras complement of ``p`` (on ``inner``) inside ``outer``.

    Two points of ``outer`` share a block iff no block of ``p`` separates
    them, i.e. for every block B they fall in the same gap of B, where the
    region before min(B) and the region after max(B) count as one gap.

    Parameters
    ----------
    p : SetPartition
        Noncrossing partition whose ground set is ``inner``.
    inner, outer : iterable of int
        Disjoint position sets of one linear order.

    Returns
    -------
    SetPartition
        The maximal noncrossing partition sigma of ``outer`` such that
        ``p`` together with sigma is noncrossing on ``inner | outer``.
    """
    _check(p)
    x1 = tuple(sorted(set(inner)))
    x2 = tuple(sorted(set(outer)))
    if set(x1) & set(x2):
        raise InvalidInputError("inner and outer position sets overlap")
    if p.ground != x1:
        raise InvalidInputError("partition ground set must equal the inner positions")
    if not _is_nc_blocks(p.blocks):
        raise InvalidInputError("kreweras_complement requires a noncrossing partition")
    classes = {}
    for y in x2:
        sig = tuple(bisect_right(b, y) % len(b) for b in p.blocks)
        classes.setdefault(sig, []).append(y)
    return SetPartition(classes.values(), x2)
