"""GumTree-style tree matching and Chawathe edit-script generation.

match_trees runs the classic two phases (greedy top-down on isomorphic
subtrees, then bottom-up container matching with a Zhang-Shasha recovery
pass). edit_script turns a mapping into Insert/Delete/Update/Move actions
by replaying them on a working copy of the old tree; apply_edit_script
replays a script the same way, which is how scripts are checked.
"""

import hashlib
import heapq
import json
import math
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Tuple

from ast_frontend import AstNode, Blueprint, UnifiedKind, build_tree, enclosing_kind, tree_index
from config import DICE_THRESHOLD, MAX_SIZE, MIN_HEIGHT


@dataclass(frozen=True)
class TreeDiffParameters:
    min_height: int = MIN_HEIGHT
    dice_threshold: float = DICE_THRESHOLD
    max_size: int = MAX_SIZE


class MappingSet:
    """One-to-one node mapping between an old and a new tree, by node_id."""

    def __init__(self, pairs=()):
        self.old_to_new: Dict[int, int] = {}
        self.new_to_old: Dict[int, int] = {}
        for old_id, new_id in pairs:
            self.add(old_id, new_id)

    def add(self, old_id: int, new_id: int):
        if old_id in self.old_to_new or new_id in self.new_to_old:
            raise ValueError(f"Node already mapped: ({old_id}, {new_id})")
        self.old_to_new[old_id] = new_id
        self.new_to_old[new_id] = old_id

    def has_old(self, old_id: int) -> bool:
        return old_id in self.old_to_new

    def has_new(self, new_id: int) -> bool:
        return new_id in self.new_to_old

    @property
    def pairs(self) -> List[Tuple[int, int]]:
        return sorted(self.old_to_new.items())

    def __contains__(self, pair) -> bool:
        old_id, new_id = pair
        return self.old_to_new.get(old_id) == new_id

    def __iter__(self):
        return iter(self.pairs)

    def __len__(self):
        return len(self.old_to_new)


class _TreeInfo:
    """Per-node height, size and structural digest, indexed by pre-order id."""

    def __init__(self, root: AstNode):
        self.root = root
        self.nodes = tree_index(root).nodes
        n = len(self.nodes)
        self.parent = [node.parent_id for node in self.nodes]
        self.height = [1] * n
        self.size = [1] * n
        self.digest = [b""] * n
        for node in reversed(self.nodes):
            i = node.node_id
            h = hashlib.blake2b(digest_size=16)
            h.update(str(node.kind).encode("utf-8"))
            h.update(b"\x00")
            h.update(b"\x01" if node.value is None else node.value.encode("utf-8"))
            h.update(b"\x00(")
            for child in node.children:
                c = child.node_id
                self.height[i] = max(self.height[i], self.height[c] + 1)
                self.size[i] += self.size[c]
                h.update(self.digest[c])
            h.update(b")")
            self.digest[i] = h.digest()
        self.digest_counts: Dict[bytes, int] = {}
        for d in self.digest:
            self.digest_counts[d] = self.digest_counts.get(d, 0) + 1

    def descendants(self, i: int) -> range:
        return range(i + 1, i + self.size[i])

    def is_descendant(self, d: int, i: int) -> bool:
        return i < d < i + self.size[i]

    def postorder(self, i: int = 0) -> List[int]:
        out = []
        stack = [(i, False)]
        while stack:
            node_id, expanded = stack.pop()
            if expanded:
                out.append(node_id)
                continue
            stack.append((node_id, True))
            for child in reversed(self.nodes[node_id].children):
                stack.append((child.node_id, False))
        return out


def _structurally_equal(a: AstNode, b: AstNode) -> bool:
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        if x.kind != y.kind or x.value != y.value or len(x.children) != len(y.children):
            return False
        stack.extend(zip(x.children, y.children))
    return True


def trees_isomorphic(a: AstNode, b: AstNode) -> bool:
    """Equality on kind, value and child order; node ids ignored."""
    return _structurally_equal(a, b)


class _HeightQueue:
    def __init__(self, info: _TreeInfo):
        self.info = info
        self.heap = []

    def push(self, i: int):
        heapq.heappush(self.heap, (-self.info.height[i], i))

    def open(self, i: int):
        for child in self.info.nodes[i].children:
            self.push(child.node_id)

    def peek_height(self) -> int:
        return -self.heap[0][0] if self.heap else 0

    def pop_all(self) -> List[int]:
        h = self.peek_height()
        out = []
        while self.heap and -self.heap[0][0] == h:
            out.append(heapq.heappop(self.heap)[1])
        return out


class _Matcher:
    def __init__(self, old: AstNode, new: AstNode, params: TreeDiffParameters):
        self.src = _TreeInfo(old)
        self.dst = _TreeInfo(new)
        self.params = params
        self.mapping = MappingSet()

    def dice(self, t1: Optional[int], t2: Optional[int]) -> float:
        if t1 is None or t2 is None:
            return 0.0
        denominator = (self.src.size[t1] - 1) + (self.dst.size[t2] - 1)
        if denominator == 0:
            return 0.0
        common = 0
        for d in self.src.descendants(t1):
            partner = self.mapping.old_to_new.get(d)
            if partner is not None and self.dst.is_descendant(partner, t2):
                common += 1
        return 2.0 * common / denominator

    def map_subtrees(self, t1: int, t2: int):
        for offset in range(self.src.size[t1]):
            self.mapping.add(t1 + offset, t2 + offset)

    def _is_free(self, t1: int, t2: int) -> bool:
        return not any(self.mapping.has_old(t1 + k) for k in range(self.src.size[t1])) \
            and not any(self.mapping.has_new(t2 + k) for k in range(self.dst.size[t2]))

    def top_down(self):
        src, dst = self.src, self.dst
        l1, l2 = _HeightQueue(src), _HeightQueue(dst)
        l1.push(0)
        l2.push(0)
        ambiguous: List[Tuple[int, int]] = []

        while min(l1.peek_height(), l2.peek_height()) >= self.params.min_height:
            if l1.peek_height() != l2.peek_height():
                if l1.peek_height() > l2.peek_height():
                    for t in l1.pop_all():
                        l1.open(t)
                else:
                    for t in l2.pop_all():
                        l2.open(t)
                continue

            h1, h2 = l1.pop_all(), l2.pop_all()
            by_digest: Dict[bytes, List[int]] = {}
            for t2 in h2:
                by_digest.setdefault(dst.digest[t2], []).append(t2)

            touched1, touched2 = set(), set()
            for t1 in h1:
                for t2 in by_digest.get(src.digest[t1], ()):
                    if not _structurally_equal(src.nodes[t1], dst.nodes[t2]):
                        continue
                    d = src.digest[t1]
                    if src.digest_counts[d] > 1 or dst.digest_counts[d] > 1:
                        ambiguous.append((t1, t2))
                    elif self._is_free(t1, t2):
                        self.map_subtrees(t1, t2)
                    touched1.add(t1)
                    touched2.add(t2)

            for t1 in h1:
                if t1 not in touched1:
                    l1.open(t1)
            for t2 in h2:
                if t2 not in touched2:
                    l2.open(t2)

        # Ambiguous isomorphic pairs: best parent similarity first, and only
        # when the parents already share mapped descendants.
        scored = [(-self.dice(src.parent[t1], dst.parent[t2]), t1, t2) for t1, t2 in ambiguous]
        scored.sort()
        for score, t1, t2 in scored:
            if score < 0 and self._is_free(t1, t2):
                self.map_subtrees(t1, t2)

    def _candidates(self, t1: int) -> List[int]:
        seen = set()
        kind = self.src.nodes[t1].kind
        for d in self.src.descendants(t1):
            partner = self.mapping.old_to_new.get(d)
            if partner is None:
                continue
            p = self.dst.parent[partner]
            while p is not None and p not in seen:
                seen.add(p)
                p = self.dst.parent[p]
        return sorted(c for c in seen
                      if c != 0 and not self.mapping.has_new(c) and self.dst.nodes[c].kind == kind)

    def bottom_up(self):
        for t1 in self.src.postorder():
            if t1 == 0:
                if not self.mapping.has_old(0) and not self.mapping.has_new(0) \
                        and self.src.nodes[0].kind == self.dst.nodes[0].kind:
                    self.mapping.add(0, 0)
                if self.mapping.old_to_new.get(0) == 0:
                    self.recover(0, 0)
                break
            if self.mapping.has_old(t1) or not self.src.nodes[t1].children:
                continue
            best, best_dice = None, -1.0
            for candidate in self._candidates(t1):
                score = self.dice(t1, candidate)
                if score > best_dice:
                    best, best_dice = candidate, score
            if best is not None and best_dice >= self.params.dice_threshold:
                self.mapping.add(t1, best)
                self.recover(t1, best)

    def recover(self, t1: int, t2: int):
        if self.src.size[t1] > self.params.max_size or self.dst.size[t2] > self.params.max_size:
            return
        for a, b in _zhang_shasha_pairs(self.src, t1, self.dst, t2):
            if self.mapping.has_old(a) or self.mapping.has_new(b):
                continue
            if self.src.nodes[a].kind == self.dst.nodes[b].kind:
                self.mapping.add(a, b)


def _zhang_shasha_pairs(src: _TreeInfo, t1: int, dst: _TreeInfo, t2: int) -> List[Tuple[int, int]]:
    """Optimal edit mapping between two subtrees (Zhang-Shasha with backtracking)."""
    post1, post2 = src.postorder(t1), dst.postorder(t2)
    n1, n2 = len(post1), len(post2)
    pos1 = {node_id: k + 1 for k, node_id in enumerate(post1)}
    pos2 = {node_id: k + 1 for k, node_id in enumerate(post2)}

    def leftmost(info, post, pos):
        lld = [0] * (len(post) + 1)
        for k, node_id in enumerate(post, start=1):
            children = info.nodes[node_id].children
            lld[k] = lld[pos[children[0].node_id]] if children else k
        return lld

    lld1, lld2 = leftmost(src, post1, pos1), leftmost(dst, post2, pos2)

    def keyroots(lld, n):
        seen, roots = set(), []
        for k in range(n, 0, -1):
            if lld[k] not in seen:
                seen.add(lld[k])
                roots.append(k)
        return sorted(roots)

    def rename_cost(i, j):
        a, b = src.nodes[post1[i - 1]], dst.nodes[post2[j - 1]]
        if a.kind != b.kind:
            return math.inf
        return 0 if a.value == b.value else 1

    td = [[0] * (n2 + 1) for _ in range(n1 + 1)]

    def forest_dist(i, j):
        li, lj = lld1[i], lld2[j]
        rows, cols = i - li + 2, j - lj + 2
        fd = [[0] * cols for _ in range(rows)]
        for x in range(1, rows):
            fd[x][0] = fd[x - 1][0] + 1
        for y in range(1, cols):
            fd[0][y] = fd[0][y - 1] + 1
        for x in range(1, rows):
            di = li + x - 1
            for y in range(1, cols):
                dj = lj + y - 1
                if lld1[di] == li and lld2[dj] == lj:
                    fd[x][y] = min(fd[x - 1][y] + 1, fd[x][y - 1] + 1, fd[x - 1][y - 1] + rename_cost(di, dj))
                    td[di][dj] = fd[x][y]
                else:
                    fd[x][y] = min(fd[x - 1][y] + 1, fd[x][y - 1] + 1,
                                   fd[lld1[di] - li][lld2[dj] - lj] + td[di][dj])
        return fd

    for i in keyroots(lld1, n1):
        for j in keyroots(lld2, n2):
            forest_dist(i, j)

    pairs = []
    stack = [(n1, n2)]
    while stack:
        i, j = stack.pop()
        fd = forest_dist(i, j)
        li, lj = lld1[i], lld2[j]
        x, y = i - li + 1, j - lj + 1
        while x > 0 or y > 0:
            if x > 0 and fd[x - 1][y] + 1 == fd[x][y]:
                x -= 1
            elif y > 0 and fd[x][y - 1] + 1 == fd[x][y]:
                y -= 1
            else:
                di, dj = li + x - 1, lj + y - 1
                if lld1[di] == li and lld2[dj] == lj:
                    pairs.append((post1[di - 1], post2[dj - 1]))
                    x -= 1
                    y -= 1
                else:
                    stack.append((di, dj))
                    x, y = lld1[di] - li, lld2[dj] - lj
    return pairs


def match_trees(old: AstNode, new: AstNode, params: Optional[TreeDiffParameters] = None) -> MappingSet:
    """Two-phase GumTree matching; mapped pairs always have equal kinds."""
    matcher = _Matcher(old, new, params or TreeDiffParameters())
    matcher.top_down()
    matcher.bottom_up()
    return matcher.mapping


@dataclass(frozen=True)
class EditAction:
    op: str  # Insert, Delete, Update, Move
    kind: UnifiedKind
    value: Optional[str]
    parent_kind: UnifiedKind
    old_id: Optional[int] = None
    new_id: Optional[int] = None
    parent_old_id: Optional[int] = None
    parent_new_id: Optional[int] = None
    position: Optional[int] = None
    old_value: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            'op': self.op,
            'kind': str(self.kind),
            'value': self.value,
            'parent_kind': str(self.parent_kind),
        }


INSERT, DELETE, UPDATE, MOVE = "Insert", "Delete", "Update", "Move"

EditScript = List[EditAction]


class _WorkNode:
    __slots__ = ("kind", "value", "children", "parent", "old_id", "new_id")

    def __init__(self, kind, value, old_id=None, new_id=None):
        self.kind = kind
        self.value = value
        self.children: List["_WorkNode"] = []
        self.parent: Optional["_WorkNode"] = None
        self.old_id = old_id
        self.new_id = new_id

    def index_in_parent(self) -> int:
        for k, sibling in enumerate(self.parent.children):
            if sibling is self:
                return k
        raise ValueError("Node is not a child of its parent")


class _WorkTree:
    """Mutable copy of a tree under a fake root, addressed by old or new node id."""

    def __init__(self, root: AstNode):
        self.fake_root = _WorkNode(None, None)
        self.by_old: Dict[int, _WorkNode] = {}
        self.by_new: Dict[int, _WorkNode] = {}
        stack = [(root, self.fake_root)]
        while stack:
            node, parent = stack.pop()
            work = _WorkNode(node.kind, node.value, old_id=node.node_id)
            self.by_old[node.node_id] = work
            work.parent = parent
            parent.children.append(work)
            for child in reversed(node.children):
                stack.append((child, work))

    def lookup(self, old_id: Optional[int], new_id: Optional[int]) -> _WorkNode:
        if old_id is not None:
            return self.by_old[old_id]
        if new_id is not None:
            return self.by_new[new_id]
        return self.fake_root

    def insert(self, node: _WorkNode, parent: _WorkNode, position: int):
        node.parent = parent
        parent.children.insert(position, node)
        if node.new_id is not None and node.old_id is None:
            self.by_new[node.new_id] = node

    def detach(self, node: _WorkNode):
        del node.parent.children[node.index_in_parent()]
        node.parent = None

    def postorder(self) -> List[_WorkNode]:
        out = []
        stack = [(self.fake_root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                out.append(node)
                continue
            stack.append((node, True))
            for child in reversed(node.children):
                stack.append((child, False))
        return out

    def to_tree(self) -> Optional[AstNode]:
        if not self.fake_root.children:
            return None

        def blueprint(work):
            bp = Blueprint(work.kind, work.value)
            stack = [(work, bp)]
            while stack:
                w, b = stack.pop()
                for child in w.children:
                    cb = Blueprint(child.kind, child.value)
                    b.children.append(cb)
                    stack.append((child, cb))
            return bp

        return build_tree(blueprint(self.fake_root.children[0]))


class _ScriptGenerator:
    def __init__(self, old: AstNode, new: AstNode, mapping: MappingSet):
        self.old = old
        self.new = new
        self.new_index = tree_index(new)
        self.work = _WorkTree(old)
        self.mapping = mapping
        # work node identity -> partner new node id; fake roots are partners
        self.partner_of_new: Dict[int, _WorkNode] = {}
        for old_id, new_id in mapping.pairs:
            w = self.work.by_old[old_id]
            w.new_id = new_id
            self.partner_of_new[new_id] = w
        self.src_in_order = set()
        self.dst_in_order = set()
        self.actions: EditScript = []

    def _new_parent(self, x: AstNode) -> Optional[AstNode]:
        return self.new_index.parent(x)

    def _new_children(self, y: Optional[AstNode]):
        return (self.new,) if y is None else y.children

    def _partner(self, y: Optional[AstNode]) -> _WorkNode:
        return self.work.fake_root if y is None else self.partner_of_new[y.node_id]

    def _find_pos(self, x: AstNode) -> int:
        siblings = self._new_children(self._new_parent(x))
        for c in siblings:
            if c.node_id in self.dst_in_order:
                if c is x:
                    return 0
                break
        xpos = next(k for k, c in enumerate(siblings) if c is x)
        v = None
        for c in reversed(siblings[:xpos]):
            if c.node_id in self.dst_in_order:
                v = c
                break
        if v is None:
            return 0
        return self.partner_of_new[v.node_id].index_in_parent() + 1

    def _parent_kind_new(self, new_id: int) -> UnifiedKind:
        return enclosing_kind(self.new, new_id)

    def _emit_move(self, w: _WorkNode, x: AstNode, z: _WorkNode, y: Optional[AstNode]):
        self.work.detach(w)
        k = self._find_pos(x)
        self.work.insert(w, z, k)
        self.actions.append(EditAction(
            MOVE, x.kind, x.value, self._parent_kind_new(x.node_id),
            old_id=w.old_id, new_id=x.node_id, parent_old_id=z.old_id,
            parent_new_id=None if y is None else y.node_id, position=k))

    def _align_children(self, w: _WorkNode, x: AstNode):
        for c in w.children:
            self.src_in_order.discard(id(c))
        for c in x.children:
            self.dst_in_order.discard(c.node_id)

        x_child_ids = {c.node_id for c in x.children}
        s1 = [c for c in w.children if c.new_id is not None and c.new_id in x_child_ids]
        s2 = [c for c in x.children if c.node_id in self.partner_of_new
              and self.partner_of_new[c.node_id].parent is w]

        lcs = _lcs(s1, s2, lambda a, b: a.new_id == b.node_id)
        for a, b in lcs:
            self.src_in_order.add(id(a))
            self.dst_in_order.add(b.node_id)
        in_lcs = {id(a) for a, _ in lcs}

        for b in s2:
            a = self.partner_of_new[b.node_id]
            if id(a) in in_lcs:
                continue
            self._emit_move(a, b, w, x)
            self.src_in_order.add(id(a))
            self.dst_in_order.add(b.node_id)

    def generate(self) -> EditScript:
        queue = [self.new]
        head = 0
        while head < len(queue):
            x = queue[head]
            head += 1
            queue.extend(x.children)

            y = self._new_parent(x)
            z = self._partner(y)
            w = self.partner_of_new.get(x.node_id)
            if w is None:
                w = _WorkNode(x.kind, x.value, new_id=x.node_id)
                k = self._find_pos(x)
                self.work.insert(w, z, k)
                self.partner_of_new[x.node_id] = w
                self.actions.append(EditAction(
                    INSERT, x.kind, x.value, self._parent_kind_new(x.node_id),
                    new_id=x.node_id, parent_old_id=z.old_id,
                    parent_new_id=None if y is None else y.node_id, position=k))
            else:
                if w.value != x.value:
                    self.actions.append(EditAction(
                        UPDATE, x.kind, x.value, self._parent_kind_new(x.node_id),
                        old_id=w.old_id, new_id=x.node_id, old_value=w.value))
                    w.value = x.value
                if w.parent is not z:
                    self._emit_move(w, x, z, y)
            self.src_in_order.add(id(w))
            self.dst_in_order.add(x.node_id)
            self._align_children(w, x)

        for w in self.work.postorder():
            if w is self.work.fake_root or w.new_id is not None:
                continue
            parent = w.parent
            self.actions.append(EditAction(
                DELETE, w.kind, w.value, enclosing_kind(self.old, w.old_id),
                old_id=w.old_id, parent_old_id=parent.old_id))
            self.work.detach(w)
        return self.actions


def _lcs(xs, ys, equal) -> List[tuple]:
    n, m = len(xs), len(ys)
    table = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        for j in range(m - 1, -1, -1):
            if equal(xs[i], ys[j]):
                table[i][j] = table[i + 1][j + 1] + 1
            else:
                table[i][j] = max(table[i + 1][j], table[i][j + 1])
    out = []
    i = j = 0
    while i < n and j < m:
        if equal(xs[i], ys[j]):
            out.append((xs[i], ys[j]))
            i += 1
            j += 1
        elif table[i + 1][j] >= table[i][j + 1]:
            i += 1
        else:
            j += 1
    return out


def edit_script(old: AstNode, new: AstNode, mapping: Optional[MappingSet] = None,
                params: Optional[TreeDiffParameters] = None) -> EditScript:
    """Chawathe edit script turning `old` into `new` under `mapping`.

    Inserts and moves are emitted top-down in breadth-first order of the new
    tree; deletes follow in post-order of the old tree.
    """
    if mapping is None:
        mapping = match_trees(old, new, params)
    return _ScriptGenerator(old, new, mapping).generate()


def apply_edit_script(old: AstNode, script: EditScript) -> Optional[AstNode]:
    """Replay `script` on a copy of `old`; returns the resulting tree."""
    work = _WorkTree(old)
    for action in script:
        if action.op == INSERT:
            node = _WorkNode(action.kind, action.value, new_id=action.new_id)
            parent = work.lookup(action.parent_old_id, action.parent_new_id)
            work.insert(node, parent, action.position)
        elif action.op == MOVE:
            node = work.lookup(action.old_id, action.new_id)
            parent = work.lookup(action.parent_old_id, action.parent_new_id)
            work.detach(node)
            work.insert(node, parent, action.position)
        elif action.op == UPDATE:
            work.lookup(action.old_id, action.new_id).value = action.value
        elif action.op == DELETE:
            work.detach(work.by_old[action.old_id])
        else:
            raise ValueError(f"Unknown edit operation: {action.op}")
    return work.to_tree()


def topmost_actions(script: EditScript, tree: AstNode, op: str,
                    kind: Optional[UnifiedKind] = None) -> List[EditAction]:
    """Actions of `op` (Insert or Delete) with no ancestor touched by the same op.

    With `kind`, only actions on nodes of that kind are considered, and a node
    is collapsed into its nearest ancestor of that kind touched by the same op.
    `tree` is the new tree for Insert and the old tree for Delete.
    """
    if op not in (INSERT, DELETE):
        raise ValueError("topmost_actions applies to Insert and Delete only")
    node_of = (lambda a: a.new_id) if op == INSERT else (lambda a: a.old_id)
    selected = [a for a in script if a.op == op and (kind is None or a.kind == kind)]
    touched = {node_of(a) for a in selected}
    index = tree_index(tree)

    result = []
    for action in selected:
        node = index.parent(index.get(node_of(action)))
        covered = False
        while node is not None:
            if node.node_id in touched:
                covered = True
                break
            node = index.parent(node)
        if not covered:
            result.append(action)
    return result


def script_to_jsonl(script: EditScript) -> Iterator[str]:
    for action in script:
        yield json.dumps(action.to_dict(), ensure_ascii=False)


def diff_trees(old: AstNode, new: AstNode, params: Optional[TreeDiffParameters] = None) -> EditScript:
    return edit_script(old, new, match_trees(old, new, params))
