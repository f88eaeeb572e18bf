"""Unified Java/Kotlin abstract syntax trees built on tree-sitter.

Both grammars are mapped onto one entity vocabulary (UnifiedKind) by the
resource tables in mappings/, so the differ and the pattern miner never see a
language-specific node type except under Other(...).
"""

import json
import logging
import threading
import weakref
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import tree_sitter_java as tsjava
import tree_sitter_kotlin as tskotlin
from tree_sitter import Language as TSLanguage, Node, Parser

from errors import UndecodableContent, UnknownNode
from lang_metrics import Language
from repo_walker import is_binary

logger = logging.getLogger(__name__)

MAPPINGS_DIR = Path(__file__).parent / "mappings"
MAPPING_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class UnifiedKind:
    name: str
    grammar_type: Optional[str] = None

    @classmethod
    def other(cls, grammar_type: str) -> "UnifiedKind":
        return cls("Other", grammar_type)

    @property
    def is_other(self) -> bool:
        return self.name == "Other"

    @property
    def label(self) -> str:
        """Human-readable label used in pattern item texts."""
        if self.is_other:
            return str(self)
        return _LABELS.get(self.name, self.name)

    def __str__(self):
        if self.is_other:
            return f"Other({self.grammar_type})"
        return self.name


COMPILATION_UNIT = UnifiedKind("CompilationUnit")
CLASS = UnifiedKind("Class")
METHOD = UnifiedKind("Method")
PROPERTY = UnifiedKind("Property")
LOCAL_VARIABLE = UnifiedKind("LocalVariable")
INVOCATION = UnifiedKind("Invocation")
IF = UnifiedKind("If")
ASSIGNMENT = UnifiedKind("Assignment")
RETURN = UnifiedKind("Return")
BLOCK = UnifiedKind("Block")
PARAMETER = UnifiedKind("Parameter")
LITERAL = UnifiedKind("Literal")
IDENTIFIER = UnifiedKind("Identifier")
LOOP = UnifiedKind("Loop")
LAMBDA = UnifiedKind("Lambda")
IMPORT = UnifiedKind("Import")
ERROR = UnifiedKind.other("error")

KINDS_BY_NAME = {k.name: k for k in (
    COMPILATION_UNIT, CLASS, METHOD, PROPERTY, LOCAL_VARIABLE, INVOCATION, IF, ASSIGNMENT,
    RETURN, BLOCK, PARAMETER, LITERAL, IDENTIFIER, LOOP, LAMBDA, IMPORT,
)}

_LABELS = {
    "CompilationUnit": "Compilation Unit",
    "Property": "Property Declaration",
    "LocalVariable": "Local Variable",
}

# Nearest ancestor of one of these kinds is a node's enclosing context.
CONTEXT_KINDS = frozenset({COMPILATION_UNIT, CLASS, METHOD, IF, LOOP, LAMBDA})


def kind_from_name(name: str) -> UnifiedKind:
    """Inverse of str(UnifiedKind): 'Method' or 'Other(binary_expression)'."""
    if name.startswith("Other(") and name.endswith(")"):
        return UnifiedKind.other(name[len("Other("):-1])
    if name not in KINDS_BY_NAME:
        raise ValueError(f"Unknown unified kind: {name}")
    return KINDS_BY_NAME[name]


@dataclass(frozen=True, eq=False)
class AstNode:
    node_id: int
    kind: UnifiedKind
    value: Optional[str]
    children: Tuple["AstNode", ...]
    span: Tuple[int, int]
    parent_id: Optional[int] = None

    def iter_preorder(self):
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def size(self) -> int:
        return sum(1 for _ in self.iter_preorder())


@dataclass
class Blueprint:
    """Mutable tree shape that build_tree freezes into AstNodes."""

    kind: UnifiedKind
    value: Optional[str] = None
    children: List["Blueprint"] = field(default_factory=list)
    span: Tuple[int, int] = (0, 0)


def build_tree(blueprint: Blueprint) -> AstNode:
    """Freeze a Blueprint, numbering nodes in pre-order from 0."""
    order: List[Tuple[Blueprint, Optional[int]]] = []
    stack = [(blueprint, None)]
    while stack:
        bp, parent_id = stack.pop()
        node_id = len(order)
        order.append((bp, parent_id))
        for child in reversed(bp.children):
            stack.append((child, node_id))

    built: Dict[int, AstNode] = {}
    child_ids: Dict[int, List[int]] = {}
    for node_id, (_, parent_id) in enumerate(order):
        if parent_id is not None:
            child_ids.setdefault(parent_id, []).append(node_id)
    for node_id in range(len(order) - 1, -1, -1):
        bp, parent_id = order[node_id]
        children = tuple(built.pop(c) for c in child_ids.get(node_id, ()))
        built[node_id] = AstNode(node_id, bp.kind, bp.value, children, bp.span, parent_id)
    return built[0]


class MappingTable:
    """Grammar node type -> UnifiedKind table loaded from a JSON resource."""

    def __init__(self, data: dict):
        if data.get("schema_version") != MAPPING_SCHEMA_VERSION:
            raise ValueError(f"Unsupported mapping schema version: {data.get('schema_version')}")
        self.language = data["language"]
        self.kinds = {t: kind_from_name(k) for t, k in data["kinds"].items()}
        self.name_rules = data.get("name_rules", {})
        self.atomic = frozenset(data.get("atomic", ()))
        self.operator_valued = frozenset(data.get("operator_valued", ()))
        self.skip = frozenset(data.get("skip", ()))
        self.contextual = {}
        for rule in data.get("contextual", ()):
            self.contextual.setdefault(rule["type"], []).append(rule)

    @classmethod
    def load(cls, language: Language) -> "MappingTable":
        path = MAPPINGS_DIR / f"{language.value.lower()}.json"
        with open(path, "r", encoding="utf-8") as f:
            return cls(json.load(f))

    def kind_for(self, node: Node, context: UnifiedKind) -> UnifiedKind:
        for rule in self.contextual.get(node.type, ()):
            if "within" in rule and context.name not in rule["within"]:
                continue
            return KINDS_BY_NAME[rule["kind"]]
        if node.type in self.kinds:
            return self.kinds[node.type]
        if node.type == "ERROR":
            return ERROR
        return UnifiedKind.other(node.type)


def _normalize(text: str) -> str:
    return " ".join(text.split())


def _node_text(node: Node, source: bytes) -> str:
    return source[node.start_byte:node.end_byte].decode("utf-8", errors="replace")


def _named_children(node: Node, skip=frozenset()) -> List[Node]:
    return [c for c in node.children
            if c.is_named and not c.is_extra and not c.is_missing and c.type not in skip]


def _apply_name_rule(node: Node, rule: dict) -> Optional[Node]:
    if "field" in rule:
        return node.child_by_field_name(rule["field"])
    if "field_path" in rule:
        current = node
        for name in rule["field_path"]:
            current = current.child_by_field_name(name)
            if current is None:
                return None
        return current

    pick_last = rule.get("last", False)

    def pick(parent, types):
        matches = [c for c in _named_children(parent) if c.type in types]
        if not matches:
            return None
        return matches[-1] if pick_last else matches[0]

    current = pick(node, rule["child_types"])
    for child_type in rule.get("through", ()):
        if current is None:
            return None
        current = pick(current, (child_type,))
    return current


class AstParser:
    """Parses one language into unified trees. Not thread-safe; see parse()."""

    def __init__(self, language: Language):
        if language == Language.JAVA:
            ts_language = TSLanguage(tsjava.language())
        elif language == Language.KOTLIN:
            ts_language = TSLanguage(tskotlin.language())
        else:
            raise ValueError(f"No grammar for language {language}")
        self.language = language
        self.parser = Parser(ts_language)
        self.mapping = MappingTable.load(language)
        self.logger = logging.getLogger(__name__)

    def _value_for(self, node: Node, source: bytes, named: List[Node]) -> Optional[str]:
        mapping = self.mapping
        if node.type in mapping.operator_valued:
            ops = [_node_text(c, source) for c in node.children
                   if not c.is_named and c.type not in ("(", ")")]
            return _normalize(" ".join(ops)) or None
        for rule in mapping.name_rules.get(node.type, ()):
            target = _apply_name_rule(node, rule)
            if target is not None:
                return _normalize(_node_text(target, source))
        if not named:
            return _normalize(_node_text(node, source)) or None
        return None

    def to_blueprint(self, source: bytes) -> Blueprint:
        tree = self.parser.parse(source)
        mapping = self.mapping
        root = tree.root_node

        root_bp = Blueprint(COMPILATION_UNIT, None, [], (root.start_byte, root.end_byte))
        if tree.root_node.has_error:
            self.logger.debug(f"Syntax errors in {self.language.value} source, building best-effort tree")

        stack = [(child, root_bp, COMPILATION_UNIT) for child in reversed(_named_children(root, mapping.skip))]
        while stack:
            node, parent_bp, context = stack.pop()
            text = _node_text(node, source)
            kind = mapping.kind_for(node, context)
            atomic = node.type in mapping.atomic
            named = [] if atomic else _named_children(node, mapping.skip)
            value = _normalize(text) if atomic else self._value_for(node, source, named)

            bp = Blueprint(kind, value, [], (node.start_byte, node.end_byte))
            parent_bp.children.append(bp)
            child_context = kind if kind in CONTEXT_KINDS else context
            for child in reversed(named):
                stack.append((child, bp, child_context))
        return root_bp

    def parse(self, content: Union[str, bytes]) -> AstNode:
        if isinstance(content, str):
            source = content.encode("utf-8")
        else:
            if is_binary(content):
                raise UndecodableContent("Content is binary, not source text")
            source = content
        return build_tree(self.to_blueprint(source))


_local = threading.local()


def _parser_for(language: Language) -> AstParser:
    parsers = getattr(_local, "parsers", None)
    if parsers is None:
        parsers = _local.parsers = {}
    if language not in parsers:
        parsers[language] = AstParser(language)
    return parsers[language]


def parse(content: Union[str, bytes], language: Language) -> AstNode:
    """Parse Java or Kotlin source into a unified tree rooted at CompilationUnit.

    Syntax errors never fail the parse; error regions become Other(error) nodes.

    Raises:
        UndecodableContent: content is binary
        ValueError: language is neither Java nor Kotlin
    """
    if language not in (Language.JAVA, Language.KOTLIN):
        raise ValueError(f"Cannot parse {language}: only Java and Kotlin are supported")
    return _parser_for(language).parse(content)


class TreeIndex:
    """Node lookup by id for one frozen tree."""

    def __init__(self, root: AstNode):
        self.root = root
        self.nodes: List[AstNode] = list(root.iter_preorder())

    def get(self, node_id: int) -> AstNode:
        if not isinstance(node_id, int) or node_id < 0 or node_id >= len(self.nodes):
            raise UnknownNode(f"No node {node_id} in tree of {len(self.nodes)} nodes")
        return self.nodes[node_id]

    def parent(self, node: AstNode) -> Optional[AstNode]:
        return None if node.parent_id is None else self.nodes[node.parent_id]


_index_cache: "weakref.WeakKeyDictionary[AstNode, TreeIndex]" = weakref.WeakKeyDictionary()
_index_lock = threading.Lock()


def tree_index(root: AstNode) -> TreeIndex:
    with _index_lock:
        index = _index_cache.get(root)
        if index is None:
            index = _index_cache[root] = TreeIndex(root)
        return index


def enclosing_kind(tree: AstNode, node_id: int) -> UnifiedKind:
    """Kind of the nearest context ancestor (CompilationUnit when none).

    Raises:
        UnknownNode: node_id is not in tree
    """
    index = tree_index(tree)
    node = index.parent(index.get(node_id))
    while node is not None:
        if node.kind in CONTEXT_KINDS:
            return node.kind
        node = index.parent(node)
    return COMPILATION_UNIT


def dump_tree(root: AstNode) -> str:
    """Indented text form: one node per line with kind, value and span."""
    lines = []
    stack = [(root, 0)]
    while stack:
        node, depth = stack.pop()
        value = f" {node.value!r}" if node.value is not None else ""
        lines.append(f"{'  ' * depth}[{node.node_id}] {node.kind}{value} {node.span[0]}..{node.span[1]}")
        for child in reversed(node.children):
            stack.append((child, depth + 1))
    return "\n".join(lines) + "\n"
