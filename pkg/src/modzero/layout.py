"""Module layout IR: parsing, validation, and serialization.

A layout is a tree of typed module nodes describing how a question
decomposes into attention and answer operations.  The concrete syntax is

    Name[arg1;arg2](child1, child2)

where the bracket block holds semicolon-separated textual arguments and
the paren block holds child layouts.  Both blocks are omitted when empty.
Whitespace between tokens is insignificant; canonical printing uses a
single space after each child comma and none anywhere else.

The IR deliberately allows constructing invalid trees (wrong arity,
And over non-Exist children, and so on).  ``parse_layout`` refuses to
produce such trees, and ``validate`` re-checks every structural
invariant on trees built by hand, so downstream code can rely on either
entry point.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field


class ModuleName(str, enum.Enum):
    FIND = "Find"
    RELOCATE = "Relocate"
    FILTER = "Filter"
    CHOOSE = "Choose"
    COMPARE = "Compare"
    QUERY = "Query"
    COUNT = "Count"
    EXIST = "Exist"
    AND = "And"
    OR = "Or"


# module -> (child count, minimum arg count, maximum arg count or None for
# unbounded).  Compare takes the comparative plus any number of answer
# candidates, every other module has a fixed signature.
_SIGNATURES: dict[ModuleName, tuple[int, int, int | None]] = {
    ModuleName.FIND: (0, 1, 1),
    ModuleName.RELOCATE: (1, 1, 1),
    ModuleName.FILTER: (1, 1, 1),
    ModuleName.CHOOSE: (2, 2, 2),
    ModuleName.COMPARE: (2, 1, None),
    ModuleName.QUERY: (1, 1, 1),
    ModuleName.COUNT: (1, 0, 0),
    ModuleName.EXIST: (1, 0, 0),
    ModuleName.AND: (2, 0, 0),
    ModuleName.OR: (2, 0, 0),
}

CHILD_COUNT: dict[ModuleName, int] = {m: sig[0] for m, sig in _SIGNATURES.items()}

#: Modules allowed at the root of a layout: the ones that produce an answer
#: rather than an attention map.
ANSWER_MODULES: frozenset[ModuleName] = frozenset(
    {
        ModuleName.CHOOSE,
        ModuleName.COMPARE,
        ModuleName.QUERY,
        ModuleName.COUNT,
        ModuleName.EXIST,
        ModuleName.AND,
        ModuleName.OR,
    }
)

#: Modules whose output is an attention map over the image.
ATTENTION_MODULES: frozenset[ModuleName] = frozenset(
    {ModuleName.FIND, ModuleName.RELOCATE, ModuleName.FILTER}
)


class LayoutError(Exception):
    """Base class for every layout parsing/validation failure."""


class LayoutSyntaxError(LayoutError):
    """Malformed surface syntax.  Carries the offset where parsing stopped."""

    def __init__(self, message: str, position: int) -> None:
        super().__init__(f"{message} (at offset {position})")
        self.position = position


class UnknownModuleError(LayoutError):
    def __init__(self, name: str, position: int) -> None:
        super().__init__(f"unknown module {name!r} (at offset {position})")
        self.name = name
        self.position = position


class ArityViolationError(LayoutError):
    """Wrong number of children or arguments for a module."""


class EmptyArgumentError(LayoutError):
    """A bracket argument was empty or whitespace-only."""


class StackUnderflowError(LayoutError):
    """A post-order step list consumed more operands than were available."""


class LeftoverOperandsError(LayoutError):
    """A post-order step list finished with more than one tree on the stack."""


@dataclass(frozen=True)
class LayoutNode:
    """One module application.  Plain data; see ``validate`` for invariants."""

    module: ModuleName
    args: tuple[str, ...] = ()
    children: tuple[LayoutNode, ...] = ()


@dataclass(frozen=True)
class Layout:
    """A parsed layout.  ``source`` keeps the original text for diagnostics
    and does not participate in equality."""

    root: LayoutNode
    source: str = field(default="", compare=False)


@dataclass(frozen=True)
class Violation:
    """One invariant breach found by ``validate``.

    ``path`` locates the offending node: "r" is the root, "r.1" its second
    child, and so on.
    """

    path: str
    rule: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def _normalize_arg(raw: str) -> str:
    return " ".join(raw.split())


def _check_node_shape(node: LayoutNode) -> None:
    """Raise if ``node`` (ignoring subtree contents) breaks its signature."""
    n_children, min_args, max_args = _SIGNATURES[node.module]
    if len(node.children) != n_children:
        raise ArityViolationError(
            f"{node.module.value} takes {n_children} children, got {len(node.children)}"
        )
    if len(node.args) < min_args or (max_args is not None and len(node.args) > max_args):
        if min_args == max_args:
            expected = str(min_args)
        elif max_args is None:
            expected = f"at least {min_args}"
        else:
            expected = f"{min_args} to {max_args}"
        raise ArityViolationError(
            f"{node.module.value} takes {expected} arguments, got {len(node.args)}"
        )
    for arg in node.args:
        if not arg:
            raise EmptyArgumentError(f"{node.module.value} has an empty argument")
    if node.module in (ModuleName.AND, ModuleName.OR):
        for child in node.children:
            if child.module is not ModuleName.EXIST:
                raise ArityViolationError(
                    f"{node.module.value} children must be Exist, got {child.module.value}"
                )
    else:
        # Everything else consumes attention maps, so answer modules can
        # only ever sit at the root (or directly under And/Or for Exist).
        for child in node.children:
            if child.module not in ATTENTION_MODULES:
                raise ArityViolationError(
                    f"{node.module.value} children must be attention modules, "
                    f"got {child.module.value}"
                )


class _Parser:
    """Recursive-descent parser over the layout surface syntax."""

    def __init__(self, text: str) -> None:
        self.text = text
        self.pos = 0

    def parse(self) -> LayoutNode:
        node = self._node()
        self._skip_ws()
        if self.pos != len(self.text):
            raise LayoutSyntaxError("trailing characters after layout", self.pos)
        return node

    def _skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def _peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def _node(self) -> LayoutNode:
        self._skip_ws()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isalpha():
            self.pos += 1
        name = self.text[start : self.pos]
        if not name:
            raise LayoutSyntaxError("expected a module name", self.pos)
        try:
            module = ModuleName(name)
        except ValueError:
            raise UnknownModuleError(name, start) from None

        args: tuple[str, ...] = ()
        self._skip_ws()
        if self._peek() == "[":
            args = self._args()

        children: tuple[LayoutNode, ...] = ()
        self._skip_ws()
        if self._peek() == "(":
            children = self._children()

        node = LayoutNode(module=module, args=args, children=children)
        _check_node_shape(node)
        return node

    def _args(self) -> tuple[str, ...]:
        self.pos += 1  # consume '['
        parts: list[str] = []
        start = self.pos
        while True:
            if self.pos >= len(self.text):
                raise LayoutSyntaxError("unterminated argument block", self.pos)
            ch = self.text[self.pos]
            if ch == ";" or ch == "]":
                arg = _normalize_arg(self.text[start : self.pos])
                if not arg:
                    raise EmptyArgumentError(
                        f"empty argument at offset {self.pos}"
                    )
                parts.append(arg)
                self.pos += 1
                if ch == "]":
                    return tuple(parts)
                start = self.pos
            else:
                self.pos += 1

    def _children(self) -> tuple[LayoutNode, ...]:
        self.pos += 1  # consume '('
        children: list[LayoutNode] = []
        while True:
            children.append(self._node())
            self._skip_ws()
            ch = self._peek()
            if ch == ",":
                self.pos += 1
            elif ch == ")":
                self.pos += 1
                return tuple(children)
            else:
                raise LayoutSyntaxError("expected ',' or ')' in child list", self.pos)


def parse_layout(text: str) -> Layout:
    """Parse layout text into a tree.

    Rejects unknown module names, arity violations, empty arguments, and
    And/Or nodes whose children are not both Exist.  Does not require the
    root to be an answer module; ``validate`` covers that, since partial
    layouts are legitimate inputs while composing.
    """
    root = _Parser(text).parse()
    return Layout(root=root, source=text)


def format_node(node: LayoutNode) -> str:
    out = node.module.value
    if node.args:
        out += "[" + ";".join(node.args) + "]"
    if node.children:
        out += "(" + ", ".join(format_node(c) for c in node.children) + ")"
    return out


def format_layout(layout: Layout) -> str:
    """Canonical single-line rendering; parse_layout(format_layout(x)) == x."""
    return format_node(layout.root)


def _validate_node(node: LayoutNode, path: str, out: list[Violation]) -> None:
    try:
        _check_node_shape(node)
    except LayoutError as exc:
        rule = "empty-arg" if isinstance(exc, EmptyArgumentError) else "arity"
        out.append(Violation(path=path, rule=rule, message=str(exc)))
    for arg in node.args:
        if arg != _normalize_arg(arg):
            out.append(
                Violation(
                    path=path,
                    rule="arg-whitespace",
                    message=f"argument {arg!r} is not whitespace-normalized",
                )
            )
    for i, child in enumerate(node.children):
        _validate_node(child, f"{path}.{i}", out)


def validate(layout: Layout) -> ValidationReport:
    """Check every structural invariant of an in-memory layout tree.

    Unlike ``parse_layout`` this also enforces that the root is an
    answer-producing module, and it reports all violations instead of
    stopping at the first.
    """
    out: list[Violation] = []
    if layout.root.module not in ANSWER_MODULES:
        out.append(
            Violation(
                path="r",
                rule="root-kind",
                message=f"root module {layout.root.module.value} does not produce an answer",
            )
        )
    _validate_node(layout.root, "r", out)
    return ValidationReport(violations=tuple(out))


@dataclass(frozen=True)
class PostorderStep:
    module: ModuleName
    args: tuple[str, ...] = ()


def to_postorder(layout: Layout) -> list[PostorderStep]:
    """Flatten a layout to post-order steps (children before parents)."""
    steps: list[PostorderStep] = []

    def walk(node: LayoutNode) -> None:
        for child in node.children:
            walk(child)
        steps.append(PostorderStep(module=node.module, args=node.args))

    walk(layout.root)
    return steps


def from_postorder(steps: list[PostorderStep]) -> Layout:
    """Rebuild a layout from post-order steps via stack evaluation.

    Each step pops as many operands as its module has children.  Raises
    ``StackUnderflowError`` when a step needs more operands than the stack
    holds (including the empty-input case) and ``LeftoverOperandsError``
    when the final stack holds more than one tree.
    """
    stack: list[LayoutNode] = []
    for step in steps:
        n = CHILD_COUNT[step.module]
        if len(stack) < n:
            raise StackUnderflowError(
                f"{step.module.value} needs {n} operands, stack has {len(stack)}"
            )
        children = tuple(stack[len(stack) - n :]) if n else ()
        if n:
            del stack[len(stack) - n :]
        node = LayoutNode(module=step.module, args=step.args, children=children)
        _check_node_shape(node)
        stack.append(node)
    if not stack:
        raise StackUnderflowError("empty step list")
    if len(stack) > 1:
        raise LeftoverOperandsError(f"{len(stack)} trees left on stack")
    root = stack[0]
    return Layout(root=root, source=format_node(root))


def steps_to_text(steps: list[PostorderStep]) -> str:
    """One step per line, ``Name[arg;arg]`` with the bracket omitted when
    there are no arguments."""
    lines = []
    for step in steps:
        line = step.module.value
        if step.args:
            line += "[" + ";".join(step.args) + "]"
        lines.append(line)
    return "\n".join(lines)


def steps_from_text(text: str) -> list[PostorderStep]:
    steps: list[PostorderStep] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        name = line
        args: tuple[str, ...] = ()
        if "[" in line:
            if not line.endswith("]"):
                raise LayoutSyntaxError(f"unterminated argument block on line {lineno}", 0)
            name, _, arg_text = line.partition("[")
            pieces = arg_text[:-1].split(";")
            normalized = tuple(_normalize_arg(p) for p in pieces)
            if any(not p for p in normalized):
                raise EmptyArgumentError(f"empty argument on line {lineno}")
            args = normalized
        try:
            module = ModuleName(name.strip())
        except ValueError:
            raise UnknownModuleError(name.strip(), 0) from None
        steps.append(PostorderStep(module=module, args=args))
    return steps
