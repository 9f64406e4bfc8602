"""A small strict-DOM HTML tree builder on top of the stdlib tokenizer.

One tree per document, with defined recovery: void elements never open,
known optional-end-tag elements are auto-closed by the start tags that
imply them, a stray end tag closes the nearest matching open element and
anything above it, and an unmatched end tag is dropped.  Comments,
doctypes and processing instructions contribute no text.  Entity and
character references are decoded into text except inside script/style.
"""
from __future__ import annotations

from html.parser import HTMLParser
from typing import Iterator

VOID_ELEMENTS = frozenset(
    "area base basefont br col embed frame hr img input isindex keygen "
    "link meta param source track wbr".split()
)

# End tag may be omitted; an unclosed open of these is not a structural fault.
OPTIONAL_END_ELEMENTS = frozenset(
    "html head body p li dt dd rt rp optgroup option colgroup "
    "thead tbody tfoot tr td th".split()
)

# Start tags that implicitly close a currently open element of the given name.
_IMPLIED_CLOSERS = {
    "p": frozenset(
        "address article aside blockquote div dl fieldset footer form h1 h2 h3 "
        "h4 h5 h6 header hr main nav ol p pre section table ul".split()
    ),
    "li": frozenset(["li"]),
    "dt": frozenset(["dt", "dd"]),
    "dd": frozenset(["dt", "dd"]),
    "tr": frozenset(["tr"]),
    "td": frozenset(["td", "th", "tr"]),
    "th": frozenset(["td", "th", "tr"]),
    "thead": frozenset(["tbody", "tfoot"]),
    "tbody": frozenset(["tbody", "tfoot"]),
    "option": frozenset(["option", "optgroup"]),
    "head": frozenset(["body"]),
}


class Element:
    """One element; children is an in-order list of Elements and text strings."""

    __slots__ = ("tag", "attrs", "children", "parent")

    def __init__(self, tag: str, attrs: dict[str, str] | None = None):
        self.tag = tag
        self.attrs = attrs or {}
        self.children: list[Element | str] = []
        self.parent: Element | None = None

    def get(self, name: str) -> str | None:
        return self.attrs.get(name)

    def append(self, child: "Element | str") -> None:
        if isinstance(child, Element):
            child.parent = self
        self.children.append(child)

    def iter(self, tag: str | None = None) -> Iterator["Element"]:
        """All descendant elements (and self) in document order, optionally by tag."""
        if self.tag != "#document" and (tag is None or self.tag == tag):
            yield self
        for child in self.children:
            if isinstance(child, Element):
                yield from child.iter(tag)

    def drop(self) -> None:
        """Remove this element and its subtree; sibling (tail) text stays put."""
        if self.parent is not None:
            self.parent.children.remove(self)
            self.parent = None

    def text_content(self) -> str:
        parts: list[str] = []
        stack: list[Element | str] = [self]
        while stack:
            node = stack.pop()
            if isinstance(node, str):
                parts.append(node)
            else:
                stack.extend(reversed(node.children))
        return "".join(parts)

    def __repr__(self):
        return f"<Element {self.tag} {self.attrs!r} children={len(self.children)}>"


class _TreeBuilder(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.root = Element("#document")
        self.stack: list[Element] = [self.root]

    @property
    def _top(self) -> Element:
        return self.stack[-1]

    def _open_tags(self) -> list[str]:
        return [e.tag for e in self.stack[1:]]

    def handle_starttag(self, tag, attrs):
        closers = _IMPLIED_CLOSERS
        while len(self.stack) > 1 and tag in closers.get(self._top.tag, ()):
            self.stack.pop()
        attr_map: dict[str, str] = {}
        for name, value in attrs:
            attr_map.setdefault(name, value if value is not None else "")
        element = Element(tag, attr_map)
        self._top.append(element)
        if tag not in VOID_ELEMENTS:
            self.stack.append(element)

    def handle_startendtag(self, tag, attrs):
        attr_map: dict[str, str] = {}
        for name, value in attrs:
            attr_map.setdefault(name, value if value is not None else "")
        self._top.append(Element(tag, attr_map))

    def handle_endtag(self, tag):
        if tag in VOID_ELEMENTS:
            return
        for i in range(len(self.stack) - 1, 0, -1):
            if self.stack[i].tag == tag:
                del self.stack[i:]
                return
        # no matching open element: drop the stray end tag

    def handle_data(self, data):
        if not data:
            return
        # whitespace between the document root, <html> and <head> is not
        # content (HTML5 ignores it before head); keep everything else
        if self._top.tag in ("#document", "html") and data.isspace():
            return
        self._top.append(data)

    # comments, doctype, PIs and CDATA produce no tree content
    def handle_comment(self, data):
        pass

    def handle_decl(self, decl):
        pass

    def handle_pi(self, data):
        pass

    def unknown_decl(self, data):
        pass


def parse_document(text: str) -> Element:
    """Parse HTML text into a single tree rooted at a synthetic #document node."""
    builder = _TreeBuilder()
    builder.feed(text)
    builder.close()
    return builder.root
