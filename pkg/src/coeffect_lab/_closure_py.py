"""Pure-Python transitive-closure kernel.

The compiled twin lives in _closure_cy.pyx; _kernel picks one at import.
Both operate on integer-indexed link sets so the caller owns all naming.
"""

from __future__ import annotations


def closure_indexed(sets: list[list[int]], n_links: int) -> list[list[int]]:
    """Saturate a family of link sets.

    Links that co-occur in any input set are merged into one equivalence
    class; the closure of a non-empty set is the full class of its members.
    Empty sets stay empty. Input ids must lie in range(n_links).
    """
    parent = list(range(n_links))

    def find(i: int) -> int:
        root = i
        while parent[root] != root:
            root = parent[root]
        while parent[i] != root:
            parent[i], i = root, parent[i]
        return root

    for s in sets:
        if len(s) > 1:
            anchor = find(s[0])
            for x in s[1:]:
                r = find(x)
                if r != anchor:
                    parent[r] = anchor

    members: dict[int, list[int]] = {}
    for i in range(n_links):
        members.setdefault(find(i), []).append(i)

    out: list[list[int]] = []
    for s in sets:
        if s:
            out.append(members[find(s[0])])
        else:
            out.append([])
    return out
