# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled transitive-closure kernel; mirrors _closure_py.closure_indexed."""

from cpython cimport array
import array


def closure_indexed(list sets, int n_links):
    cdef array.array parent_arr = array.array("i", range(n_links))
    cdef int[:] parent = parent_arr
    cdef int i, j, root, r, anchor, x
    cdef list s, out, mem

    for s in sets:
        if len(s) > 1:
            anchor = _find(parent, <int> s[0])
            for j in range(1, len(s)):
                x = <int> s[j]
                r = _find(parent, x)
                if r != anchor:
                    parent[r] = anchor

    members = {}
    for i in range(n_links):
        root = _find(parent, i)
        mem = members.get(root)
        if mem is None:
            members[root] = [i]
        else:
            mem.append(i)

    out = []
    for s in sets:
        if s:
            out.append(members[_find(parent, <int> s[0])])
        else:
            out.append([])
    return out


cdef int _find(int[:] parent, int i):
    cdef int root = i
    cdef int nxt
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:
        nxt = parent[i]
        parent[i] = root
        i = nxt
    return root
