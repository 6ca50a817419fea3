"""Aho-Corasick automaton for a set of target words."""

from collections import deque

import numpy as np

from .symbolic import as_word


class PatternAutomaton:
    """Deterministic, total automaton recognising occurrences of any target word.

    States are the nodes of the trie of target words (state 0 is the empty
    prefix). ``delta[s, a]`` follows failure links, so after reading a
    string the state is its longest suffix that is a prefix of some target;
    ``accept[s]`` is true when that string ends with a target word.
    """

    def __init__(self, words, alphabet_size):
        words = [as_word(w) for w in words]
        if not words:
            raise ValueError("automaton needs at least one word")
        A = int(alphabet_size)
        children = [{}]
        terminal = [False]
        depth = [0]
        for w in words:
            s = 0
            for a in w:
                if not 0 <= a < A:
                    raise ValueError(f"symbol {a} outside alphabet of size {A}")
                nxt = children[s].get(a)
                if nxt is None:
                    nxt = len(children)
                    children[s][a] = nxt
                    children.append({})
                    terminal.append(False)
                    depth.append(depth[s] + 1)
                s = nxt
            terminal[s] = True

        n = len(children)
        delta = np.zeros((n, A), dtype=np.int32)
        fail = np.zeros(n, dtype=np.int64)
        accept = np.array(terminal, dtype=bool)
        queue = deque()
        for a in range(A):
            c = children[0].get(a)
            if c is not None:
                delta[0, a] = c
                queue.append(c)
        while queue:
            s = queue.popleft()
            accept[s] |= accept[fail[s]]
            for a in range(A):
                c = children[s].get(a)
                if c is None:
                    delta[s, a] = delta[fail[s], a]
                else:
                    fail[c] = delta[fail[s], a]
                    delta[s, a] = c
                    queue.append(c)

        self.alphabet_size = A
        self.words = words
        self.delta = delta
        self.accept = accept
        self.depth = np.array(depth, dtype=np.int64)
        self.fail = fail

    @property
    def n_states(self):
        return self.delta.shape[0]

    @property
    def max_length(self):
        return max(len(w) for w in self.words)

    def run(self, symbols, state=0):
        for a in symbols:
            state = int(self.delta[state, a])
        return state

    def occurrences(self, symbols):
        """End positions (0-based) at which a target word finishes."""
        state, out = 0, []
        for i, a in enumerate(symbols):
            state = int(self.delta[state, a])
            if self.accept[state]:
                out.append(i)
        return out
