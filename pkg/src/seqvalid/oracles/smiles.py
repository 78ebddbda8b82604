"""Validator for a Kekulé SMILES subset, and an incremental prefix automaton.

Two independent routes to the same language:

* :func:`validate_smiles` parses a complete string with recursive descent,
  builds the molecular graph and checks valences on it afterwards.
* :class:`SmilesState` consumes one token at a time, tracking only the
  remaining bond capacity of atoms that can still receive bonds, and
  :func:`min_completion` computes the fewest tokens that turn a prefix into a
  valid molecule. A padded prefix is feasible when that number fits in the
  remaining length.

Subset rules: organic atoms B C N O S P F Cl Br I outside brackets; bracket
atoms ``[`` element [``@``|``@@``] [``H`` [digit]] [sign [digit]] ``]``;
bonds ``-`` ``=`` ``#`` ``/`` ``\\`` (stereo bonds count as single);
single-digit ring bonds 1-8; branches must be non-empty and may only follow an
atom, a ring bond or another branch; the explicit bond total of each atom
(plus bracket hydrogens) must not exceed its charge-adjusted maximum valence.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Sequence as Seq

from ..alphabet import Alphabet, strip_pad
from .base import VALID, Verdict, invalid

ORGANIC = ("B", "C", "N", "O", "S", "P", "F", "Cl", "Br", "I")
ELEMENTS = ORGANIC + ("H",)
BOND_ORDER = {"-": 1, "=": 2, "#": 3, "/": 1, "\\": 1}
DIGITS = tuple("12345678")

# Allowed explicit-bond counts for neutral atoms; the maximum is what is enforced.
VALENCE_TABLE = {
    "B": {3}, "C": {4}, "N": {3}, "O": {2}, "P": {3, 5}, "S": {2, 4, 6},
    "F": {1}, "Cl": {1}, "Br": {1}, "I": {1}, "H": {1},
}
_VALENCE_ELECTRONS = {"B": 3, "C": 4, "N": 5, "O": 6, "P": 5, "S": 6,
                      "F": 7, "Cl": 7, "Br": 7, "I": 7}


def max_valence(element: str, charge: int = 0) -> int:
    """Maximum explicit bond count for ``element`` carrying ``charge``.

    Neutral atoms use the table. Charged atoms follow the octet rule on the
    charge-shifted electron count, so N+ -> 4, O+ -> 3, O- -> 1, C+/C- -> 3,
    B- -> 4, halide anions -> 0. Charged hydrogen forms no bonds.
    """
    if charge == 0:
        return max(VALENCE_TABLE[element])
    if element == "H":
        return 0
    e = _VALENCE_ELECTRONS[element] - charge
    if e <= 0 or e >= 8:
        return 0
    return min(e, 8 - e)


# --- complete-string validator ----------------------------------------------

class _Reject(Exception):
    pass


class _MoleculeParser:
    def __init__(self, tokens: list[str]):
        self.toks = tokens
        self.pos = 0
        self.atoms: list[tuple[str, int, int]] = []   # element, charge, hcount
        self.bonds: list[tuple[int, int, int]] = []   # a, b, order
        self.open_rings: dict[str, tuple[int, int | None]] = {}

    def peek(self):
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def fail(self, msg):
        raise _Reject(f"{msg} at token {self.pos}")

    def parse(self):
        if not self.toks:
            raise _Reject("empty string")
        self.chain(None, None)
        if self.pos != len(self.toks):
            self.fail(f"unexpected {self.peek()!r}")
        if self.open_rings:
            raise _Reject(f"unclosed ring bond {sorted(self.open_rings)}")
        used = [h for (_, _, h) in self.atoms]
        for a, b, order in self.bonds:
            used[a] += order
            used[b] += order
        for i, ((el, charge, _), n) in enumerate(zip(self.atoms, used)):
            if n > max_valence(el, charge):
                raise _Reject(f"valence exceeded on atom {i} ({el}, {n} bonds)")

    def bond_symbol(self):
        tok = self.peek()
        if tok in BOND_ORDER:
            self.pos += 1
            return BOND_ORDER[tok]
        return None

    def chain(self, parent, order):
        """chain := branched_atom (bond? branched_atom)*"""
        cur = self.branched_atom(parent, order)
        while True:
            tok = self.peek()
            if tok is None or tok == ")":
                return
            order = self.bond_symbol()
            cur = self.branched_atom(cur, order)

    def branched_atom(self, parent, order):
        """branched_atom := atom ring_bond* branch*"""
        idx = self.atom()
        if parent is not None:
            self.bonds.append((parent, idx, order or 1))
        while True:
            save = self.pos
            order = self.bond_symbol()
            if self.peek() in DIGITS:
                self.ring_bond(idx, order)
                continue
            self.pos = save
            break
        while self.peek() == "(":
            self.pos += 1
            order = self.bond_symbol()
            if self.peek() is None or self.peek() == ")":
                self.fail("empty branch")
            self.chain(idx, order)
            if self.peek() != ")":
                self.fail("unclosed branch")
            self.pos += 1
        return idx

    def ring_bond(self, atom, order):
        digit = self.toks[self.pos]
        self.pos += 1
        if digit not in self.open_rings:
            self.open_rings[digit] = (atom, order)
            return
        other, other_order = self.open_rings.pop(digit)
        if other == atom:
            self.fail(f"ring bond {digit} closes on its own atom")
        if order is not None and other_order is not None and order != other_order:
            self.fail(f"ring bond {digit} order mismatch")
        self.bonds.append((other, atom, order or other_order or 1))

    def atom(self):
        tok = self.peek()
        if tok in ORGANIC:
            self.pos += 1
            self.atoms.append((tok, 0, 0))
            return len(self.atoms) - 1
        if tok == "[":
            return self.bracket_atom()
        self.fail(f"expected atom, got {tok!r}")

    def bracket_atom(self):
        self.pos += 1
        el = self.peek()
        if el not in ELEMENTS:
            self.fail("bracket without element")
        self.pos += 1
        if self.peek() == "@":
            self.pos += 1
            if self.peek() == "@":
                self.pos += 1
        hcount = 0
        if self.peek() == "H":
            self.pos += 1
            hcount = 1
            if self.peek() in DIGITS:
                hcount = int(self.peek())
                self.pos += 1
        charge = 0
        if self.peek() in ("+", "-"):
            sign = 1 if self.peek() == "+" else -1
            self.pos += 1
            charge = sign
            if self.peek() in DIGITS:
                charge = sign * int(self.peek())
                self.pos += 1
        if self.peek() != "]":
            self.fail("malformed bracket atom")
        self.pos += 1
        self.atoms.append((el, charge, hcount))
        return len(self.atoms) - 1


def validate_smiles_tokens(tokens: Seq[str]) -> Verdict:
    try:
        _MoleculeParser(list(tokens)).parse()
    except _Reject as exc:
        return invalid(str(exc))
    return VALID


def validate_smiles(text: str) -> Verdict:
    from ..alphabet import smiles_alphabet, tokenize
    from ..errors import UnknownSymbol

    alpha = smiles_alphabet(pad=False)
    try:
        seq = tokenize(text, alpha)
    except UnknownSymbol as exc:
        return invalid(str(exc))
    return validate_smiles_tokens([alpha.tokens[i] for i in seq])


def padded_smiles_validator(alphabet: Alphabet):
    """Validator over index sequences that may carry a PAD suffix."""
    toks = alphabet.tokens
    pad = alphabet.pad_index

    def check(seq) -> bool:
        core = strip_pad(seq, alphabet)
        if pad is not None and pad in core:
            return False
        return validate_smiles_tokens([toks[i] for i in core]).valid

    return check


# --- incremental automaton --------------------------------------------------

START, ATOM, OPEN, CLOSE, BOND_RING, BOND_ATOM, BRACKET, PADDED = range(8)
INF = 10 ** 9

# bracket phases
B_OPEN, B_ELEM, B_CHIR1, B_CHIR2, B_H, B_HDIG, B_CHG, B_CHGDIG = range(8)


class SmilesState:
    """Parse state of a SMILES prefix.

    ``free`` maps atom ids to their unused bond capacity and only holds atoms
    that may still gain bonds: the current atom, branch points on the stack
    and ring-bond openers.
    """

    __slots__ = ("last", "pending", "cur", "stack", "rings", "free", "next_id",
                 "bracket", "violation")

    def __init__(self):
        self.last = START
        self.pending = 0
        self.cur = None
        self.stack: tuple = ()
        self.rings: dict = {}
        self.free: dict = {}
        self.next_id = 0
        self.bracket = None      # (phase, element, hcount, charge, order, last_before)
        self.violation = None

    def copy(self) -> "SmilesState":
        s = SmilesState.__new__(SmilesState)
        s.last = self.last
        s.pending = self.pending
        s.cur = self.cur
        s.stack = self.stack
        s.rings = dict(self.rings)
        s.free = dict(self.free)
        s.next_id = self.next_id
        s.bracket = self.bracket
        s.violation = self.violation
        return s

    @property
    def ok(self) -> bool:
        return self.violation is None

    @property
    def complete(self) -> bool:
        return self.violation is None and (self.last == PADDED or (
            self.last in (ATOM, CLOSE) and not self.stack and not self.rings))

    def _gc(self, atom):
        if atom is None or atom == self.cur:
            return
        if any(bp == atom for bp in self.stack):
            return
        if any(r[0] == atom for r in self.rings.values()):
            return
        self.free.pop(atom, None)

    def _new_atom(self, capacity: int) -> bool:
        order = self.pending or 1
        prev = self.cur
        if prev is not None:
            if self.free[prev] < order:
                return self._fail("valence exceeded")
            self.free[prev] -= order
            if capacity < order:
                return self._fail("valence exceeded")
            capacity -= order
        elif capacity < 0:
            return self._fail("valence exceeded")
        atom = self.next_id
        self.next_id += 1
        self.free[atom] = capacity
        self.cur = atom
        self.pending = 0
        self.last = ATOM
        self._gc(prev)
        return True

    def _fail(self, msg) -> bool:
        self.violation = msg
        return False

    def push(self, tok: str) -> bool:
        """Consume one token; returns False (and records why) on a violation."""
        if self.violation is not None:
            return False
        last = self.last
        if last == PADDED:
            return True if tok is None else self._fail("token after padding")
        if tok is None:      # PAD
            if not self.complete:
                return self._fail("padding before the molecule is complete")
            self.last = PADDED
            return True
        if last == BRACKET:
            return self._push_bracket(tok)
        if tok in ORGANIC:
            return self._new_atom(max_valence(tok))
        if tok == "[":
            self.bracket = (B_OPEN, None, 0, 0)
            self.last = BRACKET
            return True
        if last == START:
            return self._fail("must start with an atom")
        if tok in BOND_ORDER:
            if last not in (ATOM, OPEN, CLOSE):
                return self._fail("misplaced bond")
            order = BOND_ORDER[tok]
            if self.free[self.cur] < order:
                return self._fail("valence exceeded")
            self.pending = order
            self.last = BOND_RING if last == ATOM else BOND_ATOM
            return True
        if tok in DIGITS:
            if last not in (ATOM, BOND_RING):
                return self._fail("ring bond must follow an atom")
            return self._ring(tok)
        if tok == "(":
            if last not in (ATOM, CLOSE):
                return self._fail("misplaced '('")
            self.stack = self.stack + (self.cur,)
            self.last = OPEN
            return True
        if tok == ")":
            if last not in (ATOM, CLOSE) or not self.stack:
                return self._fail("misplaced ')'")
            prev = self.cur
            self.cur = self.stack[-1]
            self.stack = self.stack[:-1]
            self.last = CLOSE
            self._gc(prev)
            return True
        return self._fail(f"{tok!r} outside brackets")

    def _ring(self, digit) -> bool:
        cur = self.cur
        if digit in self.rings:
            opener, order, explicit = self.rings[digit]
            if opener == cur:
                return self._fail("ring bond closes on its own atom")
            if self.pending:
                if explicit and self.pending != order:
                    return self._fail("ring bond order mismatch")
                if not explicit and self.pending > order:
                    extra = self.pending - order
                    if self.free[opener] < extra:
                        return self._fail("valence exceeded")
                    self.free[opener] -= extra
                order = self.pending
            if self.free[cur] < order:
                return self._fail("valence exceeded")
            self.free[cur] -= order
            del self.rings[digit]
            self._gc(opener)
        else:
            order = self.pending or 1
            if self.free[cur] < order:
                return self._fail("valence exceeded")
            self.free[cur] -= order
            self.rings[digit] = (cur, order, bool(self.pending))
        self.pending = 0
        self.last = ATOM
        return True

    def _push_bracket(self, tok) -> bool:
        phase, el, h, q = self.bracket
        if phase == B_OPEN:
            if tok not in ELEMENTS:
                return self._fail("bracket must start with an element")
            self.bracket = (B_ELEM, tok, 0, 0)
            return True
        if tok == "]":
            capacity = max_valence(el, q) - h
            if capacity < 0:
                return self._fail("valence exceeded")
            self.bracket = None
            return self._new_atom(capacity)
        if tok == "@" and phase in (B_ELEM, B_CHIR1):
            self.bracket = (B_CHIR1 if phase == B_ELEM else B_CHIR2, el, h, q)
            return True
        if tok == "H" and phase in (B_ELEM, B_CHIR1, B_CHIR2):
            self.bracket = (B_H, el, 1, q)
            return True
        if tok in DIGITS and phase == B_H:
            self.bracket = (B_HDIG, el, int(tok), q)
            return True
        if tok in ("+", "-") and phase in (B_ELEM, B_CHIR1, B_CHIR2, B_H, B_HDIG):
            self.bracket = (B_CHG, el, h, 1 if tok == "+" else -1)
            return True
        if tok in DIGITS and phase == B_CHG:
            self.bracket = (B_CHGDIG, el, h, q * int(tok))
            return True
        return self._fail(f"malformed bracket atom at {tok!r}")


@dataclass(frozen=True)
class CompletionToolkit:
    """What an alphabet offers for completing a prefix."""

    best_atom: int            # highest neutral capacity among organic atom tokens (0 if none)
    close_paren: bool
    bracket: bool             # '[' and ']' both present
    elements: tuple           # elements usable inside brackets
    signs: tuple
    digits: tuple

    @classmethod
    def for_tokens(cls, tokens) -> "CompletionToolkit":
        tokens = set(tokens)
        organic = [max_valence(t) for t in ORGANIC if t in tokens]
        return cls(
            best_atom=max(organic, default=0),
            close_paren=")" in tokens,
            bracket="[" in tokens and "]" in tokens,
            elements=tuple(e for e in ELEMENTS if e in tokens),
            signs=tuple(s for s in ("+", "-") if s in tokens),
            digits=tuple(d for d in DIGITS if d in tokens),
        )


FULL_TOOLKIT = CompletionToolkit.for_tokens(
    ORGANIC + ("H", "@", "[", "]", "(", ")", "+", "-") + DIGITS + tuple(BOND_ORDER))


@functools.lru_cache(maxsize=4096)
def _bracket_options(bracket: tuple, kit: CompletionToolkit) -> tuple:
    """Pareto set of (tokens needed, resulting capacity) to close a bracket."""
    phase, el, h, q = bracket
    if not kit.bracket:
        return ()
    options = {}

    def add(cost, element, hcount, charge):
        cap = max_valence(element, charge) - hcount
        if cap >= 0 and options.get(cost, -1) < cap:
            options[cost] = cap

    elements = (el,) if phase != B_OPEN else kit.elements
    base = 0 if phase != B_OPEN else 1
    for element in elements:
        add(base + 1, element, h, q)
        if phase in (B_OPEN, B_ELEM, B_CHIR1, B_CHIR2, B_H, B_HDIG):
            for s in kit.signs:
                sign = 1 if s == "+" else -1
                add(base + 2, element, h, sign)
                for d in kit.digits:
                    add(base + 3, element, h, sign * int(d))
        elif phase == B_CHG:
            for d in kit.digits:
                add(base + 2, element, h, q * int(d))
    pareto = []
    best = -1
    for cost in sorted(options):
        if options[cost] > best:
            pareto.append((cost, options[cost]))
            best = options[cost]
    return tuple(pareto)


@functools.lru_cache(maxsize=65536)
def _can_pack(orders: tuple, own: tuple, host0: int, bins: tuple) -> bool:
    """Can ring closures be placed into bins?

    ``orders`` are rings anyone may host, ``own`` are rings the current atom
    opened (it cannot host those), ``host0`` the current atom's spare capacity
    (-1 when it cannot host at all) and ``bins`` the capacities of fresh atoms.
    """
    items = sorted([(o, False) for o in orders] + [(o, True) for o in own], reverse=True)
    caps = [host0] + list(bins)

    def place(i):
        if i == len(items):
            return True
        order, is_own = items[i]
        tried = set()
        for b in range(len(caps)):
            if is_own and b == 0:
                continue
            if caps[b] < order or (b > 0 and caps[b] in tried):
                continue
            if b > 0:
                tried.add(caps[b])
            caps[b] -= order
            if place(i + 1):
                caps[b] += order
                return True
            caps[b] += order
        return False

    return place(0)


def _settled_cost(state: SmilesState, kit: CompletionToolkit) -> int:
    """Fewest tokens to finish from a state with no pending bond or bracket."""
    last = state.last
    if last == PADDED:
        return 0
    if last == START:
        if kit.best_atom > 0:
            return 1
        return 3 if kit.bracket and kit.elements else INF
    depth = len(state.stack)
    if depth and not kit.close_paren:
        return INF
    cur = state.cur
    rings = state.rings
    must_attach = last == OPEN
    if not rings and not must_attach:
        return depth

    A = kit.best_atom
    f0 = state.free[cur]
    orders = tuple(sorted(o for (a, o, _) in rings.values() if a != cur))
    own = tuple(sorted(o for (a, o, _) in rings.values() if a == cur))
    host = last == ATOM

    # chains may hang off the current atom or any branch point reached by ')'
    levels = (cur,) + tuple(reversed(state.stack))
    n_cur = sum(1 for a in levels if a == cur)
    others: dict = {}
    for a in levels:
        if a != cur:
            others[a] = others.get(a, 0) + 1
    other_slots = sum(min(n, state.free[a]) for a, n in others.items())

    R = len(rings)
    for F in range(0, R + 3):
        if F == 0:
            if must_attach:
                continue
            if _can_pack(orders, own, f0 if host else -1, ()):
                return R + depth
            continue
        if A < 1:
            break
        for m in range(1, F + 1):
            if F - m > 0 and A < 2:
                continue
            bins = (A - 1,) * m + (A - 2,) * (F - m)
            for j0 in range(max(1 if must_attach else 0, m - other_slots), min(n_cur, m) + 1):
                if f0 - j0 < 0:
                    continue
                if _can_pack(orders, own, (f0 - j0) if host else -1, bins):
                    return R + depth + F
    return INF


def min_completion(state: SmilesState, kit: CompletionToolkit = FULL_TOOLKIT) -> int:
    """Fewest further tokens that complete ``state`` into a valid molecule.

    Exact when the toolkit's best organic atom has capacity >= 3 (carbon or
    better); returns ``INF`` when no completion exists.
    """
    if state.violation is not None:
        return INF
    if state.last == BRACKET:
        best = INF
        for cost, cap in _bracket_options(state.bracket, kit):
            s = state.copy()
            s.bracket = None
            if s._new_atom(cap):
                best = min(best, cost + _settled_cost(s, kit))
        return best
    if state.last in (BOND_RING, BOND_ATOM):
        best = INF
        order = state.pending
        if state.last == BOND_RING:
            for digit in list(state.rings):
                s = state.copy()
                if s._ring(digit):
                    best = min(best, 1 + _settled_cost(s, kit))
        if kit.best_atom >= order:
            s = state.copy()
            if s._new_atom(kit.best_atom):
                best = min(best, 1 + _settled_cost(s, kit))
        for cost, cap in _bracket_options((B_OPEN, None, 0, 0), kit):
            if cap >= order:
                s = state.copy()
                if s._new_atom(cap):
                    best = min(best, 1 + cost + _settled_cost(s, kit))
        return best
    return _settled_cost(state, kit)


def state_for(tokens: Seq[str | None]) -> SmilesState:
    """Run the automaton over ``tokens`` (``None`` stands for PAD)."""
    s = SmilesState()
    for tok in tokens:
        if not s.push(tok):
            break
    return s


class SmilesPrefixOracle:
    """Exact prefix feasibility for padded SMILES sequences of length ``T``."""

    def __init__(self, alphabet: Alphabet, T: int):
        self.alphabet = alphabet
        self.T = T
        self.kit = CompletionToolkit.for_tokens(
            t for i, t in enumerate(alphabet.tokens) if i != alphabet.pad_index)
        self._tok = [None if i == alphabet.pad_index else t for i, t in enumerate(alphabet.tokens)]

    def state(self, prefix: Seq[int]) -> SmilesState:
        return state_for([self._tok[i] for i in prefix])

    def advance(self, state: SmilesState, index: int) -> SmilesState:
        s = state.copy()
        s.push(self._tok[index])
        return s

    def feasible_state(self, state: SmilesState, length: int) -> bool:
        return min_completion(state, self.kit) <= self.T - length

    def __call__(self, prefix: Seq[int]) -> bool:
        if len(prefix) > self.T:
            return False
        return self.feasible_state(self.state(prefix), len(prefix))

    def allowed_next(self, state: SmilesState, length: int) -> list[bool]:
        """Feasibility of every token appended to a prefix in ``state``."""
        out = []
        for i in range(self.alphabet.size):
            s = self.advance(state, i)
            out.append(s.ok and min_completion(s, self.kit) <= self.T - length - 1)
        return out


def smiles_prefix_feasible(prefix: Seq[int], remaining: int, alphabet: Alphabet) -> bool:
    """1 iff the prefix violates nothing yet and can be completed within ``remaining`` tokens."""
    oracle = SmilesPrefixOracle(alphabet, len(prefix) + remaining)
    return oracle(prefix)
