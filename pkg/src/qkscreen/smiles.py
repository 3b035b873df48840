"""SMILES parsing and structural descriptors.

The parser covers the organic subset (``B C N O P S F Cl Br I`` and the
aromatic ``b c n o p s``), bracket atoms with charge and hydrogen count,
branches, ring closures (``0-9`` and ``%nn``), the bond symbols
``- = # :`` and dot-disconnected fragments.  Stereo markers are accepted
and ignored.  Aromaticity is taken from the input as written; no
perception or kekulization is attempted.
"""

from __future__ import annotations

import math

from dataclasses import dataclass, field

# (standard atomic weight, valence electrons)
ELEMENTS: dict[str, tuple[float, int]] = {
    "H": (1.008, 1),
    "He": (4.003, 2),
    "Li": (6.941, 1),
    "Be": (9.012, 2),
    "B": (10.811, 3),
    "C": (12.011, 4),
    "N": (14.007, 5),
    "O": (15.999, 6),
    "F": (18.998, 7),
    "Ne": (20.180, 8),
    "Na": (22.990, 1),
    "Mg": (24.305, 2),
    "Al": (26.982, 3),
    "Si": (28.086, 4),
    "P": (30.974, 5),
    "S": (32.065, 6),
    "Cl": (35.453, 7),
    "Ar": (39.948, 8),
    "K": (39.098, 1),
    "Ca": (40.078, 2),
    "Mn": (54.938, 7),
    "Fe": (55.845, 8),
    "Co": (58.933, 9),
    "Ni": (58.693, 10),
    "Cu": (63.546, 11),
    "Zn": (65.380, 12),
    "Ga": (69.723, 3),
    "Ge": (72.640, 4),
    "As": (74.922, 5),
    "Se": (78.960, 6),
    "Br": (79.904, 7),
    "Kr": (83.798, 8),
    "Sr": (87.620, 2),
    "Ag": (107.868, 11),
    "Sn": (118.710, 4),
    "Sb": (121.760, 5),
    "Te": (127.600, 6),
    "I": (126.904, 7),
    "Xe": (131.293, 8),
    "Pt": (195.084, 10),
    "Au": (196.967, 11),
    "Hg": (200.590, 12),
    "Pb": (207.200, 4),
    "Bi": (208.980, 5),
}

DEFAULT_VALENCE: dict[str, tuple[int, ...]] = {
    "B": (3,),
    "C": (4,),
    "N": (3,),
    "O": (2,),
    "P": (3, 5),
    "S": (2, 4, 6),
    "F": (1,),
    "Cl": (1,),
    "Br": (1,),
    "I": (1,),
}

ORGANIC = ("Cl", "Br", "B", "C", "N", "O", "P", "S", "F", "I")
AROMATIC_ORGANIC = ("b", "c", "n", "o", "p", "s")
AROMATIC_BRACKET = ("se", "as", "te", "b", "c", "n", "o", "p", "s")
# aromatic atoms that donate a lone pair rather than take part in a pi bond
_LONE_PAIR_DONORS = {"O", "S", "Se", "Te"}

SINGLE, DOUBLE, TRIPLE, AROMATIC = "single", "double", "triple", "aromatic"
_BOND_SYMBOLS = {"-": SINGLE, "=": DOUBLE, "#": TRIPLE, ":": AROMATIC, "/": SINGLE, "\\": SINGLE}
_BOND_VALENCE = {SINGLE: 1, DOUBLE: 2, TRIPLE: 3, AROMATIC: 1}

DESCRIPTOR_NAMES = (
    "count_C",
    "count_N",
    "count_O",
    "count_P",
    "count_S",
    "count_F",
    "count_Cl",
    "count_Br",
    "count_I",
    "single_bonds",
    "double_bonds",
    "num_aromatic_atoms",
    "aromatic_proportion",
    "num_heteroatoms",
    "mol_wt",
    "num_valence_electrons",
)


class SmilesError(ValueError):
    """Raised for malformed SMILES; ``position`` is the 0-based offset."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.reason = message
        self.position = position


@dataclass
class Atom:
    symbol: str
    aromatic: bool = False
    charge: int = 0
    explicit_h: int = 0
    bracket: bool = False
    implicit_h: int = 0

    @property
    def total_h(self) -> int:
        return self.explicit_h + self.implicit_h


@dataclass
class Bond:
    a: int
    b: int
    order: str


@dataclass
class MolecularGraph:
    atoms: list[Atom] = field(default_factory=list)
    bonds: list[Bond] = field(default_factory=list)

    def neighbors(self, index: int) -> list[int]:
        out = []
        for bond in self.bonds:
            if bond.a == index:
                out.append(bond.b)
            elif bond.b == index:
                out.append(bond.a)
        return out

    def heavy_atoms(self) -> list[Atom]:
        return [a for a in self.atoms if a.symbol != "H"]


class _Parser:
    def __init__(self, text: str):
        self.s = text
        self.i = 0
        self.graph = MolecularGraph()
        self.pairs: set[frozenset[int]] = set()
        self.rings: dict[int, tuple[int, str | None, int]] = {}
        self.positions: list[int] = []

    def error(self, message: str, pos: int | None = None):
        raise SmilesError(message, self.i if pos is None else pos)

    def add_bond(self, a: int, b: int, order: str | None, pos: int):
        if a == b:
            self.error("atom bonded to itself", pos)
        key = frozenset((a, b))
        if key in self.pairs:
            self.error("duplicate bond", pos)
        if order is None:
            both = self.graph.atoms[a].aromatic and self.graph.atoms[b].aromatic
            order = AROMATIC if both else SINGLE
        self.pairs.add(key)
        self.graph.bonds.append(Bond(a, b, order))

    def parse(self) -> MolecularGraph:
        s = self.s
        prev: int | None = None
        stack: list[int | None] = []
        pending: str | None = None
        pending_pos = 0
        while self.i < len(s):
            ch = s[self.i]
            start = self.i
            if ch == "(":
                if prev is None:
                    self.error("branch without preceding atom")
                stack.append(prev)
                self.i += 1
            elif ch == ")":
                if not stack:
                    self.error("unmatched ')'")
                if pending is not None:
                    self.error("dangling bond symbol", pending_pos)
                prev = stack.pop()
                self.i += 1
            elif ch in _BOND_SYMBOLS:
                if pending is not None or prev is None:
                    self.error("misplaced bond symbol")
                pending, pending_pos = _BOND_SYMBOLS[ch], start
                self.i += 1
            elif ch == ".":
                if pending is not None or prev is None:
                    self.error("misplaced '.'")
                prev = None
                self.i += 1
            elif ch.isdigit() or ch == "%":
                if prev is None:
                    self.error("ring closure without atom")
                self._ring_closure(prev, pending, pending_pos)
                pending = None
            else:
                idx = self._atom()
                if prev is not None:
                    self.add_bond(prev, idx, pending, start)
                elif pending is not None:
                    self.error("dangling bond symbol", pending_pos)
                pending = None
                prev = idx
        if stack:
            self.error("unmatched '('")
        if pending is not None:
            self.error("dangling bond symbol", pending_pos)
        if self.rings:
            digit, (_, _, pos) = next(iter(self.rings.items()))
            self.error(f"unmatched ring closure {digit}", pos)
        if not self.graph.atoms:
            self.error("no atoms", 0)
        self._assign_hydrogens()
        return self.graph

    def _ring_closure(self, prev: int, order: str | None, order_pos: int):
        s, start = self.s, self.i
        if s[self.i] == "%":
            digits = s[self.i + 1:self.i + 3]
            if len(digits) != 2 or not digits.isdigit():
                self.error("bad %nn ring closure")
            number = int(digits)
            self.i += 3
        else:
            number = int(s[self.i])
            self.i += 1
        if number in self.rings:
            other, other_order, _ = self.rings.pop(number)
            if order and other_order and order != other_order:
                self.error("conflicting ring-closure bond orders", start)
            self.add_bond(other, prev, order or other_order, start)
        else:
            self.rings[number] = (prev, order, start)

    def _atom(self) -> int:
        s, i = self.s, self.i
        if s[i] == "[":
            return self._bracket_atom()
        for sym in ORGANIC:
            if s.startswith(sym, i):
                self.i += len(sym)
                return self._new_atom(Atom(sym), i)
        if s[i] in AROMATIC_ORGANIC:
            self.i += 1
            return self._new_atom(Atom(s[i].upper(), aromatic=True), i)
        if s[i] in "@":
            self.error("stereo marker outside brackets")
        self.error(f"unknown token {s[i]!r}")

    def _new_atom(self, atom: Atom, pos: int) -> int:
        self.positions.append(pos)
        self.graph.atoms.append(atom)
        return len(self.graph.atoms) - 1

    def _bracket_atom(self) -> int:
        s, open_pos = self.s, self.i
        close = s.find("]", open_pos)
        if close < 0:
            self.error("unclosed '['")
        body = s[open_pos + 1:close]
        j = 0
        while j < len(body) and body[j].isdigit():  # isotope, ignored
            j += 1
        symbol, aromatic = None, False
        for cand in AROMATIC_BRACKET:
            if body.startswith(cand, j):
                symbol, aromatic = cand.capitalize(), True
                break
        if symbol is None:
            if j + 1 < len(body) and body[j].isupper() and body[j + 1].islower() and body[j:j + 2] in ELEMENTS:
                symbol = body[j:j + 2]
            elif j < len(body) and body[j] in ELEMENTS:
                symbol = body[j]
            else:
                self.error("unknown element", open_pos + 1 + j)
        j += 1 if aromatic and len(symbol) == 1 else len(symbol)
        while j < len(body) and body[j] == "@":
            j += 1
        for tag in ("TH", "AL", "SP", "TB", "OH"):  # extended chirality classes
            if body.startswith(tag, j):
                j += 2
                while j < len(body) and body[j].isdigit():
                    j += 1
        h = 0
        if j < len(body) and body[j] == "H":
            j += 1
            h = 1
            if j < len(body) and body[j].isdigit():
                h = int(body[j])
                j += 1
        charge = 0
        if j < len(body) and body[j] in "+-":
            sign = 1 if body[j] == "+" else -1
            j += 1
            if j < len(body) and body[j].isdigit():
                k = j
                while k < len(body) and body[k].isdigit():
                    k += 1
                charge = sign * int(body[j:k])
                j = k
            else:
                charge = sign
                while j < len(body) and body[j] == ("+" if sign > 0 else "-"):
                    charge += sign
                    j += 1
        if j < len(body) and body[j] == ":":  # atom class
            j += 1
            while j < len(body) and body[j].isdigit():
                j += 1
        if j != len(body):
            self.error("malformed bracket atom", open_pos + 1 + j)
        self.i = close + 1
        return self._new_atom(Atom(symbol, aromatic, charge, h, bracket=True), open_pos)

    def _assign_hydrogens(self):
        g = self.graph
        bond_sum = [0] * len(g.atoms)
        for bond in g.bonds:
            v = _BOND_VALENCE[bond.order]
            bond_sum[bond.a] += v
            bond_sum[bond.b] += v
        for idx, atom in enumerate(g.atoms):
            if atom.bracket:
                continue
            valences = DEFAULT_VALENCE[atom.symbol]
            used = bond_sum[idx]
            if atom.aromatic and atom.symbol not in _LONE_PAIR_DONORS:
                fit = [v for v in valences if v >= used + 1]
                if fit:
                    atom.implicit_h = fit[0] - used - 1
                    continue
            fit = [v for v in valences if v >= used]
            if not fit:
                raise SmilesError(f"valence of {atom.symbol} exceeded", self.positions[idx])
            atom.implicit_h = fit[0] - used


def parse_smiles(text: str) -> MolecularGraph:
    """Parse ``text`` into a :class:`MolecularGraph` with hydrogens assigned.

    Raises :class:`SmilesError` (a ``ValueError``) carrying the offending
    position for malformed input.
    """
    text = text.strip()
    if not text:
        raise SmilesError("empty SMILES", 0)
    return _Parser(text).parse()


def compute_descriptors(graph: MolecularGraph) -> dict[str, float]:
    heavy = graph.heavy_atoms()
    counts = {f"count_{el}": 0.0 for el in ("C", "N", "O", "P", "S", "F", "Cl", "Br", "I")}
    for atom in heavy:
        key = f"count_{atom.symbol}"
        if key in counts:
            counts[key] += 1
    n_aromatic = sum(1 for a in heavy if a.aromatic)
    masses = []
    electrons = 0
    for atom in graph.atoms:
        weight, valence = ELEMENTS[atom.symbol]
        masses.append(weight + atom.total_h * ELEMENTS["H"][0])
        electrons += valence + atom.total_h
    out = dict(counts)
    out["single_bonds"] = float(sum(1 for b in graph.bonds if b.order == SINGLE))
    out["double_bonds"] = float(sum(1 for b in graph.bonds if b.order == DOUBLE))
    out["num_aromatic_atoms"] = float(n_aromatic)
    out["aromatic_proportion"] = n_aromatic / len(heavy) if heavy else 0.0
    out["num_heteroatoms"] = float(sum(1 for a in heavy if a.symbol != "C"))
    out["mol_wt"] = math.fsum(masses)  # exact rounding: independent of atom order
    out["num_valence_electrons"] = float(electrons)
    return out


def smiles_descriptors(text: str) -> dict[str, float]:
    """Convenience wrapper: parse then compute descriptors."""
    return compute_descriptors(parse_smiles(text))
