"""Generate the bundled corpus of valid Kekule SMILES strings.

Molecules are assembled from drug-like fragments (rings, linkers, terminal
groups) and kept only if the package validator accepts them.

    python scripts/make_smiles_corpus.py --n 2000 --max-tokens 38 --out src/seqvalid/data/smiles_corpus.txt
"""
import argparse
import random

from seqvalid.alphabet import smiles_alphabet, tokenize
from seqvalid.oracles import validate_smiles

RING6 = ["C{d}=CC=CC=C{d}", "C{d}=CC=NC=C{d}", "C{d}CCCCC{d}", "C{d}CCOCC{d}", "C{d}CCNCC{d}",
         "C{d}=CN=CC=N{d}", "C{d}CCN(C)CC{d}"]
RING5 = ["C{d}CCC{d}", "C{d}=CSC=C{d}", "C{d}=CC=CN{d}", "C{d}CCOC{d}", "C{d}=NC=CS{d}"]
LINKERS = ["C", "CC", "O", "N", "S", "C(=O)", "C(=O)N", "NC(=O)", "C(=O)O", "OC", "CN", "S(=O)(=O)",
           "C(C)", "[C@@H](C)", "[C@H](O)", "C=C", "/C=C/", "CC(C)", "[NH+](C)", "N(C)"]
TERMINALS = ["F", "Cl", "Br", "I", "C", "O", "N", "C#N", "C(F)(F)F", "OC", "[N+](=O)[O-]", "C(=O)O",
             "C(=O)[O-]", "[NH3+]", "S", "CC", "C(C)C", "OCC", "P(=O)(O)O"]
SUBSTITUENTS = ["F", "Cl", "Br", "C", "O", "N", "OC", "C#N", "C(F)(F)F", "=O"]


def ring(rng, depth):
    s = rng.choice(RING6 if rng.random() < 0.7 else RING5).format(d=depth)
    if rng.random() < 0.5:
        # decorate the first interior single-bonded carbon pair with a substituent
        sub = rng.choice(SUBSTITUENTS[:-1])
        k = s.find("CC", 2)
        if k > 0:
            s = s[:k] + "C(" + sub + ")" + s[k + 1:]
    return s


def molecule(rng, max_units):
    units = []
    depth = 1
    n = rng.randint(1, max_units)
    for i in range(n):
        if rng.random() < 0.45:
            units.append(ring(rng, depth))
            depth = depth % 8 + 1
        else:
            units.append(rng.choice(LINKERS))
    if rng.random() < 0.8:
        units.append(rng.choice(TERMINALS))
    if rng.random() < 0.3:
        units.insert(0, rng.choice(["C", "CC", "O", "N", "F", "Cl", "CO", "COC"]))
    return "".join(units)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--max-tokens", type=int, default=38)
    ap.add_argument("--min-tokens", type=int, default=8)
    ap.add_argument("--seed", type=int, default=20240)
    ap.add_argument("--out", required=True)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    alpha = smiles_alphabet()
    seen, kept, rejected = set(), [], 0
    while len(kept) < args.n:
        s = molecule(rng, 4)
        if s in seen:
            continue
        seen.add(s)
        n_tok = len(tokenize(s, alpha))
        if not args.min_tokens <= n_tok <= args.max_tokens:
            continue
        if not validate_smiles(s).valid:
            rejected += 1
            continue
        kept.append(s)
    with open(args.out, "w") as fh:
        fh.write(f"# {len(kept)} generated Kekule SMILES, seed {args.seed}\n")
        fh.write("\n".join(kept) + "\n")
    print(f"kept {len(kept)}, rejected {rejected} invalid")


if __name__ == "__main__":
    main()
