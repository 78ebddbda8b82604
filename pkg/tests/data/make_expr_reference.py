"""Regenerate the Python ``eval`` reference labels used by the oracle tests.

    python tests/data/make_expr_reference.py

Writes ``expr_len3_reference.tsv`` (every length-3 string over the expression
alphabet) and ``expr_random_reference.tsv`` (random strings of length 4-9).
Each line is ``label<TAB>text``. Strings whose evaluation does not finish
within one second are skipped.
"""
import itertools
import random
import signal
import sys
import warnings
from pathlib import Path

ALPHABET = "1234567890+-*/%!=<>()"
HERE = Path(__file__).parent


class _Timeout(Exception):
    pass


def _alarm(signum, frame):
    raise _Timeout


def reference_label(text):
    signal.signal(signal.SIGALRM, _alarm)
    signal.alarm(1)
    try:
        eval(text, {"__builtins__": {}}, {})
        return 1
    except _Timeout:
        return None
    except BaseException:
        return 0
    finally:
        signal.alarm(0)


def main():
    warnings.simplefilter("ignore")
    sys.setrecursionlimit(10_000)
    with open(HERE / "expr_len3_reference.tsv", "w") as fh:
        fh.write(f"# python {sys.version.split()[0]} eval, all length-3 strings\n")
        for chars in itertools.product(ALPHABET, repeat=3):
            text = "".join(chars)
            fh.write(f"{reference_label(text)}\t{text}\n")

    rng = random.Random(20240607)
    # bias toward digits and operators so a useful share of strings is valid
    weights = [3] * 10 + [2, 2, 2, 2, 1, 1, 1, 1, 1, 2, 2]
    with open(HERE / "expr_random_reference.tsv", "w") as fh:
        fh.write(f"# python {sys.version.split()[0]} eval, random strings length 4-9\n")
        seen = set()
        while len(seen) < 20_000:
            n = rng.randint(4, 9)
            text = "".join(rng.choices(ALPHABET, weights=weights, k=n))
            if text in seen:
                continue
            label = reference_label(text)
            if label is None:
                continue
            seen.add(text)
            fh.write(f"{label}\t{text}\n")


if __name__ == "__main__":
    main()
