"""Porter (1980) suffix-stripping stemmer, original rule set (steps 1a to 5b).

Later departures found in many ports (``bli -> ble``, ``logi -> log``,
``fulli``, ``lessli``) are deliberately absent.
"""

from functools import lru_cache

_VOWELS = frozenset("aeiou")


def _is_consonant(word: str, i: int) -> bool:
    ch = word[i]
    if ch in _VOWELS:
        return False
    if ch == "y":
        return i == 0 or not _is_consonant(word, i - 1)
    return True


def _measure(stem: str) -> int:
    """Number of VC sequences in ``[C](VC)^m[V]``."""
    m = 0
    prev_vowel = False
    for i in range(len(stem)):
        cons = _is_consonant(stem, i)
        if cons and prev_vowel:
            m += 1
        prev_vowel = not cons
    return m


def _has_vowel(stem: str) -> bool:
    return any(not _is_consonant(stem, i) for i in range(len(stem)))


def _double_consonant(word: str) -> bool:
    return (len(word) >= 2 and word[-1] == word[-2]
            and _is_consonant(word, len(word) - 1))


def _cvc(word: str) -> bool:
    if len(word) < 3:
        return False
    n = len(word)
    return (_is_consonant(word, n - 3) and not _is_consonant(word, n - 2)
            and _is_consonant(word, n - 1) and word[-1] not in "wxy")


def _apply(word, rules, condition):
    """Longest-suffix rule application: the first listed suffix that matches
    is the only one tried, whether or not its condition holds."""
    for suffix, repl in rules:
        if word.endswith(suffix):
            stem = word[: len(word) - len(suffix)]
            if condition(stem, suffix):
                return stem + repl
            return word
    return word


def _step1a(w):
    if w.endswith("sses"):
        return w[:-2]
    if w.endswith("ies"):
        return w[:-2]
    if w.endswith("ss"):
        return w
    if w.endswith("s"):
        return w[:-1]
    return w


def _step1b(w):
    if w.endswith("eed"):
        stem = w[:-3]
        return stem + "ee" if _measure(stem) > 0 else w
    for suffix in ("ed", "ing"):
        if w.endswith(suffix):
            stem = w[: -len(suffix)]
            if not _has_vowel(stem):
                return w
            return _step1b_tidy(stem)
    return w


def _step1b_tidy(w):
    if w.endswith(("at", "bl", "iz")):
        return w + "e"
    if _double_consonant(w) and w[-1] not in "lsz":
        return w[:-1]
    if _measure(w) == 1 and _cvc(w):
        return w + "e"
    return w


def _step1c(w):
    if w.endswith("y") and _has_vowel(w[:-1]):
        return w[:-1] + "i"
    return w


_STEP2 = [
    ("ational", "ate"), ("tional", "tion"), ("enci", "ence"), ("anci", "ance"),
    ("izer", "ize"), ("abli", "able"), ("alli", "al"), ("entli", "ent"),
    ("eli", "e"), ("ousli", "ous"), ("ization", "ize"), ("ation", "ate"),
    ("ator", "ate"), ("alism", "al"), ("iveness", "ive"), ("fulness", "ful"),
    ("ousness", "ous"), ("aliti", "al"), ("iviti", "ive"), ("biliti", "ble"),
]
# Longest match first: "ization" must be tried before "ation", and so on.
_STEP2.sort(key=lambda r: -len(r[0]))

_STEP3 = [
    ("icate", "ic"), ("ative", ""), ("alize", "al"), ("iciti", "ic"),
    ("ical", "ic"), ("ful", ""), ("ness", ""),
]
_STEP3.sort(key=lambda r: -len(r[0]))

_STEP4 = [
    "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement", "ment",
    "ent", "ion", "ou", "ism", "ate", "iti", "ous", "ive", "ize",
]
_STEP4 = sorted(((s, "") for s in _STEP4), key=lambda r: -len(r[0]))


def _m_gt0(stem, _suffix):
    return _measure(stem) > 0


def _step4_cond(stem, suffix):
    if _measure(stem) <= 1:
        return False
    if suffix == "ion":
        return bool(stem) and stem[-1] in "st"
    return True


def _step5a(w):
    if w.endswith("e"):
        stem = w[:-1]
        m = _measure(stem)
        if m > 1 or (m == 1 and not _cvc(stem)):
            return stem
    return w


def _step5b(w):
    if _measure(w) > 1 and _double_consonant(w) and w.endswith("l"):
        return w[:-1]
    return w


@lru_cache(maxsize=65536)
def porter_stem(token: str) -> str:
    """Stem a lowercase ASCII token; anything else comes back unchanged."""
    if len(token) <= 2 or not token.isascii() or not token.isalpha() or not token.islower():
        return token
    w = _step1a(token)
    w = _step1b(w)
    w = _step1c(w)
    w = _apply(w, _STEP2, _m_gt0)
    w = _apply(w, _STEP3, _m_gt0)
    w = _apply(w, _STEP4, _step4_cond)
    w = _step5a(w)
    w = _step5b(w)
    return w
