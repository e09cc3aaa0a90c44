"""Tokenization, vocabulary, corpus ingestion, and the bundled toy corpus.

The vocabulary maps the most frequent 5000 tokens to dense ids; everything
else becomes [Unk].  Ids 0..3 are reserved for [Pad], [Begin], [End],
[Unk].  Ranking is by frequency with ties broken by first occurrence, so
vocabularies are reproducible across runs.

The bundled corpus is a deterministic synthetic parallel corpus built
around homonyms: source words whose translation depends on a theme word
elsewhere in the sentence.  File ingestion expects UTF-8 text, one pair
per line, tab separated as ``target<TAB>source`` (the layout of the usual
english/spanish sentence-pair files).
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

PAD, BEGIN, END, UNK = 0, 1, 2, 3
SPECIALS = ["[Pad]", "[Begin]", "[End]", "[Unk]"]

MAX_VOCAB = 5000

_PUNCT_TABLE = str.maketrans("", "", string.punctuation + "¿¡“”‘’«»")


class CorpusError(ValueError):
    pass


def tokenize(text: str) -> List[str]:
    return text.lower().translate(_PUNCT_TABLE).split()


@dataclass
class Vocabulary:
    token_to_id: Dict[str, int]
    id_to_token: List[str]
    max_size: int = MAX_VOCAB

    @property
    def size(self) -> int:
        return len(self.id_to_token)

    def encode(self, text: str, frame: bool = False) -> List[int]:
        ids = [self.token_to_id.get(tok, UNK) for tok in tokenize(text)]
        return [BEGIN] + ids + [END] if frame else ids

    def decode(self, ids: Sequence[int], strip_specials: bool = True) -> str:
        toks = [self.id_to_token[i] for i in ids]
        if strip_specials:
            toks = [t for t in toks if t not in SPECIALS]
        return " ".join(toks)


def build_vocab(sentences: Iterable[str], max_size: int = MAX_VOCAB) -> Vocabulary:
    """Frequency-ranked vocabulary (ties broken by first occurrence)."""
    counts: Dict[str, int] = {}
    first: Dict[str, int] = {}
    pos = 0
    empty = True
    for sent in sentences:
        empty = False
        for tok in tokenize(sent):
            counts[tok] = counts.get(tok, 0) + 1
            if tok not in first:
                first[tok] = pos
            pos += 1
    if empty:
        raise CorpusError("corpus is empty")
    ranked = sorted(counts, key=lambda t: (-counts[t], first[t]))[:max_size]
    id_to_token = list(SPECIALS) + ranked
    return Vocabulary({t: i for i, t in enumerate(id_to_token)}, id_to_token, max_size)


def load_pairs_tsv(path) -> List[Tuple[str, str]]:
    """Read (source, target) pairs from a target<TAB>source file."""
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) < 2:
                raise CorpusError(f"{path}:{lineno}: expected target<TAB>source")
            target, source = parts[0], parts[1]
            pairs.append((source, target))
    if not pairs:
        raise CorpusError(f"{path}: no sentence pairs found")
    return pairs


def save_pairs_tsv(pairs: Sequence[Tuple[str, str]], path):
    with open(path, "w", encoding="utf-8") as fh:
        for source, target in pairs:
            fh.write(f"{target}\t{source}\n")


# ---------------------------------------------------------------------------
# bundled toy corpus
# ---------------------------------------------------------------------------

# homonym -> theme -> (context words, translation of the homonym)
_HOMONYMS = {
    "vela": {
        "iglesia": (["iglesia", "altar", "monje", "rezo"], "candle"),
        "mar": (["mar", "barco", "puerto", "viento"], "sail"),
    },
    "banco": {
        "dinero": (["dinero", "cajero", "cheque", "oro"], "bank"),
        "parque": (["parque", "arbol", "plaza", "jardin"], "bench"),
    },
    "sierra": {
        "taller": (["taller", "madera", "clavo", "martillo"], "saw"),
        "viaje": (["viaje", "nieve", "sendero", "cumbre"], "ridge"),
    },
    "cola": {
        "animal": (["perro", "zorro", "caballo", "vaca"], "tail"),
        "tienda": (["tienda", "gente", "boleto", "espera"], "queue"),
    },
    "planta": {
        "jardin2": (["semilla", "riego", "flor", "huerto"], "plant"),
        "edificio": (["edificio", "ascensor", "torre", "hotel"], "floor"),
    },
    "carta": {
        "correo": (["correo", "sobre", "sello", "buzon"], "letter"),
        "cena": (["cena", "mesa", "vino", "camarero"], "menu"),
    },
    "bomba": {
        "agua": (["agua", "pozo", "tubo", "riego2"], "pump"),
        "guerra": (["guerra", "humo", "ruina", "alarma"], "bomb"),
    },
    "muelle": {
        "resorte": (["resorte", "metal", "reloj", "motor"], "spring"),
        "pesca": (["pesca", "red", "ola", "marea"], "pier"),
    },
    "gato": {
        "casa": (["casa", "sofa", "leche", "raton"], "cat"),
        "coche": (["coche", "rueda", "garaje", "taller2"], "jack"),
    },
    "pluma": {
        "ave": (["ave", "nido", "ala", "vuelo"], "feather"),
        "tinta": (["tinta", "papel", "firma", "cuaderno"], "pen"),
    },
}

# literal word-for-word glosses of all non-homonym tokens
_GLOSS = {
    "el": "the", "la": "the", "un": "a", "una": "a", "y": "and",
    "en": "in", "de": "of", "tiene": "has", "veo": "isee", "cerca": "near",
    "grande": "big", "nueva": "new", "vieja": "old", "aqui": "here",
    "iglesia": "church", "altar": "altar", "monje": "monk", "rezo": "prayer",
    "mar": "sea", "barco": "boat", "puerto": "harbor", "viento": "wind",
    "dinero": "money", "cajero": "teller", "cheque": "cheque", "oro": "gold",
    "parque": "park", "arbol": "tree", "plaza": "square", "jardin": "garden",
    "taller": "workshop", "madera": "wood", "clavo": "nail", "martillo": "hammer",
    "viaje": "trip", "nieve": "snow", "sendero": "trail", "cumbre": "summit",
    "perro": "dog", "vaca": "cow", "zorro": "fox", "caballo": "horse",
    "tienda": "shop", "gente": "people", "boleto": "ticket", "espera": "wait",
    "semilla": "seed", "riego": "watering", "flor": "flower", "huerto": "orchard",
    "edificio": "building", "ascensor": "lift", "torre": "tower", "hotel": "hotel",
    "correo": "post", "sobre": "envelope", "sello": "stamp", "buzon": "mailbox",
    "cena": "dinner", "mesa": "table", "vino": "wine", "camarero": "waiter",
    "agua": "water", "pozo": "well", "tubo": "pipe", "riego2": "irrigation",
    "guerra": "war", "humo": "smoke", "ruina": "ruin", "alarma": "alarm",
    "resorte": "coil", "metal": "metal", "reloj": "clock", "motor": "engine",
    "pesca": "fishing", "red": "net", "ola": "wave", "marea": "tide",
    "casa": "house", "sofa": "couch", "leche": "milk", "raton": "mouse",
    "coche": "car", "rueda": "wheel", "garaje": "garage", "taller2": "shop2",
    "ave": "bird", "nido": "nest", "ala": "wing", "vuelo": "flight",
    "tinta": "ink", "papel": "paper", "firma": "signature", "cuaderno": "notebook",
    "gata": "cat", "luna": "moon", "sol": "sun", "pan": "bread",
    "nino": "child", "rio": "river", "calle": "street", "libro": "book",
    "puerta": "door", "silla": "chair", "fuego": "fire", "piedra": "stone",
    "nube": "cloud", "campo": "field",
}

_FRAMES = [
    ("el {c} tiene una {h}", "the {C} has a {H}"),
    ("veo la {h} en el {c}", "isee the {H} in the {C}"),
    ("la {h} de el {c}", "the {H} of the {C}"),
    ("una {h} grande en el {c}", "a big {H} in the {C}"),
    ("el {c} y la {h}", "the {C} and the {H}"),
    ("la {h} cerca de el {c}", "the {H} near of the {C}"),
    ("la {h} nueva de el {c}", "the new {H} of the {C}"),
    ("el {c} tiene la {h} vieja", "the {C} has the old {H}"),
]

_FILLER_NOUNS = ["luna", "sol", "pan", "nino", "rio", "calle", "libro",
                 "puerta", "silla", "fuego", "piedra", "gata", "nube", "campo"]
_FILLER_FRAMES = [
    ("el {a} tiene un {b}", "the {A} has a {B}"),
    ("veo el {a} en la {b}", "isee the {A} in the {B}"),
    ("el {a} y la {b}", "the {A} and the {B}"),
    ("la {b} de el {a}", "the {B} of the {A}"),
    ("un {a} cerca de la {b}", "a {A} near of the {B}"),
    ("la {b} grande y el {a}", "the big {B} and the {A}"),
    ("el {a} nuevo tiene la {b}", "the new {A} has the {B}"),
    ("veo la {b} vieja y el {a}", "isee the old {B} and the {A}"),
]

TOY_CORPUS_SEED = 20230517


def toy_corpus(max_pairs: int = 2000) -> List[Tuple[str, str]]:
    """Deterministic synthetic parallel corpus with homonym-style
    contextual words; returns (source, target) pairs."""
    pairs = []
    for hom, senses in _HOMONYMS.items():
        for _, (contexts, translation) in senses.items():
            for ctx in contexts:
                for src_frame, tgt_frame in _FRAMES:
                    src = src_frame.format(c=ctx, h=hom)
                    tgt = tgt_frame.format(C=_GLOSS[ctx], H=translation)
                    pairs.append((src, tgt))
    for a in _FILLER_NOUNS:
        for b in _FILLER_NOUNS:
            if a == b:
                continue
            for src_frame, tgt_frame in _FILLER_FRAMES:
                src = src_frame.format(a=a, b=b)
                tgt = tgt_frame.format(A=_GLOSS[a], B=_GLOSS[b])
                pairs.append((src, tgt))
    rng = np.random.default_rng(TOY_CORPUS_SEED)
    order = rng.permutation(len(pairs))
    pairs = [pairs[i] for i in order]
    return pairs[:max_pairs]
