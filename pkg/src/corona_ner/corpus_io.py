"""Document ingestion, cleaning, sentence splitting, tokenization and corpus file formats."""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .errors import BIOError, CorpusFormatError

DEFAULT_STRIP_CHARS = frozenset("#*")
DEFAULT_ABBREVIATIONS = frozenset({
    "Dr.", "No.", "U.S.", "e.g.", "i.e.",
    "Mr.", "Mrs.", "Ms.", "Prof.", "St.", "Jr.", "Sr.", "vs.",
})
DEFAULT_PUNCTUATION = frozenset(".,;:!?\"()'‘’“”„«»")

SENTENCE_TERMINATORS = ".!?"
_OPENERS = "(\"'‘“„«["
_NON_SPACE = re.compile(r"\S+")


@dataclass
class Document:
    doc_id: str
    body: str
    title: str = ""
    published_at: Optional[str] = None
    language: str = "en"

    def to_dict(self) -> dict:
        # canonical field order for byte-stable output
        return {
            "doc_id": self.doc_id,
            "title": self.title,
            "body": self.body,
            "published_at": self.published_at,
            "language": self.language,
        }


@dataclass(frozen=True)
class Token:
    text: str
    char_start: int
    char_end: int
    pos: Optional[str] = None


@dataclass
class Sentence:
    sent_id: str
    text: str
    tokens: list[Token] = field(default_factory=list)

    @classmethod
    def from_text(cls, sent_id: str, text: str, punctuation=DEFAULT_PUNCTUATION) -> "Sentence":
        return cls(sent_id, text, tokenize(text, punctuation))

    def __len__(self):
        return len(self.tokens)

    @property
    def words(self) -> list[str]:
        return [t.text for t in self.tokens]

    def with_pos(self, tags: Sequence[Optional[str]]) -> "Sentence":
        if len(tags) != len(self.tokens):
            raise CorpusFormatError(
                f"{self.sent_id}: {len(tags)} PoS tags for {len(self.tokens)} tokens")
        tokens = [Token(t.text, t.char_start, t.char_end, p) for t, p in zip(self.tokens, tags)]
        return Sentence(self.sent_id, self.text, tokens)


def clean_text(raw: str, strip_chars: Iterable[str] = DEFAULT_STRIP_CHARS) -> str:
    """Drop unwanted characters and collapse all whitespace runs to one space."""
    strip_chars = frozenset(strip_chars)
    if strip_chars:
        raw = "".join(ch for ch in raw if ch not in strip_chars)
    return " ".join(raw.split())


def _word_before(text: str, end: int) -> str:
    start = end
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    return text[start:end].lstrip(_OPENERS)


def segment_sentences(text: str, abbreviations: Iterable[str] = DEFAULT_ABBREVIATIONS) -> list[str]:
    """Split at ``.``, ``!`` or ``?`` followed by whitespace plus an uppercase letter, or by end of text.

    A terminator that closes a listed abbreviation never ends a sentence.
    """
    abbreviations = frozenset(abbreviations)
    sentences = []
    n = len(text)
    begin = 0
    for i, ch in enumerate(text):
        if ch not in SENTENCE_TERMINATORS:
            continue
        nxt = i + 1
        while nxt < n and text[nxt].isspace():
            nxt += 1
        if nxt < n and (nxt == i + 1 or not text[nxt].isupper()):
            continue
        if _word_before(text, i + 1) in abbreviations:
            continue
        piece = text[begin:i + 1].strip()
        if piece:
            sentences.append(piece)
        begin = nxt
    tail = text[begin:].strip()
    if tail:
        sentences.append(tail)
    return sentences


def tokenize(sentence_text: str, punctuation: Iterable[str] = DEFAULT_PUNCTUATION) -> list[Token]:
    """Whitespace split, then peel leading/trailing punctuation into one-character tokens.

    Hyphens and word-internal apostrophes stay inside their token.
    """
    punctuation = frozenset(punctuation)
    tokens = []
    for m in _NON_SPACE.finditer(sentence_text):
        s, e = m.span()
        while s < e and sentence_text[s] in punctuation:
            tokens.append(Token(sentence_text[s], s, s + 1))
            s += 1
        trailing = []
        while e > s and sentence_text[e - 1] in punctuation:
            e -= 1
            trailing.append(Token(sentence_text[e], e, e + 1))
        if s < e:
            tokens.append(Token(sentence_text[s:e], s, e))
        tokens.extend(reversed(trailing))
    return tokens


def document_sentences(doc: Document, abbreviations=DEFAULT_ABBREVIATIONS,
                       punctuation=DEFAULT_PUNCTUATION) -> list[Sentence]:
    """Segment and tokenize an already cleaned document body; ids are ``doc_id:index``."""
    return [
        Sentence.from_text(f"{doc.doc_id}:{i}", text, punctuation)
        for i, text in enumerate(segment_sentences(doc.body, abbreviations))
    ]


# -- JSONL documents ---------------------------------------------------------

def _document_from_record(record, lineno: int) -> Document:
    if not isinstance(record, dict):
        raise CorpusFormatError(f"line {lineno}: expected a JSON object")
    for key in ("doc_id", "body"):
        if key not in record:
            raise CorpusFormatError(f"line {lineno}: missing field {key!r}")
    doc_id = record["doc_id"]
    if not isinstance(doc_id, str) or not doc_id:
        raise CorpusFormatError(f"line {lineno}: doc_id must be a nonempty string")
    if not isinstance(record["body"], str):
        raise CorpusFormatError(f"line {lineno}: body must be a string")
    return Document(
        doc_id=doc_id,
        body=record["body"],
        title=record.get("title") or "",
        published_at=record.get("published_at"),
        language=record.get("language") or "en",
    )


def read_jsonl_corpus(path) -> list[Document]:
    docs = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"line {lineno}: malformed JSON ({exc.msg})") from None
            doc = _document_from_record(record, lineno)
            if doc.doc_id in seen:
                raise CorpusFormatError(f"duplicate doc_id {doc.doc_id}")
            seen.add(doc.doc_id)
            docs.append(doc)
    return docs


def write_jsonl_corpus(docs: Iterable[Document], path) -> None:
    seen = set()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for doc in docs:
            if doc.doc_id in seen:
                raise CorpusFormatError(f"duplicate doc_id {doc.doc_id}")
            seen.add(doc.doc_id)
            fh.write(json.dumps(doc.to_dict(), ensure_ascii=False) + "\n")


# -- CoNLL token/label files -------------------------------------------------

def _check_cell(value: str, what: str, idx: int) -> None:
    if not value or any(ch.isspace() for ch in value):
        raise CorpusFormatError(f"sentence {idx}: {what} {value!r} is empty or contains whitespace")


def write_conll(tokens: Sequence[Sequence[str]], labels: Sequence[Sequence[str]], path) -> None:
    """One ``TOKEN<TAB>LABEL`` per line, a blank line between sentences, one final newline."""
    from .harmonizer import validate_bio

    if len(tokens) != len(labels):
        raise CorpusFormatError(f"{len(tokens)} token sequences but {len(labels)} label sequences")
    blocks = []
    for idx, (toks, labs) in enumerate(zip(tokens, labels)):
        if len(toks) != len(labs):
            raise CorpusFormatError(
                f"sentence {idx}: ragged lengths, {len(toks)} tokens vs {len(labs)} labels")
        if not toks:
            raise CorpusFormatError(f"sentence {idx}: empty sentences cannot be written")
        try:
            validate_bio(labs)
        except BIOError as exc:
            raise CorpusFormatError(f"sentence {idx}: {exc}") from None
        for tok, lab in zip(toks, labs):
            _check_cell(tok, "token", idx)
            _check_cell(lab, "label", idx)
        blocks.append("".join(f"{tok}\t{lab}\n" for tok, lab in zip(toks, labs)))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(blocks))


def read_conll(path, lenient: bool = False) -> tuple[list[list[str]], list[list[str]]]:
    """Inverse of :func:`write_conll`.

    Strict mode rejects an ``I-X`` that does not continue an ``X`` entity;
    lenient mode rewrites it to ``B-X``.
    """
    from .harmonizer import parse_label

    all_tokens, all_labels = [], []
    toks, labs = [], []
    prev = "O"
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip():
                if toks:
                    all_tokens.append(toks)
                    all_labels.append(labs)
                toks, labs, prev = [], [], "O"
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise CorpusFormatError(f"{path}: line {lineno}: expected TOKEN<TAB>LABEL")
            tok, lab = parts
            try:
                prefix, etype = parse_label(lab)
            except BIOError as exc:
                raise CorpusFormatError(f"{path}: line {lineno}: {exc}") from None
            if prefix == "I" and prev not in (f"B-{etype}", f"I-{etype}"):
                if not lenient:
                    raise CorpusFormatError(f"invalid transition at line {lineno}")
                lab = f"B-{etype}"
            toks.append(tok)
            labs.append(lab)
            prev = lab
    if toks:
        all_tokens.append(toks)
        all_labels.append(labs)
    return all_tokens, all_labels


def read_pos_tags(path) -> dict[str, list[Optional[str]]]:
    """Externally produced PoS tags as JSONL ``{"sent_id": ..., "pos": [...]}``."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                out[str(record["sent_id"])] = list(record["pos"])
            except (json.JSONDecodeError, KeyError, TypeError):
                raise CorpusFormatError(f"{path}: line {lineno}: expected {{sent_id, pos}} record") from None
    return out


__all__ = [
    "Document", "Token", "Sentence", "clean_text", "segment_sentences", "tokenize",
    "document_sentences", "read_jsonl_corpus", "write_jsonl_corpus", "write_conll",
    "read_conll", "read_pos_tags",
]
