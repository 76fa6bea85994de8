"""Deterministic synthetic collections for tests, verification and benchmarks.

Everything here is seeded: the same seed always produces the same corpora,
topics, qrels and thesauri, byte for byte.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .corpus import RawDocument
from .models import TermEvidence
from .retrieval import Topic

_SYLLABLES = (
    "ba be bi bo bu da de di do du ga ge gi go gu ka ke ki ko ku "
    "la le li lo lu ma me mi mo mu na ne ni no nu pa pe pi po pu "
    "ra re ri ro ru sa se si so su ta te ti to tu va ve vi vo vu"
).split()


def make_words(count: int, rng: random.Random, prefix: str = "") -> list[str]:
    """`count` distinct pronounceable pseudo-words."""
    words: list[str] = []
    seen: set[str] = set()
    while len(words) < count:
        word = prefix + "".join(rng.choice(_SYLLABLES) for _ in range(rng.randint(2, 4)))
        if word not in seen:
            seen.add(word)
            words.append(word)
    return words


def zipf_weights(n: int, s: float = 1.05) -> list[float]:
    return [1.0 / (rank + 1) ** s for rank in range(n)]


def synth_corpus(
    rng: random.Random,
    num_docs: int,
    vocab: list[str] | None = None,
    vocab_size: int = 60,
    doc_len: tuple[int, int] = (20, 60),
) -> list[RawDocument]:
    """Small Zipf-ish corpus with docids d000000, d000001, ..."""
    if vocab is None:
        vocab = make_words(vocab_size, rng)
    weights = zipf_weights(len(vocab))
    docs = []
    for i in range(num_docs):
        n = rng.randint(*doc_len)
        text = " ".join(rng.choices(vocab, weights=weights, k=n))
        docs.append(RawDocument(docid=f"d{i:06d}", text=text))
    return docs


def pick_query_terms(docs, cfg, rng: random.Random, how_many: int) -> list[str]:
    """Query terms with healthy collection statistics.

    Filters to terms whose collection frequency comfortably exceeds the
    largest Normalization-2 value they can produce, so every weighting model
    (BB2's Bernoulli factorials included) stays inside its numeric domain.
    """
    from collections import Counter

    from .analysis import analyze

    df: Counter = Counter()
    cf: Counter = Counter()
    max_tf: dict[str, int] = {}
    lengths = []
    per_doc = []
    for doc in docs:
        counts = Counter(analyze(doc.text, cfg))
        per_doc.append(counts)
        lengths.append(sum(counts.values()))
        for term, tf in counts.items():
            df[term] += 1
            cf[term] += tf
            if tf > max_tf.get(term, 0):
                max_tf[term] = tf
    avgdl = sum(lengths) / len(lengths)
    candidates = []
    for term in sorted(df):
        if df[term] < 3:
            continue
        worst_tfn = max(
            tf * math.log2(1.0 + avgdl / dl)
            for counts, dl in zip(per_doc, lengths)
            if dl and (tf := counts.get(term, 0))
        )
        if cf[term] > 1.2 * worst_tfn + 1:
            candidates.append(term)
    rng.shuffle(candidates)
    return candidates[:how_many]


def evidence_draws(rng: random.Random, count: int):
    """Randomized TermEvidence from the statistics of content-bearing query
    terms in news-scale collections.

    The domain deliberately excludes regimes where several published
    weighting formulas are legitimately non-monotone or undefined: terms in
    more than half the collection (negative BM25-style idf), terms occurring
    about once per document or more (PL2's Poisson rate >= 1, negative
    Bernoulli gains), documents far longer than average, and within-document
    rates beyond a few percent (the hypergeometric DLH/DPH family bends over
    there). Draws always leave room for a tf+1 probe.
    """
    for _ in range(count):
        num_docs = int(10 ** rng.uniform(2, 6))
        avgdl = int(10 ** rng.uniform(math.log10(40), math.log10(800)))
        total_tokens = num_docs * avgdl
        dl = rng.randint(max(2, avgdl // 2), 2 * avgdl)
        df = max(1, int(10 ** rng.uniform(0, math.log10(num_docs / 2))))
        tf = rng.randint(1, max(1, min(dl // 25, 12)))
        cf = max(df, int(df * rng.uniform(1.0, 2.0)), 2 * (tf + 1))
        cf = min(cf, max(2 * (tf + 1), int(0.8 * num_docs)), total_tokens)
        yield TermEvidence(
            tf=tf,
            qtf=rng.randint(1, 3),
            df=df,
            cf=cf,
            dl=dl,
            avgdl=total_tokens / num_docs,
            num_docs=num_docs,
            total_tokens=total_tokens,
        ).validate()


@dataclass
class Experiment:
    """A fully constructed mini test collection."""

    docs: list[RawDocument]
    topics: list[Topic]
    qrels_text: str
    thesaurus_text: str


def synth_experiment(
    rng: random.Random,
    num_docs: int = 200,
    num_topics: int = 8,
    background_vocab: int = 80,
) -> Experiment:
    """Corpus + topics + qrels + thesaurus with a known expansion payoff.

    Each topic gets 9 relevant documents: 6 carry its primary term (and half
    of those its secondary term), 3 carry only its synonym, so thesaurus
    expansion genuinely recovers documents the unexpanded query cannot match.
    Planted term frequencies are kept low and document lengths moderate so
    every weighting model stays inside its numeric domain.
    """
    if num_docs < 9 * num_topics:
        raise ValueError("need at least 9 documents per topic")
    background = make_words(background_vocab, rng, prefix="bg")
    weights = zipf_weights(len(background))
    primary = make_words(num_topics, rng, prefix="top")
    secondary = make_words(num_topics, rng, prefix="sec")
    synonyms = make_words(num_topics, rng, prefix="syn")

    docs: list[RawDocument] = []
    qrels_lines: list[str] = []
    relevant_sets: list[list[int]] = [[] for _ in range(num_topics)]

    for i in range(num_docs):
        words = rng.choices(background, weights=weights, k=rng.randint(20, 50))
        block, role = divmod(i, 9)
        if block < num_topics:
            t = block
            if role < 6:
                words += [primary[t]] * rng.randint(1, 2)
                if role % 2 == 0:
                    words.append(secondary[t])
            else:
                words.append(synonyms[t])
            relevant_sets[t].append(i)
        rng.shuffle(words)
        docs.append(RawDocument(docid=f"d{i:06d}", text=" ".join(words)))

    topics: list[Topic] = []
    for t in range(num_topics):
        qid = f"q{t + 1:02d}"
        topics.append(
            Topic(
                qid=qid,
                title=primary[t],
                description=f"{secondary[t]} {rng.choice(background)}",
                narrative=f"{rng.choice(background)} {rng.choice(background)}",
            )
        )
        for i in relevant_sets[t]:
            qrels_lines.append(f"{qid} 0 d{i:06d} 1")

    thesaurus_lines = [f"{primary[t]}\t{synonyms[t]}" for t in range(num_topics)]
    return Experiment(
        docs=docs,
        topics=topics,
        qrels_text="\n".join(qrels_lines) + "\n",
        thesaurus_text="\n".join(thesaurus_lines) + "\n",
    )


def write_large_corpus(
    path,
    num_docs: int,
    seed: int,
    vocab_size: int = 60000,
    doc_len: tuple[int, int] = (300, 700),
) -> int:
    """Stream a large Zipf corpus to disk; returns total tokens written.

    Uses numpy for the token draws so generating ~50M tokens stays in the
    tens of seconds.
    """
    import numpy as np

    rng = random.Random(seed)
    vocab = make_words(vocab_size, rng)
    ranks = np.arange(vocab_size, dtype=np.float64)
    probs = 1.0 / (ranks + 10.0) ** 1.05
    probs /= probs.sum()
    nprng = np.random.Generator(np.random.PCG64(seed))
    lengths = nprng.integers(doc_len[0], doc_len[1] + 1, size=num_docs)
    total = int(lengths.sum())
    draws = nprng.choice(vocab_size, size=total, p=probs)
    out_tokens = 0
    with open(path, "w", encoding="utf-8", buffering=1 << 20) as fh:
        pos = 0
        for i in range(num_docs):
            n = int(lengths[i])
            words = [vocab[j] for j in draws[pos : pos + n]]
            pos += n
            out_tokens += n
            fh.write(f"<DOC>\n<DOCNO>d{i:06d}</DOCNO>\n<TEXT>{' '.join(words)}</TEXT>\n</DOC>\n")
    return out_tokens


def synth_topics_for_vocab(
    seed: int,
    num_topics: int,
    vocab_size: int = 60000,
    band: tuple[int, int] = (50, 3000),
) -> list[Topic]:
    """Topics whose terms come from the mid-frequency band of write_large_corpus'
    vocabulary (same seed => same vocabulary)."""
    rng = random.Random(seed)
    vocab = make_words(vocab_size, rng)
    mid = vocab[band[0] : band[1]]
    picker = random.Random(seed + 1)
    topics = []
    for t in range(num_topics):
        title = " ".join(picker.sample(mid, picker.randint(2, 3)))
        desc = " ".join(picker.sample(mid, picker.randint(4, 8)))
        topics.append(Topic(qid=f"q{t + 1:03d}", title=title, description=desc, narrative=""))
    return topics
