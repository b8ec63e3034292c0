"""Regenerates the bundled toy dataset.

Embeddings are synthetic: every concept gets a seeded random unit vector,
multi-word concepts mix in the vectors of their words, and a sentence is the
normalized mean of the concepts it mentions plus a little noise. This is only
meant to give the pipeline something deterministic to chew on.

Usage: python3 generate.py  (writes next to this file)
"""

import json
import os
import re

import numpy as np

HERE = os.path.dirname(os.path.abspath(__file__))
DIM = 16
RNG = np.random.default_rng(20241118)

TOPICS = [
    {"id": "animal-hunting", "question": "Should animal hunting be banned?"},
    {"id": "school-uniforms", "question": "Should kids have to wear school uniforms?"},
]

# (id, topic, stance, sentences, gold perspectivized stances)
ARGUMENTS = [
    ("ah-1", "animal-hunting", "pro", [
        "Trophy hunting is pure cruelty for sport.",
        "Animal suffering should never be entertainment.",
        "Wildlife deserves protection from killing."],
     {"trophy hunting": -1, "cruelty": -1, "animal suffering": -1, "wildlife": 1, "sport": -1}),
    ("ah-2", "animal-hunting", "pro", [
        "Poaching and hunting push wildlife toward extinction.",
        "The ecosystem balances itself without hunters."],
     {"poaching": -1, "wildlife": 1, "ecosystem": 1, "hunting": -1}),
    ("ah-3", "animal-hunting", "pro", [
        "Killing a deer for a photo is cruelty.",
        "Eating meat is a choice, but trophy hunting is not about food."],
     {"killing": -1, "cruelty": -1, "eating meat": 0, "trophy hunting": -1, "food": 0}),
    ("ah-4", "animal-hunting", "pro", [
        "Animal suffering is real for every hunted animal.",
        "Sustainability can be reached with nature reserves instead."],
     {"animal suffering": -1, "sustainability": 1, "nature": 1}),
    ("ah-5", "animal-hunting", "pro", [
        "Hunting as a tradition does not justify killing.",
        "Wildlife tourism earns more than hunting."],
     {"tradition": -1, "killing": -1, "wildlife": 1}),
    ("ah-6", "animal-hunting", "con", [
        "Hunting for food is more honest than buying meat.",
        "Sustainability is served by population control of deer.",
        "Eating meat from the wild is natural."],
     {"hunting for food": 1, "sustainability": 1, "population control": 1, "eating meat": 1, "meat": 1}),
    ("ah-7", "animal-hunting", "con", [
        "Population control keeps the ecosystem healthy.",
        "Without hunting, deer starve in winter."],
     {"population control": 1, "ecosystem": 1, "hunting": 1}),
    ("ah-8", "animal-hunting", "con", [
        "Hunting is a tradition passed down in families.",
        "Trophy hunting is wrong, but hunting for food is fine."],
     {"tradition": 1, "trophy hunting": -1, "hunting for food": 1}),
    ("ah-9", "animal-hunting", "con", [
        "Poaching is the real threat to wildlife.",
        "Licensed hunt fees fund nature protection."],
     {"poaching": -1, "wildlife": 1, "nature": 1, "hunt": 1}),
    ("ah-10", "animal-hunting", "con", [
        "Meat from hunting for food is sustainable.",
        "Hunters respect nature more than anyone."],
     {"meat": 1, "hunting for food": 1, "nature": 1}),
    ("su-1", "school-uniforms", "pro", [
        "A school uniform reduces bullying about fashion.",
        "Equality in clothing helps every student."],
     {"school uniform": 1, "bullying": -1, "fashion": -1, "equality": 1}),
    ("su-2", "school-uniforms", "pro", [
        "Uniforms build discipline and school identity.",
        "Parents save money on clothing."],
     {"discipline": 1, "identity": 1, "money": 1}),
    ("su-3", "school-uniforms", "pro", [
        "Bullying drops when fashion stops mattering.",
        "Discipline improves in class."],
     {"bullying": -1, "fashion": -1, "discipline": 1}),
    ("su-4", "school-uniforms", "con", [
        "A school uniform kills self expression.",
        "Freedom of clothing matters to every student."],
     {"school uniform": -1, "self expression": 1, "freedom": 1}),
    ("su-5", "school-uniforms", "con", [
        "Uniforms cost money that poor families lack.",
        "Bullying happens anyway, uniform or not."],
     {"cost": -1, "money": -1, "bullying": -1}),
    ("su-6", "school-uniforms", "con", [
        "Fashion is part of identity and self expression.",
        "Freedom should come before discipline."],
     {"fashion": 1, "identity": 1, "self expression": 1, "freedom": 1, "discipline": -1}),
]

STAKEHOLDERS = {
    "ah-1": ["Animal rights activists"], "ah-2": ["Environmentalists"],
    "ah-3": ["Animal rights activists"], "ah-4": ["Environmentalists", "Animal rights activists"],
    "ah-5": ["Local communities"], "ah-6": ["Hunters"], "ah-7": ["Hunters", "Environmentalists"],
    "ah-8": ["Hunters"], "ah-9": ["Local communities"], "ah-10": ["Hunters"],
}

CONCEPTS = [
    # animal hunting
    "hunting", "hunt", "hunting for food", "trophy hunting", "sustainability", "eating meat",
    "meat", "food", "cruelty", "animal suffering", "animal", "deer", "dog", "wildlife",
    "poaching", "population control", "ecosystem", "nature", "tradition", "killing", "sport",
    # school uniforms
    "school uniform", "uniform", "clothing", "self expression", "bullying", "cost", "money",
    "discipline", "equality", "identity", "fashion", "student", "school", "freedom",
]

LEMMAS = {"hunting": "hunt", "hunt": "hunt", "uniform": "uniform", "school uniform": "school uniform"}

HYPERNYMS = [
    ("deer", "animal"), ("dog", "animal"), ("meat", "food"), ("uniform", "clothing"),
    ("poaching", "hunt"), ("trophy hunting", "hunt"), ("cost", "money"),
]

EDGES = [
    ("RelatedTo", "hunting", "animal"), ("RelatedTo", "hunting", "deer"),
    ("RelatedTo", "hunt", "hunting"), ("IsA", "hunting for food", "hunting"),
    ("IsA", "trophy hunting", "hunting"), ("RelatedTo", "trophy hunting", "sport"),
    ("RelatedTo", "hunting for food", "food"), ("RelatedTo", "food", "meat"),
    ("RelatedTo", "meat", "eating meat"), ("RelatedTo", "eating meat", "food"),
    ("RelatedTo", "sustainability", "ecosystem"), ("RelatedTo", "ecosystem", "nature"),
    ("RelatedTo", "nature", "wildlife"), ("RelatedTo", "wildlife", "animal"),
    ("IsA", "deer", "animal"), ("IsA", "dog", "animal"), ("RelatedTo", "poaching", "wildlife"),
    ("RelatedTo", "poaching", "killing"), ("RelatedTo", "killing", "cruelty"),
    ("RelatedTo", "cruelty", "animal suffering"), ("RelatedTo", "animal suffering", "animal"),
    ("RelatedTo", "population control", "deer"), ("RelatedTo", "population control", "sustainability"),
    ("RelatedTo", "tradition", "hunting"), ("RelatedTo", "sport", "hunting"),
    ("RelatedTo", "killing", "hunting"),
    ("RelatedTo", "killing", "hunting"),  # duplicate, dropped on load
    ("RelatedTo", "nature", "nature"),  # self-loop, dropped on load
    ("IsA", "school uniform", "uniform"), ("IsA", "uniform", "clothing"),
    ("RelatedTo", "clothing", "fashion"), ("RelatedTo", "fashion", "self expression"),
    ("RelatedTo", "self expression", "freedom"), ("RelatedTo", "freedom", "identity"),
    ("RelatedTo", "identity", "fashion"), ("RelatedTo", "bullying", "student"),
    ("RelatedTo", "student", "school"), ("RelatedTo", "school", "school uniform"),
    ("RelatedTo", "discipline", "school"), ("RelatedTo", "equality", "student"),
    ("RelatedTo", "cost", "money"), ("RelatedTo", "money", "clothing"),
    ("RelatedTo", "bullying", "fashion"), ("RelatedTo", "equality", "school uniform"),
]


def unit(v):
    n = np.linalg.norm(v)
    return v / n if n > 0 else v


def concept_vectors():
    words = {}
    out = {}
    for c in CONCEPTS:
        parts = []
        for w in c.split():
            if w not in words:
                words[w] = unit(RNG.standard_normal(DIM))
            parts.append(words[w])
        out[c] = unit(np.mean(parts, axis=0) + 0.3 * RNG.standard_normal(DIM))
    return out


def mentions(sentence):
    s = sentence.lower()
    found = []
    for c in CONCEPTS:
        if re.search(r"\b" + re.escape(c) + r"\b", s):
            found.append(c)
    return found


def fmt(v):
    return " ".join(f"{x:.6f}" for x in v)


def main():
    vecs = concept_vectors()
    with open(os.path.join(HERE, "corpus.jsonl"), "w") as f:
        for t in TOPICS:
            f.write(json.dumps({"id": t["id"], "question": t["question"]}) + "\n")
        for aid, topic, stance, sents, _ in ARGUMENTS:
            rec = {"id": aid, "topic_id": topic,
                   "text": " ".join(sents), "stance": stance}
            if aid in STAKEHOLDERS:
                rec["stakeholders"] = STAKEHOLDERS[aid]
            f.write(json.dumps(rec) + "\n")

    with open(os.path.join(HERE, "embeddings.tsv"), "w") as f:
        for c in CONCEPTS:
            f.write(f"{c}\t{fmt(vecs[c])}\n")
        for _, _, _, sents, _ in ARGUMENTS:
            for s in sents:
                hits = mentions(s)
                base = np.mean([vecs[c] for c in hits], axis=0) if hits else np.zeros(DIM)
                f.write(f"{s}\t{fmt(unit(base + 0.15 * RNG.standard_normal(DIM)))}\n")

    with open(os.path.join(HERE, "graph.tsv"), "w") as f:
        for rel, a, b in EDGES:
            f.write(f"{rel}\t{a}\t{b}\t1.0\n")

    with open(os.path.join(HERE, "lemmas.tsv"), "w") as f:
        for c in CONCEPTS:
            f.write(f"{c}\t{LEMMAS.get(c, c)}\n")

    with open(os.path.join(HERE, "hypernyms.tsv"), "w") as f:
        for lemma, hyper in HYPERNYMS:
            f.write(f"{lemma}\t{hyper}\n")

    gold = {aid: g for aid, _, _, _, g in ARGUMENTS}
    stance_of = {aid: st for aid, _, st, _, _ in ARGUMENTS}
    topic_of = {aid: t for aid, t, _, _, _ in ARGUMENTS}
    irrelevant = {"dog", "sport", "student", "school"}
    too_coarse = {"hunting", "hunt", "animal", "food", "nature", "school", "clothing", "money"}
    with open(os.path.join(HERE, "annotations.jsonl"), "w") as f:
        topic_concepts = {
            "animal-hunting": CONCEPTS[:21],
            "school-uniforms": CONCEPTS[21:],
        }
        for topic, cs in topic_concepts.items():
            for c in cs:
                f.write(json.dumps({"kind": "signature", "topic_id": topic, "concept": c,
                                    "relevant": c not in irrelevant,
                                    "appropriate_granularity": c not in too_coarse}) + "\n")
        for aid, g in gold.items():
            for c in topic_concepts[topic_of[aid]]:
                f.write(json.dumps({"kind": "stance", "argument_id": aid, "concept": c,
                                    "label": g.get(c, 0)}) + "\n")
        for topic in topic_concepts:
            pro = [a for a in gold if topic_of[a] == topic and stance_of[a] == "pro"]
            con = [a for a in gold if topic_of[a] == topic and stance_of[a] == "con"]
            for a in pro:
                for b in con:
                    agree = dis = 0
                    for c in topic_concepts[topic]:
                        x, y = gold[a].get(c, 0), gold[b].get(c, 0)
                        lab = "neutral"
                        if x != 0 and y != 0:
                            if x == y:
                                agree += 1
                                lab = "agree"
                            else:
                                dis += 1
                                lab = "disagree"
                        f.write(json.dumps({"kind": "pair_concept", "arg1": a, "arg2": b,
                                            "concept": c, "label": lab}) + "\n")
                    if agree and dis:
                        label = "partial_agreement"
                    elif agree:
                        label = "agreement"
                    elif dis:
                        label = "disagreement"
                    else:
                        label = "orthogonal"
                    f.write(json.dumps({"kind": "pair_global", "arg1": a, "arg2": b,
                                        "label": label}) + "\n")
        # Two annotators on the first topic for reliability.
        for annotator in ("ann-a", "ann-b"):
            for aid in [a for a in gold if topic_of[a] == "animal-hunting"]:
                for i, c in enumerate(topic_concepts["animal-hunting"][:8]):
                    label = gold[aid].get(c, 0)
                    if annotator == "ann-b" and (i + len(aid)) % 7 == 0:
                        label = 0 if label != 0 else 1
                    f.write(json.dumps({"kind": "stance", "annotator": annotator,
                                        "argument_id": aid, "concept": c,
                                        "label": label}) + "\n")


if __name__ == "__main__":
    main()
