"""Regenerates the toy corpus. Stimuli and meanings share a latent 2-d
layout per spatial relation. Embeddings mix that layout with six nuisance
factors through a fixed linear map, so plain cosine similarity is
diluted while a learned 2-d projection can recover the relation. Pile
sorts follow the relation with occasional slips."""

import random

rng = random.Random(7)
RELATIONS = {"on": (1.0, 0.0), "under": (-1.0, 0.0), "in": (0.0, 1.0), "above": (0.7, -0.7)}
DIM = 8
NUISANCE = 6
MAP = [[rng.gauss(0, 1) for _ in range(2 + NUISANCE)] for _ in range(DIM)]


def embed(rel):
    x, y = RELATIONS[rel]
    latent = [x + rng.gauss(0, 0.15), y + rng.gauss(0, 0.15)]
    latent += [rng.gauss(0, 1) for _ in range(NUISANCE)]
    return [sum(a * z for a, z in zip(row, latent)) + rng.gauss(0, 0.05) for row in MAP]


stimuli = [(f"s{i:02d}", rel) for i, rel in enumerate(list(RELATIONS) * 6, start=1)]
meanings = {
    "the cat sleeps on the table .": "on",
    "the book is under the bed .": "under",
    "the bird sings in the cage .": "in",
    "a lamp hangs above the desk .": "above",
    "she left it on the shelf .": "on",
}

with open("embeddings.tsv", "w") as f:
    f.write("item_id\t" + "\t".join(f"v{j}" for j in range(DIM)) + "\n")
    for sid, rel in stimuli:
        f.write(sid + "\t" + "\t".join(f"{v:.6f}" for v in embed(rel)) + "\n")
    for key, rel in meanings.items():
        f.write(key + "\t" + "\t".join(f"{v:.6f}" for v in embed(rel)) + "\n")

with open("pilesort.csv", "w") as f:
    f.write("participant_id,item_id,pile_id\n")
    for p in range(1, 13):
        for sid, rel in stimuli:
            pile = rel if rng.random() > 0.1 else rng.choice(list(RELATIONS))
            f.write(f"p{p},{sid},{pile}\n")

FR = {"on": ["sur"], "under": ["sous"], "in": ["dans", "dans", "en"], "above": ["au-dessus", "sur"]}
DE = {"on": ["auf"], "under": ["unter"], "in": ["in"], "above": ["über", "über", "oberhalb"]}
rows = []
for key, rel in list(meanings.items())[:4]:
    for lang, table in (("fr", FR), ("de", DE)):
        for term in table[rel]:
            rows.append((key, rel, lang, term))
# zero alignment, and a meaning seen in one language only
rows.append(("the cat sleeps on the table .", "on", "de", "None"))
rows.append(("she left it on the shelf .", "on", "fr", "sur"))
with open("alignments.tsv", "w") as f:
    f.write("id\tmeaning_key\tsource_term\ttarget_language\ttarget_term\n")
    for i, (key, src, lang, term) in enumerate(rows, start=1):
        f.write(f"{i}\t{key}\t{src}\t{lang}\t{term}\n")
