"""Regenerate tests/data/toy_corpus.tsv, a synthetic Turkish-like polarity corpus.

Usage: python scripts/make_toy_corpus.py [output_path]
"""

import random
import sys
from pathlib import Path

ENTITIES = {
    # entity: (negative, neutral, positive) label weights
    "ankara_uni": (0.2, 0.3, 0.5),
    "bogazici_uni": (0.1, 0.3, 0.6),
    "ege_uni": (0.4, 0.3, 0.3),
    "hacettepe_uni": (0.3, 0.4, 0.3),
    "itu": (0.2, 0.2, 0.6),
    "marmara_uni": (0.5, 0.3, 0.2),
    "odtu": (0.25, 0.25, 0.5),
    "sabanci_uni": (0.35, 0.35, 0.3),
}
MENTIONS = {k: "@" + k.replace("_", "") for k in ENTITIES}

POSITIVE = ["güzel", "harika", "mükemmel", "başarılı", "sevdim", "teşekkürler", "muhteşem",
            "keyifli", "gurur", "tebrikler", "süper", "memnunum"]
NEGATIVE = ["kötü", "berbat", "rezalet", "sorun", "şikayet", "pahalı", "yavaş", "kalabalık",
            "bozuk", "üzgünüm", "maalesef", "yetersiz"]
NEUTRAL = ["duyuru", "kayıt", "tarih", "takvim", "açıklandı", "başvuru", "saat", "toplantı",
           "program", "listesi", "yapılacak", "bilgi"]
TOPICS = ["kampüs", "yemekhane", "kütüphane", "hoca", "öğrenci", "bölüm", "sınav", "ders",
          "yurt", "servis", "konferans", "mezuniyet", "laboratuvar", "kulüp"]
FILLER = ["bu", "çok", "ve", "ama", "bir", "için", "daha", "gibi", "de", "ile", "en", "her"]
POOLS = {-1: NEGATIVE, 0: NEUTRAL, 1: POSITIVE}


def make_message(rng: random.Random, entity: str, label: int) -> str:
    words = [rng.choice(TOPICS) for _ in range(rng.randint(1, 3))]
    words += [rng.choice(POOLS[label]) for _ in range(rng.randint(2, 3))]
    words += [rng.choice(FILLER) for _ in range(rng.randint(1, 3))]
    rng.shuffle(words)
    if rng.random() < 0.5:
        words.insert(0, MENTIONS[entity])
    if rng.random() < 0.3:
        words.append("#" + rng.choice(TOPICS))
    if rng.random() < 0.2:
        words.append(f"http://t.co/{rng.randrange(16**6):06x}")
    text = " ".join(words)
    if rng.random() < 0.15:
        text = text.upper()
    return text + rng.choice(["", "!", ".", "!!", " :)"])


def main(out: Path):
    rng = random.Random(20140301)
    names = sorted(ENTITIES)
    lines = []
    for k in range(300):
        entity = names[k % len(names)] if k < 240 else rng.choice(names)
        label = rng.choices([-1, 0, 1], weights=ENTITIES[entity])[0]
        lines.append(f"{entity}\t{label}\t{make_message(rng, entity, label)}")
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parents[1] / "tests/data/toy_corpus.tsv")
