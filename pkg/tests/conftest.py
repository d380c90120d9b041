import json
from pathlib import Path

import numpy as np
import pytest

from socialtyper.classifier import make_segment_map

DATA_DIR = Path(__file__).parent / "data"
FIG2_PATHS = DATA_DIR / "fig2_paths.txt"

# Hand enumeration of the fig2 fixture at depth_cutoff=3, min_count=5 with
# the default coarse roots {Person, Organisation, Place, Work}: paths with
# <= 3 segments are abstract, leaves totalling < 5 are pruned, and the
# coarse type is the first segment at position >= 3 found among the roots.
FIG2_EXPECTED = {
    "Actor": "Person",
    "Album": "Other",
    "BasketballTeam": "Organisation",
    "Company": "Organisation",
    "Guitarist": "Person",
    "MusicalArtist": "Person",
    "Politician": "Person",
    "Settlement": "Other",
    "SoccerPlayer": "Person",
    "Stadium": "Other",
}


def gaussian_clusters(
    rng: np.random.Generator,
    n_per_class: int,
    n_classes: int = 4,
    seg_dims: tuple[int, int] = (4, 4),
    spread: float = 0.25,
):
    """Separable synthetic dataset with one cluster per class in each of two
    input segments, mirroring a network+content fusion."""
    dim = sum(seg_dims)
    means = np.zeros((n_classes, dim))
    for c in range(n_classes):
        means[c, c % seg_dims[0]] = 3.0
        means[c, seg_dims[0] + (c % seg_dims[1])] = -3.0 if c % 2 else 3.0
        means[c] += 0.5 * c
    xs, ys = [], []
    for c in range(n_classes):
        xs.append(means[c] + spread * rng.standard_normal((n_per_class, dim)))
        ys.extend([c] * n_per_class)
    x = np.concatenate(xs)
    y = np.asarray(ys, dtype=np.int64)
    order = rng.permutation(len(y))
    return x[order], y[order]


@pytest.fixture
def two_segment_map():
    return make_segment_map([("network", 4), ("content", 4)])


def write_jsonl(path: Path, rows) -> Path:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")
    return path


def write_etsv(path: Path, entries) -> Path:
    """entries: iterable of (id, vector)."""
    with open(path, "w", encoding="utf-8") as fh:
        for eid, vec in entries:
            fh.write(eid + "\t" + " ".join(repr(float(v)) for v in vec) + "\n")
    return path


def write_text(path: Path, text: str) -> Path:
    path.write_text(text, encoding="utf-8")
    return path


@pytest.fixture
def cli_world(tmp_path):
    """A miniature end-to-end corpus: entities, KB extracts, and embeddings.

    Entities e01..e12 in descending popularity; e01..e09 are in the Wikidata
    index, of which e01,e02,e03,e06,e08,e09 carry fine DBpedia paths,
    e04 is bare Person (coarse only), e05 has a pruned leaf (Chef), and
    e07 has no DBpedia entry at all.
    """
    world = tmp_path / "world"
    world.mkdir()
    (world / "paths.txt").write_text(FIG2_PATHS.read_text(encoding="utf-8"), encoding="utf-8")

    entities = [
        {"id": f"e{i:02d}", "handle": f"handle{i:02d}", "followers": 1000 - i * 10}
        for i in range(1, 13)
    ]
    entities[0]["description"] = "Dad, husband, President, citizen."
    write_jsonl(world / "entities.jsonl", entities)

    wikidata_rows = [
        ("Q1", "e01", "american actor"),
        ("Q2", "e02", "rock musician"),
        ("Q3", "e03", "software company"),
        ("Q4", "e04", "well known person"),
        ("Q5", "e05", "television chef"),
        ("Q6", "e06", "basketball team"),
        ("Q7", "e07", "media company"),
        ("Q8", "e08", "politician from europe"),
        ("Q9", "e09", "football stadium"),
    ]
    write_text(
        world / "wikidata_index.tsv",
        "".join(f"{q}\t{t}\t{d}\n" for q, t, d in wikidata_rows),
    )

    dbpedia_rows = [
        ("Q1", "Thing/Species/Eukaryote/Animal/Person/Artist/Actor"),
        ("Q2", "Thing/Species/Eukaryote/Animal/Person/Artist/MusicalArtist"),
        ("Q3", "Thing/Agent/Organisation/Company"),
        ("Q4", "Thing/Agent/Person"),
        ("Q5", "Thing/Species/Eukaryote/Animal/Person/Chef"),
        ("Q6", "Thing/Agent/Organisation/SportsTeam/BasketballTeam"),
        ("Q8", "Thing/Agent/Person/Politician"),
        ("Q9", "Thing/Place/ArchitecturalStructure/Stadium"),
    ]
    write_text(
        world / "dbpedia_types.tsv",
        "".join(f"{q}\t{p}\n" for q, p in dbpedia_rows),
    )

    # Description embeddings: 6-dim, class-clustered so the weak classifier
    # can separate them. Targets sit near a coarse-compatible cluster.
    desc_clusters = {
        "e01": 0, "e02": 1, "e03": 2, "e06": 3, "e08": 4, "e09": 5,
        "e04": 4,  # person-flavoured description -> politician cluster
        "e05": 4,
        "e07": 2,  # company-flavoured description
    }
    rng = np.random.default_rng(99)
    desc_entries = []
    for eid, cluster in desc_clusters.items():
        base = np.zeros(6)
        base[cluster] = 10.0
        desc_entries.append((eid, base + 0.1 * rng.standard_normal(6)))
    write_etsv(world / "desc.etsv", desc_entries)

    # Network (3-dim) and content (5-dim) embeddings for every entity,
    # clustered by true type family so training converges.
    family = {
        "e01": 0, "e02": 1, "e03": 2, "e04": 3, "e05": 3, "e06": 2,
        "e07": 2, "e08": 3, "e09": 1, "e10": 0, "e11": 1, "e12": 2,
    }
    net_entries, content_entries = [], []
    for eid, fam in family.items():
        net = np.zeros(3)
        net[fam % 3] = 5.0
        content = np.zeros(5)
        content[fam] = 5.0
        jitter = np.random.default_rng(1000 + int(eid[1:]))
        net_entries.append((eid, net + 0.05 * jitter.standard_normal(3)))
        content_entries.append((eid, content + 0.05 * jitter.standard_normal(5)))
    write_etsv(world / "network.etsv", net_entries)
    write_etsv(world / "content.etsv", content_entries)

    # Per-tweet vectors for the aggregate subcommand.
    tweet_entries = []
    for line_index, (eid, fam) in enumerate(list(family.items())[:4]):
        for t in range(2):
            vec = np.zeros(5)
            vec[fam] = 4.0 + t
            tweet_entries.append((f"{eid}#{line_index * 2 + t}", vec))
    write_etsv(world / "tweets.etsv", tweet_entries)

    return world
