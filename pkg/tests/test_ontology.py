import json

import numpy as np
import pytest

from socialtyper.ontology import (
    DEFAULT_COARSE_ROOTS,
    CoarseType,
    OntologyError,
    SchemaConflictError,
    TypePath,
    UnknownFineTypeError,
    coarse_of,
    coarse_roots_from_json,
    induce_schema,
    leaf_type,
    parse_type_paths,
    path_coarse,
    read_path_file,
    read_schema,
    write_schema,
)

from conftest import FIG2_EXPECTED, FIG2_PATHS

GUITARIST_LINE = (
    "Thing/Species/Eukaryote/Animal/Person/Artist/MusicalArtist/"
    "Instrumentalist/Guitarist"
)


class TestParse:
    def test_eight_hop_guitarist_path(self):
        (path,) = parse_type_paths([GUITARIST_LINE])
        assert len(path.segments) == 9
        assert path.leaf == "Guitarist"
        assert path.segments[0] == "Thing"

    def test_single_segment(self):
        (path,) = parse_type_paths(["Person"])
        assert path.segments == ("Person",)

    def test_empty_segment_reports_line_one(self):
        with pytest.raises(OntologyError, match="line 1"):
            parse_type_paths(["A//B"])

    def test_error_names_the_right_line(self):
        with pytest.raises(OntologyError, match="line 3"):
            parse_type_paths(["A/B", "C/D", "C//D"])

    def test_blank_lines_skipped_but_counted(self):
        paths = parse_type_paths(["", "A/B", "   ", "C/D"])
        assert [p.text() for p in paths] == ["A/B", "C/D"]
        with pytest.raises(OntologyError, match="line 4"):
            parse_type_paths(["", "A/B", "   ", "C//D"])

    def test_adjacent_duplicate_rejected(self):
        with pytest.raises(OntologyError, match="duplicate"):
            parse_type_paths(["A/A/B"])

    def test_trailing_separator_is_an_empty_segment(self):
        with pytest.raises(OntologyError):
            parse_type_paths(["A/B/"])


class TestLeaf:
    def test_guitarist(self):
        (path,) = parse_type_paths([GUITARIST_LINE])
        assert leaf_type(path) == "Guitarist"

    def test_single(self):
        assert leaf_type(TypePath(("Person",))) == "Person"

    def test_company(self):
        (path,) = parse_type_paths(["Thing/Agent/Organisation/Company"])
        assert leaf_type(path) == "Company"

    def test_leaf_equals_final_token_property(self):
        rng = np.random.default_rng(7)
        alphabet = ["Thing", "Agent", "Person", "Artist", "Actor", "Work", "X", "Y"]
        for _ in range(200):
            n = int(rng.integers(1, 8))
            segments = []
            for _ in range(n):
                choices = [a for a in alphabet if not segments or a != segments[-1]]
                segments.append(choices[int(rng.integers(0, len(choices)))])
            text = "/".join(segments)
            (path,) = parse_type_paths([text])
            assert leaf_type(path) == text.split("/")[-1]


def _counted(text: str, count: int) -> tuple[TypePath, int]:
    (path,) = parse_type_paths([text])
    return path, count


class TestInduceSchema:
    def test_count_filter(self):
        # Oracle: keep leaves of deep-enough paths with total count >= 5.
        paths = [
            _counted("Thing/Agent/Person/Artist/MusicalArtist", 10),
            _counted("Thing/Agent/Person/Chef", 2),
        ]
        schema = induce_schema(paths, min_count=5)
        assert schema.fine_names() == ("MusicalArtist",)
        assert schema.coarse_of("MusicalArtist") is CoarseType.PERSON

    def test_min_count_one_keeps_every_deep_leaf(self):
        paths = [
            _counted("Thing/Agent/Person/Chef", 1),
            _counted("Thing/Agent/Person/Artist/MusicalArtist", 1),
        ]
        schema = induce_schema(paths, min_count=1)
        assert schema.fine_names() == ("Chef", "MusicalArtist")

    def test_fig2_fixture_matches_hand_enumeration(self):
        counted = read_path_file(FIG2_PATHS)
        schema = induce_schema(counted, depth_cutoff=3, min_count=5)
        assert schema.fine_names() == tuple(sorted(FIG2_EXPECTED))
        for name, coarse in FIG2_EXPECTED.items():
            assert schema.coarse_of(name).value == coarse

    def test_fig2_with_extended_roots_recovers_place_and_work(self):
        counted = read_path_file(FIG2_PATHS)
        roots = dict(DEFAULT_COARSE_ROOTS)
        roots["PopulatedPlace"] = CoarseType.PLACE
        roots["MusicalWork"] = CoarseType.WORK
        schema = induce_schema(counted, coarse_roots=roots)
        assert schema.coarse_of("Settlement") is CoarseType.PLACE
        assert schema.coarse_of("Album") is CoarseType.WORK
        assert schema.coarse_of("Stadium") is CoarseType.OTHER

    def test_counts_for_shared_leaf_are_summed(self):
        paths = [
            _counted("Thing/Agent/Person/Artist/Actor", 3),
            _counted("Thing/Agent/Person/Actor", 2),
        ]
        schema = induce_schema(paths, min_count=5)
        assert schema.fine_names() == ("Actor",)

    def test_conflicting_coarse_roots_abort(self):
        paths = [
            _counted("Thing/Agent/Person/Writer", 5),
            _counted("Thing/Work/WrittenWork/Writer", 5),
        ]
        with pytest.raises(SchemaConflictError, match="Writer"):
            induce_schema(paths, min_count=1)

    def test_empty_input_gives_empty_schema(self):
        schema = induce_schema([])
        assert schema.fine_names() == ()

    def test_negative_count_rejected(self):
        with pytest.raises(OntologyError):
            induce_schema([_counted("Thing/Agent/Person/Chef", -1)])

    def test_monotone_in_min_count(self):
        rng = np.random.default_rng(11)
        alphabet = [f"T{i}" for i in range(12)]
        for _ in range(50):
            paths = []
            for _ in range(int(rng.integers(1, 20))):
                n = int(rng.integers(1, 7))
                segments = ["Thing"]
                for _ in range(n):
                    nxt = alphabet[int(rng.integers(0, len(alphabet)))]
                    if nxt != segments[-1]:
                        segments.append(nxt)
                paths.append((TypePath(tuple(segments)), int(rng.integers(0, 9))))
            previous = None
            for min_count in range(1, 8):
                fine = set(
                    induce_schema(paths, min_count=min_count, coarse_roots={}).fine_names()
                )
                if previous is not None:
                    assert fine <= previous
                previous = fine

    def test_deterministic_output_bytes(self, tmp_path):
        counted = read_path_file(FIG2_PATHS)
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        write_schema(induce_schema(counted), a)
        write_schema(induce_schema(counted), b)
        assert a.read_bytes() == b.read_bytes()


class TestCoarseOf:
    @pytest.fixture
    def schema(self):
        return induce_schema(read_path_file(FIG2_PATHS))

    def test_musical_artist_is_person(self, schema):
        assert coarse_of(schema, "MusicalArtist") is CoarseType.PERSON

    def test_company_is_organisation(self, schema):
        assert coarse_of(schema, "Company") is CoarseType.ORGANISATION

    def test_stadium_is_other(self, schema):
        assert coarse_of(schema, "Stadium") is CoarseType.OTHER

    def test_unknown_type_named_in_error(self, schema):
        with pytest.raises(UnknownFineTypeError, match="Nonexistent"):
            coarse_of(schema, "Nonexistent")

    def test_every_fine_type_has_one_of_five_coarse_values(self, schema):
        assert {ft.coarse for ft in schema.fine_types} <= set(CoarseType)


class TestPathCoarse:
    def test_scan_starts_at_depth_cutoff(self):
        # Place sits at position 2, below the scan window, so it is ignored.
        (path,) = parse_type_paths(["Thing/Place/PopulatedPlace/Settlement"])
        assert path_coarse(path, 3, DEFAULT_COARSE_ROOTS) is CoarseType.OTHER
        assert path_coarse(path, 2, DEFAULT_COARSE_ROOTS) is CoarseType.PLACE

    def test_defaults_to_other(self):
        (path,) = parse_type_paths(["A/B/C/D"])
        assert path_coarse(path, 3, DEFAULT_COARSE_ROOTS) is CoarseType.OTHER


class TestSchemaFile:
    def test_round_trip(self, tmp_path):
        schema = induce_schema(read_path_file(FIG2_PATHS))
        out = tmp_path / "schema.json"
        write_schema(schema, out)
        loaded = read_schema(out)
        assert loaded.fine_types == schema.fine_types
        assert loaded.depth_cutoff == schema.depth_cutoff
        assert loaded.min_count == schema.min_count

    def test_keys_sorted(self, tmp_path):
        out = tmp_path / "schema.json"
        write_schema(induce_schema(read_path_file(FIG2_PATHS)), out)
        doc = json.loads(out.read_text(encoding="utf-8"))
        assert list(doc) == sorted(doc)
        assert out.read_text(encoding="utf-8").lstrip().startswith('{\n  "depth_cutoff"')

    def test_invalid_json_rejected(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json", encoding="utf-8")
        with pytest.raises(OntologyError):
            read_schema(bad)


class TestPathFile:
    def test_counts_parsed_and_defaulted(self, tmp_path):
        f = tmp_path / "paths.txt"
        f.write_text("A/B/C/D\t7\nE/F/G/H\n", encoding="utf-8")
        counted = read_path_file(f)
        assert [(p.text(), c) for p, c in counted] == [("A/B/C/D", 7), ("E/F/G/H", 1)]

    def test_bad_count_names_line(self, tmp_path):
        f = tmp_path / "paths.txt"
        f.write_text("A/B\tmany\n", encoding="utf-8")
        with pytest.raises(OntologyError, match="line 1"):
            read_path_file(f)

    def test_coarse_roots_from_json(self):
        roots = coarse_roots_from_json({"Person": "Person", "Club": "Organisation"})
        assert roots["Club"] is CoarseType.ORGANISATION
        with pytest.raises(OntologyError):
            coarse_roots_from_json({"Person": "person"})
