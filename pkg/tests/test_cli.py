import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from semsurf.cli import (
    EXIT_DATA,
    EXIT_OK,
    EXIT_USAGE,
    config_digest,
    main,
    parse_config,
)

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def write_config(path, dataset_path, extra=""):
    path.write_text(
        f"""
dataset = {dataset_path}
dataset_name = clitest
format = jsonl
k = 3
runs = 4
master_seed = 7
chat.endpoint = mock:chat
translate.endpoint = mock:translate
embed.endpoint = mock:embed
t2i.endpoint = mock:t2i
i2t.endpoint = mock:i2t
train.learning_rate = 5.0
{extra}
"""
    )


def small_dataset(tmp_path, language="pt", n_ad=4, n_c=8):
    rows = []
    for i in range(n_ad + n_c):
        group = "AD" if i < n_ad else "C"
        base = (
            "o menino viu o cachorro. ele ficou feliz."
            if language == "pt"
            else "the boy saw the dog. he was happy."
        )
        rows.append(
            {"id": f"s{i:02d}", "text": f"{base} item {i}.", "group": group, "language": language}
        )
    p = tmp_path / "data.jsonl"
    p.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
    return p


@pytest.fixture
def runner():
    return CliRunner()


class TestConfigParsing:
    def test_parse(self, tmp_path):
        p = tmp_path / "c.conf"
        p.write_text("a = 1\n# full comment\nb = two words  # trailing\n\n")
        assert parse_config(p) == {"a": "1", "b": "two words"}

    def test_missing_equals(self, tmp_path):
        p = tmp_path / "c.conf"
        p.write_text("just a line\n")
        from semsurf.cli import StageError

        with pytest.raises(StageError) as err:
            parse_config(p)
        assert err.value.exit_code == EXIT_USAGE

    def test_digest_stable(self):
        assert config_digest({"a": "1", "b": "2"}) == config_digest({"b": "2", "a": "1"})
        assert config_digest({"a": "1"}) != config_digest({"a": "2"})


class TestStageOrdering:
    def test_transform_before_ingest_fails(self, tmp_path, runner):
        conf = tmp_path / "c.conf"
        write_config(conf, small_dataset(tmp_path))
        result = runner.invoke(
            main, ["transform", "--config", str(conf), "--run-dir", str(tmp_path / "run")]
        )
        assert result.exit_code == EXIT_DATA
        assert "ingest" in result.output

    def test_stats_before_similarity_fails(self, tmp_path, runner):
        conf = tmp_path / "c.conf"
        write_config(conf, small_dataset(tmp_path))
        result = runner.invoke(
            main, ["stats", "--config", str(conf), "--run-dir", str(tmp_path / "run")]
        )
        assert result.exit_code == EXIT_DATA

    def test_missing_dataset_key(self, tmp_path, runner):
        conf = tmp_path / "c.conf"
        conf.write_text("chat.endpoint = mock:chat\n")
        result = runner.invoke(
            main, ["ingest", "--config", str(conf), "--run-dir", str(tmp_path / "run")]
        )
        assert result.exit_code == EXIT_USAGE

    def test_bad_dataset_exits_2(self, tmp_path, runner):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"id": "a", "text": "", "group": "AD", "language": "en"}\n')
        conf = tmp_path / "c.conf"
        write_config(conf, bad)
        result = runner.invoke(
            main, ["ingest", "--config", str(conf), "--run-dir", str(tmp_path / "run")]
        )
        assert result.exit_code == EXIT_DATA


class TestFullRun:
    def run_all(self, tmp_path, runner, name="run", language="pt", extra=""):
        conf = tmp_path / f"{name}.conf"
        write_config(conf, small_dataset(tmp_path, language=language), extra=extra)
        run_dir = tmp_path / name
        result = runner.invoke(
            main, ["run", "--config", str(conf), "--run-dir", str(run_dir), "--offline"]
        )
        assert result.exit_code == EXIT_OK, result.output
        return run_dir

    def test_artifacts_present(self, tmp_path, runner):
        run_dir = self.run_all(tmp_path, runner)
        for name in (
            "dataset.jsonl",
            "dataset_stats.json",
            "similarity.json",
            "lexical.json",
            "classification.json",
            "stats.json",
            "run_manifest.json",
        ):
            assert (run_dir / name).exists(), name
        for table in ("dataset", "similarity", "classification", "backtranslation", "lexical", "pos"):
            for fmt in ("md", "csv", "json"):
                assert (run_dir / "reports" / f"table_{table}.{fmt}").exists(), (table, fmt)
        for metric in ("bleu", "chrf", "cosine"):
            assert (run_dir / "reports" / f"matrix_{metric}.csv").exists()

    def test_all_eight_kinds_and_id_preservation(self, tmp_path, runner):
        run_dir = self.run_all(tmp_path, runner, name="kinds")
        manifest = json.loads((run_dir / "transformed" / "manifest.json").read_text())
        assert sorted(manifest["kinds"]) == sorted(
            [
                "Original",
                "Translated",
                "ShortSummary",
                "MediumSummary",
                "LongSummary",
                "Storyboard",
                "ImageDescription",
                "BackTranslated",
            ]
        )
        source_ids = [
            json.loads(line)["id"]
            for line in (run_dir / "dataset.jsonl").read_text().splitlines()
        ]
        for kind in manifest["kinds"]:
            ids = [
                json.loads(line)["id"]
                for line in (run_dir / "transformed" / f"{kind}.jsonl").read_text().splitlines()
            ]
            assert ids == source_ids, kind

    def test_network_free(self, tmp_path, runner):
        run_dir = self.run_all(tmp_path, runner, name="offline")
        manifest = json.loads((run_dir / "run_manifest.json").read_text())
        assert manifest["network_calls"] == 0

    def test_reports_byte_identical_across_runs(self, tmp_path, runner):
        d1 = self.run_all(tmp_path, runner, name="r1")
        d2 = self.run_all(tmp_path, runner, name="r2")
        files = sorted(p.name for p in (d1 / "reports").iterdir())
        assert files == sorted(p.name for p in (d2 / "reports").iterdir())
        for name in files:
            assert (d1 / "reports" / name).read_bytes() == (d2 / "reports" / name).read_bytes(), name

    def test_english_dataset_skips_translation(self, tmp_path, runner):
        run_dir = self.run_all(tmp_path, runner, name="en", language="en")
        manifest = json.loads((run_dir / "transformed" / "manifest.json").read_text())
        assert "Translated" not in manifest["kinds"]
        sim = json.loads((run_dir / "similarity.json").read_text())
        assert sim["reference"] == "Original"

    def test_reference_is_translated_for_pt(self, tmp_path, runner):
        run_dir = self.run_all(tmp_path, runner, name="ref")
        sim = json.loads((run_dir / "similarity.json").read_text())
        assert sim["reference"] == "Translated"
        # similarity table restricted to the five derived text kinds
        assert sorted(sim["scores"]) == sorted(
            ["ShortSummary", "MediumSummary", "LongSummary", "Storyboard", "ImageDescription"]
        )

    def test_prompt_override_recorded(self, tmp_path, runner):
        run_dir = self.run_all(
            tmp_path, runner, name="prompt",
            extra="prompt.ShortSummary = Summarize in five words.",
        )
        manifest = json.loads((run_dir / "transformed" / "manifest.json").read_text())
        assert manifest["prompt_overrides"] == ["ShortSummary"]
        assert manifest["prompts"]["ShortSummary"] == "Summarize in five words."

    def test_classification_protocol_cv(self, tmp_path, runner):
        run_dir = self.run_all(tmp_path, runner, name="cv")
        cls = json.loads((run_dir / "classification.json").read_text())
        assert cls["protocol"] == "cv3"
        assert len(cls["seeds"]) == 4
        assert cls["seeds"] == [7 * 10007 + i for i in range(4)]
        for kind, runs in cls["runs"].items():
            assert len(runs) == 4, kind
            assert all(len(r["folds"]) == 3 for r in runs)

    def test_fixed_split_protocol(self, tmp_path, runner):
        ds = FIXTURES / "adress24.jsonl"
        conf = tmp_path / "fixed.conf"
        write_config(conf, ds)
        run_dir = tmp_path / "fixed"
        result = CliRunner().invoke(
            main, ["run", "--config", str(conf), "--run-dir", str(run_dir), "--offline"]
        )
        assert result.exit_code == EXIT_OK, result.output
        cls = json.loads((run_dir / "classification.json").read_text())
        assert cls["protocol"] == "fixed_split"

    def test_stages_rerunnable_individually(self, tmp_path, runner):
        conf = tmp_path / "c.conf"
        write_config(conf, small_dataset(tmp_path))
        run_dir = tmp_path / "steps"
        for stage in ("ingest", "transform", "similarity", "lexical", "classify", "stats", "report"):
            result = runner.invoke(
                main, [stage, "--config", str(conf), "--run-dir", str(run_dir), "--offline"]
            )
            assert result.exit_code == EXIT_OK, (stage, result.output)
