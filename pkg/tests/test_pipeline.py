import json

import pytest

from carloc.core.errors import ConfigError
from carloc.labeling.features import load_features
from carloc.main import EXIT_CONFIG, EXIT_FAILURE, EXIT_OK, main
from carloc.pipeline.config import DESK_SCALE, LabelSelector, PipelineConfig, load_pipeline_config, parse_selector
from carloc.pipeline.graph import needs_clustering, run_pipeline, run_sweep, selector_slug
from carloc.pipeline.state import RunLayout

import quick_start

TINY_RUN = {
    "model.backbone": "tiny",
    "model.pretrained": "false",
    "train.epochs": "3",
    "train.crop_size": "64",
    "train.batch_size": "8",
    "features.extractor": "tiny",
    "features.pretrained": "false",
    "features.image_size": "64",
}


def _write_config(path, **values):
    path.write_text("".join(f"{key}={value}\n" for key, value in values.items()), encoding="utf-8")
    return path


def _tiny_config(tmp_path, manifest_file, label_space="model", **extra):
    values = {
        "manifest": str(manifest_file),
        "label_space": label_space,
        "output_dir": str(tmp_path / "run"),
        "cache_root": str(tmp_path / "cache"),
    }
    values.update(extra)
    return load_pipeline_config(_write_config(tmp_path / "run.cfg", **values), TINY_RUN)


def _stage_events(layout: RunLayout):
    lines = layout.stage_log.read_text(encoding="utf-8").splitlines()
    return [json.loads(line) for line in lines if line.strip()]


# selectors and config

@pytest.mark.parametrize(
    "text, expected",
    [
        ("make", LabelSelector("human", ("make",))),
        ("Year", LabelSelector("human", ("year",))),
        ("model-year", LabelSelector("merged", ("model", "year"))),
        ("random:75", LabelSelector("random", (), 75)),
        ("kmeans:431", LabelSelector("kmeans", (), 431)),
    ],
)
def test_parse_selector(text, expected):
    assert parse_selector(text) == expected


@pytest.mark.parametrize("text", ["colour", "make-make", "make-model-year", "kmeans:0", "random:", "kmeans:x"])
def test_parse_selector_rejects(text):
    with pytest.raises(ConfigError):
        parse_selector(text)


def test_seed_reaches_seeded_sections(tmp_path):
    path = _write_config(tmp_path / "a.cfg", manifest="m.jsonl", label_space="make", output_dir="out", seed="7")
    cfg = load_pipeline_config(path)
    assert cfg.train.seed == 7 and cfg.features.seed == 7
    explicit = load_pipeline_config(path, {"train.seed": "3"})
    assert explicit.train.seed == 3 and explicit.features.seed == 7


def test_config_rejects_unknown_and_missing_keys(tmp_path):
    path = _write_config(tmp_path / "a.cfg", manifest="m.jsonl", label_space="make", output_dir="out", colour="red")
    with pytest.raises(ConfigError):
        load_pipeline_config(path)
    path = _write_config(tmp_path / "b.cfg", manifest="m.jsonl", output_dir="out")
    with pytest.raises(ConfigError):
        load_pipeline_config(path)
    path = _write_config(tmp_path / "c.cfg", manifest="m.jsonl", label_space="make", output_dir="out")
    with pytest.raises(ConfigError):
        load_pipeline_config(path, {"boxer.kernel_size": "4"})


def test_top_level_values_are_typed(tmp_path):
    path = _write_config(
        tmp_path / "a.cfg", manifest="m.jsonl", label_space="make", output_dir="out", seed="4", export_pgm="true"
    )
    cfg = load_pipeline_config(path, {"split": "train"})
    assert (cfg.seed, cfg.export_pgm, cfg.split) == (4, True, "train")
    with pytest.raises(ConfigError):
        load_pipeline_config(path, {"label_space": "colour"})
    with pytest.raises(ConfigError):
        load_pipeline_config(path, {"split": "val"})


def test_desk_scale_unfreezes_tiny_nets(tmp_path):
    path = _write_config(tmp_path / "a.cfg", manifest="m.jsonl", label_space="model", output_dir="out")
    cfg = load_pipeline_config(path, DESK_SCALE)
    assert cfg.model.backbone == "tiny" and not cfg.model.pretrained
    assert cfg.model.frozen_stages == ()
    assert cfg.train.learning_rate == pytest.approx(0.05)
    assert cfg.features.extractor == "tiny" and cfg.features.image_size == 128


def test_output_paths_do_not_change_the_digest(tmp_path):
    cfg = PipelineConfig(manifest="m.jsonl", label_space="make", output_dir="a", cache_root="c1")
    moved = PipelineConfig(manifest="m.jsonl", label_space="make", output_dir="b", cache_root="c2", run_name="x")
    assert cfg.digest_payload() == moved.digest_payload()
    assert cfg.name == "make" and moved.name == "x"


def test_entry_branch_follows_selector():
    class _State:
        def __init__(self, space):
            self.config = PipelineConfig(manifest="m", label_space=space, output_dir="o", cache_root="c")

    assert needs_clustering(_State("kmeans:16")) == "features"
    assert needs_clustering(_State("model")) == "labels"
    assert needs_clustering(_State("random:16")) == "labels"
    assert selector_slug("kmeans:16") == "kmeans_16"


# end to end

def test_pipeline_runs_then_hits_cache(tmp_path, color_manifest_file):
    cfg = _tiny_config(tmp_path, color_manifest_file)
    layout = RunLayout.of(cfg)
    first = run_pipeline(cfg)
    assert first.n_images == 8
    assert 0.0 <= first.miou <= 1.0
    for path in (layout.labels, layout.checkpoint, layout.heatmaps, layout.predictions, layout.report):
        assert path.exists()
    ran = _stage_events(layout)
    assert [e["stage"] for e in ran] == ["labels", "train", "infer", "boxes", "evaluate"]
    assert all(e["status"] == "run" for e in ran)

    second = run_pipeline(cfg)
    assert second == first
    rerun = _stage_events(layout)[len(ran):]
    assert [e["status"] for e in rerun] == ["hit"] * 5


def test_boxer_edit_reruns_only_downstream(tmp_path, color_manifest_file):
    cfg = _tiny_config(tmp_path, color_manifest_file)
    run_pipeline(cfg)
    seen = len(_stage_events(RunLayout.of(cfg)))
    edited = _tiny_config(tmp_path, color_manifest_file, **{"boxer.threshold_fraction": "0.5"})
    run_pipeline(edited)
    statuses = {e["stage"]: e["status"] for e in _stage_events(RunLayout.of(edited))[seen:]}
    assert statuses == {"labels": "hit", "train": "hit", "infer": "hit", "boxes": "run", "evaluate": "run"}


def test_kmeans_run_clusters_first(tmp_path, color_manifest_file):
    cfg = _tiny_config(tmp_path, color_manifest_file, label_space="kmeans:4")
    report = run_pipeline(cfg)
    layout = RunLayout.of(cfg)
    assert report.run_name == "kmeans:4"
    assert [e["stage"] for e in _stage_events(layout)][:3] == ["features", "cluster", "labels"]
    stats = json.loads(layout.cluster_stats.read_text(encoding="utf-8"))
    assert stats["k"] == 4 and set(stats["stats"]) == {"all", "train", "test"}
    assert list((tmp_path / "cache" / "features").glob("*.bin"))



def test_truncated_feature_cache_is_recomputed(tmp_path, color_manifest_file):
    first = _tiny_config(tmp_path, color_manifest_file, label_space="kmeans:4")
    run_pipeline(first)
    (cached,) = (tmp_path / "cache" / "features").glob("*.bin")
    cached.write_bytes(cached.read_bytes()[:100])

    again = _tiny_config(tmp_path, color_manifest_file, label_space="kmeans:4", output_dir=str(tmp_path / "again"))
    report = run_pipeline(again)
    events = {e["stage"]: e["status"] for e in _stage_events(RunLayout.of(again))}
    assert events["features"] == "run" and events["cluster"] == "run"
    assert report.n_images == 8
    assert len(load_features(cached).ids) == 32


@pytest.mark.slow
def test_sweep_writes_comparison(tmp_path, color_manifest_file):
    cfg = _tiny_config(tmp_path, color_manifest_file)
    table = run_sweep(cfg, ["make", "random:2"])
    assert sorted(row[0] for row in table.rows) == ["make", "random:2"]
    root = tmp_path / "run"
    assert (root / "comparison.csv").exists() and (root / "comparison.txt").exists()
    assert (root / "random_2" / "report.json").exists()


# command line

def test_cli_exit_codes(tmp_path, color_manifest_file):
    labels = tmp_path / "make.json"
    assert main(["label", "human", "--manifest", str(color_manifest_file), "--field", "make", "--out", str(labels)]) == EXIT_OK
    assert labels.exists()

    missing = _write_config(tmp_path / "m.cfg", manifest=str(tmp_path / "nope.jsonl"), label_space="make", output_dir=str(tmp_path / "o"))
    assert main(["pipeline", "run", "--config", str(missing)]) == EXIT_CONFIG
    assert main(["pipeline", "run", "--config", str(missing), "--set", "broken"]) == EXIT_CONFIG

    bad = tmp_path / "bad.jsonl"
    bad.write_text("{not json}\n", encoding="utf-8")
    assert main(["label", "human", "--manifest", str(bad), "--field", "make", "--out", str(labels)]) == EXIT_FAILURE


def test_quick_start_renders_under_workdir_images(tmp_path, monkeypatch):
    seen = []
    monkeypatch.setattr(quick_start, "run_pipeline", lambda cfg: seen.append(cfg) or _FakeReport())
    monkeypatch.setattr(
        "sys.argv", ["quick_start.py", "--workdir", str(tmp_path), "--images", "6", "--label-space", "kmeans:3"]
    )
    quick_start.main()

    assert len(list((tmp_path / "images").glob("*.png"))) == 6
    assert not (tmp_path / "images" / "images").exists()
    (cfg,) = seen
    assert cfg.label_space == "kmeans:3"
    assert cfg.model.backbone == "tiny" and cfg.model.frozen_stages == ()
    assert cfg.output_dir == str(tmp_path / "runs" / "kmeans_3")


class _FakeReport:
    run_name = "kmeans:3"
    miou = 0.0
    n_images = 0
