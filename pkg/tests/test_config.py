import os

import numpy as np
import pytest

from ccl.config import (
    ExperimentConfig,
    build_dataset,
    dump_config,
    load_config,
    parse_config,
    validate_paths,
)
from ccl.exceptions import ConfigError
from ccl.trainer import TrainConfig

FULL = """
[dataset]
kind = spirals
n = 400
noise = 0.1
seed = 3
val_fraction = 0.2
test_fraction = 0.25
split_seed = 4
stratified = false

[training]
hidden = 32,16
batch_size = 8
lr = 0.005
eval_interval = 10
monitor = val_loss
class_balanced = yes

[schedule]
sp = 0.125
ep = 0.75
alpha = 0.25
cl_stages = 4

[experiment]
methods = vanilla, ccl, cl
seed = 7
repeats = 3
output_dir = results
"""


class TestParse:
    def test_defaults(self):
        cfg = parse_config("")
        assert cfg.dataset["kind"] == "spirals" and cfg.dataset["n"] == 2000
        assert cfg.train == TrainConfig(seeds=(0, 1, 2, 3, 4))
        assert cfg.train.methods == ("vanilla", "ccl")

    def test_full(self):
        cfg = parse_config(FULL)
        t = cfg.train
        assert t.hidden == (32, 16) and t.batch_size == 8 and t.lr == 0.005
        assert t.eval_interval == 10 and t.monitor == "val_loss" and t.class_balanced
        assert (t.sp, t.ep, t.alpha, t.cl_stages) == (0.125, 0.75, 0.25, 4)
        assert t.methods == ("vanilla", "ccl", "cl")
        assert cfg.seeds == (7, 8, 9)
        assert cfg.dataset["stratified"] is False and cfg.dataset["split_seed"] == 4
        assert cfg.output_dir == "results"

    def test_explicit_seeds(self):
        cfg = parse_config("[experiment]\nseeds = 4, 9\n")
        assert cfg.seeds == (4, 9)

    def test_output_dir_env(self, monkeypatch):
        monkeypatch.setenv("CCL_OUTPUT_DIR", "/tmp/elsewhere")
        assert parse_config("").output_dir == "/tmp/elsewhere"
        assert parse_config("[experiment]\noutput_dir = here\n").output_dir == "here"

    @pytest.mark.parametrize(
        "text",
        [
            "[dataset]\nkind = imagenet\n",
            "[dataset]\nkind = blobs\npath = x.csv\n",
            "[dataset]\nkind = csv\n",
            "[training]\nbatch_size = many\n",
            "[training]\nlearning_rate = 0.1\n",
            "[schedule]\nsp = 0.9\nep = 0.5\n",
            "[experiment]\nmethods = vanilla,spl\n",
            "[experiment]\nmethods =\n",
            "[weird]\na = 1\n",
            "not an ini file",
            "[training]\nclass_balanced = maybe\n",
        ],
    )
    def test_invalid(self, text):
        with pytest.raises(ConfigError):
            parse_config(text)

    def test_relative_paths(self, tmp_path):
        (tmp_path / "c.ini").write_text("[dataset]\nkind = csv\npath = data/d.csv\n")
        cfg = load_config(tmp_path / "c.ini")
        assert cfg.dataset["path"] == str(tmp_path / "data" / "d.csv")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="nope.ini"):
            load_config(tmp_path / "nope.ini")

    def test_missing_dataset_file(self, tmp_path):
        cfg = parse_config("[dataset]\nkind = csv\npath = gone.csv\n", base_dir=str(tmp_path))
        with pytest.raises(ConfigError, match="gone.csv"):
            validate_paths(cfg)


class TestRoundTrip:
    @pytest.mark.parametrize("text", ["", FULL, "[experiment]\nseeds = 4,9\n",
                                      "[dataset]\nkind = blobs\nclasses = 4\n"])
    def test_dump_parse(self, text):
        cfg = parse_config(text)
        again = parse_config(dump_config(cfg))
        assert again == cfg
        assert again.train == cfg.train and again.dataset == cfg.dataset

    def test_inequality(self):
        a, b = parse_config(FULL), parse_config(FULL)
        b.train.lr = 0.5
        assert a != b
        assert isinstance(a, ExperimentConfig)


class TestBuildDataset:
    def test_generated(self):
        ds = build_dataset(parse_config(FULL))
        assert len(ds) == 400
        assert [len(ds.part(p)[1]) for p in ("train", "val", "test")] == [220, 80, 100]

    def test_csv(self, tmp_path):
        rows = "\n".join(f"{i},{i % 3},{'ab'[i % 2]}" for i in range(40))
        (tmp_path / "d.csv").write_text("x,z,label\n" + rows + "\n")
        cfg = parse_config("[dataset]\nkind = csv\npath = d.csv\n", base_dir=str(tmp_path))
        ds = build_dataset(cfg)
        assert ds.X.shape == (40, 2) and ds.n_classes == 2

    def test_idx_with_native_test(self, tmp_path):
        from ccl.datasets import write_idx

        r = np.random.default_rng(0)
        write_idx(tmp_path / "ti", tmp_path / "tl", r.integers(0, 255, (50, 3, 3)), np.arange(50) % 5)
        write_idx(tmp_path / "si", tmp_path / "sl", r.integers(0, 255, (20, 3, 3)), np.arange(20) % 5)
        text = ("[dataset]\nkind = idx\nimages = ti\nlabels = tl\n"
                "test_images = si\ntest_labels = sl\n")
        ds = build_dataset(parse_config(text, base_dir=str(tmp_path)))
        assert [len(ds.part(p)[1]) for p in ("train", "val", "test")] == [45, 5, 20]
