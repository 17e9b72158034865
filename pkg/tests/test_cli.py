"""End-to-end CLI behavior: workflows, formats, and exit codes."""

import json

from geopost.cli import main

BOUNDS_FLAG = "40.70,-74.02,40.77,-73.93"


def _synth(tmp_path, name="corpus.jsonl", grid=2, posts=30, seed=42, **extra):
    path = tmp_path / name
    argv = [
        "synth",
        "--bounds", BOUNDS_FLAG,
        "--grid", str(grid),
        "--posts-per-cell", str(posts),
        "--seed", str(seed),
        "--out", str(path),
    ]
    for flag, value in extra.items():
        argv += [f"--{flag.replace('_', '-')}", str(value)]
    assert main(argv) == 0
    return path


def _train(tmp_path, corpus, name="model", grid=2, alpha=0.0, extra=()):
    model = tmp_path / name
    argv = [
        "train",
        "--corpus", str(corpus),
        "--bounds", BOUNDS_FLAG,
        "--grid", str(grid),
        "--alpha", str(alpha),
        "--stopwords-k", "0",
        "--seed", "1",
        "--out", str(model),
        *extra,
    ]
    assert main(argv) == 0
    return model


class TestExitCodes:
    def test_help_exits_zero(self, capsys):
        assert main(["--help"]) == 0
        assert "usage" in capsys.readouterr().out.lower()

    def test_no_command_is_usage_error(self):
        assert main([]) == 1

    def test_missing_corpus_file_is_data_error(self, tmp_path, capsys):
        code = main(
            ["train", "--corpus", str(tmp_path / "nope.jsonl"), "--bounds", BOUNDS_FLAG,
             "--out", str(tmp_path / "m")]
        )
        assert code == 2
        assert "error" in capsys.readouterr().err

    def test_bad_bounds_is_usage_error(self, tmp_path, capsys):
        corpus = _synth(tmp_path)
        code = main(["train", "--corpus", str(corpus), "--bounds", "1,2,3",
                     "--out", str(tmp_path / "m")])
        assert code == 1

    def test_bad_leakage_is_usage_error(self, tmp_path):
        code = main(["synth", "--bounds", BOUNDS_FLAG, "--grid", "2",
                     "--leakage", "1.5", "--out", str(tmp_path / "x.jsonl")])
        assert code == 1


class TestSynth:
    def test_line_count(self, tmp_path):
        path = _synth(tmp_path, grid=2, posts=10)
        assert len(path.read_text().splitlines()) == 40

    def test_same_seed_byte_identical(self, tmp_path):
        a = _synth(tmp_path, name="a.jsonl", seed=9)
        b = _synth(tmp_path, name="b.jsonl", seed=9)
        assert a.read_bytes() == b.read_bytes()

    def test_lines_are_valid_corpus_records(self, tmp_path):
        path = _synth(tmp_path, posts=5)
        for line in path.read_text().splitlines():
            obj = json.loads(line)
            assert isinstance(obj["id"], str) and isinstance(obj["text"], str)
            assert isinstance(obj["lat"], float) and isinstance(obj["lon"], float)


class TestTrain:
    def test_prints_split_sizes_and_cell_counts(self, tmp_path, capsys):
        corpus = _synth(tmp_path)
        _train(tmp_path, corpus)
        out = capsys.readouterr().out
        assert "split: train=84 holdout=18 test=18" in out
        assert "cell (0,0):" in out
        assert "cell (1,1):" in out

    def test_model_directory_layout(self, tmp_path):
        corpus = _synth(tmp_path)
        model = _train(tmp_path, corpus)
        for name in ("manifest.json", "stopwords.txt", "hapax.txt", "vocab.txt", "priors.tsv"):
            assert (model / name).is_file()
        cell_files = sorted(p.name for p in (model / "cells").iterdir())
        assert len(cell_files) == 12  # 4 cells x 3 files

    def test_malformed_line_reports_line_number(self, tmp_path, capsys):
        corpus = _synth(tmp_path)
        lines = corpus.read_text().splitlines()
        lines.insert(2, "{not json")
        corpus.write_text("\n".join(lines) + "\n")
        code = main(["train", "--corpus", str(corpus), "--bounds", BOUNDS_FLAG,
                     "--out", str(tmp_path / "m")])
        assert code == 2
        assert "line 3" in capsys.readouterr().err

    def test_skip_bad_continues(self, tmp_path, capsys):
        corpus = _synth(tmp_path)
        lines = corpus.read_text().splitlines()
        lines.insert(2, "{not json")
        corpus.write_text("\n".join(lines) + "\n")
        _train(tmp_path, corpus, extra=("--skip-bad",))
        assert "skipping line 3" in capsys.readouterr().err

    def test_unlocated_posts_dropped_with_note(self, tmp_path, capsys):
        corpus = _synth(tmp_path)
        with open(corpus, "a", encoding="utf-8") as f:
            f.write(json.dumps({"id": "x", "text": "no location"}) + "\n")
        _train(tmp_path, corpus)
        assert "without coordinates" in capsys.readouterr().err


class TestEstimate:
    def test_training_post_from_isolated_cell_maps_to_its_center(self, tmp_path):
        corpus = _synth(tmp_path)
        model = _train(tmp_path, corpus)
        first = json.loads(corpus.read_text().splitlines()[0])
        query = tmp_path / "query.jsonl"
        query.write_text(json.dumps({"id": "q", "text": first["text"]}) + "\n")
        out = tmp_path / "est.csv"
        assert main(["estimate", "--model", str(model), "--corpus", str(query),
                     "--out", str(out)]) == 0
        header, row = out.read_text().splitlines()
        assert header == "post_id,est_lat,est_lon,cell_row,cell_col,posterior,smoothed_score"
        fields = row.split(",")
        # Cell (0,0) posts carry that cell's vocabulary only.
        assert fields[0] == "q"
        assert (fields[3], fields[4]) == ("0", "0")

    def test_empty_text_gets_argmax_prior_cell(self, tmp_path):
        corpus = _synth(tmp_path)
        model = _train(tmp_path, corpus)
        priors = {}
        for line in (model / "priors.tsv").read_text().splitlines():
            r, c, count, _ = line.split("\t")
            priors[(int(r), int(c))] = int(count)
        best = min(sorted(priors), key=lambda k: -priors[k])
        query = tmp_path / "query.jsonl"
        query.write_text(json.dumps({"id": "q", "text": ""}) + "\n")
        out = tmp_path / "est.csv"
        assert main(["estimate", "--model", str(model), "--corpus", str(query),
                     "--out", str(out)]) == 0
        fields = out.read_text().splitlines()[1].split(",")
        assert (int(fields[3]), int(fields[4])) == best

    def test_empty_input_writes_header_only(self, tmp_path):
        corpus = _synth(tmp_path)
        model = _train(tmp_path, corpus)
        query = tmp_path / "query.jsonl"
        query.write_text("")
        out = tmp_path / "est.csv"
        assert main(["estimate", "--model", str(model), "--corpus", str(query),
                     "--out", str(out)]) == 0
        assert out.read_text() == "post_id,est_lat,est_lon,cell_row,cell_col,posterior,smoothed_score\n"

    def test_version_mismatch_refused(self, tmp_path, capsys):
        corpus = _synth(tmp_path)
        model = _train(tmp_path, corpus)
        manifest = json.loads((model / "manifest.json").read_text())
        manifest["format_version"] = 99
        (model / "manifest.json").write_text(json.dumps(manifest))
        code = main(["estimate", "--model", str(model), "--corpus", str(corpus),
                     "--out", str(tmp_path / "est.csv")])
        assert code == 2
        assert "format version" in capsys.readouterr().err

    def test_repeat_runs_byte_identical(self, tmp_path):
        corpus = _synth(tmp_path)
        model = _train(tmp_path, corpus)
        outs = []
        for name in ("e1.csv", "e2.csv"):
            out = tmp_path / name
            assert main(["estimate", "--model", str(model), "--corpus", str(corpus),
                         "--out", str(out)]) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_baseline_flag_selects_interpolated_scoring(self, tmp_path):
        corpus = _synth(tmp_path, leakage=0.4)
        model = _train(tmp_path, corpus)
        mkn_out = tmp_path / "mkn.csv"
        base_out = tmp_path / "base.csv"
        assert main(["estimate", "--model", str(model), "--corpus", str(corpus),
                     "--out", str(mkn_out)]) == 0
        assert main(["estimate", "--model", str(model), "--corpus", str(corpus),
                     "--baseline-lambda1", "0.7", "--out", str(base_out)]) == 0
        mkn_rows = mkn_out.read_text().splitlines()
        base_rows = base_out.read_text().splitlines()
        assert len(mkn_rows) == len(base_rows) == 121
        assert mkn_rows != base_rows

    def test_smoothing_overrides_change_scores(self, tmp_path):
        corpus = _synth(tmp_path, leakage=0.4)
        model = _train(tmp_path, corpus, alpha=0.9)
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        assert main(["estimate", "--model", str(model), "--corpus", str(corpus),
                     "--out", str(a)]) == 0
        assert main(["estimate", "--model", str(model), "--corpus", str(corpus),
                     "--alpha", "0.0", "--out", str(b)]) == 0
        assert a.read_text() != b.read_text()


class TestEvaluate:
    def test_report_files_and_summary_line(self, tmp_path, capsys):
        corpus = _synth(tmp_path)
        model = _train(tmp_path, corpus)
        report = tmp_path / "report"
        assert main(["evaluate", "--model", str(model), "--corpus", str(corpus),
                     "--out", str(report)]) == 0
        out = capsys.readouterr().out
        assert "mean_error_km=" in out
        for name in ("errors.csv", "cdf.csv", "density.csv"):
            assert (report / name).is_file()
        assert (report / "errors.csv").read_text().splitlines()[0] == "post_id,error_km"

    def test_posts_without_truth_are_skipped_with_note(self, tmp_path, capsys):
        corpus = _synth(tmp_path)
        model = _train(tmp_path, corpus)
        mixed = tmp_path / "mixed.jsonl"
        lines = corpus.read_text().splitlines()[:5]
        lines.append(json.dumps({"id": "untruthed", "text": "hello"}))
        mixed.write_text("\n".join(lines) + "\n")
        assert main(["evaluate", "--model", str(model), "--corpus", str(mixed),
                     "--out", str(tmp_path / "rep")]) == 0
        assert "lack truth coordinates" in capsys.readouterr().err

    def test_no_located_posts_is_data_error(self, tmp_path):
        corpus = _synth(tmp_path)
        model = _train(tmp_path, corpus)
        bare = tmp_path / "bare.jsonl"
        bare.write_text(json.dumps({"id": "a", "text": "hello"}) + "\n")
        assert main(["evaluate", "--model", str(model), "--corpus", str(bare),
                     "--out", str(tmp_path / "rep")]) == 2


class TestTune:
    def test_singleton_space_single_g(self, tmp_path, capsys):
        corpus = _synth(tmp_path, posts=40)
        out = tmp_path / "tuning.csv"
        assert main(["tune", "--corpus", str(corpus), "--bounds", BOUNDS_FLAG,
                     "--g-values", "2", "--alpha-values", "0.5",
                     "--stopwords-k", "0", "--seed", "1", "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "g,alpha,d,mean_error_km"
        assert len(lines) == 3  # d in {1, 2}
        assert "best: g=2" in capsys.readouterr().out

    def test_planted_grid_selected(self, tmp_path, capsys):
        corpus = _synth(tmp_path, grid=4, posts=150, vocab_per_cell=20, seed=13)
        out = tmp_path / "tuning.csv"
        assert main(["tune", "--corpus", str(corpus), "--bounds", BOUNDS_FLAG,
                     "--g-values", "2,4,8", "--alpha-values", "0.0,0.9",
                     "--stopwords-k", "0", "--seed", "4", "--out", str(out)]) == 0
        assert "best: g=4" in capsys.readouterr().out
