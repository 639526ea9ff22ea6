import pytest

from src.cli import main, read_coloring
from src.metrics import read_metrics
from src.stream_engine import ListToken, read_token_file, read_transcript


@pytest.fixture
def stream(tmp_path):
    def make(*extra, kind="gnp-capped", n=60, delta=5, seed=2):
        path = tmp_path / f"{kind}_{n}_{delta}_{seed}.txt"
        argv = ["gen", "--kind", kind, "--n", str(n), "--seed", str(seed), "--out", str(path)]
        if delta is not None:
            argv += ["--delta", str(delta)]
        assert main(argv + list(extra)) == 0
        return path
    return make


def test_gen_run_verify_determ(tmp_path, stream):
    path = stream()
    coloring = tmp_path / "chi.txt"
    metrics = tmp_path / "run.txt"
    assert main(["run", "determ", str(path), "--n", "60", "--delta", "5", "--out", str(coloring),
                 "--metrics", str(metrics)]) == 0
    assert len(read_coloring(coloring)) == 60
    kv = read_metrics(metrics)
    assert kv["algorithm"] == "determ"
    assert kv["violations"] == "0"
    assert int(kv["passes"]) >= 1
    assert metrics.with_suffix(".json").exists()
    assert main(["verify", str(path), str(coloring), "--n", "60", "--delta", "5"]) == 0


def test_gen_lists_and_listcolor(tmp_path, stream):
    path = stream("--lists", "--universe", "15")
    toks = read_token_file(path)
    assert isinstance(toks[0], ListToken)
    coloring = tmp_path / "chi.txt"
    assert main(["run", "listcolor", str(path), "--universe", "15", "--out", str(coloring)]) == 0
    assert main(["verify", str(path), str(coloring), "--lists"]) == 0


def test_clique_needs_every_color(tmp_path, stream):
    path = stream(kind="clique", n=7, delta=None)
    coloring = tmp_path / "chi.txt"
    assert main(["run", "determ", str(path), "--out", str(coloring)]) == 0
    assert sorted(read_coloring(coloring)) == list(range(7))


@pytest.mark.parametrize("algorithm", ["robust", "lowrand"])
def test_streaming_run_on_token_stream(tmp_path, stream, algorithm):
    path = stream(n=48, delta=6, seed=3)
    metrics = tmp_path / "m.txt"
    assert main(["run", algorithm, str(path), "--n", "48", "--delta", "6", "--seed", "4",
                 "--out", str(tmp_path / "chi.txt"), "--metrics", str(metrics)]) == 0
    kv = read_metrics(metrics)
    assert kv["verdicts"] == "P"
    assert kv["query_fails"] == "0"


def test_adversary_replay_transcript_runs(tmp_path, stream):
    path = stream("--q", "8", "--max-inserts", "64", kind="adversary-replay", n=40, delta=6, seed=5)
    actions = read_transcript(path)
    assert sum(a is not None for a in actions) == 64
    assert sum(a is None for a in actions) == 8
    metrics = tmp_path / "m.txt"
    assert main(["run", "robust", str(path), "--transcript", "--n", "40", "--delta", "6",
                 "--audit", "--metrics", str(metrics)]) == 0
    assert read_metrics(metrics)["verdicts"] == "P" * 8


def test_determ_rejects_transcript(stream):
    path = stream("--max-inserts", "10", kind="adversary-replay", n=20, delta=3)
    assert main(["run", "determ", str(path), "--transcript"]) == 1


def test_game_needs_seed():
    assert main(["game", "--algorithm", "naive", "--adversary", "oblivious", "--n", "16", "--delta", "3"]) == 1


def test_game_writes_campaign(tmp_path):
    out = tmp_path / "camp"
    code = main(["game", "--algorithm", "lowrand", "--adversary", "conflict", "--n", "32", "--delta", "4",
                 "--seed", "7", "--trials", "2", "--q", "5", "--max-inserts", "40", "--save-transcripts",
                 "--out", str(out)])
    assert code == 0
    for name in ("trials.csv", "summary.md", "summary.txt", "summary.json",
                 "transcript_001.txt", "transcript_002.txt"):
        assert (out / name).exists()
    summary = read_metrics(out / "summary.txt")
    assert summary["trials"] == "2" and summary["violations"] == "0"
    assert len(read_transcript(out / "transcript_001.txt")) > 40


def test_improper_coloring_fails_verification(tmp_path, stream):
    path = stream(kind="path", n=5, delta=2)
    bad = tmp_path / "bad.txt"
    bad.write_text("".join(f"{x} 0\n" for x in range(5)), encoding="utf-8")
    assert main(["verify", str(path), str(bad)]) == 3
    short = tmp_path / "short.txt"
    short.write_text("0 0\n1 1\n", encoding="utf-8")
    assert main(["verify", str(path), str(short)]) == 3


def test_colors_above_delta_fail_verification(tmp_path, stream):
    path = stream(kind="path", n=3, delta=2)
    chi = tmp_path / "chi.txt"
    chi.write_text("0 0\n1 5\n2 0\n", encoding="utf-8")
    assert main(["verify", str(path), str(chi)]) == 0
    assert main(["verify", str(path), str(chi), "--delta", "2"]) == 3


def test_malformed_stream_is_an_input_error(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("E 0 1\nE 1\n", encoding="utf-8")
    assert main(["run", "determ", str(path)]) == 2
    path.write_text("E 0 1\nE 1 1\n", encoding="utf-8")
    assert main(["run", "determ", str(path)]) == 2


def test_audit_with_exhaustive_check(tmp_path):
    metrics = tmp_path / "audit.txt"
    assert main(["audit", "--n", "256", "--delta", "8", "--exhaustive-width", "2",
                 "--metrics", str(metrics)]) == 0
    kv = read_metrics(metrics)
    assert kv["four_independent"] == "true"
    assert int(kv["seed_bits"]) > 0
    assert kv["colors_reserved"] == str(9 * 64)
