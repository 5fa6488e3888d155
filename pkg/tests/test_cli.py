import shutil
import subprocess

import pytest

from protopart.cli import main
from protopart.modelio import bundled_model, parse_model

from conftest import tampered_dh
from protopart.modelio import serialize_model


@pytest.fixture
def model(tmp_path):
    def write(name, text=None):
        p = tmp_path / f"{name}.xml"
        p.write_text(text if text is not None else bundled_model(name))
        return str(p)

    return write


def test_analyze_dump(model, tmp_path, capsys):
    dump = tmp_path / "asg.txt"
    assert main(["analyze", model("dh"), "--dump", str(dump)]) == 0
    text = dump.read_text()
    assert "conf(sec.ssec) = true" in text and "intg(sec.ssec) = false" in text
    assert main(["analyze", model("enc")]) == 0
    assert "intg(enc.Ctr) = true" in capsys.readouterr().out


def test_analyze_conflict(model, tmp_path, capsys):
    out = tmp_path / "conflict.xml"
    path = model("bad", serialize_model(tampered_dh()))
    assert main(["analyze", path, "--out", str(out)]) == 1
    assert "chan:Network.gy -> decode.gamma" in capsys.readouterr().err
    assert 'conflict="true"' in out.read_text()


def test_input_errors(model, tmp_path, capsys):
    assert main(["analyze", str(tmp_path / "missing.xml")]) == 2
    assert main(["analyze", model("broken", "<model><const id='a'>")]) == 2
    assert main(["analyze", model("dangling", "<model><transform id='t'><arg name='i'/></transform></model>")]) == 2
    bad_weights = tmp_path / "w.txt"
    bad_weights.write_text("const = -3\n")
    assert main(["metrics", model("enc"), "--weights", str(bad_weights)]) == 2


def test_usage_errors(model):
    for argv in (["partition", model("dh"), "--strategy", "greedy"], [], ["frobnicate"], ["run", model("dh"), "--seed", "x"]):
        with pytest.raises(SystemExit) as exc:
            main(argv)
        assert exc.value.code == 3


def test_partition(model, tmp_path, capsys):
    out, pol = tmp_path / "p.xml", tmp_path / "policy.txt"
    assert main(["partition", model("dh"), "--strategy", "branch", "--out", str(out), "--policy", str(pol)]) == 0
    stdout = capsys.readouterr().out
    assert "process_count=3" in stdout
    doc = parse_model(out.read_text())
    assert len(doc.network.domains) == 3
    assert pol.read_text().count("\n") == 3
    assert main(["partition", model("dh"), "--strategy", "none"]) == 0
    assert "process_count=13" in capsys.readouterr().out


def test_partition_weights(model, tmp_path, capsys):
    w = tmp_path / "w.txt"
    w.write_text("dhsec = 1000\n")
    assert main(["partition", model("dh"), "--weights", str(w), "--merge-max-weight", "20"]) == 0
    assert "tcb_conf_intg=1190" in capsys.readouterr().out


def test_check(model, capsys):
    assert main(["check", model("dh")]) == 0
    assert main(["check", model("enc")]) == 0
    failing = bundled_model("dh").replace('<assert confidentiality="true">', '<assert integrity="true">')
    assert main(["check", model("f", failing)]) == 1
    assert "ASSERT FAIL sec.ssec -> Keystore.data" in capsys.readouterr().out


def test_run(model, tmp_path):
    trace = tmp_path / "t.txt"
    assert main(["run", model("enc_roundtrip"), "--trace", str(trace)]) == 0
    first = trace.read_text()
    assert main(["run", model("enc_roundtrip"), "--trace", str(trace)]) == 0
    assert trace.read_text() == first
    assert first.splitlines()[0].split()[1:3] == ["iv.Const", "out"]
    assert main(["run", model("dh_two_party"), "--seed", "5"]) == 0
    assert main(["run", model("enc_roundtrip"), "--max-steps", "2"]) == 1
    wrong = bundled_model("enc_roundtrip").replace("text:attack at dawn\"/>\n    <arg", "text:nope\"/>\n    <arg")
    assert main(["run", model("w", wrong)]) == 1


def test_render(model, tmp_path, capsys):
    out = tmp_path / "g.dot"
    assert main(["render", model("dh"), "--solved", "--partitions", "-o", str(out)]) == 0
    a = out.read_text()
    assert main(["render", model("dh"), "--solved", "--partitions", "-o", str(out)]) == 0
    assert out.read_text() == a and "cluster_K3" in a
    assert main(["render", model("enc")]) == 0
    assert 'fillcolor="white"' in capsys.readouterr().out


def test_metrics(model, capsys):
    assert main(["metrics", model("enc"), "--strategy", "none"]) == 0
    out = capsys.readouterr().out
    assert "process_count=5\nipc_channels=4\n" in out
    assert out.splitlines()[1].split() == ["Monolithic", "1", "0", "0", "0", "125", "125"]


@pytest.mark.skipif(shutil.which("protopart") is None, reason="console script not installed")
def test_console_script(model):
    done = subprocess.run(["protopart", "check", model("dh")], capture_output=True, text=True)
    assert done.returncode == 0
    done = subprocess.run(["protopart", "render", model("dh"), "--strategy", "x"], capture_output=True, text=True)
    assert done.returncode == 3
