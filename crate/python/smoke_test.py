"""Smoke test for the qamg extension module.

Build and install first:
    cd crates/py && maturin build --release -o dist && pip install dist/qamg-*.whl
"""

import json
import math
import tempfile
from pathlib import Path

import qamg


def check_circuit():
    c = qamg.Circuit("qubits 3\nH 0\nT 0 1 2\n")
    assert c.width == 3 and len(c) == 2
    out = c.apply([1, 0, 0, 0, 0, 0, 0, 0])
    assert abs(abs(out[0]) ** 2 - 0.5) < 1e-12 and abs(abs(out[4]) ** 2 - 0.5) < 1e-12
    exact = c.apply_exact(0)
    assert exact[0] == exact[4] == "(0,0;1,0)/2^1"
    assert exact[1] == "(0,0;0,0)/2^0"
    u = c.unitary()
    for i in range(8):
        for j in range(8):
            ip = sum(u[r][i].conjugate() * u[r][j] for r in range(8))
            assert abs(ip - (1 if i == j else 0)) < 1e-12


def check_qma():
    inst = qamg.Instance.generate("qma-dyadic", 3, spectrum=("3/4", "1/4"))
    assert inst.protocol == "qma"
    spec = inst.spectrum(exact=True)
    assert abs(spec[0] - 0.75) < 1e-9 and abs(spec[1] - 0.25) < 1e-9
    w = qamg.random_state(1, 7)
    assert spec[1] - 1e-9 <= inst.acceptance(w) <= spec[0] + 1e-9
    q, n, threshold = inst.amplification(2)
    assert n == 8 * q * q * 2 and 0 < threshold <= n
    report = qamg.run(inst, "enumerate", reps=4)
    assert report.passed, report.checks
    again = qamg.Instance.from_json(inst.to_json())
    assert again.to_json() == inst.to_json()


def check_qam_and_qmam():
    qam = qamg.Instance.generate("qam-random", 1, s=2)
    assert 0.0 <= qam.optimal_value() <= 1.0
    assert qamg.run(qam, "analytic", reps=2).passed
    no = qamg.Instance.generate("qip-no", 0, epsilon="1/4")
    cheat = no.optimal_value(restarts=2)
    assert cheat <= 0.5 + math.sqrt(0.25) / 2 + 1e-4
    report = qamg.run(no, "analytic", restarts=2)
    assert report.values["cheat_value"] <= 0.75 + 1e-4


def check_misc():
    assert abs(qamg.binomial_tail(0.5, 2, 1) - 0.75) < 1e-15
    rho = [[1, 0], [0, 0]]
    plus = [[0.5, 0.5], [0.5, 0.5]]
    assert abs(qamg.fidelity(rho, plus) - math.sqrt(0.5)) < 1e-9
    try:
        qamg.run(qamg.Instance.generate("qma-p", 0), "sample")
    except ValueError:
        pass
    else:
        raise AssertionError("sample mode without a seed must be rejected")


def check_files_and_tables():
    with tempfile.TemporaryDirectory() as d:
        path = Path(d) / "pair.json"
        inst = qamg.Instance.generate("qma-pair", 2)
        inst.save(str(path))
        assert json.loads(path.read_text())["type"] == "qma"
        loaded = qamg.Instance.load(str(path))
        reports = [qamg.run(loaded, "analytic", reps=r) for r in (32, 64)]
        csv = qamg.emit_tables(reports).splitlines()
        assert len(csv) == 3 and csv[0].startswith("protocol,mode,instance,seed,passed")


if __name__ == "__main__":
    for f in (check_circuit, check_qma, check_qam_and_qmam, check_misc, check_files_and_tables):
        f()
        print(f"ok {f.__name__}")
