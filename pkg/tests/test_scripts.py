import os
import runpy

import pytest

SCRIPTS = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "scripts")


@pytest.mark.parametrize("name,argv", [
    ("remark_counterexample.py", ["--samples", "500", "--seeds", "1"]),
    ("step_size_sweep.py", ["--gammas", "0.5", "2.5", "--max-iter", "50"]),
    ("example56_experiment.py", ["--dims", "5", "--powers", "1.5"]),
])
def test_script_runs(name, argv, capsys):
    mod = runpy.run_path(os.path.join(SCRIPTS, name))
    mod["main"](argv)
    assert capsys.readouterr().out.strip()
