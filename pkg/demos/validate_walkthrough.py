"""Compare the exact sampler with an Euler-Maruyama reference, then run a manifest.

Run: python3 demos/validate_walkthrough.py
"""
from sphbm import RngStream, euler_maruyama_sphere, north_pole, sample_increment
from sphbm.suite import load_manifest, run_manifest
from sphbm.validation import ks_two_sample
from importlib import resources

z = north_pole(3)
exact = sample_increment(z, 0.5, RngStream(1), 20_000).point @ z
for dt in (0.05, 0.005):
    em = euler_maruyama_sphere(z, 0.5, dt, RngStream(2), 20_000) @ z
    print(f"EM dt={dt}:", ks_two_sample(exact, em).line())

path = resources.files("sphbm") / "data" / "default_manifest.json"
entries = [e for e in load_manifest(path) if e["test"] in ("mean-decay", "series-regime")]
for rep in run_manifest(entries):
    print(rep.line())
