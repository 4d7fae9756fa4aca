"""Acceptance gate: ten numbered criteria, one test and one printed
pass/fail line each. Lines bypass output capture so they always show."""

import json
import os
import time

import numpy as np
import pytest

from contextst import analysis, anchors as am, cli, coordinator as co
from contextst import data, model, training


_CAPSYS = None


@pytest.fixture(autouse=True)
def _uncaptured_reporting(capsys):
    """Let report() lines reach the real terminal despite output capture."""
    global _CAPSYS
    _CAPSYS = capsys
    yield
    _CAPSYS = None


def report(line):
    if _CAPSYS is not None:
        with _CAPSYS.disabled():
            print(line, flush=True)
    else:
        print(line, flush=True)


def make_domain(periods, n=1200, seed=0, name="a"):
    rng = np.random.default_rng(seed)
    t = np.arange(n)
    x = sum(np.sin(2 * np.pi * t / p) for p in periods)
    x = x + 0.1 * rng.standard_normal(n)
    return data.Dataset(
        name, tuple(f"t{i:06d}" for i in range(n)), x[:, None], ("x",)
    )


def unit_anchor(seed, dim=16, name="d"):
    rng = np.random.default_rng(seed)
    g = rng.standard_normal(dim)
    v = rng.standard_normal(dim)
    return am.ContextAnchors(
        name, dim, g / np.linalg.norm(g), {"x": v / np.linalg.norm(v)}, "offline"
    )


TRANSFER_BASE = dict(
    n_bands=2, patch_len=12, lookback=48, horizon=24, d_model=32, n_heads=2,
    n_blocks=1, n_experts=2, top_r=1, d_context=16, kappa=4,
)


def transfer_task(cfg, seed, epochs=40):
    """Train on domain A (periods 24, 8), report in-domain and zero-shot MSE."""
    src = make_domain((24, 8), seed=0, name="a")
    tgt = make_domain((12, 6), seed=1, name="b")
    spec = data.SplitSpec(ratios=(0.6, 0.2, 0.2))
    tr, va, te = data.split(src, spec)
    (trn, van, ten), norm = data.standardize(tr, va, te)
    train_w = data.make_windows(trn, cfg.lookback, cfg.horizon, 1, norm=norm)
    val_w = data.make_windows(van, cfg.lookback, cfg.horizon, 1, norm=norm)
    test_w = data.make_windows(ten, cfg.lookback, cfg.horizon, 1, norm=norm)
    anchor_src = unit_anchor(10, name="a")
    anchor_tgt = unit_anchor(11, name="b")
    tcfg = training.TrainConfig(lr=3e-3, epochs=epochs, batch_size=32,
                                seed=seed, patience=100, log_timing=False)
    params, _ = training.train(train_w, val_w, anchor_src, cfg, tcfg,
                               src.var_names)
    in_domain = training.evaluate(test_w, anchor_src, params, cfg,
                                  src.var_names).metrics[cfg.horizon]["mse"]
    in_base = training.repeat_last_baseline(test_w)[0]
    zs = training.zero_shot(params, cfg, tgt, anchor_tgt, spec)
    tr_t, _, te_t = data.split(tgt, spec)
    (_, ten_t), norm_t = data.standardize(tr_t, te_t)
    target_w = data.make_windows(ten_t, cfg.lookback, cfg.horizon, 1, norm=norm_t)
    zs_base = training.repeat_last_baseline(target_w)[0]
    return in_domain, in_base, zs.metrics[cfg.horizon]["mse"], zs_base


_transfer_cache = {}


def cached_transfer(variant, seed):
    key = (variant, seed)
    if key not in _transfer_cache:
        overrides = {
            "full": {},
            "no_coord": {"n_bands": 0},
            "no_context": {"no_context": True},
            "dense_ffn": {"n_experts": 1, "top_r": 1},
        }[variant]
        cfg = model.ModelConfig(**{**TRANSFER_BASE, **overrides})
        _transfer_cache[key] = transfer_task(cfg, seed)
    return _transfer_cache[key]


class TestAcceptance:
    def test_a1_decomposition_exactness(self):
        started = time.monotonic()
        rng = np.random.default_rng(101)
        worst_partition = worst_trend = 0.0
        for i in range(1000):
            x = rng.standard_normal(96)
            k = 1 + i % 4
            decomp, _ = co.coordinate(x, k, 25, 24)
            worst_trend = max(worst_trend, np.max(
                np.abs(decomp.trend + decomp.detrended - x)))
            worst_partition = max(worst_partition, np.max(
                np.abs(decomp.components.sum(axis=0) - decomp.detrended)))
        elapsed = time.monotonic() - started
        ok = worst_partition <= 1e-9 and worst_trend <= 1e-9 and elapsed < 5
        report(f"A1 decomposition exactness: {'PASS' if ok else 'FAIL'} "
               f"(partition {worst_partition:.2e}, trend {worst_trend:.2e}, "
               f"{elapsed:.2f}s)")
        assert ok

    def test_a2_parseval(self):
        started = time.monotonic()
        rng = np.random.default_rng(102)
        worst = 0.0
        lengths = [4, 8, 16, 32, 64, 96, 128, 256]
        for i in range(1000):
            x = rng.standard_normal(lengths[i % len(lengths)])
            spec = co.spectrum(x)
            energy = np.sum(x**2)
            worst = max(worst, abs(spec.psd.sum() - energy) / energy)
        elapsed = time.monotonic() - started
        ok = worst <= 1e-9 and elapsed < 5
        report(f"A2 Parseval under the PSD convention: "
               f"{'PASS' if ok else 'FAIL'} (rel err {worst:.2e}, {elapsed:.2f}s)")
        assert ok

    def test_a3_boundary_oracle(self):
        def oracle(cpsd, n_bands):
            n_bins = len(cpsd)
            edges = [0]
            for k in range(1, n_bands):
                p = 0
                while p < n_bins and cpsd[p] < k / n_bands:
                    p += 1
                edges.append(p)
            edges.append(n_bins)
            for i in range(1, len(edges) - 1):
                if edges[i] <= edges[i - 1]:
                    edges[i] = min(edges[i - 1] + 1, n_bins)
            return edges

        started = time.monotonic()
        rng = np.random.default_rng(103)
        ok = True
        for _ in range(100):
            spec = co.spectrum(rng.standard_normal(64))
            for k in range(1, 9):
                got = co.select_boundaries(spec, k).tolist()
                if got != oracle(spec.cpsd, k):
                    ok = False
        elapsed = time.monotonic() - started
        ok = ok and elapsed < 1
        report(f"A3 boundary selection vs linear-scan oracle: "
               f"{'PASS' if ok else 'FAIL'} ({elapsed:.2f}s)")
        assert ok

    def test_a4_gradient_correctness(self):
        started = time.monotonic()
        cfg = model.ModelConfig(n_bands=1, patch_len=4, lookback=8, horizon=4,
                                d_model=8, n_heads=2, n_blocks=1, n_experts=2,
                                top_r=1, d_context=8, kappa=2)
        params = model.init_params(cfg, seed=104)
        rng = np.random.default_rng(105)
        grids = rng.standard_normal((2, 2, 2, 4))
        va = rng.standard_normal((2, 8))
        ga = rng.standard_normal(8)
        targets = rng.standard_normal((2, 4))

        def loss_value():
            trace = model.forward(params, grids, va, ga, cfg)
            return training.total_loss(trace.prediction, targets,
                                       trace.load_loss, 1.0, 0.01)

        grads = model.gradient(params, loss_value())
        h = 1e-5
        worst = 0.0
        ok = True
        for name, p in params.items():
            flat = p.data.ravel()
            gflat = grads[name].ravel()
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + h
                up = float(loss_value().data)
                flat[i] = orig - h
                down = float(loss_value().data)
                flat[i] = orig
                fd = (up - down) / (2 * h)
                g = gflat[i]
                if abs(g) < 1e-8:
                    if abs(fd - g) > 1e-2:
                        ok = False
                else:
                    rel = abs(fd - g) / max(abs(fd), abs(g))
                    worst = max(worst, rel)
                    if rel > 1e-4:
                        ok = False
        elapsed = time.monotonic() - started
        ok = ok and elapsed < 60
        report(f"A4 analytic vs finite-difference gradients: "
               f"{'PASS' if ok else 'FAIL'} (worst rel {worst:.2e}, "
               f"{elapsed:.1f}s)")
        assert ok

    def test_a5_routing_identities(self):
        started = time.monotonic()
        rng = np.random.default_rng(106)
        logits = rng.standard_normal((50, 4))
        _, _, dense = model.top_r_gate(logits, r=2)
        gate_ok = np.all(np.abs(dense.data.sum(axis=-1) - 1.0) <= 1e-12)

        cfg = model.ModelConfig(n_bands=1, patch_len=4, lookback=8, horizon=4,
                                d_model=8, n_heads=2, n_blocks=1, n_experts=4,
                                top_r=2, d_context=8, kappa=2)
        params = model.init_params(cfg, seed=107)
        trace = model.forward(params, rng.standard_normal((4, 2, 2, 4)),
                              rng.standard_normal((4, 8)),
                              rng.standard_normal(8), cfg)
        sums_ok = (abs(trace.expert_fraction.sum() - 1.0) <= 1e-9
                   and abs(trace.gate_probability.sum() - 1.0) <= 1e-9)

        uniform = training.RoutingStats(np.full(4, 0.25), np.full(4, 0.25))
        collapsed = training.RoutingStats(
            np.array([0.5, 0.5, 0.0, 0.0]), np.array([1.0, 0.0, 0.0, 0.0])
        )
        loss_ok = (abs(uniform.load_loss() - 1.0) <= 1e-9
                   and abs(collapsed.load_loss() - 2.0) <= 1e-9)
        elapsed = time.monotonic() - started
        ok = gate_ok and sums_ok and loss_ok and elapsed < 5
        report(f"A5 routing and load-loss identities: "
               f"{'PASS' if ok else 'FAIL'} ({elapsed:.2f}s)")
        assert ok

    def test_a6_synthetic_zero_shot(self):
        started = time.monotonic()
        in_mse, in_base, zs_mse, zs_base = cached_transfer("full", 0)
        elapsed = time.monotonic() - started
        ok = zs_mse <= 0.8 * zs_base and in_mse <= 0.5 * in_base
        report(f"A6 synthetic zero-shot transfer: {'PASS' if ok else 'FAIL'} "
               f"(zero-shot {zs_mse:.3f} vs baseline {zs_base:.3f}, "
               f"in-domain {in_mse:.3f} vs {in_base:.3f}, {elapsed:.0f}s)")
        assert ok

    def test_a7_desk_scale_etth1(self):
        path = cli.resolve_path("ETTh1.csv")
        if not os.path.exists(path):
            report("A7 desk-scale ETTh1 (stretch, non-blocking): SKIP "
                   "(ETTh1.csv not found; set CONTEXTST_DATA_DIR)")
            pytest.skip("ETTh1.csv not available")
        from contextst import presets

        dataset = data.load_csv(path)
        cfg = presets.model_preset("etth1", lookback=96, horizon=96,
                                  d_context=64)
        spec = presets.split_preset("etth1", 96)
        segs = data.split(dataset, spec)
        (trn, van, ten), norm = data.standardize(*segs)
        train_w = data.make_windows(trn, 96, 96, 4, norm=norm)
        val_w = data.make_windows(van, 96, 96, 8, norm=norm)
        test_w = data.make_windows(ten, 96, 96, 1, norm=norm)
        rng = np.random.default_rng(108)
        vecs = {v: rng.standard_normal(64) for v in dataset.var_names}
        vecs = {v: a / np.linalg.norm(a) for v, a in vecs.items()}
        g = rng.standard_normal(64)
        anchors = am.ContextAnchors("etth1", 64, g / np.linalg.norm(g),
                                    vecs, "offline")
        tcfg = training.TrainConfig(lr=1e-3, epochs=5, batch_size=64, seed=0,
                                    patience=2)
        params, _ = training.train(train_w, val_w, anchors, cfg, tcfg,
                                   dataset.var_names)
        mse = training.evaluate(test_w, anchors, params, cfg,
                                dataset.var_names).metrics[96]["mse"]
        base = training.repeat_last_baseline(test_w)[0]
        ok = mse <= 0.50 and mse < base
        report(f"A7 desk-scale ETTh1 (stretch, non-blocking): "
               f"{'PASS' if ok else 'FAIL'} (MSE {mse:.3f}, baseline {base:.3f})")
        assert ok

    def test_a8_ablation_direction(self):
        started = time.monotonic()
        seeds = (0, 1, 2)
        means = {}
        for variant in ("full", "no_coord", "no_context", "dense_ffn"):
            means[variant] = float(np.mean(
                [cached_transfer(variant, s)[2] for s in seeds]
            ))
        elapsed = time.monotonic() - started
        ok = all(means["full"] <= means[v]
                 for v in ("no_coord", "no_context", "dense_ffn"))
        report(f"A8 ablation direction over 3 seeds: "
               f"{'PASS' if ok else 'FAIL'} (full {means['full']:.3f}, "
               f"no-coordinator {means['no_coord']:.3f}, "
               f"no-context {means['no_context']:.3f}, "
               f"dense-FFN {means['dense_ffn']:.3f}, {elapsed:.0f}s)")
        assert ok

    def test_a9_gaf_and_forecastability(self):
        rng = np.random.default_rng(109)
        worst = 0.0
        for _ in range(100):
            x = rng.standard_normal(16)
            worst = max(worst, np.max(np.abs(
                analysis.gaf(x) - analysis.gaf_trigonometric(x))))
        t = np.arange(64)
        sine = analysis.forecastability(np.sin(2 * np.pi * 4 * t / 64))
        coeffs = np.ones(33, dtype=complex)
        coeffs[0] = 0.0
        coeffs[-1] = np.sqrt(2.0)
        flat = analysis.forecastability(np.fft.irfft(coeffs, n=64))
        ok = (worst <= 1e-12 and abs(sine - 1.0) <= 1e-9 and abs(flat) <= 1e-9)
        report(f"A9 GAF forms and forecastability endpoints: "
               f"{'PASS' if ok else 'FAIL'} (gaf {worst:.2e}, "
               f"sine {sine:.12f}, flat {flat:.2e})")
        assert ok

    def test_a10_determinism(self, tmp_path):
        rng = np.random.default_rng(110)
        n = 400
        t = np.arange(n)
        x = (np.sin(2 * np.pi * t / 24) + np.sin(2 * np.pi * t / 8)
             + 0.1 * rng.standard_normal(n))
        rows = ["date,x"] + [f"t{i:06d},{x[i]:.10f}" for i in range(n)]
        csv_path = tmp_path / "a.csv"
        csv_path.write_text("\n".join(rows) + "\n")
        anchors = unit_anchor(10)
        anchors_path = tmp_path / "anchors.json"
        am.write_anchors(anchors, anchors_path)

        model_keys = [
            "model.n_bands=2", "model.patch_len=12", "model.lookback=48",
            "model.horizon=24", "model.d_model=16", "model.n_heads=2",
            "model.n_blocks=1", "model.n_experts=2", "model.top_r=1",
            "model.d_context=16", "model.kappa=4", "train.epochs=3",
        ]
        outputs = []
        for run_dir in ("r1", "r2"):
            out = str(tmp_path / run_dir)
            code = cli.main(
                ["train", "--dataset", str(csv_path), "--anchors",
                 str(anchors_path), "--threads", "1", "--seed", "7",
                 "--out", out] + [f"--set={k}" for k in model_keys]
            )
            assert code == 0
            outputs.append((
                (tmp_path / run_dir / "history.jsonl").read_bytes(),
                (tmp_path / run_dir / "model.ctst").read_bytes(),
            ))
        ok = outputs[0] == outputs[1]
        report(f"A10 seeded single-threaded determinism: "
               f"{'PASS' if ok else 'FAIL'} (history and checkpoint bytes)")
        assert ok
